#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shotit/vecindex.hpp"

namespace shotit {

// S = 1 / ((1 - alpha) + alpha / k): speedup from accelerating the
// fraction alpha of a system by factor k.
double amdahl_speedup(double alpha, double k);

// T_new = T_old * ((1 - alpha) + alpha / k).
double amdahl_t_new(double t_old, double alpha, double k);

struct BenchReport {
    std::string engine; // "flat" | "ivf"
    std::string dataset;
    size_t n = 0;
    size_t dim = 0;
    size_t k = 0;
    uint32_t nlist = 0;
    uint32_t nprobe = 0;
    size_t queries = 0;
    double build_s = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double recall_at_k = 0.0;
};

// Nearest-rank percentile of an unsorted latency sample; p in (0, 100].
double percentile(std::vector<double> values, double p);

// Fraction of the flat oracle's top-k ids the hits recovered.
double recall_against(const std::vector<SearchHit>& approx,
                      const std::vector<SearchHit>& exact);

// 10 warmup queries, then one timed pass per query; recall@k is measured
// against search_flat on the same index. engine is "flat" or "ivf".
BenchReport run_search_bench(const VectorIndex& index,
                             const std::vector<FeatureVector>& queries, size_t k,
                             const std::string& engine, uint32_t nprobe);

// One JSON object per line.
std::string report_to_jsonl(const BenchReport& r);

// Nonnegative random unit vectors, the shape descriptor vectors take.
std::vector<FeatureVector> synthetic_unit_vectors(size_t n, uint64_t seed);

// Mixture of `clusters` Gaussian bumps on the nonnegative unit sphere.
std::vector<FeatureVector> clustered_unit_vectors(size_t n, size_t clusters,
                                                  uint64_t seed);

std::vector<VectorRecord> to_records(const std::vector<FeatureVector>& vecs);

} // namespace shotit
