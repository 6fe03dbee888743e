#include "shotit/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <unordered_set>

#include "shotit/errors.hpp"

namespace shotit {

double amdahl_speedup(double alpha, double k) {
    if (alpha < 0.0 || alpha > 1.0)
        throw DomainError("amdahl: alpha must be in [0, 1]");
    if (k <= 0.0) throw DomainError("amdahl: k must be positive");
    return 1.0 / ((1.0 - alpha) + alpha / k);
}

double amdahl_t_new(double t_old, double alpha, double k) {
    if (t_old < 0.0) throw DomainError("amdahl: t_old must be nonnegative");
    if (alpha < 0.0 || alpha > 1.0)
        throw DomainError("amdahl: alpha must be in [0, 1]");
    if (k <= 0.0) throw DomainError("amdahl: k must be positive");
    return t_old * ((1.0 - alpha) + alpha / k);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("percentile of empty sample");
    if (p <= 0.0 || p > 100.0) throw DomainError("percentile p must be in (0, 100]");
    std::sort(values.begin(), values.end());
    size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * values.size()));
    return values[rank - 1];
}

double recall_against(const std::vector<SearchHit>& approx,
                      const std::vector<SearchHit>& exact) {
    if (exact.empty()) return 1.0;
    std::unordered_set<uint64_t> truth;
    for (const auto& h : exact) truth.insert(h.id);
    size_t inter = 0;
    for (const auto& h : approx) inter += truth.count(h.id);
    return static_cast<double>(inter) / static_cast<double>(exact.size());
}

BenchReport run_search_bench(const VectorIndex& index,
                             const std::vector<FeatureVector>& queries, size_t k,
                             const std::string& engine, uint32_t nprobe) {
    if (index.size() == 0) throw DomainError("bench: index is empty");
    if (queries.empty()) throw DomainError("bench: no queries");
    bool use_ivf = engine == "ivf";
    if (use_ivf && !index.trained()) throw DomainError("bench: ivf index untrained");

    auto run_query = [&](const FeatureVector& q) {
        return use_ivf ? index.search_ivf(q, k, nprobe) : index.search_flat(q, k);
    };

    for (size_t i = 0; i < 10; ++i) run_query(queries[i % queries.size()]);

    std::vector<double> latencies_ms;
    latencies_ms.reserve(queries.size());
    double recall_sum = 0.0;
    for (const auto& q : queries) {
        auto start = std::chrono::steady_clock::now();
        auto hits = run_query(q);
        auto stop = std::chrono::steady_clock::now();
        latencies_ms.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
        recall_sum += recall_against(hits, index.search_flat(q, k));
    }

    BenchReport r;
    r.engine = engine;
    r.n = index.size();
    r.dim = kVectorDim;
    r.k = k;
    r.nlist = index.nlist();
    r.nprobe = use_ivf ? nprobe : 0;
    r.queries = queries.size();
    r.p50_ms = percentile(latencies_ms, 50);
    r.p95_ms = percentile(latencies_ms, 95);
    r.p99_ms = percentile(latencies_ms, 99);
    r.recall_at_k = recall_sum / static_cast<double>(queries.size());
    return r;
}

std::string report_to_jsonl(const BenchReport& r) {
    nlohmann::ordered_json j;
    j["engine"] = r.engine;
    j["dataset"] = r.dataset;
    j["n"] = r.n;
    j["dim"] = r.dim;
    j["k"] = r.k;
    j["nlist"] = r.nlist;
    j["nprobe"] = r.nprobe;
    j["queries"] = r.queries;
    j["build_s"] = r.build_s;
    j["p50_ms"] = r.p50_ms;
    j["p95_ms"] = r.p95_ms;
    j["p99_ms"] = r.p99_ms;
    j["recall_at_k"] = r.recall_at_k;
    return j.dump() + "\n";
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void normalize_in_place(FeatureVector& v) {
    double n2 = v.norm2();
    if (n2 <= 0.0) {
        v.values[0] = 1.0;
        return;
    }
    double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v.values) x *= inv;
}

} // namespace

std::vector<FeatureVector> synthetic_unit_vectors(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<FeatureVector> out(n);
    for (auto& v : out) {
        for (auto& x : v.values) x = unit_uniform(rng);
        normalize_in_place(v);
    }
    return out;
}

std::vector<FeatureVector> clustered_unit_vectors(size_t n, size_t clusters,
                                                  uint64_t seed) {
    if (clusters == 0) throw DomainError("clusters must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);

    std::vector<FeatureVector> centers(clusters);
    for (auto& c : centers) {
        for (auto& x : c.values) x = unit_uniform(rng);
        normalize_in_place(c);
    }
    std::vector<FeatureVector> out(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& c = centers[rng() % clusters];
        FeatureVector v = c;
        for (auto& x : v.values) x = std::max(0.0, x + noise(rng));
        normalize_in_place(v);
        out[i] = v;
    }
    return out;
}

std::vector<VectorRecord> to_records(const std::vector<FeatureVector>& vecs) {
    std::vector<VectorRecord> out;
    out.reserve(vecs.size());
    for (size_t i = 0; i < vecs.size(); ++i) {
        VectorRecord r;
        r.id = i;
        r.media_id = i / 1000;
        r.t = static_cast<double>(i % 1000);
        r.vec = vecs[i];
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace shotit
