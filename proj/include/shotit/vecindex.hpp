#pragma once

#include <cstdint>
#include <filesystem>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "shotit/vectorize.hpp"

namespace shotit {

struct VectorRecord {
    uint64_t id = 0;
    uint64_t media_id = 0;
    double t = 0.0; // frame timestamp, seconds
    FeatureVector vec;
};

struct SearchHit {
    uint64_t id = 0;
    uint64_t media_id = 0;
    double t = 0.0;
    double score = 0.0; // inner product
};

// Hit ordering: score descending, ties by (media_id, t, id) ascending.
bool hit_before(const SearchHit& a, const SearchHit& b);

// k-means with k-means++ seeding on unit vectors (inner-product geometry).
// Deterministic for a fixed seed. Centroids are renormalized to unit length
// after every update; empty clusters are reseeded from the worst-fit point.
std::vector<FeatureVector> train_kmeans(std::span<const FeatureVector> sample,
                                        uint32_t nlist, uint64_t seed,
                                        uint32_t max_iters = 25,
                                        double shift_tol = 1e-6);

uint32_t auto_nlist(size_t record_count);   // ceil(sqrt(n)) clamped to [16, 4096]
uint32_t auto_nprobe(uint32_t nlist);       // max(8, nlist/16)

// In-memory vector store with an exhaustive search path and an optional
// IVF partition. Many concurrent readers or one writer.
class VectorIndex {
public:
    VectorIndex() = default;
    VectorIndex(VectorIndex&&) noexcept;
    VectorIndex& operator=(VectorIndex&&) noexcept;

    size_t size() const;
    bool trained() const;
    uint32_t nlist() const;
    uint32_t default_nprobe() const;

    // Rejects the whole batch if any id already exists (or repeats inside
    // the batch); the error message lists the offending ids.
    size_t insert_batch(std::span<const VectorRecord> records);

    // Exact top-k by inner product under the hit ordering.
    std::vector<SearchHit> search_flat(const FeatureVector& q, size_t k) const;

    // k-means over the currently stored records.
    void train_ivf(uint32_t nlist, uint64_t seed);

    // Exhaustive search restricted to the nprobe best centroid lists.
    std::vector<SearchHit> search_ivf(const FeatureVector& q, size_t k,
                                      uint32_t nprobe) const;

    // Binary snapshot: magic, version, little-endian counts, float64
    // payload, CRC32 trailer. Written to a temp file then renamed.
    void save_snapshot(const std::filesystem::path& path) const;
    // Replaces the index contents; on any validation or checksum failure
    // the index is left untouched.
    void load_snapshot(const std::filesystem::path& path);

private:
    uint32_t assign_list(const FeatureVector& v) const;
    std::vector<SearchHit> top_k(const FeatureVector& q,
                                 std::span<const uint32_t> candidate_ids,
                                 size_t k, bool all) const;

    mutable std::shared_mutex mu_;
    std::vector<VectorRecord> records_;
    std::unordered_map<uint64_t, uint32_t> by_id_;
    std::vector<FeatureVector> centroids_;
    std::vector<std::vector<uint32_t>> lists_; // record indices per centroid
    uint32_t default_nprobe_ = 0;
};

} // namespace shotit
