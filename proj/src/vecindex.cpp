#include "shotit/vecindex.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <string>

#include "shotit/errors.hpp"

namespace shotit {

bool hit_before(const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.media_id != b.media_id) return a.media_id < b.media_id;
    if (a.t != b.t) return a.t < b.t;
    return a.id < b.id;
}

uint32_t auto_nlist(size_t record_count) {
    auto root = static_cast<uint32_t>(std::ceil(std::sqrt(static_cast<double>(record_count))));
    return std::clamp<uint32_t>(root, 16, 4096);
}

uint32_t auto_nprobe(uint32_t nlist) { return std::max<uint32_t>(8, nlist / 16); }

namespace {

// Deterministic uniform double in [0, 1), independent of library
// distribution internals.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void renormalize(FeatureVector& v) {
    double n2 = v.norm2();
    if (n2 <= 0.0) return;
    double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v.values) x *= inv;
}

} // namespace

std::vector<FeatureVector> train_kmeans(std::span<const FeatureVector> sample,
                                        uint32_t nlist, uint64_t seed,
                                        uint32_t max_iters, double shift_tol) {
    if (nlist == 0) throw DomainError("train_kmeans: nlist must be positive");
    if (sample.size() < nlist)
        throw DomainError("train_kmeans: sample of " + std::to_string(sample.size()) +
                          " is smaller than nlist " + std::to_string(nlist));

    std::mt19937_64 rng(seed);
    const size_t n = sample.size();

    // k-means++ seeding; squared Euclidean distance of unit vectors is
    // 2 - 2 * ip.
    std::vector<FeatureVector> centroids;
    centroids.reserve(nlist);
    centroids.push_back(sample[rng() % n]);
    std::vector<double> d2(n);
    for (uint32_t c = 1; c < nlist; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = d2[i];
            double ip = sample[i].dot(centroids.back());
            double d = std::max(0.0, 2.0 - 2.0 * ip);
            if (c == 1 || d < best) best = d;
            d2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total > 0.0) {
            double target = unit_uniform(rng) * total;
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng() % n;
        }
        centroids.push_back(sample[pick]);
    }

    std::vector<uint32_t> assign(n, 0);
    for (uint32_t iter = 0; iter < max_iters; ++iter) {
        for (size_t i = 0; i < n; ++i) {
            double best = -2.0;
            uint32_t best_c = 0;
            for (uint32_t c = 0; c < nlist; ++c) {
                double ip = sample[i].dot(centroids[c]);
                if (ip > best) {
                    best = ip;
                    best_c = c;
                }
            }
            assign[i] = best_c;
        }

        std::vector<FeatureVector> sums(nlist);
        std::vector<size_t> counts(nlist, 0);
        for (size_t i = 0; i < n; ++i) {
            auto& s = sums[assign[i]].values;
            const auto& v = sample[i].values;
            for (size_t d = 0; d < kVectorDim; ++d) s[d] += v[d];
            ++counts[assign[i]];
        }

        // Reseed empty clusters from the point that fits its centroid worst.
        for (uint32_t c = 0; c < nlist; ++c) {
            if (counts[c] > 0) continue;
            double worst = 2.0;
            size_t worst_i = 0;
            for (size_t i = 0; i < n; ++i) {
                double ip = sample[i].dot(centroids[assign[i]]);
                if (ip < worst) {
                    worst = ip;
                    worst_i = i;
                }
            }
            sums[c] = sample[worst_i];
            counts[c] = 1;
        }

        double max_shift = 0.0;
        for (uint32_t c = 0; c < nlist; ++c) {
            FeatureVector next = sums[c];
            for (auto& x : next.values) x /= static_cast<double>(counts[c]);
            renormalize(next);
            double shift2 = 0.0;
            for (size_t d = 0; d < kVectorDim; ++d) {
                double diff = next.values[d] - centroids[c].values[d];
                shift2 += diff * diff;
            }
            max_shift = std::max(max_shift, std::sqrt(shift2));
            centroids[c] = next;
        }
        if (max_shift < shift_tol) break;
    }
    return centroids;
}

VectorIndex::VectorIndex(VectorIndex&& o) noexcept {
    records_ = std::move(o.records_);
    by_id_ = std::move(o.by_id_);
    centroids_ = std::move(o.centroids_);
    lists_ = std::move(o.lists_);
    default_nprobe_ = o.default_nprobe_;
}

VectorIndex& VectorIndex::operator=(VectorIndex&& o) noexcept {
    if (this != &o) {
        records_ = std::move(o.records_);
        by_id_ = std::move(o.by_id_);
        centroids_ = std::move(o.centroids_);
        lists_ = std::move(o.lists_);
        default_nprobe_ = o.default_nprobe_;
    }
    return *this;
}

size_t VectorIndex::size() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

bool VectorIndex::trained() const {
    std::shared_lock lock(mu_);
    return !centroids_.empty();
}

uint32_t VectorIndex::nlist() const {
    std::shared_lock lock(mu_);
    return static_cast<uint32_t>(centroids_.size());
}

uint32_t VectorIndex::default_nprobe() const {
    std::shared_lock lock(mu_);
    return default_nprobe_;
}

uint32_t VectorIndex::assign_list(const FeatureVector& v) const {
    double best = -2.0;
    uint32_t best_c = 0;
    for (uint32_t c = 0; c < centroids_.size(); ++c) {
        double ip = v.dot(centroids_[c]);
        if (ip > best) {
            best = ip;
            best_c = c;
        }
    }
    return best_c;
}

size_t VectorIndex::insert_batch(std::span<const VectorRecord> records) {
    std::unique_lock lock(mu_);

    std::vector<uint64_t> dups;
    std::unordered_map<uint64_t, bool> in_batch;
    for (const auto& r : records) {
        if (by_id_.count(r.id) || in_batch.count(r.id)) dups.push_back(r.id);
        in_batch[r.id] = true;
    }
    if (!dups.empty()) {
        std::string msg = "duplicate ids:";
        for (uint64_t id : dups) msg += " " + std::to_string(id);
        throw ConflictError(msg);
    }

    for (const auto& r : records) {
        auto idx = static_cast<uint32_t>(records_.size());
        records_.push_back(r);
        by_id_.emplace(r.id, idx);
        if (!centroids_.empty()) lists_[assign_list(r.vec)].push_back(idx);
    }
    return records.size();
}

std::vector<SearchHit> VectorIndex::top_k(const FeatureVector& q,
                                          std::span<const uint32_t> candidates,
                                          size_t k, bool all) const {
    std::vector<SearchHit> hits;
    hits.reserve(all ? records_.size() : candidates.size());
    auto add = [&](const VectorRecord& r) {
        hits.push_back({r.id, r.media_id, r.t, q.dot(r.vec)});
    };
    if (all) {
        for (const auto& r : records_) add(r);
    } else {
        for (uint32_t idx : candidates) add(records_[idx]);
    }
    size_t kk = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + kk, hits.end(), hit_before);
    hits.resize(kk);
    return hits;
}

std::vector<SearchHit> VectorIndex::search_flat(const FeatureVector& q, size_t k) const {
    if (k == 0) throw DomainError("search: k must be at least 1");
    std::shared_lock lock(mu_);
    return top_k(q, {}, k, true);
}

void VectorIndex::train_ivf(uint32_t nlist, uint64_t seed) {
    std::unique_lock lock(mu_);
    std::vector<FeatureVector> sample;
    sample.reserve(records_.size());
    for (const auto& r : records_) sample.push_back(r.vec);
    centroids_ = train_kmeans(sample, nlist, seed);
    default_nprobe_ = auto_nprobe(nlist);
    lists_.assign(nlist, {});
    for (uint32_t i = 0; i < records_.size(); ++i)
        lists_[assign_list(records_[i].vec)].push_back(i);
}

std::vector<SearchHit> VectorIndex::search_ivf(const FeatureVector& q, size_t k,
                                               uint32_t nprobe) const {
    if (k == 0) throw DomainError("search: k must be at least 1");
    std::shared_lock lock(mu_);
    if (centroids_.empty()) throw DomainError("search_ivf: index is not trained");
    if (nprobe < 1 || nprobe > centroids_.size())
        throw DomainError("search_ivf: nprobe " + std::to_string(nprobe) +
                          " outside [1, " + std::to_string(centroids_.size()) + "]");

    // Rank centroids by inner product; ties by index so probe sets are
    // nested as nprobe grows.
    std::vector<std::pair<double, uint32_t>> ranked(centroids_.size());
    for (uint32_t c = 0; c < centroids_.size(); ++c)
        ranked[c] = {q.dot(centroids_[c]), c};
    std::partial_sort(ranked.begin(), ranked.begin() + nprobe, ranked.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });

    std::vector<uint32_t> candidates;
    for (uint32_t p = 0; p < nprobe; ++p) {
        const auto& list = lists_[ranked[p].second];
        candidates.insert(candidates.end(), list.begin(), list.end());
    }
    return top_k(q, candidates, k, false);
}

namespace {

constexpr char kSnapshotMagic[8] = {'S', 'H', 'O', 'T', 'I', 'T', 'I', 'X'};
constexpr uint32_t kSnapshotVersion = 1;

struct ByteWriter {
    std::vector<uint8_t> buf;
    void raw(const void* p, size_t n) {
        auto* b = static_cast<const uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
};

struct ByteReader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;
    void raw(void* p, size_t n) {
        if (pos + n > buf.size()) throw CorruptError("snapshot truncated");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    uint32_t u32() {
        uint32_t v;
        raw(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
};

} // namespace

void VectorIndex::save_snapshot(const std::filesystem::path& path) const {
    std::shared_lock lock(mu_);

    ByteWriter w;
    w.raw(kSnapshotMagic, sizeof kSnapshotMagic);
    w.u32(kSnapshotVersion);
    w.u32(static_cast<uint32_t>(kVectorDim));
    w.u64(records_.size());
    w.u32(static_cast<uint32_t>(centroids_.size()));
    w.u32(default_nprobe_);
    for (const auto& c : centroids_)
        for (double v : c.values) w.f64(v);
    for (const auto& r : records_) {
        w.u64(r.id);
        w.u64(r.media_id);
        w.f64(r.t);
        for (double v : r.vec.values) w.f64(v);
    }
    uint32_t crc = static_cast<uint32_t>(
        crc32(0, w.buf.data(), static_cast<uInt>(w.buf.size())));
    w.u32(crc);

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string());
        f.write(reinterpret_cast<const char*>(w.buf.data()),
                static_cast<std::streamsize>(w.buf.size()));
        if (!f.flush()) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void VectorIndex::load_snapshot(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open snapshot " + path.string());
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kSnapshotMagic) + 4)
        throw CorruptError("snapshot too small");
    uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    uint32_t actual_crc = static_cast<uint32_t>(
        crc32(0, buf.data(), static_cast<uInt>(buf.size() - 4)));
    if (stored_crc != actual_crc)
        throw CorruptError("snapshot checksum mismatch");

    ByteReader r{buf};
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kSnapshotMagic, 8) != 0)
        throw CorruptError("bad snapshot magic");
    if (r.u32() != kSnapshotVersion) throw CorruptError("unsupported snapshot version");
    if (r.u32() != kVectorDim) throw CorruptError("snapshot dimension mismatch");

    uint64_t count = r.u64();
    uint32_t nlist = r.u32();
    uint32_t nprobe = r.u32();

    std::vector<FeatureVector> centroids(nlist);
    for (auto& c : centroids)
        for (auto& v : c.values) v = r.f64();
    std::vector<VectorRecord> records(count);
    for (auto& rec : records) {
        rec.id = r.u64();
        rec.media_id = r.u64();
        rec.t = r.f64();
        for (auto& v : rec.vec.values) v = r.f64();
    }
    if (r.pos != buf.size() - 4) throw CorruptError("snapshot trailing bytes");

    // Rebuild the derived structures before touching any member, so a
    // corrupt file leaves the index as it was.
    std::unordered_map<uint64_t, uint32_t> by_id;
    by_id.reserve(records.size());
    std::vector<std::vector<uint32_t>> lists(centroids.size());
    auto nearest = [&centroids](const FeatureVector& v) {
        double best = -2.0;
        uint32_t best_c = 0;
        for (uint32_t c = 0; c < centroids.size(); ++c) {
            double ip = v.dot(centroids[c]);
            if (ip > best) {
                best = ip;
                best_c = c;
            }
        }
        return best_c;
    };
    for (uint32_t i = 0; i < records.size(); ++i) {
        if (!by_id.emplace(records[i].id, i).second)
            throw CorruptError("snapshot contains duplicate record ids");
        if (!centroids.empty()) lists[nearest(records[i].vec)].push_back(i);
    }

    std::unique_lock lock(mu_);
    records_ = std::move(records);
    centroids_ = std::move(centroids);
    by_id_ = std::move(by_id);
    lists_ = std::move(lists);
    default_nprobe_ = nprobe;
}

} // namespace shotit
