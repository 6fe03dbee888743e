#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "shotit/errors.hpp"
#include "shotit/vecindex.hpp"
#include "testutil.hpp"

using namespace shotit;
namespace fs = std::filesystem;

namespace {

std::vector<VectorRecord> make_records(std::mt19937_64& rng, size_t n,
                                       uint64_t id_base = 0) {
    std::vector<VectorRecord> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        VectorRecord r;
        r.id = id_base + i;
        r.media_id = i % 17;
        r.t = static_cast<double>(i) * 0.25;
        r.vec = testutil::random_unit_vector(rng);
        out.push_back(r);
    }
    return out;
}

// Full-scan reference search, written against the raw records rather than
// the index internals.
std::vector<SearchHit> oracle_search(const std::vector<VectorRecord>& records,
                                     const FeatureVector& q, size_t k) {
    std::vector<SearchHit> hits;
    for (const auto& r : records) {
        double s = 0.0;
        for (size_t d = 0; d < kVectorDim; ++d) s += q.values[d] * r.vec.values[d];
        hits.push_back({r.id, r.media_id, r.t, s});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.media_id != b.media_id) return a.media_id < b.media_id;
        if (a.t != b.t) return a.t < b.t;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

bool same_hits(const std::vector<SearchHit>& a, const std::vector<SearchHit>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].id != b[i].id) return false;
    return true;
}

fs::path temp_dir(const char* tag) {
    fs::path p = fs::temp_directory_path() / (std::string("shotit_test_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("insert_batch: counts, duplicates inside and across batches") {
    auto rng = testutil::make_rng(200);
    VectorIndex idx;
    auto batch = make_records(rng, 3);
    CHECK(idx.insert_batch(batch) == 3);
    CHECK(idx.size() == 3);

    try {
        idx.insert_batch(batch);
        FAIL("expected ConflictError");
    } catch (const ConflictError& e) {
        std::string msg = e.what();
        CHECK(msg.find("0") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
    CHECK(idx.size() == 3); // batch rejected atomically

    auto more = make_records(rng, 2, 100);
    more[1].id = more[0].id; // duplicate within the batch
    CHECK_THROWS_AS(idx.insert_batch(more), ConflictError);
    CHECK(idx.size() == 3);
}

TEST_CASE("search_flat: self-similarity and k larger than index") {
    auto rng = testutil::make_rng(201);
    VectorIndex idx;
    auto records = make_records(rng, 20);
    idx.insert_batch(records);

    auto hits = idx.search_flat(records[7].vec, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == records[7].id);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-9));

    CHECK(idx.search_flat(records[0].vec, 50).size() == 20);
    VectorIndex empty;
    CHECK(empty.search_flat(records[0].vec, 5).empty());
}

TEST_CASE("search_flat: matches the brute-force oracle exactly") {
    auto rng = testutil::make_rng(202);
    VectorIndex idx;
    auto records = make_records(rng, 1000);
    idx.insert_batch(records);

    for (int trial = 0; trial < 25; ++trial) {
        FeatureVector q = testutil::random_unit_vector(rng);
        auto got = idx.search_flat(q, 10);
        auto want = oracle_search(records, q, 10);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == want[i].id);
            CHECK(got[i].score == want[i].score);
        }
    }
}

TEST_CASE("search_flat: deterministic tie ordering") {
    VectorIndex idx;
    auto rng = testutil::make_rng(215);
    FeatureVector v = testutil::random_unit_vector(rng);
    std::vector<VectorRecord> records;
    // Same vector under several identities: scores tie exactly.
    records.push_back({10, 3, 1.0, v});
    records.push_back({11, 1, 9.0, v});
    records.push_back({12, 1, 2.0, v});
    idx.insert_batch(records);
    auto hits = idx.search_flat(v, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == 12); // media 1, t 2.0
    CHECK(hits[1].id == 11); // media 1, t 9.0
    CHECK(hits[2].id == 10); // media 3
}

TEST_CASE("train_kmeans: nlist=1 gives the normalized mean") {
    auto rng = testutil::make_rng(203);
    std::vector<FeatureVector> sample;
    for (int i = 0; i < 50; ++i) sample.push_back(testutil::random_unit_vector(rng));
    auto centroids = train_kmeans(sample, 1, 7);
    REQUIRE(centroids.size() == 1);

    FeatureVector mean;
    for (const auto& v : sample)
        for (size_t d = 0; d < kVectorDim; ++d) mean.values[d] += v.values[d];
    double n2 = 0;
    for (double x : mean.values) n2 += x * x;
    for (auto& x : mean.values) x /= std::sqrt(n2);
    for (size_t d = 0; d < kVectorDim; ++d)
        CHECK(centroids[0].values[d] == doctest::Approx(mean.values[d]).epsilon(1e-9));
}

TEST_CASE("train_kmeans: two separated clusters are recovered") {
    auto rng = testutil::make_rng(204);
    std::vector<FeatureVector> sample;
    FeatureVector a{}, b{};
    a.values[0] = 1.0;
    b.values[50] = 1.0;
    std::normal_distribution<double> noise(0.0, 0.02);
    auto jitter = [&](const FeatureVector& base) {
        FeatureVector v = base;
        for (auto& x : v.values) x = std::abs(x + noise(rng));
        double n2 = 0;
        for (double x : v.values) n2 += x * x;
        for (auto& x : v.values) x /= std::sqrt(n2);
        return v;
    };
    std::vector<FeatureVector> cluster_a, cluster_b;
    for (int i = 0; i < 100; ++i) {
        cluster_a.push_back(jitter(a));
        cluster_b.push_back(jitter(b));
        sample.push_back(cluster_a.back());
        sample.push_back(cluster_b.back());
    }
    auto centroids = train_kmeans(sample, 2, 11);
    REQUIRE(centroids.size() == 2);

    auto cluster_mean = [](const std::vector<FeatureVector>& vs) {
        FeatureVector m;
        for (const auto& v : vs)
            for (size_t d = 0; d < kVectorDim; ++d) m.values[d] += v.values[d];
        double n2 = 0;
        for (double x : m.values) n2 += x * x;
        for (auto& x : m.values) x /= std::sqrt(n2);
        return m;
    };
    FeatureVector ma = cluster_mean(cluster_a), mb = cluster_mean(cluster_b);
    // Each centroid within 0.05 cosine of one cluster mean, and the two
    // centroids split the clusters.
    double c0a = centroids[0].dot(ma), c0b = centroids[0].dot(mb);
    double c1a = centroids[1].dot(ma), c1b = centroids[1].dot(mb);
    if (c0a > c0b) {
        CHECK(c0a > 0.95);
        CHECK(c1b > 0.95);
    } else {
        CHECK(c0b > 0.95);
        CHECK(c1a > 0.95);
    }
}

TEST_CASE("train_kmeans: fixed seed is bit-identical, small sample errors") {
    auto rng = testutil::make_rng(205);
    std::vector<FeatureVector> sample;
    for (int i = 0; i < 64; ++i) sample.push_back(testutil::random_unit_vector(rng));
    auto c1 = train_kmeans(sample, 8, 123);
    auto c2 = train_kmeans(sample, 8, 123);
    REQUIRE(c1.size() == c2.size());
    for (size_t i = 0; i < c1.size(); ++i)
        for (size_t d = 0; d < kVectorDim; ++d)
            CHECK(c1[i].values[d] == c2[i].values[d]);

    auto c3 = train_kmeans(sample, 8, 124);
    bool any_diff = false;
    for (size_t i = 0; i < c3.size() && !any_diff; ++i)
        any_diff = !(c3[i] == c1[i]);
    CHECK(any_diff);

    CHECK_THROWS_AS(train_kmeans(sample, 65, 1), DomainError);
}

TEST_CASE("search_ivf: full probe equals flat search exactly") {
    auto rng = testutil::make_rng(206);
    VectorIndex idx;
    auto records = make_records(rng, 500);
    idx.insert_batch(records);
    idx.train_ivf(16, 42);

    for (int trial = 0; trial < 25; ++trial) {
        FeatureVector q = testutil::random_unit_vector(rng);
        auto flat = idx.search_flat(q, 10);
        auto ivf = idx.search_ivf(q, 10, 16);
        CHECK(same_hits(flat, ivf));
    }
}

TEST_CASE("search_ivf: self-query ranks its own record first") {
    auto rng = testutil::make_rng(207);
    VectorIndex idx;
    auto records = make_records(rng, 400);
    idx.insert_batch(records);
    idx.train_ivf(20, 9);
    for (int i = 0; i < 50; ++i) {
        auto hits = idx.search_ivf(records[i * 7].vec, 5, 1);
        REQUIRE(!hits.empty());
        CHECK(hits[0].id == records[i * 7].id);
    }
}

TEST_CASE("search_ivf: parameter validation") {
    auto rng = testutil::make_rng(208);
    VectorIndex idx;
    idx.insert_batch(make_records(rng, 64));
    FeatureVector q = testutil::random_unit_vector(rng);
    CHECK_THROWS_AS(idx.search_ivf(q, 10, 1), DomainError); // untrained
    idx.train_ivf(8, 3);
    CHECK_THROWS_AS(idx.search_ivf(q, 10, 0), DomainError);
    CHECK_THROWS_AS(idx.search_ivf(q, 10, 9), DomainError);
    CHECK_THROWS_AS(idx.search_flat(q, 0), DomainError);
}

TEST_CASE("search_ivf: recall is monotone in nprobe") {
    auto rng = testutil::make_rng(209);
    VectorIndex idx;
    auto records = make_records(rng, 2000);
    idx.insert_batch(records);
    idx.train_ivf(32, 5);

    std::vector<FeatureVector> queries;
    for (int i = 0; i < 20; ++i) queries.push_back(testutil::random_unit_vector(rng));

    double prev = -1.0;
    for (uint32_t nprobe : {1u, 2u, 4u, 8u, 16u, 32u}) {
        double recall_sum = 0.0;
        for (const auto& q : queries) {
            auto exact = idx.search_flat(q, 10);
            auto approx = idx.search_ivf(q, 10, nprobe);
            std::set<uint64_t> truth;
            for (const auto& h : exact) truth.insert(h.id);
            size_t inter = 0;
            for (const auto& h : approx) inter += truth.count(h.id);
            recall_sum += static_cast<double>(inter) / exact.size();
        }
        double recall = recall_sum / queries.size();
        CHECK(recall >= prev);
        prev = recall;
    }
    CHECK(prev == 1.0); // nprobe = nlist recovers everything
}

TEST_CASE("inner product of unit vectors equals cosine similarity") {
    auto rng = testutil::make_rng(210);
    for (int trial = 0; trial < 100; ++trial) {
        FeatureVector u = testutil::random_unit_vector(rng);
        FeatureVector v = testutil::random_unit_vector(rng);
        double ip = u.dot(v);
        double cosang =
            u.dot(v) / (std::sqrt(u.norm2()) * std::sqrt(v.norm2()));
        CHECK(std::abs(ip - cosang) < 1e-9);
        CHECK(ip >= -1.0 - 1e-12);
        CHECK(ip <= 1.0 + 1e-12);
    }
}

TEST_CASE("insert-then-search: every record finds itself") {
    auto rng = testutil::make_rng(211);
    VectorIndex idx;
    auto records = make_records(rng, 300);
    idx.insert_batch(records);
    for (const auto& r : records) {
        auto hits = idx.search_flat(r.vec, 1);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].score >= 1.0 - 1e-9);
    }
}

TEST_CASE("table-2 scale: 55,677 records insert and search") {
    auto rng = testutil::make_rng(212);
    VectorIndex idx;
    auto records = make_records(rng, 55677);
    CHECK(idx.insert_batch(records) == 55677);
    CHECK(idx.size() == 55677);
    auto hits = idx.search_flat(records[31337].vec, 3);
    REQUIRE(!hits.empty());
    CHECK(hits[0].id == records[31337].id);
}

TEST_CASE("snapshot: empty roundtrip") {
    auto dir = temp_dir("snap_empty");
    VectorIndex idx;
    idx.save_snapshot(dir / "idx.snap");
    VectorIndex loaded;
    loaded.load_snapshot(dir / "idx.snap");
    CHECK(loaded.size() == 0);
    CHECK(!loaded.trained());
}

TEST_CASE("snapshot: 10k-record roundtrip preserves searches") {
    auto dir = temp_dir("snap_10k");
    auto rng = testutil::make_rng(213);
    VectorIndex idx;
    idx.insert_batch(make_records(rng, 10000));
    idx.train_ivf(64, 77);
    idx.save_snapshot(dir / "idx.snap");

    VectorIndex loaded;
    loaded.load_snapshot(dir / "idx.snap");
    CHECK(loaded.size() == 10000);
    CHECK(loaded.nlist() == 64);
    CHECK(loaded.default_nprobe() == idx.default_nprobe());

    for (int trial = 0; trial < 100; ++trial) {
        FeatureVector q = testutil::random_unit_vector(rng);
        CHECK(same_hits(idx.search_flat(q, 10), loaded.search_flat(q, 10)));
        CHECK(same_hits(idx.search_ivf(q, 10, 8), loaded.search_ivf(q, 10, 8)));
    }
}

TEST_CASE("snapshot: corruption is detected and the index stays intact") {
    auto dir = temp_dir("snap_corrupt");
    auto rng = testutil::make_rng(214);
    VectorIndex idx;
    idx.insert_batch(make_records(rng, 100));
    idx.save_snapshot(dir / "idx.snap");

    // Truncate.
    auto bytes = [&] {
        std::ifstream f(dir / "idx.snap", std::ios::binary);
        return std::vector<char>((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
    }();
    {
        std::ofstream f(dir / "trunc.snap", std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    // Flip one payload byte.
    {
        auto flipped = bytes;
        flipped[bytes.size() / 3] ^= 0x5a;
        std::ofstream f(dir / "flip.snap", std::ios::binary);
        f.write(flipped.data(), static_cast<std::streamsize>(flipped.size()));
    }

    VectorIndex other;
    other.insert_batch(make_records(rng, 5, 9000));
    CHECK_THROWS_AS(other.load_snapshot(dir / "trunc.snap"), CorruptError);
    CHECK(other.size() == 5);
    CHECK_THROWS_AS(other.load_snapshot(dir / "flip.snap"), CorruptError);
    CHECK(other.size() == 5);
}

TEST_CASE("concurrent readers agree while searches run in parallel") {
    auto rng = testutil::make_rng(216);
    VectorIndex idx;
    auto records = make_records(rng, 2000);
    idx.insert_batch(records);
    idx.train_ivf(16, 4);

    std::vector<FeatureVector> queries;
    for (int i = 0; i < 16; ++i) queries.push_back(testutil::random_unit_vector(rng));
    std::vector<std::vector<uint64_t>> expected;
    for (const auto& q : queries) {
        std::vector<uint64_t> ids;
        for (const auto& h : idx.search_flat(q, 5)) ids.push_back(h.id);
        expected.push_back(std::move(ids));
    }

    std::atomic<int> mismatches{0};
    auto worker = [&] {
        for (int round = 0; round < 50; ++round)
            for (size_t i = 0; i < queries.size(); ++i) {
                auto hits = idx.search_flat(queries[i], 5);
                for (size_t r = 0; r < hits.size(); ++r)
                    if (hits[r].id != expected[i][r]) ++mismatches;
            }
    };
    std::thread t1(worker), t2(worker), t3(worker);
    t1.join();
    t2.join();
    t3.join();
    CHECK(mismatches == 0);
}

TEST_CASE("auto parameters") {
    CHECK(auto_nlist(0) == 16);
    CHECK(auto_nlist(100) == 16);
    CHECK(auto_nlist(55677) == 236);
    CHECK(auto_nlist(100'000'000) == 4096);
    CHECK(auto_nprobe(16) == 8);
    CHECK(auto_nprobe(256) == 16);
    CHECK(auto_nprobe(4096) == 256);
}
