#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <thread>

#include "shotit/errors.hpp"
#include "shotit/http_api.hpp"
#include "shotit/image_io.hpp"
#include "shotit/pipeline.hpp"
#include "shotit/service.hpp"
#include "testutil.hpp"

using namespace shotit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("shotit_svc_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// A fully ingested two-movie deployment backed by temp directories.
struct Deployment {
    fs::path dir;
    std::unique_ptr<LocalFsStore> store;
    std::unique_ptr<Catalog> catalog;
    VectorIndex index;
    Config cfg;
    std::unique_ptr<SearchService> service;
    std::vector<RasterImage> frames_a, frames_b;
    uint64_t media_a = 0, media_b = 0;

    SearchService& svc() { return *service; }
};

// Scenes alternate between dark and bright fills, so every cut moves the
// luminance sum far past the snap threshold.
std::vector<RasterImage> contrast_movie(size_t n_frames, int w, int h,
                                        size_t scene_frames) {
    std::vector<RasterImage> frames;
    for (size_t f = 0; f < n_frames; ++f) {
        uint8_t level = (f / scene_frames) % 2 ? 220 : 40;
        auto img = RasterImage::filled(w, h, level, level, level);
        int side = std::max(4, w / 8);
        int sx = static_cast<int>((f * 5) % static_cast<size_t>(w - side));
        int sy = static_cast<int>((f * 11) % static_cast<size_t>(h - side));
        for (int y = sy; y < sy + side; ++y)
            for (int x = sx; x < sx + side; ++x) {
                uint8_t* p = img.px(x, y);
                p[0] = static_cast<uint8_t>(255 - level);
                p[1] = static_cast<uint8_t>(f % 199);
                p[2] = level;
            }
        frames.push_back(std::move(img));
    }
    return frames;
}

Deployment make_deployment(const char* tag, uint64_t seed, bool train,
                           std::string clipper_cmd = "",
                           std::vector<RasterImage> frames_a_override = {}) {
    Deployment d;
    d.dir = fresh_dir(tag);
    fs::create_directories(d.dir / "incoming");
    d.store = std::make_unique<LocalFsStore>(d.dir / "store");
    d.catalog = std::make_unique<Catalog>(d.dir / "catalog.journal", false);

    auto rng = testutil::make_rng(seed);
    d.frames_a = frames_a_override.empty()
                     ? testutil::synth_movie(rng, 24, 64, 64, 8) // 3 s at 8 fps
                     : std::move(frames_a_override);
    d.frames_b = testutil::synth_movie(rng, 24, 64, 64, 8);
    write_file(d.dir / "incoming" / "movie_a.zip", pack_bundle(d.frames_a, 8.0));
    write_file(d.dir / "incoming" / "movie_b.zip", pack_bundle(d.frames_b, 8.0));

    IngestPipeline pipe({d.dir / "incoming", d.dir / "hashes", ""}, *d.store,
                        *d.catalog, d.index);
    pipe.run_once();
    auto done = pipe.run_once();
    REQUIRE(done.size() == 2);
    d.media_a = d.catalog->find_by_store_key("movie_a.zip")->media_id;
    d.media_b = d.catalog->find_by_store_key("movie_b.zip")->media_id;

    if (train) d.index.train_ivf(8, 42);

    d.cfg = Config{};
    d.cfg.search_engine = train ? "ivf" : "flat";
    d.cfg.clip_window_s = 5.0;
    d.cfg.theta = 0.35;
    d.cfg.media_base_url = "http://media.test";
    d.cfg.clipper_cmd = std::move(clipper_cmd);
    d.service = std::make_unique<SearchService>(d.index, *d.catalog, *d.store, d.cfg);
    return d;
}

} // namespace

TEST_CASE("snap_clip_range: constant sums keep the full window") {
    std::vector<double> sums(9, 1000.0);
    ClipRange r = snap_clip_range(sums, 0.0, 4.0, 1.0, 0.35);
    CHECK(r.from == 0.0);
    CHECK(r.to == 8.0);
}

TEST_CASE("snap_clip_range: single step fixture") {
    // Window [0, 8] at 1 fps, sums step upward at t = 3.0, hit at 4.0.
    std::vector<double> sums = {100, 100, 100, 900, 900, 900, 900, 900, 900};
    ClipRange r = snap_clip_range(sums, 0.0, 4.0, 1.0, 0.35);
    CHECK(r.from == 3.0); // first frame after the step
    CHECK(r.to == 8.0);   // no forward change: window edge
}

TEST_CASE("snap_clip_range: two steps bracket the hit") {
    std::vector<double> sums = {100, 100, 900, 900, 900, 900, 100, 100, 100};
    // Steps between t=1..2 and t=5..6; hit at 4.0.
    ClipRange r = snap_clip_range(sums, 0.0, 4.0, 1.0, 0.35);
    CHECK(r.from == 2.0);
    CHECK(r.to == 5.0); // one frame before the 6.0 change
    CHECK(6.0 - r.to <= 1.0);
}

TEST_CASE("snap_clip_range: validation and hit containment") {
    CHECK_THROWS_AS(snap_clip_range({}, 0, 0, 1, 0.35), InvalidInput);
    std::vector<double> sums = {5, 5};
    CHECK_THROWS_AS(snap_clip_range(sums, 0, 0, 0.0, 0.35), InvalidInput);
    CHECK_THROWS_AS(snap_clip_range(sums, 0, 0, 1, 0.0), InvalidInput);

    auto rng = testutil::make_rng(500);
    std::uniform_real_distribution<double> level(0.0, 2000.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(48);
        for (auto& x : s) x = level(rng);
        double t_hit = (rng() % 48) / 24.0;
        ClipRange r = snap_clip_range(s, 0.0, t_hit, 24.0, 0.35);
        CHECK(r.from <= t_hit);
        CHECK(r.to >= t_hit);
    }
}

TEST_CASE("snap_clip_range: all-dark window does not divide by zero") {
    std::vector<double> sums(10, 0.0);
    ClipRange r = snap_clip_range(sums, 0.0, 0.2, 1.0, 0.35);
    CHECK(r.from == 0.0);
    CHECK(r.to == 9.0);
}

TEST_CASE("handle_search: exact indexed frame is the top hit") {
    auto d = make_deployment("exact", 501, false);
    SearchRequest req;
    req.image = encode_png(d.frames_a[10]);
    SearchResponse resp = d.svc().handle_search(req);

    CHECK(resp.frame_count == d.index.size());
    REQUIRE(!resp.results.empty());
    CHECK(resp.results[0].media_id == d.media_a);
    CHECK(resp.results[0].similarity >= 0.999);
    CHECK(resp.results[0].at == doctest::Approx(10.0 / 8.0));
    CHECK(resp.results[0].from <= resp.results[0].at);
    CHECK(resp.results[0].to >= resp.results[0].at);
    // Similarity is non-increasing down the list.
    for (size_t i = 1; i < resp.results.size(); ++i)
        CHECK(resp.results[i].similarity <= resp.results[i - 1].similarity);
}

TEST_CASE("handle_search: letterboxed query with border cut finds the movie") {
    auto d = make_deployment("bars", 502, true);
    RasterImage barred = testutil::with_black_bars(d.frames_a[10], 20, 20, 0, 0);

    SearchRequest req;
    req.image = encode_png(barred);
    req.cut_borders = true;
    SearchResponse resp = d.svc().handle_search(req);
    REQUIRE(!resp.results.empty());
    CHECK(resp.results[0].media_id == d.media_a);

    // Oracle: the borderless query's own result.
    SearchRequest clean;
    clean.image = encode_png(d.frames_a[10]);
    SearchResponse want = d.svc().handle_search(clean);
    REQUIRE(!want.results.empty());
    CHECK(resp.results[0].media_id == want.results[0].media_id);
    CHECK(resp.results[0].at == want.results[0].at);
}

TEST_CASE("handle_search: cut_borders is a no-op on borderless images") {
    auto d = make_deployment("noop", 504, false);
    SearchRequest on, off;
    on.image = off.image = encode_png(d.frames_b[5]);
    on.cut_borders = true;
    off.cut_borders = false;
    auto r_on = d.svc().handle_search(on);
    auto r_off = d.svc().handle_search(off);
    REQUIRE(!r_on.results.empty());
    REQUIRE(!r_off.results.empty());
    CHECK(r_on.results[0].media_id == r_off.results[0].media_id);
    CHECK(r_on.results[0].at == r_off.results[0].at);
    CHECK(r_on.results[0].similarity == r_off.results[0].similarity);
}

TEST_CASE("handle_search: request validation and empty index") {
    auto d = make_deployment("validation", 505, false);
    SearchRequest req;
    req.image = encode_png(d.frames_a[0]);
    req.top_k = 200;
    CHECK_THROWS_AS(d.svc().handle_search(req), DomainError);
    req.top_k = 0;
    CHECK_THROWS_AS(d.svc().handle_search(req), DomainError);

    req.top_k = 10;
    req.image = {1, 2, 3, 4};
    CHECK_THROWS_AS(d.svc().handle_search(req), ParseError);

    VectorIndex empty_index;
    SearchService empty_svc(empty_index, *d.catalog, *d.store, d.cfg);
    SearchRequest ok;
    ok.image = encode_png(d.frames_a[0]);
    SearchResponse resp = empty_svc.handle_search(ok);
    CHECK(resp.frame_count == 0);
    CHECK(resp.results.empty());
}

TEST_CASE("assemble_results: URLs, ordering, and unknown-media drops") {
    auto d = make_deployment("assemble", 506, false);

    // A hand-made hit at t = 12.5 on media without stored frames: the
    // clip range falls back to the +-5 s window clamped by duration.
    auto rec = d.catalog->create_media("/src/plain.zip", "plain.zip");
    d.catalog->transition(rec.media_id, MediaState::Hashing);
    d.catalog->set_media_info(rec.media_id, 24.0, 20.0);

    std::vector<SearchHit> hits;
    hits.push_back({1, rec.media_id, 12.5, 0.875});
    hits.push_back({2, 424242, 1.0, 0.5}); // unknown media: dropped
    SearchResponse resp = d.svc().assemble_results(hits);

    REQUIRE(resp.results.size() == 1);
    const auto& row = resp.results[0];
    CHECK(row.at == 12.5);
    CHECK(row.filename == "plain.zip");
    CHECK(row.from == 7.5);
    CHECK(row.to == 17.5);
    CHECK(row.video_url == "http://media.test/video/" + std::to_string(rec.media_id) +
                               "?from=7.5&to=17.5");
    CHECK(row.image_url == "http://media.test/image/" + std::to_string(rec.media_id) +
                               "?t=12.5");

    // Order preservation over many hits.
    std::vector<SearchHit> many;
    for (int i = 0; i < 10; ++i)
        many.push_back({static_cast<uint64_t>(i), d.media_a, i * 0.5,
                        1.0 - 0.05 * i});
    SearchResponse ordered = d.svc().assemble_results(many);
    REQUIRE(ordered.results.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(ordered.results[i].at == i * 0.5);
}

TEST_CASE("search result clip ranges snap to the synthetic scene cuts") {
    auto d = make_deployment("snap_e2e", 507, false, "",
                             contrast_movie(24, 64, 64, 8));
    // Frame 12 sits in scene [1.0, 2.0) of a 3 s movie at 8 fps.
    SearchRequest req;
    req.image = encode_png(d.frames_a[12]);
    SearchResponse resp = d.svc().handle_search(req);
    REQUIRE(!resp.results.empty());
    const auto& row = resp.results[0];
    CHECK(row.media_id == d.media_a);
    // Scene bounds within one frame duration (1/8 s) plus the cut frame.
    CHECK(row.from >= 1.0 - 0.125);
    CHECK(row.from <= 1.5);
    CHECK(row.to >= 1.75);
    CHECK(row.to <= 2.0 + 0.125);
}

TEST_CASE("media_image_png: nearest frame, byte-identical encoding") {
    auto d = make_deployment("image", 508, false);
    auto png = d.svc().media_image_png(d.media_a, 0.0);
    CHECK(png == encode_png(d.frames_a[0]));

    // t = 1.3 s at 8 fps -> frame 10 (10.4 rounds down).
    auto png2 = d.svc().media_image_png(d.media_a, 1.3);
    CHECK(png2 == encode_png(d.frames_a[10]));

    // Far beyond the end clamps to the last frame.
    auto png3 = d.svc().media_image_png(d.media_a, 99.0);
    CHECK(png3 == encode_png(d.frames_a[23]));

    CHECK_THROWS_AS(d.svc().media_image_png(999999, 0.0), NotFoundError);

    auto rec = d.catalog->create_media("u.zip", "u.zip"); // UPLOADED, not LOADED
    CHECK_THROWS_AS(d.svc().media_image_png(rec.media_id, 0.0), NotFoundError);
}

TEST_CASE("media_video_clip: frame-ZIP fallback and range validation") {
    auto d = make_deployment("clipzip", 509, false);
    std::string ct;
    auto zip_bytes = d.svc().media_video_clip(d.media_a, 1.0, 2.0, &ct);
    CHECK(ct == "application/zip");
    ZipArchive zip(zip_bytes);
    // Frames 8..16 inclusive at 8 fps.
    CHECK(zip.entry_count() == 9);
    CHECK(zip.has("frame_000008.ppm"));
    CHECK(zip.has("frame_000016.ppm"));
    CHECK(zip.read("frame_000008.ppm") == encode_ppm(d.frames_a[8]));

    CHECK_THROWS_AS(d.svc().media_video_clip(d.media_a, 2.0, 1.0, &ct), InvalidInput);
    CHECK_THROWS_AS(d.svc().media_video_clip(d.media_a, -1.0, 1.0, &ct), InvalidInput);
}

TEST_CASE("media_video_clip: clipper command output and failure surface") {
    auto ok = make_deployment("clipok", 510, false,
                              "printf 'CLIP %s %s ' {from} {to} && wc -c < {store_path}");
    std::string ct;
    auto out = ok.svc().media_video_clip(ok.media_a, 0.5, 1.5, &ct);
    std::string text(out.begin(), out.end());
    CHECK(text.find("CLIP 0.5 1.5") == 0);
    CHECK(ct == "application/octet-stream");

    auto bad = make_deployment("clipbad", 511, false,
                               "echo boom-detail >&2; false");
    try {
        bad.svc().media_video_clip(bad.media_a, 0.0, 1.0, &ct);
        FAIL("expected UpstreamError");
    } catch (const UpstreamError& e) {
        CHECK(std::string(e.what()).find("boom-detail") != std::string::npos);
    }
}

TEST_CASE("http api: search, status, image, video, and error mapping") {
    auto d = make_deployment("http", 512, true);
    ApiServer api(d.svc());
    int port = api.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread th([&] { api.run(); });
    api.wait_until_ready();

    {
        httplib::Client client("127.0.0.1", port);

        auto png = encode_png(d.frames_a[7]);
        httplib::MultipartFormDataItems form = {
            {"image", std::string(png.begin(), png.end()), "q.png", "image/png"}};
        auto res = client.Post("/search?topK=5&cutBorders=true", form);
        REQUIRE(res);
        CHECK(res->status == 200);
        auto j = nlohmann::json::parse(res->body);
        CHECK(j["frame_count"].get<uint64_t>() == d.index.size());
        REQUIRE(!j["results"].empty());
        CHECK(j["results"][0]["media_id"].get<uint64_t>() == d.media_a);
        CHECK(j["results"][0]["similarity"].get<double>() >= 0.999);
        CHECK(j["results"].size() <= 5);

        auto bad = client.Post("/search?topK=200", form);
        REQUIRE(bad);
        CHECK(bad->status == 400);

        httplib::MultipartFormDataItems junk = {
            {"image", "not an image", "x.bin", "application/octet-stream"}};
        auto undecodable = client.Post("/search", junk);
        REQUIRE(undecodable);
        CHECK(undecodable->status == 400);

        auto status = client.Get("/status");
        REQUIRE(status);
        CHECK(status->status == 200);
        auto sj = nlohmann::json::parse(status->body);
        CHECK(sj["frame_count"].get<uint64_t>() == d.index.size());
        CHECK(sj["states"]["LOADED"].get<int>() == 2);

        auto image = client.Get("/image/" + std::to_string(d.media_a) + "?t=0");
        REQUIRE(image);
        CHECK(image->status == 200);
        CHECK(image->get_header_value("Content-Type") == "image/png");
        std::vector<uint8_t> got(image->body.begin(), image->body.end());
        CHECK(got == encode_png(d.frames_a[0]));

        auto missing = client.Get("/image/987654?t=0");
        REQUIRE(missing);
        CHECK(missing->status == 404);

        auto video = client.Get("/video/" + std::to_string(d.media_b) +
                                "?from=0.5&to=1.0");
        REQUIRE(video);
        CHECK(video->status == 200);
        CHECK(video->get_header_value("Content-Type") == "application/zip");

        auto reversed = client.Get("/video/" + std::to_string(d.media_b) +
                                   "?from=2&to=1");
        REQUIRE(reversed);
        CHECK(reversed->status == 400);
    }

    api.stop();
    th.join();
}

TEST_CASE("http api: clipper failures map to 502") {
    auto d = make_deployment("http502", 513, false, "echo fail >&2; exit 3");
    ApiServer api(d.svc());
    int port = api.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread th([&] { api.run(); });
    api.wait_until_ready();
    {
        httplib::Client client("127.0.0.1", port);
        auto res = client.Get("/video/" + std::to_string(d.media_a) + "?from=0&to=1");
        REQUIRE(res);
        CHECK(res->status == 502);
        CHECK(res->body.find("fail") != std::string::npos);
    }
    api.stop();
    th.join();
}

TEST_CASE("config: file parsing, env overrides, validation") {
    auto dir = fresh_dir("config");
    std::string text =
        "# comment\n"
        "incoming_dir = /srv/in\n"
        "store_backend = http\n"
        "store_path_or_endpoint = http://store:9000\n"
        "index_path = /srv/data/index.snap\n"
        "nlist = 512\n"
        "theta = 0.5\n"
        "clipper_cmd = ffmpeg -ss {from} -to {to} -i {store_path} -\n";
    write_file(dir / "shotit.conf",
               std::vector<uint8_t>(text.begin(), text.end()));

    Config cfg = Config::load(dir / "shotit.conf", /*apply_env=*/false);
    CHECK(cfg.incoming_dir == "/srv/in");
    CHECK(cfg.store_backend == "http");
    CHECK(cfg.nlist == 512);
    CHECK(cfg.nprobe == 0); // untouched default
    CHECK(cfg.theta == 0.5);
    CHECK(cfg.clipper_cmd.find("{store_path}") != std::string::npos);
    CHECK(cfg.data_dir() == fs::path("/srv/data"));
    CHECK(cfg.catalog_journal_path() == fs::path("/srv/data/catalog.journal"));

    // SHOTIT_-prefixed environment variables win over file keys.
    setenv("SHOTIT_NLIST", "64", 1);
    setenv("SHOTIT_SEARCH_ENGINE", "flat", 1);
    Config with_env = Config::load(dir / "shotit.conf", true);
    CHECK(with_env.nlist == 64);
    CHECK(with_env.search_engine == "flat");
    unsetenv("SHOTIT_NLIST");
    unsetenv("SHOTIT_SEARCH_ENGINE");

    std::string bad_key = "nonsense = 1\n";
    write_file(dir / "bad.conf", std::vector<uint8_t>(bad_key.begin(), bad_key.end()));
    CHECK_THROWS_AS(Config::load(dir / "bad.conf", false), ParseError);

    std::string bad_val = "nlist = many\n";
    write_file(dir / "badval.conf",
               std::vector<uint8_t>(bad_val.begin(), bad_val.end()));
    CHECK_THROWS_AS(Config::load(dir / "badval.conf", false), ParseError);

    std::string bad_engine = "search_engine = solr\n";
    write_file(dir / "badengine.conf",
               std::vector<uint8_t>(bad_engine.begin(), bad_engine.end()));
    CHECK_THROWS_AS(Config::load(dir / "badengine.conf", false), ParseError);

    CHECK_THROWS_AS(Config::load(dir / "missing.conf", false), IoError);
}

TEST_CASE("format_ts trims trailing zeros") {
    CHECK(format_ts(12.5) == "12.5");
    CHECK(format_ts(12.0) == "12");
    CHECK(format_ts(0.042) == "0.042");
    CHECK(format_ts(1.0 / 3.0) == "0.333");
}
