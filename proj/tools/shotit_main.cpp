#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <thread>

#include "shotit/bench.hpp"
#include "shotit/catalog.hpp"
#include "shotit/config.hpp"
#include "shotit/errors.hpp"
#include "shotit/http_api.hpp"
#include "shotit/image_io.hpp"
#include "shotit/pipeline.hpp"
#include "shotit/service.hpp"
#include "shotit/vecindex.hpp"

namespace fs = std::filesystem;
using namespace shotit;

namespace {

constexpr uint64_t kTrainSeed = 42;

struct Runtime {
    Config cfg;
    std::unique_ptr<ObjectStore> store;
    std::unique_ptr<Catalog> catalog;
    VectorIndex index;
    std::unique_ptr<SearchService> service;
};

Runtime open_runtime(const std::optional<fs::path>& config_file, bool load_index) {
    Runtime rt;
    std::optional<fs::path> file = config_file;
    if (!file && fs::exists("shotit.conf")) file = fs::path("shotit.conf");
    rt.cfg = Config::load(file);
    rt.store = open_object_store(rt.cfg.store_backend, rt.cfg.store_path_or_endpoint);
    rt.catalog = std::make_unique<Catalog>(rt.cfg.catalog_journal_path());
    if (load_index && fs::exists(rt.cfg.index_path))
        rt.index.load_snapshot(rt.cfg.index_path);
    rt.service =
        std::make_unique<SearchService>(rt.index, *rt.catalog, *rt.store, rt.cfg);
    return rt;
}

void train_and_save(Runtime& rt) {
    size_t n = rt.index.size();
    if (rt.cfg.search_engine == "ivf" && n > 0) {
        uint32_t nlist = rt.cfg.nlist ? rt.cfg.nlist : auto_nlist(n);
        if (n >= nlist) {
            std::printf("training ivf: n=%zu nlist=%u\n", n, nlist);
            rt.index.train_ivf(nlist, kTrainSeed);
        } else {
            std::printf("skipping ivf training: %zu vectors < nlist %u\n", n, nlist);
        }
    }
    rt.index.save_snapshot(rt.cfg.index_path);
    rt.catalog->export_snapshot(rt.cfg.data_dir() / "catalog.json");
    std::printf("index saved: %s (%zu vectors)\n", rt.cfg.index_path.c_str(),
                rt.index.size());
}

int cmd_index(const std::optional<fs::path>& config_file, const std::string& dir,
              bool watch) {
    Runtime rt = open_runtime(config_file, true);
    if (!dir.empty()) rt.cfg.incoming_dir = dir;

    IngestPipeline pipe({rt.cfg.incoming_dir, rt.cfg.hash_dir(), rt.cfg.decoder_cmd},
                        *rt.store, *rt.catalog, rt.index);
    auto interval = std::chrono::duration<double>(rt.cfg.poll_interval_s);

    size_t total = 0;
    int idle_polls = 0;
    for (;;) {
        auto done = pipe.run_once();
        for (uint64_t id : done) {
            auto rec = rt.catalog->get(id);
            std::printf("loaded media %llu (%s)\n",
                        static_cast<unsigned long long>(id), rec.store_key.c_str());
        }
        total += done.size();
        idle_polls = done.empty() ? idle_polls + 1 : 0;
        // One-shot mode stops after the stability poll plus one quiet poll.
        if (!watch && idle_polls >= 2 && total > 0) break;
        if (!watch && idle_polls >= 3) break;
        std::this_thread::sleep_for(interval);
    }
    std::printf("ingested %zu media file(s)\n", total);
    train_and_save(rt);
    return 0;
}

int cmd_search(const std::optional<fs::path>& config_file, const std::string& image_path,
               int top_k, bool no_cut_borders, bool as_json) {
    Runtime rt = open_runtime(config_file, true);
    SearchRequest req;
    req.image = read_file(image_path);
    req.top_k = top_k;
    req.cut_borders = !no_cut_borders;
    SearchResponse resp = rt.service->handle_search(req);

    if (as_json) {
        std::printf("%s\n", search_response_to_json(resp).c_str());
        return 0;
    }
    std::printf("searched %llu indexed frames\n",
                static_cast<unsigned long long>(resp.frame_count));
    if (resp.results.empty()) {
        std::printf("no matches\n");
        return 0;
    }
    std::printf("%-4s %-8s %-24s %-10s %-12s %s\n", "#", "media", "file", "at(s)",
                "similarity", "clip");
    int rank = 1;
    for (const auto& row : resp.results) {
        std::printf("%-4d %-8llu %-24s %-10s %-12.6f [%s, %s]\n", rank++,
                    static_cast<unsigned long long>(row.media_id),
                    row.filename.c_str(), format_ts(row.at).c_str(), row.similarity,
                    format_ts(row.from).c_str(), format_ts(row.to).c_str());
    }
    return 0;
}

int cmd_serve(const std::optional<fs::path>& config_file, const std::string& addr) {
    Runtime rt = open_runtime(config_file, true);
    auto colon = addr.rfind(':');
    if (colon == std::string::npos)
        throw InvalidInput("--addr must look like host:port");
    std::string host = addr.substr(0, colon);
    int port = std::stoi(addr.substr(colon + 1));

    ApiServer api(*rt.service);
    int bound = api.bind(host, port);
    if (bound < 0) throw IoError("cannot bind " + addr);
    std::printf("serving on http://%s:%d (%zu vectors, %zu media)\n", host.c_str(),
                bound, rt.index.size(), rt.catalog->count());
    api.run();
    return 0;
}

int cmd_status(const std::optional<fs::path>& config_file) {
    Runtime rt = open_runtime(config_file, true);
    std::printf("index: %zu vectors%s", rt.index.size(),
                rt.index.trained() ? "" : " (flat only)");
    if (rt.index.trained())
        std::printf(", ivf nlist=%u nprobe=%u", rt.index.nlist(),
                    rt.index.default_nprobe());
    std::printf("\ncatalog: %zu media\n", rt.catalog->count());
    for (const auto& rec : rt.catalog->list_media()) {
        std::printf("  %6llu  %-9s fps=%-7s dur=%-8s %s\n",
                    static_cast<unsigned long long>(rec.media_id),
                    std::string(to_string(rec.state)).c_str(),
                    format_ts(rec.fps).c_str(), format_ts(rec.duration).c_str(),
                    rec.store_key.c_str());
    }
    return 0;
}

int cmd_bench(size_t n, bool dim_check, uint32_t nlist, uint32_t nprobe,
              size_t n_queries, const std::string& out_path) {
    std::printf("generating %zu synthetic unit vectors...\n", n);
    auto vecs = synthetic_unit_vectors(n, 1234);
    auto queries = synthetic_unit_vectors(n_queries, 5678);

    if (dim_check) {
        for (const auto& v : vecs)
            if (std::abs(std::sqrt(v.norm2()) - 1.0) > 1e-9)
                throw DomainError("dim-check failed: non-unit vector in dataset");
        std::printf("dim-check: %zu vectors, dim=%zu, all unit norm\n", vecs.size(),
                    kVectorDim);
    }

    VectorIndex index;
    auto t0 = std::chrono::steady_clock::now();
    index.insert_batch(to_records(vecs));
    if (!nlist) nlist = auto_nlist(n);
    index.train_ivf(nlist, kTrainSeed);
    double build_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!nprobe) nprobe = auto_nprobe(nlist);
    std::printf("built index in %.2fs (nlist=%u, nprobe=%u)\n", build_s, nlist, nprobe);

    std::string dataset = "synthetic-" + std::to_string(n);
    std::string lines;
    for (const std::string& engine : {std::string("flat"), std::string("ivf")}) {
        BenchReport r = run_search_bench(index, queries, 10, engine, nprobe);
        r.dataset = dataset;
        r.build_s = build_s;
        std::printf("%-5s p50=%.3fms p95=%.3fms p99=%.3fms recall@10=%.4f\n",
                    engine.c_str(), r.p50_ms, r.p95_ms, r.p99_ms, r.recall_at_k);
        lines += report_to_jsonl(r);
    }
    if (!out_path.empty()) {
        write_file(out_path, std::span<const uint8_t>(
                                 reinterpret_cast<const uint8_t*>(lines.data()),
                                 lines.size()));
        std::printf("report written to %s\n", out_path.c_str());
    } else {
        std::fputs(lines.c_str(), stdout);
    }
    return 0;
}

int cmd_bundle(const std::string& frames_dir, const std::string& out_zip, double fps) {
    fs::path dir(frames_dir);
    BundleManifest manifest;
    if (fs::exists(dir / "manifest.json")) {
        manifest = parse_manifest(read_file(dir / "manifest.json"));
    } else {
        if (fps <= 0)
            throw InvalidInput("no manifest.json: pass --fps for a bare frame dir");
        // Infer layout from the numbered frames.
        size_t count = 0;
        std::string format;
        for (;; ++count) {
            if (fs::exists(dir / frame_file_name(count, "ppm"))) format = "ppm";
            else if (fs::exists(dir / frame_file_name(count, "png"))) format = "png";
            else break;
        }
        if (count == 0)
            throw InvalidInput("no frame_000000.ppm/png found in " + frames_dir);
        RasterImage first = load_image(dir / frame_file_name(0, format));
        manifest = {fps, first.width, first.height, count, format};
    }

    std::vector<RasterImage> frames;
    frames.reserve(manifest.frame_count);
    for (size_t i = 0; i < manifest.frame_count; ++i)
        frames.push_back(load_image(dir / frame_file_name(i, manifest.format)));
    auto bytes = pack_bundle(frames, manifest.fps, manifest.format);
    write_file(out_zip, bytes);
    std::printf("bundle written: %s (%zu frames @ %s fps, %dx%d)\n", out_zip.c_str(),
                manifest.frame_count, format_ts(manifest.fps).c_str(), manifest.width,
                manifest.height);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"shotit: image-to-video search engine"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "configuration file (key = value)");

    auto* index_cmd = app.add_subcommand("index", "ingest media from a directory");
    std::string index_dir;
    bool watch = false;
    index_cmd->add_option("dir", index_dir, "incoming directory (default from config)");
    index_cmd->add_flag("--watch", watch, "keep polling instead of one-shot");

    auto* search_cmd = app.add_subcommand("search", "find a screenshot's video");
    std::string image_path;
    int top_k = 10;
    bool no_cut = false, as_json = false;
    search_cmd->add_option("image", image_path, "query image (PNG or PPM)")->required();
    search_cmd->add_option("--top-k", top_k, "result count (1..100)");
    search_cmd->add_flag("--no-cut-borders", no_cut, "skip black border removal");
    search_cmd->add_flag("--json", as_json, "emit the JSON response");

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP API");
    std::string addr = "0.0.0.0:3311";
    serve_cmd->add_option("--addr", addr, "bind address host:port");

    app.add_subcommand("status", "catalog and index summary");

    auto* bench_cmd = app.add_subcommand("bench", "latency / recall benchmark");
    size_t bench_n = 55677, bench_queries = 100;
    bool dim_check = false;
    uint32_t bench_nlist = 0, bench_nprobe = 0;
    std::string bench_out;
    bench_cmd->add_option("--n", bench_n, "dataset size");
    bench_cmd->add_flag("--dim-check", dim_check, "verify vector dimensions first");
    bench_cmd->add_option("--nlist", bench_nlist, "ivf centroid count (0 = auto)");
    bench_cmd->add_option("--nprobe", bench_nprobe, "ivf probe count (0 = auto)");
    bench_cmd->add_option("--queries", bench_queries, "query count");
    bench_cmd->add_option("--out", bench_out, "JSONL report path");

    auto* bundle_cmd = app.add_subcommand("bundle", "pack a frame directory into a media zip");
    std::string frames_dir, out_zip;
    double bundle_fps = 0.0;
    bundle_cmd->add_option("frames_dir", frames_dir, "directory of frame_%06d images")
        ->required();
    bundle_cmd->add_option("out_zip", out_zip, "output bundle path")->required();
    bundle_cmd->add_option("--fps", bundle_fps, "frame rate when no manifest.json");

    CLI11_PARSE(app, argc, argv);

    std::optional<fs::path> config_file;
    if (!config_path.empty()) config_file = fs::path(config_path);

    try {
        if (index_cmd->parsed()) return cmd_index(config_file, index_dir, watch);
        if (search_cmd->parsed())
            return cmd_search(config_file, image_path, top_k, no_cut, as_json);
        if (serve_cmd->parsed()) return cmd_serve(config_file, addr);
        if (app.get_subcommand("status")->parsed()) return cmd_status(config_file);
        if (bench_cmd->parsed())
            return cmd_bench(bench_n, dim_check, bench_nlist, bench_nprobe,
                             bench_queries, bench_out);
        if (bundle_cmd->parsed()) return cmd_bundle(frames_dir, out_zip, bundle_fps);
    } catch (const Error& e) {
        std::fprintf(stderr, "shotit: %s\n", e.what());
        return 1;
    }
    return 0;
}
