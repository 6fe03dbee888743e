#include "shotit/http_api.hpp"

#include <httplib.h>
#include <json.hpp>

#include "shotit/errors.hpp"

namespace shotit {

using nlohmann::ordered_json;

std::string search_response_to_json(const SearchResponse& resp) {
    ordered_json j;
    j["frame_count"] = resp.frame_count;
    j["results"] = ordered_json::array();
    for (const auto& row : resp.results) {
        ordered_json r;
        r["media_id"] = row.media_id;
        r["filename"] = row.filename;
        r["from"] = row.from;
        r["to"] = row.to;
        r["at"] = row.at;
        r["similarity"] = row.similarity;
        r["video_url"] = row.video_url;
        r["image_url"] = row.image_url;
        j["results"].push_back(std::move(r));
    }
    return j.dump();
}

namespace {

void reply_error(httplib::Response& res, int status, const std::string& message) {
    ordered_json j;
    j["error"] = message;
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

// Maps shotit exceptions onto HTTP status classes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const NotFoundError& e) {
        reply_error(res, 404, e.what());
    } catch (const UpstreamError& e) {
        reply_error(res, 502, e.what());
    } catch (const ParseError& e) {
        reply_error(res, 400, e.what());
    } catch (const InvalidInput& e) {
        reply_error(res, 400, e.what());
    } catch (const DomainError& e) {
        reply_error(res, 400, e.what());
    } catch (const Error& e) {
        reply_error(res, 500, e.what());
    }
}

bool parse_flag(const std::string& v, bool fallback) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    return fallback;
}

} // namespace

struct ApiServer::Impl {
    explicit Impl(const SearchService& service) : svc(service) { routes(); }

    void routes() {
        srv.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                SearchRequest sr;
                if (req.has_file("image")) {
                    const auto& file = req.get_file_value("image");
                    sr.image.assign(file.content.begin(), file.content.end());
                } else if (!req.body.empty() && !req.is_multipart_form_data()) {
                    sr.image.assign(req.body.begin(), req.body.end());
                } else {
                    throw InvalidInput("multipart field 'image' is required");
                }
                if (req.has_param("cutBorders"))
                    sr.cut_borders = parse_flag(req.get_param_value("cutBorders"), true);
                if (req.has_param("topK")) {
                    try {
                        sr.top_k = std::stoi(req.get_param_value("topK"));
                    } catch (const std::exception&) {
                        throw InvalidInput("topK must be an integer");
                    }
                }
                res.set_content(search_response_to_json(svc.handle_search(sr)),
                                "application/json");
            });
        });

        srv.Get(R"(/image/(\d+))", [this](const httplib::Request& req,
                                          httplib::Response& res) {
            guarded(res, [&] {
                uint64_t id = std::stoull(req.matches[1]);
                double t = 0.0;
                if (req.has_param("t")) t = std::stod(req.get_param_value("t"));
                auto png = svc.media_image_png(id, t);
                res.set_content(std::string(png.begin(), png.end()), "image/png");
            });
        });

        srv.Get(R"(/video/(\d+))", [this](const httplib::Request& req,
                                          httplib::Response& res) {
            guarded(res, [&] {
                uint64_t id = std::stoull(req.matches[1]);
                if (!req.has_param("from") || !req.has_param("to"))
                    throw InvalidInput("from and to query parameters are required");
                double from, to;
                try {
                    from = std::stod(req.get_param_value("from"));
                    to = std::stod(req.get_param_value("to"));
                } catch (const std::exception&) {
                    throw InvalidInput("from/to must be numbers");
                }
                std::string content_type;
                auto clip = svc.media_video_clip(id, from, to, &content_type);
                res.set_content(std::string(clip.begin(), clip.end()), content_type);
            });
        });

        srv.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                ordered_json j;
                j["frame_count"] = svc.index().size();
                j["trained"] = svc.index().trained();
                j["nlist"] = svc.index().nlist();
                ordered_json counts = ordered_json::object();
                ordered_json media = ordered_json::array();
                for (const auto& rec : svc.catalog().list_media()) {
                    std::string state(to_string(rec.state));
                    counts[state] = counts.value(state, 0) + 1;
                    ordered_json m;
                    m["media_id"] = rec.media_id;
                    m["filename"] =
                        std::filesystem::path(rec.source_path).filename().string();
                    m["store_key"] = rec.store_key;
                    m["state"] = state;
                    m["fps"] = rec.fps;
                    m["duration"] = rec.duration;
                    media.push_back(std::move(m));
                }
                j["states"] = std::move(counts);
                j["media"] = std::move(media);
                res.set_content(j.dump(), "application/json");
            });
        });
    }

    const SearchService& svc;
    httplib::Server srv;
};

ApiServer::ApiServer(const SearchService& service)
    : impl_(std::make_unique<Impl>(service)) {}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->srv.bind_to_any_port(host);
    return impl_->srv.bind_to_port(host, port) ? port : -1;
}

void ApiServer::run() { impl_->srv.listen_after_bind(); }

void ApiServer::stop() { impl_->srv.stop(); }

bool ApiServer::wait_until_ready() const {
    impl_->srv.wait_until_ready();
    return true;
}

} // namespace shotit
