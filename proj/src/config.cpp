#include "shotit/config.hpp"

#include <cstdlib>
#include <fstream>

#include "shotit/errors.hpp"

namespace shotit {

namespace {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

uint32_t parse_u32(const std::string& key, const std::string& v) {
    try {
        unsigned long n = std::stoul(v);
        if (n > 0xfffffffful) throw std::out_of_range("u32");
        return static_cast<uint32_t>(n);
    } catch (const std::exception&) {
        throw ParseError("config: bad integer for " + key + ": '" + v + "'");
    }
}

double parse_f64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
        throw ParseError("config: bad number for " + key + ": '" + v + "'");
    return d;
}

} // namespace

Config Config::load(const std::optional<std::filesystem::path>& file, bool apply_env) {
    Config cfg;

    auto set_key = [&cfg](const std::string& key, const std::string& value) {
        if (key == "incoming_dir") cfg.incoming_dir = value;
        else if (key == "store_backend") cfg.store_backend = value;
        else if (key == "store_path_or_endpoint") cfg.store_path_or_endpoint = value;
        else if (key == "index_path") cfg.index_path = value;
        else if (key == "nlist") cfg.nlist = parse_u32(key, value);
        else if (key == "nprobe") cfg.nprobe = parse_u32(key, value);
        else if (key == "theta") cfg.theta = parse_f64(key, value);
        else if (key == "clip_window_s") cfg.clip_window_s = parse_f64(key, value);
        else if (key == "clipper_cmd") cfg.clipper_cmd = value;
        else if (key == "media_base_url") cfg.media_base_url = value;
        else if (key == "search_engine") cfg.search_engine = value;
        else if (key == "poll_interval_s") cfg.poll_interval_s = parse_f64(key, value);
        else if (key == "decoder_cmd") cfg.decoder_cmd = value;
        else throw ParseError("config: unknown key '" + key + "'");
    };

    if (file) {
        std::ifstream f(*file);
        if (!f) throw IoError("cannot open config " + file->string());
        std::string line;
        size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ParseError("config line " + std::to_string(lineno) +
                                 ": expected key = value");
            set_key(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }

    if (apply_env) {
        static const char* keys[] = {
            "incoming_dir",   "store_backend", "store_path_or_endpoint",
            "index_path",     "nlist",         "nprobe",
            "theta",          "clip_window_s", "clipper_cmd",
            "media_base_url", "search_engine", "poll_interval_s",
            "decoder_cmd"};
        for (const char* key : keys) {
            std::string env_name = "SHOTIT_";
            for (const char* p = key; *p; ++p)
                env_name.push_back(static_cast<char>(std::toupper(*p)));
            if (const char* v = std::getenv(env_name.c_str())) set_key(key, v);
        }
    }

    if (cfg.store_backend != "local" && cfg.store_backend != "http")
        throw ParseError("config: store_backend must be local or http");
    if (cfg.search_engine != "ivf" && cfg.search_engine != "flat")
        throw ParseError("config: search_engine must be ivf or flat");
    if (cfg.theta <= 0) throw ParseError("config: theta must be positive");
    if (cfg.clip_window_s <= 0) throw ParseError("config: clip_window_s must be positive");
    return cfg;
}

} // namespace shotit
