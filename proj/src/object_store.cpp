#include "shotit/object_store.hpp"

#include <fstream>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "shotit/errors.hpp"
#include "shotit/image_io.hpp"

namespace shotit {

namespace fs = std::filesystem;

void validate_store_key(std::string_view key) {
    if (key.empty() || key.size() > 4096)
        throw InvalidInput("bad store key length");
    if (key.front() == '/') throw InvalidInput("store key must be relative");
    size_t start = 0;
    while (start <= key.size()) {
        size_t slash = key.find('/', start);
        std::string_view seg = key.substr(
            start, slash == std::string_view::npos ? key.size() - start : slash - start);
        if (seg.empty() || seg == "." || seg == "..")
            throw InvalidInput("bad store key segment in: " + std::string(key));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
}

std::filesystem::path ObjectStore::materialize(std::string_view key) {
    auto bytes = get(key);
    static std::mt19937_64 rng(std::random_device{}());
    fs::path dir = fs::temp_directory_path() / "shotit_store_cache";
    fs::create_directories(dir);
    fs::path file = dir / (std::to_string(rng()) + "_" +
                           fs::path(std::string(key)).filename().string());
    write_file(file, bytes);
    return file;
}

LocalFsStore::LocalFsStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

fs::path LocalFsStore::key_path(std::string_view key) const {
    validate_store_key(key);
    return root_ / fs::path(std::string(key));
}

void LocalFsStore::put(std::string_view key, std::span<const uint8_t> bytes) {
    fs::path target = key_path(key);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    write_file(tmp, bytes);
    fs::rename(tmp, target);
}

std::vector<uint8_t> LocalFsStore::get(std::string_view key) {
    fs::path target = key_path(key);
    if (!fs::is_regular_file(target))
        throw NotFoundError("object not found: " + std::string(key));
    return read_file(target);
}

std::vector<std::string> LocalFsStore::list(std::string_view prefix) {
    std::vector<std::string> keys;
    if (!fs::exists(root_)) return keys;
    for (const auto& entry : fs::recursive_directory_iterator(root_)) {
        if (!entry.is_regular_file()) continue;
        std::string key = fs::relative(entry.path(), root_).generic_string();
        if (key.ends_with(".tmp")) continue;
        if (key.starts_with(prefix)) keys.push_back(std::move(key));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

void LocalFsStore::remove(std::string_view key) {
    fs::path target = key_path(key);
    if (!fs::remove(target))
        throw NotFoundError("object not found: " + std::string(key));
}

fs::path LocalFsStore::materialize(std::string_view key) {
    fs::path target = key_path(key);
    if (!fs::is_regular_file(target))
        throw NotFoundError("object not found: " + std::string(key));
    return target;
}

namespace {

std::string encode_key_path(std::string_view key) {
    static const char* hex = "0123456789ABCDEF";
    std::string out = "/";
    for (unsigned char c : key) {
        bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                     (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' ||
                     c == '~' || c == '/';
        if (plain) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

} // namespace

struct HttpObjectStore::Impl {
    explicit Impl(const std::string& endpoint) : client(endpoint) {
        client.set_connection_timeout(5);
        client.set_read_timeout(30);
        client.set_write_timeout(30);
    }
    httplib::Client client;
};

HttpObjectStore::HttpObjectStore(std::string endpoint)
    : impl_(std::make_unique<Impl>(endpoint)) {}

HttpObjectStore::~HttpObjectStore() = default;

void HttpObjectStore::put(std::string_view key, std::span<const uint8_t> bytes) {
    validate_store_key(key);
    auto res = impl_->client.Put(encode_key_path(key),
                                 reinterpret_cast<const char*>(bytes.data()),
                                 bytes.size(), "application/octet-stream");
    if (!res) throw IoError("object store PUT failed: connection error");
    if (res->status / 100 != 2)
        throw IoError("object store PUT failed: HTTP " + std::to_string(res->status));
}

std::vector<uint8_t> HttpObjectStore::get(std::string_view key) {
    validate_store_key(key);
    auto res = impl_->client.Get(encode_key_path(key));
    if (!res) throw IoError("object store GET failed: connection error");
    if (res->status == 404) throw NotFoundError("object not found: " + std::string(key));
    if (res->status / 100 != 2)
        throw IoError("object store GET failed: HTTP " + std::to_string(res->status));
    return std::vector<uint8_t>(res->body.begin(), res->body.end());
}

std::vector<std::string> HttpObjectStore::list(std::string_view prefix) {
    httplib::Params params{{"prefix", std::string(prefix)}};
    auto res = impl_->client.Get("/", params, httplib::Headers{});
    if (!res) throw IoError("object store LIST failed: connection error");
    if (res->status / 100 != 2)
        throw IoError("object store LIST failed: HTTP " + std::to_string(res->status));
    auto arr = nlohmann::json::parse(res->body, nullptr, false);
    if (!arr.is_array()) throw ParseError("object store LIST: bad response body");
    std::vector<std::string> keys;
    for (const auto& k : arr) keys.push_back(k.get<std::string>());
    std::sort(keys.begin(), keys.end());
    return keys;
}

void HttpObjectStore::remove(std::string_view key) {
    validate_store_key(key);
    auto res = impl_->client.Delete(encode_key_path(key));
    if (!res) throw IoError("object store DELETE failed: connection error");
    if (res->status == 404) throw NotFoundError("object not found: " + std::string(key));
    if (res->status / 100 != 2)
        throw IoError("object store DELETE failed: HTTP " + std::to_string(res->status));
}

std::unique_ptr<ObjectStore> open_object_store(std::string_view backend,
                                               std::string_view path_or_endpoint) {
    if (backend == "local")
        return std::make_unique<LocalFsStore>(fs::path(std::string(path_or_endpoint)));
    if (backend == "http")
        return std::make_unique<HttpObjectStore>(std::string(path_or_endpoint));
    throw InvalidInput("unknown store backend: " + std::string(backend));
}

} // namespace shotit
