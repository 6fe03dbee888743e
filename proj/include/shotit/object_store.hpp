#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shotit {

// Flat key/value blob storage with read-your-writes semantics. Keys are
// slash-separated relative paths.
class ObjectStore {
public:
    virtual ~ObjectStore() = default;

    virtual void put(std::string_view key, std::span<const uint8_t> bytes) = 0;
    virtual std::vector<uint8_t> get(std::string_view key) = 0; // NotFoundError
    virtual std::vector<std::string> list(std::string_view prefix) = 0; // sorted
    virtual void remove(std::string_view key) = 0;

    // Local filesystem path holding the object's bytes; downloads to a
    // temp file when the backend is remote.
    virtual std::filesystem::path materialize(std::string_view key);
};

// Keys map to files under a root directory.
class LocalFsStore : public ObjectStore {
public:
    explicit LocalFsStore(std::filesystem::path root);

    void put(std::string_view key, std::span<const uint8_t> bytes) override;
    std::vector<uint8_t> get(std::string_view key) override;
    std::vector<std::string> list(std::string_view prefix) override;
    void remove(std::string_view key) override;
    std::filesystem::path materialize(std::string_view key) override;

private:
    std::filesystem::path key_path(std::string_view key) const;
    std::filesystem::path root_;
};

// S3-style HTTP backend: PUT /<key>, GET /<key>, DELETE /<key>, and
// GET /?prefix=<p> returning a JSON array of keys.
class HttpObjectStore : public ObjectStore {
public:
    explicit HttpObjectStore(std::string endpoint); // e.g. "http://127.0.0.1:9000"
    ~HttpObjectStore() override;

    void put(std::string_view key, std::span<const uint8_t> bytes) override;
    std::vector<uint8_t> get(std::string_view key) override;
    std::vector<std::string> list(std::string_view prefix) override;
    void remove(std::string_view key) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Validates a store key: relative, slash separated, no empty / "." / ".."
// segments. Throws InvalidInput.
void validate_store_key(std::string_view key);

std::unique_ptr<ObjectStore> open_object_store(std::string_view backend,
                                               std::string_view path_or_endpoint);

} // namespace shotit
