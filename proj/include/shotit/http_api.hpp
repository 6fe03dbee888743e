#pragma once

#include <memory>
#include <string>

#include "shotit/service.hpp"

namespace shotit {

// HTTP/1.1 JSON surface over a SearchService:
//   POST /search            multipart "image"; params cutBorders, topK
//   GET  /image/{id}?t=     nearest stored frame as PNG
//   GET  /video/{id}?from=&to=   clip via clipper command or frame ZIP
//   GET  /status            catalog and index summary
class ApiServer {
public:
    explicit ApiServer(const SearchService& service);
    ~ApiServer();

    // port 0 picks a free port; returns the bound port or -1.
    int bind(const std::string& host, int port);
    void run();  // blocking
    void stop(); // callable from another thread
    bool wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string search_response_to_json(const SearchResponse& resp);

} // namespace shotit
