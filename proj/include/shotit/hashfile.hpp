#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shotit/descriptor.hpp"

namespace shotit {

struct TimelineEntry {
    double t = 0.0; // seconds
    ColorLayoutHash hash;
    bool operator==(const TimelineEntry&) const = default;
};

// Per-frame timestamped hash sequence; timestamps strictly increase.
struct HashTimeline {
    std::string media; // store key or display name
    double fps = 0.0;
    std::vector<TimelineEntry> entries;
    bool operator==(const HashTimeline&) const = default;
};

// gzip-compressed XML:
//   <hashes media="..." fps="...">
//     <frame t="1.25" hash="3ef d3c ..."/>
//   </hashes>
void write_hashfile(const HashTimeline& tl, const std::filesystem::path& path);
HashTimeline read_hashfile(const std::filesystem::path& path);

} // namespace shotit
