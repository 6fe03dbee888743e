#include "shotit/hashfile.hpp"

#include <zlib.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "shotit/errors.hpp"

namespace shotit {

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string xml_unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos) throw ParseError("xml: unterminated entity");
        std::string_view ent = s.substr(i, semi - i + 1);
        if (ent == "&amp;") out.push_back('&');
        else if (ent == "&lt;") out.push_back('<');
        else if (ent == "&gt;") out.push_back('>');
        else if (ent == "&quot;") out.push_back('"');
        else if (ent == "&apos;") out.push_back('\'');
        else throw ParseError("xml: unknown entity " + std::string(ent));
        i = semi + 1;
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Tiny strict parser for the fixed hashfile schema.
struct XmlScanner {
    std::string_view text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }
    bool consume(std::string_view tok) {
        if (text.substr(pos, tok.size()) == tok) {
            pos += tok.size();
            return true;
        }
        return false;
    }
    void expect(std::string_view tok, const char* what) {
        if (!consume(tok))
            throw ParseError(std::string("xml: expected ") + what + " near offset " +
                             std::to_string(pos));
    }
    // Parses  name="value"  returning false when the attribute list ended.
    bool next_attr(std::string& name, std::string& value) {
        skip_ws();
        if (pos >= text.size()) throw ParseError("xml: unexpected end in tag");
        if (text[pos] == '>' || text[pos] == '/' || text[pos] == '?') return false;
        size_t eq = text.find('=', pos);
        if (eq == std::string_view::npos) throw ParseError("xml: attribute without value");
        name = std::string(text.substr(pos, eq - pos));
        pos = eq + 1;
        if (pos >= text.size() || text[pos] != '"')
            throw ParseError("xml: attribute value must be quoted");
        ++pos;
        size_t close = text.find('"', pos);
        if (close == std::string_view::npos) throw ParseError("xml: unterminated value");
        value = xml_unescape(text.substr(pos, close - pos));
        pos = close + 1;
        return true;
    }
};

double parse_double_attr(const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw ParseError(std::string("xml: bad ") + what + " value '" + s + "'");
    return v;
}

} // namespace

void write_hashfile(const HashTimeline& tl, const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    gzFile gz = gzopen(path.c_str(), "wb");
    if (!gz) throw IoError("cannot open " + path.string() + " for writing");

    auto put = [&](const std::string& s) {
        if (gzwrite(gz, s.data(), static_cast<unsigned>(s.size())) !=
            static_cast<int>(s.size())) {
            gzclose(gz);
            throw IoError("gzip write failed: " + path.string());
        }
    };
    put("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    put("<hashes media=\"" + xml_escape(tl.media) + "\" fps=\"" + fmt_double(tl.fps) +
        "\">\n");
    for (const auto& e : tl.entries)
        put("  <frame t=\"" + fmt_double(e.t) + "\" hash=\"" + encode_hash(e.hash) +
            "\"/>\n");
    put("</hashes>\n");
    if (gzclose(gz) != Z_OK) throw IoError("gzip close failed: " + path.string());
}

HashTimeline read_hashfile(const std::filesystem::path& path) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) throw IoError("cannot open " + path.string());
    std::string text;
    char buf[1 << 16];
    for (;;) {
        int n = gzread(gz, buf, sizeof buf);
        if (n < 0) {
            gzclose(gz);
            throw ParseError("bad gzip stream: " + path.string());
        }
        if (n == 0) break;
        text.append(buf, static_cast<size_t>(n));
    }
    gzclose(gz);

    XmlScanner sc{text};
    sc.skip_ws();
    if (sc.consume("<?xml")) {
        size_t end = text.find("?>", sc.pos);
        if (end == std::string_view::npos) throw ParseError("xml: unterminated declaration");
        sc.pos = end + 2;
    }
    sc.skip_ws();
    sc.expect("<hashes", "<hashes>");

    HashTimeline tl;
    bool have_fps = false;
    std::string name, value;
    while (sc.next_attr(name, value)) {
        if (name == "media") tl.media = value;
        else if (name == "fps") {
            tl.fps = parse_double_attr(value, "fps");
            have_fps = true;
        } else
            throw ParseError("xml: unknown attribute '" + name + "' on <hashes>");
    }
    sc.expect(">", "end of <hashes> tag");
    if (!have_fps || tl.fps <= 0) throw ParseError("xml: missing or non-positive fps");

    size_t frame_idx = 0;
    for (;;) {
        sc.skip_ws();
        if (sc.consume("</hashes>")) break;
        sc.expect("<frame", "<frame>");
        bool have_t = false, have_hash = false;
        TimelineEntry entry;
        while (sc.next_attr(name, value)) {
            if (name == "t") {
                entry.t = parse_double_attr(value, "t");
                have_t = true;
            } else if (name == "hash") {
                try {
                    entry.hash = decode_hash(value);
                } catch (const ParseError& e) {
                    throw ParseError("frame " + std::to_string(frame_idx) + ": " +
                                     e.what());
                }
                have_hash = true;
            } else
                throw ParseError("xml: unknown attribute '" + name + "' on <frame>");
        }
        sc.expect("/>", "self-closing frame tag");
        if (!have_t || !have_hash)
            throw ParseError("frame " + std::to_string(frame_idx) +
                             ": missing t or hash attribute");
        if (!tl.entries.empty() && entry.t <= tl.entries.back().t)
            throw ParseError("frame " + std::to_string(frame_idx) +
                             ": timestamps must strictly increase");
        tl.entries.push_back(std::move(entry));
        ++frame_idx;
    }
    return tl;
}

} // namespace shotit
