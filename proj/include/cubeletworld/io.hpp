#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cubeletworld/error.hpp"

namespace cubeletworld::io {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw InputError("cannot format number");
    return {buf, end};
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline double parse_double(std::string_view s, std::string_view what) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw InputError("invalid number '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::string_view what) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw InputError("invalid integer '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

/// FNV-1a 64-bit hash; used to fingerprint artifacts in manifests.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    static constexpr char digits[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[v & 0xf];
        v >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

/// Streams content through `writer` into a sibling temporary file, then
/// renames it over `path`, so readers never observe a partial artifact.
inline void write_atomic(const std::filesystem::path& path,
                         const std::function<void(std::ostream&)>& writer) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        writer(out);
        out.flush();
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
    write_atomic(path, [&](std::ostream& out) { out.write(content.data(), static_cast<std::streamsize>(content.size())); });
}

/// Iterates the data lines of a CSV text after checking its header line.
template <typename Fn>
void for_each_csv_row(std::string_view text, std::string_view expected_header,
                      std::string_view source, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        ++line_no;
        if (trim(line).empty()) {
            if (nl == text.size()) break;
            continue;
        }
        if (!header_seen) {
            if (trim(line) != expected_header) {
                throw FormatError(std::string(source) + ":" + std::to_string(line_no) +
                                  ": expected header '" + std::string(expected_header) + "'");
            }
            header_seen = true;
        } else {
            try {
                fn(split(line, ','), line_no);
            } catch (const InputError& e) {
                throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (nl == text.size()) break;
    }
    if (!header_seen) throw FormatError(std::string(source) + ": missing header");
}

/// Little-endian integer I/O for the binary dataset formats.
inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline std::uint32_t get_u32(std::string_view data, std::size_t offset) {
    if (offset + 4 > data.size()) throw FormatError("truncated header");
    auto byte = [&](std::size_t i) { return std::uint32_t{static_cast<unsigned char>(data[offset + i])}; };
    return byte(0) | (byte(1) << 8) | (byte(2) << 16) | (byte(3) << 24);
}

}  // namespace cubeletworld::io
