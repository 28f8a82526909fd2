#pragma once

// Minimal CSV helpers shared by the readers. No quoting support: every field
// in the formats this project reads is a bare token.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "scengen/error.hpp"

namespace scengen::csv {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void split(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_long(std::string_view s, long& out) {
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

/// Calls fn(line_number, fields) for every non-empty line after the header,
/// which must equal `header` exactly.
template <typename Fn>
void for_each_row(const std::filesystem::path& path, std::string_view header, Fn&& fn) {
    const std::string text = read_file(path);
    std::string_view rest = text;
    std::size_t line_no = 0;
    bool seen_header = false;
    std::vector<std::string_view> fields;
    while (!rest.empty()) {
        auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (!seen_header) {
            if (line != header)
                throw ParseError("expected header '" + std::string(header) + "' in " + path.string(),
                                 line_no);
            seen_header = true;
            continue;
        }
        split(line, fields);
        for (auto& f : fields) f = trim(f);
        fn(line_no, fields);
    }
    if (!seen_header) throw ParseError("empty file " + path.string(), 1);
}

}  // namespace scengen::csv
