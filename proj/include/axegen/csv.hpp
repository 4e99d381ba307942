// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Locale-independent CSV helpers. Doubles use the shortest representation
// that round-trips, so written files are byte-stable across runs.
namespace axe::csv {

inline void put(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void put(std::string& out, std::int64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void put(std::string& out, int v) { put(out, static_cast<std::int64_t>(v)); }
inline void put(std::string& out, std::uint64_t v) { put(out, static_cast<std::int64_t>(v)); }
inline void put(std::string& out, std::string_view v) { out.append(v); }
inline void put(std::string& out, const char* v) { out.append(v); }
inline void put(std::string& out, const std::string& v) { out.append(v); }

// Appends the values comma-separated and terminates the line.
template <typename... Ts>
void row(std::string& out, const Ts&... values) {
    bool first = true;
    ((out.append(first ? "" : ","), put(out, values), first = false), ...);
    out.push_back('\n');
}

std::vector<std::string_view> split_line(std::string_view line);
std::int64_t to_int(std::string_view field);
double to_double(std::string_view field);

// Writes `contents` to `path` through a temporary sibling that is renamed into
// place; on failure the temporary is removed and axe::Error is thrown.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace axe::csv
