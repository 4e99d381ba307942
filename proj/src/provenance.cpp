// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/provenance.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "axegen/error.hpp"

namespace axe {

std::string_view version() { return AXEGEN_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string json_hash(const nlohmann::json& doc) {
    // nlohmann::json objects are key-sorted, so dump() is canonical.
    return hex64(fnv1a64(doc.dump()));
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingArtifact("cannot hash missing file " + path);
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    }
    return hex64(h);
}

nlohmann::json Provenance::to_json() const {
    return {{"tool_version", tool_version}, {"config_hash", config_hash}, {"seed", seed}};
}

Provenance Provenance::from_json(const nlohmann::json& doc) {
    Provenance p;
    p.tool_version = doc.at("tool_version").get<std::string>();
    p.config_hash = doc.at("config_hash").get<std::string>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    return p;
}

std::string Provenance::csv_comment() const {
    return "# axegen " + tool_version + " config_hash=" + config_hash +
           " seed=" + std::to_string(seed);
}

}  // namespace axe
