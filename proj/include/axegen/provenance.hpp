// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace axe {

std::string_view version();

// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
// Hash of the canonical (sorted-key, compact) JSON serialization.
std::string json_hash(const nlohmann::json& doc);
std::string file_hash(const std::string& path);

// Identity stamped into every artifact.
struct Provenance {
    std::string tool_version{version()};
    std::string config_hash = "0000000000000000";
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static Provenance from_json(const nlohmann::json& doc);
    // "# axegen <version> config_hash=<hash> seed=<seed>"
    std::string csv_comment() const;
};

}  // namespace axe
