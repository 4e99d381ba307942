// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>

#include <nlohmann/json.hpp>

#include "axegen/nn/layers.hpp"

namespace axe::nn {

// On-disk layout of a checkpoint directory:
//   manifest.json          caller metadata plus a "tensors" table
//   tensors/<name>.f32     little-endian float32, row-major, no header
//
// `save_checkpoint` adds {"tensors": [{name, rows, cols, file}], "checksum"}
// to the manifest it is given. `load_checkpoint` requires the stored tensors
// to match `params` by name and shape, fills their values and returns the
// manifest.
void save_checkpoint(const std::filesystem::path& dir, nlohmann::json manifest,
                     std::span<const Parameter* const> params);
nlohmann::json load_checkpoint(const std::filesystem::path& dir, std::span<Parameter* const> params);
nlohmann::json read_manifest(const std::filesystem::path& dir);

void write_f32(const std::filesystem::path& file, std::span<const float> values);
std::vector<float> read_f32(const std::filesystem::path& file);

}  // namespace axe::nn
