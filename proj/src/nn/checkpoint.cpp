// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "axegen/error.hpp"

namespace axe::nn {

namespace fs = std::filesystem;

namespace {

std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
    return v;
}

std::string tensor_file(const std::string& name) {
    std::string out;
    for (const char ch : name) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                        (ch >= '0' && ch <= '9') || ch == '.' || ch == '_' || ch == '-';
        out.push_back(ok ? ch : '_');
    }
    return "tensors/" + out + ".f32";
}

}  // namespace

void write_f32(const fs::path& file, std::span<const float> values) {
    std::vector<std::uint32_t> raw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        raw[i] = to_little(std::bit_cast<std::uint32_t>(values[i]));
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
    if (!out) {
        throw Error("failed to write " + file.string());
    }
}

std::vector<float> read_f32(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw MissingArtifact("missing tensor file " + file.string());
    }
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes % 4 != 0) {
        throw Error(file.string() + ": size " + std::to_string(bytes) + " is not a multiple of 4");
    }
    std::vector<std::uint32_t> raw(bytes / 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = std::bit_cast<float>(to_little(raw[i]));
    }
    return out;
}

void save_checkpoint(const fs::path& dir, nlohmann::json manifest,
                     std::span<const Parameter* const> params) {
    fs::create_directories(dir / "tensors");
    auto tensors = nlohmann::json::array();
    for (const auto* p : params) {
        const std::string file = tensor_file(p->name);
        write_f32(dir / file, p->value.span());
        tensors.push_back({{"name", p->name},
                           {"rows", p->value.rows()},
                           {"cols", p->value.cols()},
                           {"file", file}});
    }
    manifest["tensors"] = std::move(tensors);
    manifest["parameter_count"] = parameter_count(params);
    manifest["checksum"] = parameter_checksum(params);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw Error("failed to write " + (dir / "manifest.json").string());
    }
}

nlohmann::json read_manifest(const fs::path& dir) {
    const fs::path file = dir / "manifest.json";
    std::ifstream in(file);
    if (!in) {
        throw MissingArtifact("missing checkpoint manifest " + file.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed checkpoint manifest " + file.string() + ": " + e.what());
    }
}

nlohmann::json load_checkpoint(const fs::path& dir, std::span<Parameter* const> params) {
    nlohmann::json manifest = read_manifest(dir);
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.size()) {
        throw Error(dir.string() + ": checkpoint holds " + std::to_string(tensors.size()) +
                    " tensors, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& t = tensors[i];
        Parameter& p = *params[i];
        const auto name = t.at("name").get<std::string>();
        const auto rows = t.at("rows").get<std::size_t>();
        const auto cols = t.at("cols").get<std::size_t>();
        if (name != p.name || rows != p.value.rows() || cols != p.value.cols()) {
            throw Error(dir.string() + ": tensor " + name + " [" + std::to_string(rows) + "x" +
                        std::to_string(cols) + "] does not match model tensor " + p.name + " " +
                        p.value.shape_string());
        }
        p.value = Tensor(rows, cols, read_f32(dir / t.at("file").get<std::string>()));
        p.grad = Tensor(rows, cols);
    }
    return manifest;
}

}  // namespace axe::nn
