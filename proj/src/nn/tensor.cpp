// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "axegen/error.hpp"

namespace axe::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error("tensor data length " + std::to_string(data_.size()) + " does not match " +
                    shape_string());
    }
}

void Tensor::fill(float v) {
    std::fill(data_.begin(), data_.end(), v);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

Tensor Tensor::hcat(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) {
        return {};
    }
    const std::size_t rows = parts.front()->rows();
    std::size_t cols = 0;
    for (const auto* p : parts) {
        if (p->rows() != rows) {
            throw Error("hcat row mismatch: " + parts.front()->shape_string() + " vs " +
                        p->shape_string());
        }
        cols += p->cols();
    }
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        float* dst = out.data() + i * cols;
        for (const auto* p : parts) {
            const auto src = p->row(i);
            std::copy(src.begin(), src.end(), dst);
            dst += src.size();
        }
    }
    return out;
}

Tensor Tensor::columns(std::size_t begin, std::size_t end) const {
    if (begin > end || end > cols_) {
        throw Error("column slice [" + std::to_string(begin) + "," + std::to_string(end) +
                    ") out of range for " + shape_string());
    }
    Tensor out(rows_, end - begin);
    for (std::size_t i = 0; i < rows_; ++i) {
        const float* src = data_.data() + i * cols_ + begin;
        std::copy(src, src + (end - begin), out.data() + i * out.cols());
    }
    return out;
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
    Tensor out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) {
            throw Error("row index " + std::to_string(indices[i]) + " out of range for " +
                        shape_string());
        }
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.data() + i * cols_);
    }
    return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                    b.shape_string());
    }
}

}  // namespace axe::nn
