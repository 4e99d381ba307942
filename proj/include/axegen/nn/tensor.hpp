// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace axe::nn {

// Row-major 2-D float tensor; rows are batch items, columns features.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, float fill = 0.0f)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<float> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> span() { return data_; }
    std::span<const float> span() const { return data_; }

    std::span<float> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    float& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    float operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    void fill(float v);
    void zero() { fill(0.0f); }
    bool all_finite() const;

    std::string shape_string() const;

    // Horizontal concatenation / slicing of column blocks.
    static Tensor hcat(const std::vector<const Tensor*>& parts);
    Tensor columns(std::size_t begin, std::size_t end) const;
    // Rows selected by index.
    Tensor gather_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

// Throws axe::Error naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace axe::nn
