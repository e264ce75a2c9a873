#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bbs/errors.hpp"

namespace bbs {

/// H x W x d grid of feature values, row-major with interleaved channels.
class FeatureGrid {
public:
    FeatureGrid() = default;

    FeatureGrid(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0f)
        : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {
        if (height == 0 || width == 0 || channels == 0)
            throw DimensionError("feature grid dimensions must be positive");
    }

    FeatureGrid(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
        if (height == 0 || width == 0 || channels == 0)
            throw DimensionError("feature grid dimensions must be positive");
        if (data_.size() != height * width * channels)
            throw DimensionError("feature grid payload has " + std::to_string(data_.size()) +
                                 " values, expected " + std::to_string(height * width * channels));
        for (float v : data_)
            if (!std::isfinite(v)) throw DimensionError("feature grid contains non-finite values");
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }

    float& at(std::size_t row, std::size_t col, std::size_t ch) {
        return data_[(row * width_ + col) * channels_ + ch];
    }
    float at(std::size_t row, std::size_t col, std::size_t ch) const {
        return data_[(row * width_ + col) * channels_ + ch];
    }

    /// All channels of one cell.
    std::span<const float> cell(std::size_t row, std::size_t col) const {
        return {data_.data() + (row * width_ + col) * channels_, channels_};
    }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    /// Copy of the h x w sub-grid whose top-left cell is (row, col).
    FeatureGrid crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const {
        if (h == 0 || w == 0 || row > height_ || col > width_ || h > height_ - row || w > width_ - col)
            throw DimensionError("crop " + std::to_string(w) + "x" + std::to_string(h) + " at (" +
                                 std::to_string(col) + "," + std::to_string(row) +
                                 ") leaves the grid");
        FeatureGrid out(h, w, channels_);
        for (std::size_t r = 0; r < h; ++r) {
            const float* src = data_.data() + ((row + r) * width_ + col) * channels_;
            std::copy(src, src + w * channels_, out.data_.begin() + static_cast<std::ptrdiff_t>(r * w * channels_));
        }
        return out;
    }

    friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<float> data_;
};

}  // namespace bbs
