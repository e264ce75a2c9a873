#pragma once

// Points in the joint location-appearance space and the two point-wise
// measures used for matching.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bbs/errors.hpp"
#include "bbs/feature_grid.hpp"

namespace bbs {

struct Point {
    std::array<double, 2> location{};  // (x, y), normalized to the window
    std::vector<double> appearance;

    std::size_t dim() const noexcept { return appearance.size(); }
    friend bool operator==(const Point&, const Point&) = default;
};

class PointSet {
public:
    PointSet() = default;

    explicit PointSet(std::vector<Point> points) : points_(std::move(points)) {
        if (points_.empty()) throw DimensionError("point set must not be empty");
        dim_ = points_.front().dim();
        for (const auto& p : points_)
            if (p.dim() != dim_) throw DimensionError("points in one set must share their dimensionality");
    }

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    auto begin() const noexcept { return points_.begin(); }
    auto end() const noexcept { return points_.end(); }

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    std::vector<Point> points_;
    std::size_t dim_ = 0;
};

enum class MeasureKind {
    ColorSquaredDistance,    // ||dA||^2 + lambda ||dL||^2, lower is closer
    SimilarityInnerProduct,  // <A,A'> + exp(-lambda ||dL||^2), higher is closer
};

struct Measure {
    MeasureKind kind = MeasureKind::ColorSquaredDistance;
    double lambda = 0.25;

    static Measure color(double lambda = 0.25) {
        if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
        return {MeasureKind::ColorSquaredDistance, lambda};
    }
    static Measure similarity(double lambda = 1.0) {
        if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
        return {MeasureKind::SimilarityInnerProduct, lambda};
    }

    bool higher_is_closer() const noexcept { return kind == MeasureKind::SimilarityInnerProduct; }

    /// True when `a` is strictly closer than `b` under this measure's polarity.
    bool closer(double a, double b) const noexcept { return higher_is_closer() ? a > b : a < b; }

    /// Appearance part of the point-wise value.
    double appearance_term(std::span<const double> a, std::span<const double> b) const {
        if (a.size() != b.size())
            throw DimensionError("appearance dimensions differ: " + std::to_string(a.size()) + " vs " +
                                 std::to_string(b.size()));
        double acc = 0.0;
        if (kind == MeasureKind::ColorSquaredDistance) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = a[i] - b[i];
                acc += d * d;
            }
        } else {
            for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        }
        return acc;
    }

    /// Location part, given the squared location distance.
    double spatial_term(double location_sq) const noexcept {
        return kind == MeasureKind::ColorSquaredDistance ? lambda * location_sq
                                                         : std::exp(-lambda * location_sq);
    }

    /// The spatial part is the same for every pair of points, so distances
    /// do not depend on where the window sits.
    bool spatially_constant() const noexcept { return lambda == 0.0; }

    friend bool operator==(const Measure&, const Measure&) = default;
};

inline double location_sq(const std::array<double, 2>& a, const std::array<double, 2>& b) noexcept {
    double dx = a[0] - b[0];
    double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

inline double pointwise_distance(const Point& p, const Point& q, const Measure& m) {
    return m.appearance_term(p.appearance, q.appearance) + m.spatial_term(location_sq(p.location, q.location));
}

/// Normalized center of patch (patch_row, patch_col) inside a window of
/// window_h x window_w cells.
inline std::array<double, 2> patch_location(std::size_t patch_row, std::size_t patch_col, std::size_t k,
                                            std::size_t window_h, std::size_t window_w) noexcept {
    double half = static_cast<double>(k) / 2.0;
    return {(static_cast<double>(patch_col * k) + half) / static_cast<double>(window_w),
            (static_cast<double>(patch_row * k) + half) / static_cast<double>(window_h)};
}

/// Appends the d*k*k values of the k x k patch at (row, col), row-major,
/// channel-interleaved.
inline void gather_patch(const FeatureGrid& grid, std::size_t row, std::size_t col, std::size_t k,
                         std::vector<double>& out) {
    for (std::size_t r = 0; r < k; ++r)
        for (float v : grid.data().subspan(((row + r) * grid.width() + col) * grid.channels(), k * grid.channels()))
            out.push_back(v);
}

/// One point per non-overlapping k x k patch (the grid is truncated to whole
/// patches), emitted row-major.
inline PointSet build_point_set(const FeatureGrid& grid, std::size_t k) {
    if (k == 0) throw ConfigError("patch size must be positive");
    if (grid.height() < k || grid.width() < k)
        throw DimensionError("grid " + std::to_string(grid.width()) + "x" + std::to_string(grid.height()) +
                             " is smaller than patch size " + std::to_string(k));
    const std::size_t rows = grid.height() / k;
    const std::size_t cols = grid.width() / k;
    std::vector<Point> points;
    points.reserve(rows * cols);
    for (std::size_t pr = 0; pr < rows; ++pr)
        for (std::size_t pc = 0; pc < cols; ++pc) {
            Point p;
            p.location = patch_location(pr, pc, k, grid.height(), grid.width());
            p.appearance.reserve(grid.channels() * k * k);
            gather_patch(grid, pr * k, pc * k, k, p.appearance);
            points.push_back(std::move(p));
        }
    return PointSet(std::move(points));
}

}  // namespace bbs
