#pragma once

// Distance matrix, Best-Buddies Pairs and the BBS score of two point sets.

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bbs/errors.hpp"
#include "bbs/point_set.hpp"

namespace bbs {

enum class Polarity { MinIsClosest, MaxIsClosest };

inline Polarity polarity_of(const Measure& m) noexcept {
    return m.higher_is_closer() ? Polarity::MaxIsClosest : Polarity::MinIsClosest;
}

inline bool closer(Polarity pol, double a, double b) noexcept {
    return pol == Polarity::MaxIsClosest ? a > b : a < b;
}

struct Extremum {
    std::size_t index = 0;
    double value = 0.0;
    friend bool operator==(const Extremum&, const Extremum&) = default;
};

/// N_P x N_Q table of point-wise values with cached per-row and per-column
/// extrema. Ties go to the lowest index.
class DistanceMatrix {
public:
    DistanceMatrix(std::size_t rows, std::size_t cols, std::vector<double> values, Polarity polarity)
        : rows_(rows), cols_(cols), values_(std::move(values)), polarity_(polarity) {
        if (rows == 0 || cols == 0) throw DimensionError("distance matrix must be non-empty");
        if (values_.size() != rows * cols) throw DimensionError("distance matrix size mismatch");
        row_best_.assign(rows_, Extremum{0, values_[0]});
        col_best_.assign(cols_, Extremum{0, values_[0]});
        for (std::size_t i = 0; i < rows_; ++i) row_best_[i] = {0, at(i, 0)};
        for (std::size_t j = 0; j < cols_; ++j) col_best_[j] = {0, at(0, j)};
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) {
                double v = at(i, j);
                if (closer(polarity_, v, row_best_[i].value)) row_best_[i] = {j, v};
                if (closer(polarity_, v, col_best_[j].value)) col_best_[j] = {i, v};
            }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    Polarity polarity() const noexcept { return polarity_; }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<Extremum>& row_best() const noexcept { return row_best_; }
    const std::vector<Extremum>& col_best() const noexcept { return col_best_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
    Polarity polarity_;
    std::vector<Extremum> row_best_;
    std::vector<Extremum> col_best_;
};

inline DistanceMatrix distance_matrix(const PointSet& p, const PointSet& q, const Measure& m) {
    if (p.dim() != q.dim())
        throw DimensionError("point sets differ in dimensionality: " + std::to_string(p.dim()) + " vs " +
                             std::to_string(q.dim()));
    std::vector<double> values;
    values.reserve(p.size() * q.size());
    for (const auto& pi : p)
        for (const auto& qj : q) values.push_back(pointwise_distance(pi, qj, m));
    return DistanceMatrix(p.size(), q.size(), std::move(values), polarity_of(m));
}

using BBPList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Mutual nearest neighbours: (i, j) with row_best[i] == j and col_best[j] == i.
inline BBPList best_buddies(const DistanceMatrix& d) {
    BBPList pairs;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        std::size_t j = d.row_best()[i].index;
        if (d.col_best()[j].index == i) pairs.emplace_back(i, j);
    }
    return pairs;
}

inline double bbs_score_from_count(std::size_t buddies, std::size_t n_p, std::size_t n_q) noexcept {
    return static_cast<double>(buddies) / static_cast<double>(std::min(n_p, n_q));
}

inline double bbs_score(const DistanceMatrix& d) {
    return bbs_score_from_count(best_buddies(d).size(), d.rows(), d.cols());
}

inline double bbs_score(const PointSet& p, const PointSet& q, const Measure& m) {
    return bbs_score(distance_matrix(p, q, m));
}

}  // namespace bbs
