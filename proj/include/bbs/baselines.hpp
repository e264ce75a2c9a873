#pragma once

// Reference window scores: SSD, SAD, NCC, chi-square histogram matching
// and Bidirectional Similarity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bbs/best_buddies.hpp"
#include "bbs/errors.hpp"
#include "bbs/feature_grid.hpp"
#include "bbs/point_set.hpp"

namespace bbs {

enum class BaselineKind { SSD, SAD, NCC, HM_Chi2, BDS };

struct Baseline {
    BaselineKind kind = BaselineKind::SSD;
    std::size_t hm_bins = 8;  // per channel; the joint histogram has hm_bins^3 cells
};

/// Whether a larger raw score means a better match.
inline bool baseline_is_similarity(BaselineKind kind, const Measure& m) noexcept {
    if (kind == BaselineKind::NCC) return true;
    if (kind == BaselineKind::BDS) return m.higher_is_closer();
    return false;
}

namespace detail {

inline void require_same_shape(const FeatureGrid& t, const FeatureGrid& w) {
    if (t.height() != w.height() || t.width() != w.width() || t.channels() != w.channels())
        throw DimensionError("grids differ in shape");
}

}  // namespace detail

inline double score_ssd(const FeatureGrid& t, const FeatureGrid& w) {
    detail::require_same_shape(t, w);
    auto a = t.data();
    auto b = w.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return acc;
}

inline double score_sad(const FeatureGrid& t, const FeatureGrid& w) {
    detail::require_same_shape(t, w);
    auto a = t.data();
    auto b = w.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
    return acc;
}

/// Per-channel normalized cross-correlation averaged over channels. A channel
/// that is constant in either grid contributes 0.
inline double score_ncc(const FeatureGrid& t, const FeatureGrid& w) {
    detail::require_same_shape(t, w);
    const std::size_t d = t.channels();
    const std::size_t n = t.height() * t.width();
    auto a = t.data();
    auto b = w.data();
    double total = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ma += a[i * d + c];
            mb += b[i * d + c];
        }
        ma /= static_cast<double>(n);
        mb /= static_cast<double>(n);
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double da = a[i * d + c] - ma;
            double db = b[i * d + c] - mb;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        const double floor = 1e-12 * static_cast<double>(n);
        if (saa <= floor || sbb <= floor) continue;
        total += std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    }
    return total / static_cast<double>(d);
}

/// Joint bins^3 color histogram normalized to sum 1. Values are expected in [0,1].
inline std::vector<double> joint_histogram(const FeatureGrid& g, std::size_t bins) {
    if (g.channels() != 3) throw DimensionError("histogram matching needs 3 channels");
    if (bins < 2) throw ConfigError("histogram needs at least 2 bins per channel");
    std::vector<double> hist(bins * bins * bins, 0.0);
    auto bin_of = [bins](float v) {
        auto b = static_cast<std::ptrdiff_t>(std::floor(static_cast<double>(v) * static_cast<double>(bins)));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
    };
    auto data = g.data();
    for (std::size_t i = 0; i < data.size(); i += 3)
        hist[(bin_of(data[i]) * bins + bin_of(data[i + 1])) * bins + bin_of(data[i + 2])] += 1.0;
    const double n = static_cast<double>(data.size() / 3);
    for (auto& h : hist) h /= n;
    return hist;
}

/// sum_b (h1-h2)^2 / (h1+h2), skipping empty bins.
inline double chi2_distance(const std::vector<double>& h1, const std::vector<double>& h2) {
    if (h1.size() != h2.size()) throw DimensionError("histograms differ in size");
    double acc = 0.0;
    for (std::size_t b = 0; b < h1.size(); ++b) {
        double s = h1[b] + h2[b];
        if (s > 0.0) {
            double d = h1[b] - h2[b];
            acc += d * d / s;
        }
    }
    return acc;
}

inline double score_hm_chi2(const FeatureGrid& t, const FeatureGrid& w, std::size_t bins = 8) {
    return chi2_distance(joint_histogram(t, bins), joint_histogram(w, bins));
}

/// Mean best value per row plus mean best value per column. Under a
/// similarity measure the best value is the maximum.
inline double score_bds(const DistanceMatrix& d) {
    double rows = 0.0, cols = 0.0;
    for (const auto& e : d.row_best()) rows += e.value;
    for (const auto& e : d.col_best()) cols += e.value;
    return rows / static_cast<double>(d.rows()) + cols / static_cast<double>(d.cols());
}

inline double score_bds(const PointSet& p, const PointSet& q, const Measure& m) {
    return score_bds(distance_matrix(p, q, m));
}

inline const char* baseline_name(BaselineKind kind) noexcept {
    switch (kind) {
        case BaselineKind::SSD: return "ssd";
        case BaselineKind::SAD: return "sad";
        case BaselineKind::NCC: return "ncc";
        case BaselineKind::HM_Chi2: return "hm";
        case BaselineKind::BDS: return "bds";
    }
    return "?";
}

}  // namespace bbs
