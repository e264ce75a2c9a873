#pragma once

// Sliding-window template matching: a naive BBS matcher that rebuilds every
// window's point set and distance matrix, a cached BBS matcher that reuses
// distances across overlapping windows, the baseline matcher, and
// non-maximum suppression over the resulting likelihood map.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "bbs/baselines.hpp"
#include "bbs/best_buddies.hpp"
#include "bbs/box.hpp"
#include "bbs/errors.hpp"
#include "bbs/feature_grid.hpp"
#include "bbs/features.hpp"
#include "bbs/parallel.hpp"
#include "bbs/point_set.hpp"

namespace bbs {

enum class Algorithm { Naive, Cached };

struct MatcherConfig {
    std::size_t patch_size = 1;
    Measure measure = Measure::color();
    /// 0 picks the default: patch_size for color measures, 1 otherwise.
    std::size_t stride = 0;
    Algorithm algorithm = Algorithm::Cached;
    /// Normalize each channel over the template and over every window
    /// (deep-feature mode). Distances then depend on the window.
    bool normalize_windows = false;
    std::size_t threads = 1;

    std::size_t effective_stride() const noexcept {
        if (stride != 0) return stride;
        return measure.kind == MeasureKind::ColorSquaredDistance ? patch_size : 1;
    }
};

/// Scores of every valid placement, row-major. Cell (r, c) is the window
/// whose top-left pixel is (c * stride, r * stride).
struct LikelihoodMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t stride = 1;
    std::size_t window_w = 0;
    std::size_t window_h = 0;
    std::vector<double> scores;

    double at(std::size_t r, std::size_t c) const { return scores[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return scores[r * cols + c]; }

    FeatureGrid to_grid() const {
        std::vector<float> data(scores.begin(), scores.end());
        return FeatureGrid(rows, cols, 1, std::move(data));
    }

    friend bool operator==(const LikelihoodMap&, const LikelihoodMap&) = default;
};

/// Counters reported by the cached matcher.
struct MatchStats {
    std::uint64_t windows = 0;
    /// Appearance distances actually evaluated (each is one D entry).
    std::uint64_t fresh_distance_entries = 0;
    /// Per map cell, the fresh entries evaluated for that window.
    std::vector<std::uint64_t> fresh_per_window;
    /// Windows whose row extrema were updated incrementally from the window above.
    std::uint64_t incremental_windows = 0;
    /// Window points (columns of D) dropped by incremental steps.
    std::uint64_t evicted_columns = 0;
    /// Rows whose extremum left the window and had to be searched again.
    std::uint64_t row_min_rescans = 0;

    double rescans_per_incremental_window() const noexcept {
        return incremental_windows ? static_cast<double>(row_min_rescans) / static_cast<double>(incremental_windows)
                                   : 0.0;
    }
    double rescans_per_evicted_column() const noexcept {
        return evicted_columns ? static_cast<double>(row_min_rescans) / static_cast<double>(evicted_columns) : 0.0;
    }
};

namespace detail {

struct Geometry {
    std::size_t k, stride;
    std::size_t th, tw;          // template size in cells
    std::size_t prows, pcols;    // patch grid of a window
    std::size_t points;          // prows * pcols
    std::size_t map_rows, map_cols;
};

inline Geometry check_geometry(const FeatureGrid& templ, const FeatureGrid& image, const MatcherConfig& cfg) {
    if (cfg.patch_size == 0) throw ConfigError("patch size must be positive");
    if (templ.channels() != image.channels())
        throw DimensionError("template has " + std::to_string(templ.channels()) + " channels, image has " +
                             std::to_string(image.channels()));
    if (templ.height() > image.height() || templ.width() > image.width())
        throw DimensionError("template " + std::to_string(templ.width()) + "x" + std::to_string(templ.height()) +
                             " is larger than image " + std::to_string(image.width()) + "x" +
                             std::to_string(image.height()));
    if (templ.height() < cfg.patch_size || templ.width() < cfg.patch_size)
        throw DimensionError("template is smaller than the patch size");
    Geometry g{};
    g.k = cfg.patch_size;
    g.stride = cfg.effective_stride();
    g.th = templ.height();
    g.tw = templ.width();
    g.prows = g.th / g.k;
    g.pcols = g.tw / g.k;
    g.points = g.prows * g.pcols;
    g.map_rows = (image.height() - g.th) / g.stride + 1;
    g.map_cols = (image.width() - g.tw) / g.stride + 1;
    return g;
}

inline LikelihoodMap empty_map(const Geometry& g) {
    LikelihoodMap map;
    map.rows = g.map_rows;
    map.cols = g.map_cols;
    map.stride = g.stride;
    map.window_w = g.tw;
    map.window_h = g.th;
    map.scores.assign(g.map_rows * g.map_cols, 0.0);
    return map;
}

// Appearance terms between every template point and image patches, stored as
// one column of `points` values per patch position. Positions lie on a grid of
// spacing gcd(stride, k); x-columns of that grid are held in a ring so a
// stripe reuses whatever the stripes to its left already computed.
class AppearanceCache {
public:
    AppearanceCache(const FeatureGrid& image, const PointSet& templ_points, const Measure& m, const Geometry& g)
        : image_(image), templ_(templ_points), measure_(m), k_(g.k), spacing_(std::gcd(g.stride, g.k)),
          points_(g.points), ycells_((image.height() - g.k) / spacing_ + 1),
          ring_((g.tw - g.k) / spacing_ + 1), tags_(ring_, kNoColumn), ready_(ring_ * ycells_, 0),
          col_best_(ring_ * ycells_), values_(ring_ * ycells_ * points_) {
        patch_.reserve(templ_points.dim());
    }

    // Column of appearance terms for the patch at pixel (y, x). `fresh` is
    // increased by the number of entries evaluated.
    const double* column(std::size_t y, std::size_t x, std::uint64_t& fresh) {
        std::size_t slot = slot_for(x);
        std::size_t cell = slot * ycells_ + y / spacing_;
        double* col = values_.data() + cell * points_;
        if (!ready_[cell]) {
            patch_.clear();
            gather_patch(image_, y, x, k_, patch_);
            for (std::size_t i = 0; i < points_; ++i) col[i] = measure_.appearance_term(templ_[i].appearance, patch_);
            // Closest template point for this patch; valid when the spatial
            // term is constant, so it holds for every window containing it.
            const double c = measure_.spatial_term(0.0);
            Extremum best{0, col[0] + c};
            for (std::size_t i = 1; i < points_; ++i) {
                double v = col[i] + c;
                if (measure_.closer(v, best.value)) best = {i, v};
            }
            col_best_[cell] = best;
            ready_[cell] = 1;
            fresh += points_;
        }
        return col;
    }

    const Extremum& column_best(std::size_t y, std::size_t x) const {
        return col_best_[slot_of(x) * ycells_ + y / spacing_];
    }

private:
    static constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);

    std::size_t slot_of(std::size_t x) const noexcept { return (x / spacing_) % ring_; }

    std::size_t slot_for(std::size_t x) {
        std::size_t xi = x / spacing_;
        std::size_t slot = xi % ring_;
        if (tags_[slot] != xi) {
            tags_[slot] = xi;
            std::fill(ready_.begin() + static_cast<std::ptrdiff_t>(slot * ycells_),
                      ready_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * ycells_), 0);
        }
        return slot;
    }

    const FeatureGrid& image_;
    const PointSet& templ_;
    const Measure& measure_;
    std::size_t k_, spacing_, points_, ycells_, ring_;
    std::vector<std::size_t> tags_;
    std::vector<unsigned char> ready_;
    std::vector<Extremum> col_best_;
    std::vector<double> values_;
    std::vector<double> patch_;
};

struct WindowScratch {
    explicit WindowScratch(std::size_t l) : values(l), row_value(l), row_index(l), col_index(l) {}
    std::vector<double> values, row_value;
    std::vector<std::uint64_t> row_index, col_index;
};

// Index of the first closest entry of v[0..n).
template <bool Higher>
std::uint64_t first_extremum(const double* v, std::size_t n) {
    auto closer = [](double a, double b) { return Higher ? a > b : a < b; };
    double best = v[0];
    std::size_t i = 0;
#if defined(__SSE2__)
    __m128d b0 = _mm_set1_pd(v[0]), b1 = b0;
    for (; i + 4 <= n; i += 4) {
        const __m128d x0 = _mm_loadu_pd(v + i), x1 = _mm_loadu_pd(v + i + 2);
        b0 = Higher ? _mm_max_pd(x0, b0) : _mm_min_pd(x0, b0);
        b1 = Higher ? _mm_max_pd(x1, b1) : _mm_min_pd(x1, b1);
    }
    alignas(16) double lanes[4];
    _mm_store_pd(lanes, b0);
    _mm_store_pd(lanes + 2, b1);
    for (double x : lanes) best = closer(x, best) ? x : best;
#endif
    for (; i < n; ++i) best = closer(v[i], best) ? v[i] : best;
    std::size_t at = 0;
    while (v[at] != best) ++at;
    return at;
}

// Folds window point j into the per-template-point extrema and stores the
// point-wise values of column j in v.
template <bool Higher>
void fold_column(const double* __restrict a, const double* __restrict s, std::uint64_t j, std::size_t l,
                 double* __restrict v, double* __restrict rv, std::uint64_t* __restrict ri) {
    std::size_t i = 0;
#if defined(__SSE2__)
    const __m128i jj = _mm_set1_epi64x(static_cast<long long>(j));
    for (; i + 2 <= l; i += 2) {
        const __m128d x = _mm_add_pd(_mm_loadu_pd(a + i), _mm_loadu_pd(s + i));
        const __m128d r = _mm_loadu_pd(rv + i);
        const __m128i c = _mm_castpd_si128(Higher ? _mm_cmpgt_pd(x, r) : _mm_cmplt_pd(x, r));
        _mm_storeu_pd(v + i, x);
        _mm_storeu_pd(rv + i, _mm_or_pd(_mm_and_pd(_mm_castsi128_pd(c), x), _mm_andnot_pd(_mm_castsi128_pd(c), r)));
        const __m128i old = _mm_loadu_si128(reinterpret_cast<const __m128i*>(ri + i));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(ri + i),
                         _mm_or_si128(_mm_and_si128(c, jj), _mm_andnot_si128(c, old)));
    }
#endif
    for (; i < l; ++i) {
        const double x = a[i] + s[i];
        const bool c = Higher ? x > rv[i] : x < rv[i];
        v[i] = x;
        rv[i] = c ? x : rv[i];
        ri[i] = c ? j : ri[i];
    }
}

// Mutual nearest neighbours of one window given its appearance columns and the
// spatial table. Ties go to the lowest index on both sides.
template <bool Higher>
std::size_t window_buddies(const double* const* cols, const double* spatial, std::size_t l, WindowScratch& w) {
    double* rv = w.row_value.data();
    std::uint64_t* ri = w.row_index.data();
    for (std::size_t i = 0; i < l; ++i) {
        rv[i] = cols[0][i] + spatial[i];
        ri[i] = 0;
    }
    w.col_index[0] = first_extremum<Higher>(rv, l);
    for (std::size_t j = 1; j < l; ++j) {
        fold_column<Higher>(cols[j], spatial + j * l, j, l, w.values.data(), rv, ri);
        w.col_index[j] = first_extremum<Higher>(w.values.data(), l);
    }
    std::size_t buddies = 0;
    for (std::size_t i = 0; i < l; ++i) buddies += w.col_index[ri[i]] == i ? 1 : 0;
    return buddies;
}

// Processes map columns [col_begin, col_end), each as a stripe walked
// top to bottom.
inline void cached_stripes(const FeatureGrid& image, const PointSet& templ, const Measure& m, const Geometry& g,
                           std::size_t col_begin, std::size_t col_end, LikelihoodMap& map, MatchStats& stats) {
    const std::size_t l = g.points;
    AppearanceCache cache(image, templ, m, g);

    // Spatial term between template point i and window point j, window-independent.
    std::vector<double> spatial(l * l);
    for (std::size_t j = 0; j < l; ++j)
        for (std::size_t i = 0; i < l; ++i)
            spatial[j * l + i] = m.spatial_term(location_sq(templ[i].location, templ[j].location));

    const bool constant_spatial = m.spatially_constant();
    const double spatial_const = m.spatial_term(0.0);
    // Consecutive windows of a stripe share patch rows only when the stride is
    // a whole number of patches smaller than the window.
    const bool rows_shift = g.stride % g.k == 0 && g.stride / g.k < g.prows;
    const std::size_t shift_rows = rows_shift ? g.stride / g.k : 0;

    std::vector<const double*> cols(l);
    std::vector<Extremum> row_best(l);      // per template point, index is a window point
    WindowScratch scratch(l);
    std::vector<std::size_t> row_owner(l);  // absolute patch row of row_best (incremental mode)

    for (std::size_t mc = col_begin; mc < col_end; ++mc) {
        const std::size_t x = mc * g.stride;
        for (std::size_t mr = 0; mr < g.map_rows; ++mr) {
            const std::size_t y = mr * g.stride;
            std::uint64_t fresh = 0;
            for (std::size_t pr = 0, j = 0; pr < g.prows; ++pr)
                for (std::size_t pc = 0; pc < g.pcols; ++pc, ++j)
                    cols[j] = cache.column(y + pr * g.k, x + pc * g.k, fresh);

            std::size_t buddies = 0;
            if (!constant_spatial) {
                buddies = m.higher_is_closer()
                              ? window_buddies<true>(cols.data(), spatial.data(), l, scratch)
                              : window_buddies<false>(cols.data(), spatial.data(), l, scratch);
            } else {
                // Window-independent entries: column extrema live in the cache and
                // row extrema are repaired from the window above.
                auto full_scan = [&](std::size_t i) {
                    Extremum rb{0, cols[0][i] + spatial_const};
                    for (std::size_t j = 1; j < l; ++j) {
                        double v = cols[j][i] + spatial_const;
                        if (m.closer(v, rb.value)) rb = {j, v};
                    }
                    row_best[i] = rb;
                    row_owner[i] = y / g.k + rb.index / g.pcols;
                };
                if (mr == 0 || !rows_shift) {
                    for (std::size_t i = 0; i < l; ++i) full_scan(i);
                } else {
                    const std::size_t first_row = y / g.k;  // absolute patch row of window row 0
                    const std::size_t entering = (g.prows - shift_rows) * g.pcols;
                    ++stats.incremental_windows;
                    stats.evicted_columns += shift_rows * g.pcols;
                    for (std::size_t i = 0; i < l; ++i) {
                        if (row_owner[i] < first_row) {
                            ++stats.row_min_rescans;
                            full_scan(i);
                            continue;
                        }
                        Extremum rb{row_best[i].index - shift_rows * g.pcols, row_best[i].value};
                        for (std::size_t j = entering; j < l; ++j) {
                            double v = cols[j][i] + spatial_const;
                            if (m.closer(v, rb.value)) rb = {j, v};
                        }
                        row_best[i] = rb;
                        row_owner[i] = first_row + rb.index / g.pcols;
                    }
                }
                for (std::size_t i = 0; i < l; ++i) {
                    std::size_t j = row_best[i].index;
                    const Extremum& cb = cache.column_best(y + (j / g.pcols) * g.k, x + (j % g.pcols) * g.k);
                    if (cb.index == i) ++buddies;
                }
            }
            map.at(mr, mc) = bbs_score_from_count(buddies, l, l);
            stats.fresh_distance_entries += fresh;
            stats.fresh_per_window[mr * g.map_cols + mc] = fresh;
            ++stats.windows;
        }
    }
}

inline FeatureGrid prepare_template(const FeatureGrid& templ, const MatcherConfig& cfg) {
    return cfg.normalize_windows ? normalize_per_window(templ) : templ;
}

}  // namespace detail

/// Builds both point sets from scratch for every placement and scores them
/// through a full distance matrix.
inline LikelihoodMap match_naive(const FeatureGrid& templ, const FeatureGrid& image, const MatcherConfig& cfg) {
    const auto g = detail::check_geometry(templ, image, cfg);
    const PointSet p = build_point_set(detail::prepare_template(templ, cfg), g.k);
    LikelihoodMap map = detail::empty_map(g);
    parallel_blocks(g.map_rows, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r)
            for (std::size_t c = 0; c < g.map_cols; ++c) {
                FeatureGrid window = image.crop(r * g.stride, c * g.stride, g.th, g.tw);
                if (cfg.normalize_windows) window = normalize_per_window(window);
                map.at(r, c) = bbs_score(distance_matrix(p, build_point_set(window, g.k), cfg.measure));
            }
    });
    return map;
}

/// Same scores as match_naive, reusing distances between overlapping windows.
/// Rejects per-window normalization, whose distances change with the window.
inline LikelihoodMap match_cached(const FeatureGrid& templ, const FeatureGrid& image, const MatcherConfig& cfg,
                                  MatchStats* stats = nullptr) {
    if (cfg.normalize_windows)
        throw ConfigError("the cached matcher cannot be used with per-window normalization");
    const auto g = detail::check_geometry(templ, image, cfg);
    const PointSet p = build_point_set(templ, g.k);
    LikelihoodMap map = detail::empty_map(g);

    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, g.map_cols));
    std::vector<MatchStats> partial(workers);
    for (auto& s : partial) s.fresh_per_window.assign(g.map_rows * g.map_cols, 0);
    parallel_blocks(g.map_cols, workers, [&](std::size_t begin, std::size_t end) {
        std::size_t w = 0;
        while (g.map_cols * (w + 1) / workers <= begin) ++w;
        detail::cached_stripes(image, p, cfg.measure, g, begin, end, map, partial[w]);
    });

    if (stats) {
        *stats = MatchStats{};
        stats->fresh_per_window.assign(g.map_rows * g.map_cols, 0);
        for (const auto& s : partial) {
            stats->windows += s.windows;
            stats->fresh_distance_entries += s.fresh_distance_entries;
            stats->incremental_windows += s.incremental_windows;
            stats->evicted_columns += s.evicted_columns;
            stats->row_min_rescans += s.row_min_rescans;
            for (std::size_t i = 0; i < s.fresh_per_window.size(); ++i)
                stats->fresh_per_window[i] += s.fresh_per_window[i];
        }
    }
    return map;
}

inline LikelihoodMap match(const FeatureGrid& templ, const FeatureGrid& image, const MatcherConfig& cfg) {
    return cfg.algorithm == Algorithm::Naive ? match_naive(templ, image, cfg) : match_cached(templ, image, cfg);
}

/// Scores every placement with a baseline. Dissimilarities are negated so
/// that higher is better throughout the map.
inline LikelihoodMap match_baseline(const FeatureGrid& templ, const FeatureGrid& image, const MatcherConfig& cfg,
                                    const Baseline& baseline) {
    const auto g = detail::check_geometry(templ, image, cfg);
    const FeatureGrid t = detail::prepare_template(templ, cfg);
    std::optional<PointSet> p;
    if (baseline.kind == BaselineKind::BDS) p = build_point_set(t, g.k);
    if (baseline.kind == BaselineKind::HM_Chi2) {
        if (t.channels() != 3) throw DimensionError("histogram matching needs 3 channels");
        if (baseline.hm_bins < 2) throw ConfigError("histogram needs at least 2 bins per channel");
    }
    const bool similarity = baseline_is_similarity(baseline.kind, cfg.measure);
    LikelihoodMap map = detail::empty_map(g);
    parallel_blocks(g.map_rows, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r)
            for (std::size_t c = 0; c < g.map_cols; ++c) {
                FeatureGrid w = image.crop(r * g.stride, c * g.stride, g.th, g.tw);
                if (cfg.normalize_windows) w = normalize_per_window(w);
                double raw = 0.0;
                switch (baseline.kind) {
                    case BaselineKind::SSD: raw = score_ssd(t, w); break;
                    case BaselineKind::SAD: raw = score_sad(t, w); break;
                    case BaselineKind::NCC: raw = score_ncc(t, w); break;
                    case BaselineKind::HM_Chi2: raw = score_hm_chi2(t, w, baseline.hm_bins); break;
                    case BaselineKind::BDS: raw = score_bds(*p, build_point_set(w, g.k), cfg.measure); break;
                }
                map.at(r, c) = similarity ? raw : -raw + 0.0;
            }
    });
    return map;
}

struct MatchResult {
    Box box;
    double score = 0.0;
    std::size_t rank = 1;
};

/// Greedy non-maximum suppression: take the global maximum (row-major first
/// on ties), suppress every cell whose pixel offset is within (rx, ry), repeat.
/// The radius defaults to half the window size.
inline std::vector<MatchResult> top_modes(const LikelihoodMap& map, std::size_t kmodes,
                                          std::optional<std::size_t> nms_rx = std::nullopt,
                                          std::optional<std::size_t> nms_ry = std::nullopt) {
    if (kmodes == 0) throw ConfigError("kmodes must be at least 1");
    const std::size_t rx = nms_rx.value_or(map.window_w / 2);
    const std::size_t ry = nms_ry.value_or(map.window_h / 2);
    std::vector<unsigned char> alive(map.scores.size(), 1);
    std::vector<MatchResult> out;
    while (out.size() < kmodes) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < map.scores.size(); ++i)
            if (alive[i] && (!best || map.scores[i] > map.scores[*best])) best = i;
        if (!best) break;
        const std::size_t br = *best / map.cols, bc = *best % map.cols;
        out.push_back({Box{static_cast<std::int64_t>(bc * map.stride), static_cast<std::int64_t>(br * map.stride),
                           static_cast<std::int64_t>(map.window_w), static_cast<std::int64_t>(map.window_h)},
                       map.scores[*best], out.size() + 1});
        for (std::size_t r = 0; r < map.rows; ++r) {
            std::size_t dy = (r > br ? r - br : br - r) * map.stride;
            if (dy > ry) continue;
            for (std::size_t c = 0; c < map.cols; ++c) {
                std::size_t dx = (c > bc ? c - bc : bc - c) * map.stride;
                if (dx <= rx) alive[r * map.cols + c] = 0;
            }
        }
    }
    return out;
}

/// 8-bit binary PGM of the map, min-max scaled. A flat map encodes as all zeros.
inline std::string encode_pgm(const LikelihoodMap& map) {
    std::string out = "P5\n" + std::to_string(map.cols) + " " + std::to_string(map.rows) + "\n255\n";
    if (map.scores.empty()) return out;
    auto [lo, hi] = std::minmax_element(map.scores.begin(), map.scores.end());
    const double range = *hi - *lo;
    for (double v : map.scores) {
        double t = range > 0.0 ? (v - *lo) / range : 0.0;
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
    }
    return out;
}

}  // namespace bbs
