#pragma once

// Monte-Carlo and quadrature tools for the statistics of best-buddy counts
// between 1-D samples: E[BBS] by simulation and through the pair integral,
// closed-form SSD/SAD expectations, the per-point best-buddy probability and
// its large-N limit, and the chi-square limit of E[BBS].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bbs/best_buddies.hpp"
#include "bbs/errors.hpp"
#include "bbs/parallel.hpp"
#include "bbs/point_set.hpp"

namespace bbs::stats {

/// Generator recorded in simulation output: one mt19937_64 per stream, seeded
/// with splitmix64(seed, stream).
inline constexpr const char* kRngName = "mt19937_64+splitmix64";

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent stream `stream` of the simulation seeded by `seed`.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull)));
}

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct GaussianComponent {
    double weight = 1.0;
    double mean = 0.0;
    double sigma = 1.0;
};

/// Gaussian or Gaussian mixture on the line; `support` is the half-width M of
/// the interval [-M, M] used for quadrature.
class Distribution1D {
public:
    Distribution1D() : Distribution1D(gaussian(0.0, 1.0)) {}

    static Distribution1D gaussian(double mean, double sigma, double support = 20.0) {
        return mixture({{1.0, mean, sigma}}, support);
    }

    static Distribution1D mixture(std::vector<GaussianComponent> components, double support = 20.0) {
        if (components.empty()) throw ConfigError("distribution needs at least one component");
        double total = 0.0;
        for (const auto& c : components) {
            if (!(c.sigma > 0.0)) throw ConfigError("component sigma must be positive");
            if (!(c.weight > 0.0)) throw ConfigError("component weight must be positive");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
        if (!(support > 0.0)) throw ConfigError("support bound must be positive");
        Distribution1D d(0);
        d.components_ = std::move(components);
        d.support_ = support;
        return d;
    }

    const std::vector<GaussianComponent>& components() const noexcept { return components_; }
    double support() const noexcept { return support_; }

    double pdf(double x) const noexcept {
        double acc = 0.0;
        for (const auto& c : components_) {
            double z = (x - c.mean) / c.sigma;
            acc += c.weight * std::exp(-0.5 * z * z) / (c.sigma * std::sqrt(2.0 * std::numbers::pi));
        }
        return acc;
    }

    double cdf(double x) const noexcept {
        double acc = 0.0;
        for (const auto& c : components_) acc += c.weight * normal_cdf((x - c.mean) / c.sigma);
        return acc;
    }

    /// 1 - cdf(x), evaluated without cancellation in the upper tail.
    double sf(double x) const noexcept {
        double acc = 0.0;
        for (const auto& c : components_) acc += c.weight * normal_cdf(-(x - c.mean) / c.sigma);
        return acc;
    }

    template <typename Rng>
    double sample(Rng& rng) const {
        std::size_t idx = 0;
        if (components_.size() > 1) {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            double acc = 0.0;
            idx = components_.size() - 1;
            for (std::size_t i = 0; i < components_.size(); ++i) {
                acc += components_[i].weight;
                if (u < acc) {
                    idx = i;
                    break;
                }
            }
        }
        const auto& c = components_[idx];
        return c.mean + c.sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
    }

private:
    explicit Distribution1D(int) {}

    std::vector<GaussianComponent> components_;
    double support_ = 20.0;
};

struct SimConfig {
    Distribution1D dist_p;
    Distribution1D dist_q;
    std::size_t set_size = 100;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Sample mean with its standard error.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

inline Estimate summarize(std::span<const double> values) {
    Estimate e;
    e.samples = values.size();
    if (values.empty()) return e;
    const double n = static_cast<double>(values.size());
    e.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return e;
}

namespace detail {

// For every value in `from`, index (into `to`) of its nearest neighbour under
// |a-b|, lowest index on ties. `order` sorts `to` ascending; `run_start[k]` is the first
// sorted slot holding the same value, which carries the smallest index.
inline void nearest_1d(std::span<const double> from, std::span<const double> to, std::vector<std::size_t>& nn) {
    std::vector<std::size_t> order(to.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return to[a] < to[b] || (to[a] == to[b] && a < b);
    });
    std::vector<double> sorted(to.size());
    for (std::size_t k = 0; k < order.size(); ++k) sorted[k] = to[order[k]];
    // Runs of equal values are contiguous and start with their lowest index.
    std::vector<std::size_t> run_start(to.size());
    for (std::size_t k = 0; k < sorted.size(); ++k)
        run_start[k] = (k > 0 && sorted[k] == sorted[k - 1]) ? run_start[k - 1] : k;

    nn.resize(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        const double v = from[i];
        auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
        std::size_t right = static_cast<std::size_t>(it - sorted.begin());
        std::size_t best = 0;
        bool have = false;
        double best_d = 0.0;
        auto consider = [&](std::size_t k) {
            double d = std::abs(v - sorted[k]);
            std::size_t idx = order[run_start[k]];
            if (!have || d < best_d || (d == best_d && idx < best)) {
                best = idx;
                best_d = d;
                have = true;
            }
        };
        if (right < sorted.size()) consider(right);
        if (right > 0) consider(right - 1);
        nn[i] = best;
    }
}

}  // namespace detail

/// Number of best-buddy pairs between two 1-D samples with d(p,q) = |p-q|,
/// in O(N log N).
inline std::size_t best_buddy_count_1d(std::span<const double> p, std::span<const double> q) {
    if (p.empty() || q.empty()) throw DimensionError("samples must be non-empty");
    std::vector<std::size_t> nn_pq, nn_qp;
    detail::nearest_1d(p, q, nn_pq);
    detail::nearest_1d(q, p, nn_qp);
    std::size_t count = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (nn_qp[nn_pq[i]] == i) ++count;
    return count;
}

inline double bbs_1d(std::span<const double> p, std::span<const double> q) {
    return bbs_score_from_count(best_buddy_count_1d(p, q), p.size(), q.size());
}

namespace detail {

template <typename Fn>
std::vector<double> run_trials(std::size_t trials, std::size_t threads, Fn&& trial) {
    std::vector<double> out(trials);
    parallel_blocks(trials, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) out[t] = trial(t);
    });
    return out;
}

inline void validate(const SimConfig& cfg) {
    if (cfg.set_size == 0) throw ConfigError("set size must be at least 1");
    if (cfg.trials == 0) throw ConfigError("trial count must be at least 1");
}

}  // namespace detail

/// Mean BBS over `trials` pairs of i.i.d. samples of size N.
inline Estimate empirical_ebbs(const SimConfig& cfg) {
    detail::validate(cfg);
    auto scores = detail::run_trials(cfg.trials, cfg.threads, [&](std::size_t t) {
        auto rng = make_rng(cfg.seed, t);
        std::vector<double> p(cfg.set_size), q(cfg.set_size);
        for (auto& v : p) v = cfg.dist_p.sample(rng);
        for (auto& v : q) v = cfg.dist_q.sample(rng);
        return bbs_1d(p, q);
    });
    return summarize(scores);
}

/// Probability that a fixed pair (p_i, q_j) is a best-buddy pair, estimated by
/// averaging (F_Q(p-d)+1-F_Q(p+d))^(N-1) (F_P(q-d)+1-F_P(q+d))^(N-1), d=|p-q|,
/// over (p, q) drawn from f_P x f_Q.
inline Estimate integral_ebbp(const SimConfig& cfg, std::size_t samples) {
    detail::validate(cfg);
    if (samples == 0) throw ConfigError("sample count must be at least 1");
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (samples + kBlock - 1) / kBlock;
    const double exponent = static_cast<double>(cfg.set_size - 1);
    std::vector<double> values(samples);
    parallel_blocks(blocks, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            // Stream ids above 2^40 keep these draws apart from the trial streams.
            auto rng = make_rng(cfg.seed, (std::uint64_t{1} << 40) + b);
            for (std::size_t s = b * kBlock; s < std::min(samples, (b + 1) * kBlock); ++s) {
                double p = cfg.dist_p.sample(rng);
                double q = cfg.dist_q.sample(rng);
                double d = std::abs(p - q);
                double no_closer_q = cfg.dist_q.cdf(p - d) + cfg.dist_q.sf(p + d);
                double no_closer_p = cfg.dist_p.cdf(q - d) + cfg.dist_p.sf(q + d);
                values[s] = std::pow(no_closer_q, exponent) * std::pow(no_closer_p, exponent);
            }
        }
    });
    return summarize(values);
}

/// E[BBS] = c * E_BBP with c = N_P N_Q / min(N_P, N_Q), i.e. N for equal sizes.
inline Estimate integral_ebbs(const SimConfig& cfg, std::size_t samples) {
    Estimate e = integral_ebbp(cfg, samples);
    const double c = static_cast<double>(cfg.set_size);
    e.mean *= c;
    e.std_error *= c;
    return e;
}

/// E[(p-q)^2] for p ~ N(0,1), q ~ N(mu, sigma).
inline double expected_ssd(double mu, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    return 1.0 + mu * mu + sigma * sigma;
}

/// E|p-q| for p ~ N(0,1), q ~ N(mu, sigma): the folded-normal mean of
/// N(mu, 1 + sigma^2).
inline double expected_sad(double mu, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    const double sd = std::sqrt(1.0 + sigma * sigma);
    return sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / (2.0 * sd * sd)) +
           mu * (1.0 - 2.0 * normal_cdf(-mu / sd));
}

struct PairMoments {
    Estimate ssd;
    Estimate sad;
};

/// Monte-Carlo estimates of E[(p-q)^2] and E|p-q|.
inline PairMoments monte_carlo_ssd_sad(double mu, double sigma, std::size_t samples, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    auto rng = make_rng(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sq(samples), ab(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double p = normal(rng);
        double q = mu + sigma * normal(rng);
        sq[i] = (p - q) * (p - q);
        ab[i] = std::abs(p - q);
    }
    return {summarize(sq), summarize(ab)};
}

/// Large-N probability that a point at p in P has a best buddy in Q.
inline double lemma1_analytic(const Distribution1D& dp, const Distribution1D& dq, double p) {
    const double fp = dp.pdf(p), fq = dq.pdf(p);
    if (!(fp + fq > 0.0)) throw ConfigError("both densities vanish at p = " + std::to_string(p));
    return fq / (fp + fq);
}

/// Fraction of trials in which a point pinned at p (with N-1 further points of
/// P and N points of Q drawn i.i.d.) has a best buddy in Q.
inline Estimate lemma1_empirical(const Distribution1D& dp, const Distribution1D& dq, double p, std::size_t n,
                                 std::size_t trials, std::uint64_t seed, std::size_t threads = 1) {
    if (n == 0 || trials == 0) throw ConfigError("set size and trials must be at least 1");
    auto hits = detail::run_trials(trials, threads, [&](std::size_t t) {
        auto rng = make_rng(seed, t);
        std::vector<double> others(n - 1), q(n);
        for (auto& v : others) v = dp.sample(rng);
        for (auto& v : q) v = dq.sample(rng);
        // Nearest q to p, lowest index on ties.
        std::size_t best = 0;
        double best_d = std::abs(p - q[0]);
        for (std::size_t j = 1; j < n; ++j) {
            double d = std::abs(p - q[j]);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        // The pinned point has the lowest index in P, so it loses only to a
        // strictly closer point.
        const double qb = q[best];
        for (double o : others)
            if (std::abs(o - qb) < best_d) return 0.0;
        return 1.0;
    });
    return summarize(hits);
}

/// Composite Simpson rule on [-M, M] with at most `step` spacing.
template <typename Fn>
double simpson(Fn&& f, double lo, double hi, double step) {
    if (!(step > 0.0)) throw ConfigError("quadrature step must be positive");
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double acc = f(lo) + f(hi);
    for (std::size_t i = 1; i < n; ++i) acc += f(lo + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

inline double default_step(const Distribution1D& dp, const Distribution1D& dq) {
    return std::max(dp.support(), dq.support()) / 2000.0;
}

namespace detail {

template <typename Fn>
double density_integral(const Distribution1D& dp, const Distribution1D& dq, double step, Fn&& integrand) {
    const double m = std::max(dp.support(), dq.support());
    return simpson(
        [&](double x) {
            const double f = dp.pdf(x), g = dq.pdf(x);
            const double v = integrand(f, g);
            if (!(f + g > 0.0) || !std::isfinite(v))
                throw ConfigError("non-finite chi-square integrand at x = " + std::to_string(x));
            return v;
        },
        -m, m, step);
}

}  // namespace detail

/// Chi-square distance: integral of (f_P - f_Q)^2 / (f_P + f_Q) over [-M, M].
inline double chi_square(const Distribution1D& dp, const Distribution1D& dq, double step) {
    return detail::density_integral(dp, dq, step, [](double f, double g) { return (f - g) * (f - g) / (f + g); });
}

inline double chi_square(const Distribution1D& dp, const Distribution1D& dq) {
    return chi_square(dp, dq, default_step(dp, dq));
}

/// Large-N limit of E[BBS]: 1/2 - chi^2 / 4.
inline double theorem1_limit(const Distribution1D& dp, const Distribution1D& dq) {
    return 0.5 - chi_square(dp, dq) / 4.0;
}

/// The same limit written as the integral of f_P f_Q / (f_P + f_Q).
inline double theorem1_integral(const Distribution1D& dp, const Distribution1D& dq, double step) {
    return detail::density_integral(dp, dq, step, [](double f, double g) { return f * g / (f + g); });
}

inline double theorem1_integral(const Distribution1D& dp, const Distribution1D& dq) {
    return theorem1_integral(dp, dq, default_step(dp, dq));
}

/// Mixtures used for the best-buddy probability curves: a shared component at
/// -5 and a second component at 0 (for P) or 5 (for Q). Equal weights, unit sigma.
inline Distribution1D lemma_mixture_p() { return Distribution1D::mixture({{0.5, -5.0, 1.0}, {0.5, 0.0, 1.0}}); }
inline Distribution1D lemma_mixture_q() { return Distribution1D::mixture({{0.5, -5.0, 1.0}, {0.5, 5.0, 1.0}}); }

/// E[BBS] between sets of d-dimensional points whose coordinates are drawn
/// independently (coordinate c of P from dims_p[c], of Q from dims_q[c]),
/// using squared Euclidean distance.
inline Estimate empirical_ebbs_nd(std::span<const Distribution1D> dims_p, std::span<const Distribution1D> dims_q,
                                  std::size_t n, std::size_t trials, std::uint64_t seed, std::size_t threads = 1) {
    if (dims_p.size() != dims_q.size() || dims_p.empty()) throw DimensionError("dimension lists must match");
    if (n == 0 || trials == 0) throw ConfigError("set size and trials must be at least 1");
    const Measure m = Measure::color(0.0);
    auto scores = detail::run_trials(trials, threads, [&](std::size_t t) {
        auto rng = make_rng(seed, t);
        auto draw = [&](std::span<const Distribution1D> dims) {
            std::vector<Point> pts(n);
            for (auto& pt : pts) {
                pt.appearance.resize(dims.size());
                for (std::size_t c = 0; c < dims.size(); ++c) pt.appearance[c] = dims[c].sample(rng);
            }
            return PointSet(std::move(pts));
        };
        PointSet p = draw(dims_p);
        PointSet q = draw(dims_q);
        return bbs_score(p, q, m);
    });
    return summarize(scores);
}

}  // namespace bbs::stats
