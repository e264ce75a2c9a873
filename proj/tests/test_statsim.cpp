#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace bbs;
using namespace bbs::stats;

namespace {

SimConfig cfg(Distribution1D p, Distribution1D q, std::size_t n, std::size_t trials, std::uint64_t seed = 1) {
    return SimConfig{std::move(p), std::move(q), n, trials, seed, 1};
}

}  // namespace

TEST(Distribution, Validation) {
    EXPECT_THROW(Distribution1D::gaussian(0, 0), ConfigError);
    EXPECT_THROW(Distribution1D::mixture({{0.5, 0, 1}, {0.4, 1, 1}}), ConfigError);
    EXPECT_THROW(Distribution1D::mixture({}), ConfigError);
    EXPECT_NO_THROW(Distribution1D::mixture({{0.25, 0, 1}, {0.75, 1, 2}}));
}

TEST(Distribution, PdfCdfConsistency) {
    auto d = lemma_mixture_p();
    EXPECT_NEAR(simpson([&](double x) { return d.pdf(x); }, -20, 20, 0.01), 1.0, 1e-10);
    EXPECT_NEAR(d.cdf(-2.5), 0.5 * normal_cdf(2.5) + 0.5 * normal_cdf(-2.5), 1e-15);
    EXPECT_NEAR(d.cdf(1.3) + d.sf(1.3), 1.0, 1e-15);
    EXPECT_GT(d.sf(12.0), 0.0);
}

TEST(Distribution, SampleMoments) {
    auto d = Distribution1D::mixture({{0.3, -2.0, 0.5}, {0.7, 1.0, 1.0}});
    auto rng = make_rng(3, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += d.sample(rng);
    EXPECT_NEAR(sum / n, 0.3 * -2.0 + 0.7 * 1.0, 0.01);
}

TEST(Rng, StreamsAreDistinctAndReproducible) {
    auto a = make_rng(1, 0), b = make_rng(1, 1), c = make_rng(1, 0);
    std::uint64_t x = a(), y = b(), z = c();
    EXPECT_NE(x, y);
    EXPECT_EQ(x, z);
    EXPECT_NE(make_rng(2, 0)(), x);
}

TEST(EmpiricalEbbs, SinglePointIsAlwaysOne) {
    Estimate e = empirical_ebbs(cfg(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(3, 2), 1, 50));
    EXPECT_EQ(e.mean, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(EmpiricalEbbs, Deterministic) {
    auto c = cfg(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(1, 1), 50, 40, 9);
    Estimate a = empirical_ebbs(c);
    c.threads = 3;
    Estimate b = empirical_ebbs(c);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(EmpiricalEbbs, DropsForDistantDistribution) {
    Estimate same = empirical_ebbs(cfg(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(0, 1), 100, 200));
    Estimate far = empirical_ebbs(cfg(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(10, 0.1), 100, 200));
    EXPECT_LT(far.mean, same.mean);
}

TEST(EmpiricalEbbs, AgreesWithIntegralEstimator) {
    auto c = cfg(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(0, 1), 100, 1000, 4);
    Estimate e = empirical_ebbs(c);
    Estimate i = integral_ebbs(c, 100000);
    EXPECT_NEAR(e.mean, i.mean, 0.05);
}

TEST(EmpiricalEbbs, Validation) {
    EXPECT_THROW(empirical_ebbs(cfg(Distribution1D(), Distribution1D(), 0, 1)), ConfigError);
    EXPECT_THROW(empirical_ebbs(cfg(Distribution1D(), Distribution1D(), 1, 0)), ConfigError);
    EXPECT_THROW(integral_ebbp(cfg(Distribution1D(), Distribution1D(), 1, 1), 0), ConfigError);
}

TEST(IntegralEbbp, SinglePointSetsGiveOne) {
    Estimate e = integral_ebbp(cfg(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(2, 3), 1, 1), 1000);
    EXPECT_EQ(e.mean, 1.0);
}

TEST(IntegralEbbp, PeakAtMatchedGaussian) {
    const auto p = Distribution1D::gaussian(0, 1);
    auto at = [&](double mu, double sigma) {
        return integral_ebbp(cfg(p, Distribution1D::gaussian(mu, sigma), 100, 1), 20000).mean;
    };
    double peak = at(0, 1);
    EXPECT_GT(peak, at(1, 1));
    EXPECT_GT(peak, at(0, 2));
    EXPECT_GT(peak, at(0, 0.5));
}

TEST(ClosedForms, Ssd) {
    EXPECT_EQ(expected_ssd(0, 1), 2.0);
    EXPECT_EQ(expected_ssd(3, 2), 14.0);
    EXPECT_THROW(expected_ssd(0, 0), ConfigError);
}

TEST(ClosedForms, Sad) {
    EXPECT_NEAR(expected_sad(0, 1), 2.0 / std::sqrt(std::numbers::pi), 1e-15);
    // Large shift: |p - q| is essentially p - q.
    EXPECT_NEAR(expected_sad(40, 1), 40.0, 1e-9);
    EXPECT_THROW(expected_sad(1, -1), ConfigError);
}

TEST(ClosedForms, MonteCarloAgreement) {
    for (auto [mu, sigma] : {std::pair{0.0, 1.0}, {3.0, 2.0}, {5.0, 0.5}, {1.0, 1.5}}) {
        PairMoments m = monte_carlo_ssd_sad(mu, sigma, 200000, 7);
        EXPECT_NEAR(m.ssd.mean, expected_ssd(mu, sigma), 4 * m.ssd.std_error + 1e-12);
        EXPECT_NEAR(m.sad.mean, expected_sad(mu, sigma), 4 * m.sad.std_error + 1e-12);
    }
}

TEST(Lemma1, AnalyticProperties) {
    auto p = lemma_mixture_p(), q = lemma_mixture_q();
    EXPECT_DOUBLE_EQ(lemma1_analytic(p, p, 0.3), 0.5);
    EXPECT_LT(lemma1_analytic(p, q, 0.0), 0.01);
    for (double x = -8; x <= 8; x += 0.5) {
        double a = lemma1_analytic(p, q, x), b = lemma1_analytic(q, p, x);
        EXPECT_GT(a, 0.0);
        EXPECT_LT(a, 1.0);
        EXPECT_NEAR(a + b, 1.0, 1e-15);
    }
    EXPECT_LT(lemma1_analytic(Distribution1D::gaussian(0, 1), Distribution1D::gaussian(30, 1), 0.0), 1e-100);
    EXPECT_THROW(lemma1_analytic(Distribution1D::gaussian(0, 0.01), Distribution1D::gaussian(0, 0.01), 100.0),
                 ConfigError);
}

TEST(Lemma1, EmpiricalSymmetricCase) {
    auto d = Distribution1D::gaussian(0, 1);
    Estimate e = lemma1_empirical(d, d, 0.4, 2000, 600, 3);
    EXPECT_NEAR(e.mean, 0.5, 0.07);
}

TEST(Lemma1, EmpiricalSinglePointAlwaysBuddy) {
    Estimate e = lemma1_empirical(lemma_mixture_p(), lemma_mixture_q(), 0.0, 1, 20, 1);
    EXPECT_EQ(e.mean, 1.0);
}

TEST(Lemma1, EmpiricalMatchesBruteForceTrial) {
    // Recomputes each trial's outcome with the definitional oracle.
    auto dp = lemma_mixture_p(), dq = lemma_mixture_q();
    const std::size_t n = 7;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto rng = make_rng(seed, 0);
        std::vector<Point> ps{Point{{0, 0}, {-4.2}}}, qs;
        for (std::size_t i = 1; i < n; ++i) ps.push_back(Point{{0, 0}, {dp.sample(rng)}});
        for (std::size_t i = 0; i < n; ++i) qs.push_back(Point{{0, 0}, {dq.sample(rng)}});
        PointSet P(ps), Q(qs);
        double expect = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (oracle::is_nn_in_q(P, Q, 0, j, Measure::color()) && oracle::is_nn_in_p(P, Q, 0, j, Measure::color()))
                expect = 1.0;
        EXPECT_EQ(lemma1_empirical(dp, dq, -4.2, n, 1, seed).mean, expect) << "seed " << seed;
    }
}

TEST(ChiSquare, IdenticalIsZero) {
    auto p = lemma_mixture_p();
    EXPECT_NEAR(chi_square(p, p), 0.0, 1e-15);
    EXPECT_NEAR(theorem1_limit(p, p), 0.5, 1e-15);
}

TEST(ChiSquare, TwoFormsAgree) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mean(-4, 4), sd(0.5, 2.5), w(0.1, 0.9);
    for (int rep = 0; rep < 10; ++rep) {
        double a = w(rng), b = w(rng);
        auto p = Distribution1D::mixture({{a, mean(rng), sd(rng)}, {1 - a, mean(rng), sd(rng)}});
        auto q = Distribution1D::mixture({{b, mean(rng), sd(rng)}, {1 - b, mean(rng), sd(rng)}});
        EXPECT_NEAR(theorem1_limit(p, q), theorem1_integral(p, q), 1e-6);
    }
}

TEST(ChiSquare, GaussianShiftClosedFormBounds) {
    // Far-apart distributions: chi^2 -> 2, limit -> 0.
    double c = chi_square(Distribution1D::gaussian(-10, 1), Distribution1D::gaussian(10, 1));
    EXPECT_NEAR(c, 2.0, 1e-9);
}

TEST(ChiSquare, NonFiniteIntegrand) {
    auto narrow = Distribution1D::gaussian(0, 0.01);
    EXPECT_THROW(chi_square(narrow, narrow), ConfigError);
    EXPECT_THROW(simpson([](double x) { return x; }, 0, 1, 0), ConfigError);
}

TEST(Simpson, ExactForCubics) {
    EXPECT_NEAR(simpson([](double x) { return x * x * x - 2 * x + 1; }, -1, 2, 0.5), 3.75, 1e-12);
}

TEST(MultiDimensionalBound, ProductOfMarginals) {
    const Distribution1D p0 = Distribution1D::gaussian(0, 1), q0 = Distribution1D::gaussian(0.5, 1);
    const Distribution1D p1 = Distribution1D::gaussian(0, 1), q1 = Distribution1D::gaussian(0, 1.5);
    const std::size_t n = 60, trials = 300;
    std::vector<Distribution1D> dp{p0, p1}, dq{q0, q1};
    Estimate joint = empirical_ebbs_nd(dp, dq, n, trials, 2);
    Estimate e0 = empirical_ebbs(cfg(p0, q0, n, trials, 3));
    Estimate e1 = empirical_ebbs(cfg(p1, q1, n, trials, 4));
    double prod = e0.mean * e1.mean;
    double slack = 3 * (joint.std_error + e0.std_error * e1.mean + e1.std_error * e0.mean);
    EXPECT_GE(joint.mean + slack, prod);
}

TEST(MultiDimensionalBound, Validation) {
    std::vector<Distribution1D> one{Distribution1D()}, two{Distribution1D(), Distribution1D()};
    EXPECT_THROW(empirical_ebbs_nd(one, two, 5, 5, 1), DimensionError);
}

TEST(Summarize, MeanAndStandardError) {
    std::vector<double> v{1, 2, 3, 4};
    Estimate e = summarize(v);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_DOUBLE_EQ(e.std_error, std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0));
    EXPECT_EQ(e.samples, 4u);
}
