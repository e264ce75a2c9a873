#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace bbs;

TEST(Ssd, IdenticalIsZero) {
    FeatureGrid g = oracle::random_grid(4, 5, 3, 1);
    EXPECT_EQ(score_ssd(g, g), 0.0);
    EXPECT_EQ(score_sad(g, g), 0.0);
}

TEST(Ssd, ZerosVersusOnes) {
    FeatureGrid a(2, 2, 1, 0.0f), b(2, 2, 1, 1.0f);
    EXPECT_EQ(score_ssd(a, b), 4.0);
    EXPECT_EQ(score_sad(a, b), 4.0);
}

TEST(Ssd, MatchesScalarLoop) {
    FeatureGrid a = oracle::random_grid(6, 7, 3, 2), b = oracle::random_grid(6, 7, 3, 3);
    double ssd = 0.0, sad = 0.0;
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 7; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double d = static_cast<double>(a.at(r, c, ch)) - static_cast<double>(b.at(r, c, ch));
                ssd += d * d;
                sad += std::abs(d);
            }
    EXPECT_NEAR(score_ssd(a, b), ssd, 1e-12);
    EXPECT_NEAR(score_sad(a, b), sad, 1e-12);
}

TEST(Ssd, DimensionMismatch) {
    EXPECT_THROW(score_ssd(FeatureGrid(2, 2, 1), FeatureGrid(2, 3, 1)), DimensionError);
    EXPECT_THROW(score_sad(FeatureGrid(2, 2, 1), FeatureGrid(2, 2, 2)), DimensionError);
    EXPECT_THROW(score_ncc(FeatureGrid(2, 2, 1), FeatureGrid(3, 2, 1)), DimensionError);
}

TEST(Ncc, SelfIsOne) {
    FeatureGrid g = oracle::random_grid(5, 5, 3, 4);
    EXPECT_NEAR(score_ncc(g, g), 1.0, 1e-12);
}

TEST(Ncc, AntiCorrelated) {
    FeatureGrid t = oracle::random_grid(5, 5, 2, 5), w = t;
    for (auto& v : w.data()) v = 2.0f - v;
    EXPECT_NEAR(score_ncc(t, w), -1.0, 1e-6);
}

TEST(Ncc, MatchesOracle) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        FeatureGrid a = oracle::random_grid(4, 6, 3, s), b = oracle::random_grid(4, 6, 3, s + 100);
        EXPECT_NEAR(score_ncc(a, b), oracle::ncc(a, b), 1e-9);
    }
}

TEST(Ncc, ConstantChannelContributesZero) {
    FeatureGrid t = oracle::random_grid(3, 3, 2, 6), w = t;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) w.at(r, c, 1) = 0.5f;
    EXPECT_NEAR(score_ncc(t, w), 0.5, 1e-12);
}

TEST(Hm, IdenticalIsZero) {
    FeatureGrid g = oracle::random_grid(6, 6, 3, 7);
    EXPECT_EQ(score_hm_chi2(g, g), 0.0);
}

TEST(Hm, DisjointSupportIsTwo) {
    EXPECT_DOUBLE_EQ(score_hm_chi2(FeatureGrid(2, 2, 3, 0.0f), FeatureGrid(2, 2, 3, 1.0f)), 2.0);
}

TEST(Hm, HandBuiltTwoBinHistograms) {
    EXPECT_NEAR(chi2_distance({0.5, 0.5}, {0.25, 0.75}), 0.0625 / 0.75 + 0.0625 / 1.25, 1e-15);
}

TEST(Hm, SymmetricAndBounded) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        FeatureGrid a = oracle::random_grid(5, 5, 3, s), b = oracle::random_grid(5, 5, 3, s + 50);
        double ab = score_hm_chi2(a, b, 4), ba = score_hm_chi2(b, a, 4);
        EXPECT_DOUBLE_EQ(ab, ba);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 2.0 + 1e-12);
    }
}

TEST(Hm, HistogramSumsToOne) {
    auto h = joint_histogram(oracle::random_grid(7, 3, 3, 9), 8);
    EXPECT_EQ(h.size(), 512u);
    double total = 0.0;
    for (double v : h) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Hm, Errors) {
    EXPECT_THROW(score_hm_chi2(FeatureGrid(2, 2, 2), FeatureGrid(2, 2, 2)), DimensionError);
    EXPECT_THROW(joint_histogram(FeatureGrid(2, 2, 3), 1), ConfigError);
}

TEST(Bds, IdenticalDistinctPointsIsZero) {
    std::mt19937_64 rng(1);
    PointSet p = oracle::random_points(6, 3, rng);
    EXPECT_EQ(score_bds(p, p, Measure::color()), 0.0);
}

TEST(Bds, HandExample) {
    PointSet p({Point{{0.5, 0.5}, {0.0}}}), q({Point{{0.5, 0.5}, {1.0}}});
    EXPECT_DOUBLE_EQ(score_bds(p, q, Measure::color()), 2.0);
}

TEST(Bds, MatchesDoubleLoop) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        std::mt19937_64 rng(s);
        PointSet p = oracle::random_points(5 + s % 4, 3, rng), q = oracle::random_points(4 + s % 5, 3, rng);
        for (const Measure& m : {Measure::color(), Measure::similarity()})
            EXPECT_EQ(score_bds(p, q, m), oracle::bds(p, q, m));
    }
}

TEST(Bds, SharesTheBbsDistanceMatrix) {
    std::mt19937_64 rng(2);
    PointSet p = oracle::random_points(6, 2, rng), q = oracle::random_points(6, 2, rng);
    DistanceMatrix d = distance_matrix(p, q, Measure::color());
    EXPECT_EQ(score_bds(d), score_bds(p, q, Measure::color()));
    EXPECT_EQ(bbs_score(d), bbs_score(p, q, Measure::color()));
}

TEST(Baselines, NonNegativeDissimilarities) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        FeatureGrid a = oracle::random_grid(4, 4, 3, s), b = oracle::random_grid(4, 4, 3, s + 9);
        EXPECT_GE(score_ssd(a, b), 0.0);
        EXPECT_GE(score_sad(a, b), 0.0);
        EXPECT_GE(score_hm_chi2(a, b), 0.0);
        EXPECT_GE(score_bds(build_point_set(a, 2), build_point_set(b, 2), Measure::color()), 0.0);
    }
}
