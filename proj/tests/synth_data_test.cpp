#include "momentpoly/synth_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_helpers.hpp"

using namespace momentpoly;

TEST(Sample, RejectsZeroCount) {
    EXPECT_THROW(sample(fig1_spec(), 0, 1), InputError);
}

TEST(Sample, DeterministicPerSeed) {
    const auto a = sample(fig1_spec(), 200, 42);
    const auto b = sample(fig1_spec(), 200, 42);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].features, b[i].features);
        EXPECT_EQ(a[i].label, b[i].label);
    }
    const auto c = sample(fig1_spec(), 200, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].features != c[i].features;
    EXPECT_TRUE(any_diff);
}

TEST(Sample, ExactPerClassCounts) {
    const auto ev = sample(sec3_spec(), 350, 7);
    std::size_t ns = 0, nb = 0;
    for (const auto& e : ev) (e.label > 0 ? ns : nb)++;
    EXPECT_EQ(ns, 350u);
    EXPECT_EQ(nb, 350u);
}

TEST(Sample, UnitGaussianMeanWithinFiveSigma) {
    MixtureSpec spec;
    spec.dimension = 1;
    spec.signal.gaussians.push_back({{0.0}, {1.0}, {}, 1.0});
    spec.background.gaussians.push_back({{0.0}, {1.0}, {}, 1.0});
    const std::size_t n = 1000000;
    const auto ev = sample(spec, n, 99);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += ev[i].features[0];
    mean /= static_cast<double>(n);
    EXPECT_LT(std::fabs(mean), 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Sample, FullCovarianceGaussianHasRequestedCorrelation) {
    MixtureSpec spec;
    spec.dimension = 2;
    GaussianComponent g;
    g.mean = {1.0, -1.0};
    g.cov = {1.0, 0.6, 0.6, 1.0};
    spec.signal.gaussians.push_back(g);
    spec.background.uniforms.push_back({{-4, -4}, {4, 4}, 1.0});
    const std::size_t n = 200000;
    const auto ev = sample(spec, n, 5);
    double sxy = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ev[i].features[0] - 1.0, y = ev[i].features[1] + 1.0;
        sxy += x * y;
        sx += x * x;
        sy += y * y;
    }
    EXPECT_NEAR(sxy / std::sqrt(sx * sy), 0.6, 0.01);
}

TEST(Sample, InvalidSpecsThrow) {
    MixtureSpec empty;
    empty.dimension = 1;
    EXPECT_THROW(sample(empty, 10, 1), SpecError);

    MixtureSpec bad_cov;
    bad_cov.dimension = 2;
    GaussianComponent g;
    g.mean = {0, 0};
    g.cov = {1.0, 2.0, 2.0, 1.0};  // not positive definite
    bad_cov.signal.gaussians.push_back(g);
    bad_cov.background.uniforms.push_back({{0, 0}, {1, 1}, 1.0});
    EXPECT_THROW(sample(bad_cov, 10, 1), SpecError);

    MixtureSpec bad_box;
    bad_box.dimension = 1;
    bad_box.signal.gaussians.push_back({{0.0}, {1.0}, {}, 1.0});
    bad_box.background.uniforms.push_back({{1.0}, {1.0}, 1.0});
    EXPECT_THROW(sample(bad_box, 10, 1), SpecError);
}

TEST(OptimalResponse, SymmetricPointIsZero) {
    MixtureSpec spec;
    spec.dimension = 1;
    spec.signal.gaussians.push_back({{1.0}, {1.0}, {}, 1.0});
    spec.background.gaussians.push_back({{-1.0}, {1.0}, {}, 1.0});
    EXPECT_NEAR(optimal_response(spec, std::vector<double>{0.0}), 0.0, 1e-15);
}

TEST(OptimalResponse, BoundedEverywhereEvaluable) {
    const auto spec = fig1_spec();
    for (double x = -6; x <= 6; x += 0.05) {
        const double f = optimal_response(spec, std::vector<double>{x});
        EXPECT_GE(f, -1.0);
        EXPECT_LE(f, 1.0);
    }
}

TEST(OptimalResponse, DeepInsideSignalPeakApproachesOne) {
    // background mass sits 8 sigma from the signal peak
    MixtureSpec spec;
    spec.dimension = 1;
    spec.signal.gaussians.push_back({{0.0}, {1.0}, {}, 1.0});
    spec.background.gaussians.push_back({{8.0}, {1.0}, {}, 1.0});
    EXPECT_GE(optimal_response(spec, std::vector<double>{0.0}), 0.999);
    // fig1's own peak is only ~2.9 background sigmas from the side lobes
    EXPECT_NEAR(optimal_response(fig1_spec(), std::vector<double>{0.0}), 0.976, 0.01);
}

TEST(OptimalResponse, UndefinedWhereBothDensitiesVanish) {
    MixtureSpec spec;
    spec.dimension = 1;
    spec.signal.uniforms.push_back({{0.0}, {1.0}, 1.0});
    spec.background.uniforms.push_back({{0.0}, {1.0}, 1.0});
    EXPECT_THROW(optimal_response(spec, std::vector<double>{5.0}), UndefinedPointError);
}

TEST(OptimalResponse, BatchMatchesPointwise) {
    const auto spec = fig1_spec();
    const auto ev = sample(spec, 100, 3);
    const auto batch = optimal_responses(spec, ev);
    for (std::size_t i = 0; i < ev.size(); ++i)
        EXPECT_DOUBLE_EQ(batch[i], optimal_response(spec, ev[i].features));
}

TEST(Histogram, MatchesAnalyticDensityByChiSquare) {
    // 1e5 events per class from fig1; chi^2 against exact bin probabilities
    const auto spec = fig1_spec();
    const std::size_t n = 100000;
    const auto ev = sample(spec, n, 11);

    auto normal_cdf = [](double x, double m, double s) {
        return 0.5 * std::erfc(-(x - m) / (s * std::sqrt(2.0)));
    };
    // signal class: N(0, 0.5^2)
    const int nbins = 40;
    const double lo = -2.0, hi = 2.0;
    std::vector<double> counts(static_cast<std::size_t>(nbins) + 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ev[i].features[0];  // first n are signal
        int b;
        if (x < lo)
            b = 0;
        else if (x >= hi)
            b = nbins + 1;
        else
            b = 1 + static_cast<int>((x - lo) / (hi - lo) * nbins);
        counts[static_cast<std::size_t>(b)] += 1;
    }
    double chi2 = 0;
    int dof = 0;
    for (int b = 0; b <= nbins + 1; ++b) {
        double p;
        if (b == 0)
            p = normal_cdf(lo, 0.0, 0.5);
        else if (b == nbins + 1)
            p = 1.0 - normal_cdf(hi, 0.0, 0.5);
        else {
            const double e0 = lo + (b - 1) * (hi - lo) / nbins;
            const double e1 = lo + b * (hi - lo) / nbins;
            p = normal_cdf(e1, 0.0, 0.5) - normal_cdf(e0, 0.0, 0.5);
        }
        const double expect = p * static_cast<double>(n);
        if (expect < 5) continue;  // pool ultra-thin tails out of the statistic
        chi2 += (counts[static_cast<std::size_t>(b)] - expect) *
                (counts[static_cast<std::size_t>(b)] - expect) / expect;
        ++dof;
    }
    const double pvalue = testutil::chi2_pvalue(chi2, dof - 1);
    EXPECT_GT(pvalue, 0.001) << "chi2=" << chi2 << " dof=" << dof - 1;
}

TEST(Spec, Sec3HasTwelveSeparatedAnisotropicPeaks) {
    const auto spec = sec3_spec();
    ASSERT_EQ(spec.signal.gaussians.size(), 12u);
    ASSERT_EQ(spec.background.uniforms.size(), 1u);
    for (const auto& g : spec.signal.gaussians) {
        for (double s : g.sigma) {
            EXPECT_GE(s, 0.02);
            EXPECT_LE(s, 0.06);
        }
        EXPECT_FALSE(g.sigma[0] == g.sigma[1] && g.sigma[1] == g.sigma[2]);
    }
    // pairwise separation: means differ by >= 5 sigma in some axis
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = i + 1; j < 12; ++j) {
            const auto& a = spec.signal.gaussians[i];
            const auto& b = spec.signal.gaussians[j];
            double best = 0;
            for (int k = 0; k < 3; ++k) {
                const double gap = std::fabs(a.mean[static_cast<std::size_t>(k)] -
                                             b.mean[static_cast<std::size_t>(k)]);
                const double s = std::max(a.sigma[static_cast<std::size_t>(k)],
                                          b.sigma[static_cast<std::size_t>(k)]);
                best = std::max(best, gap / s);
            }
            EXPECT_GE(best, 5.0) << "peaks " << i << "," << j;
        }
}

TEST(Spec, JsonRoundTrip) {
    const auto spec = sec3_spec();
    const nlohmann::json j = spec;
    const auto back = j.get<MixtureSpec>();
    EXPECT_EQ(back.dimension, 3);
    ASSERT_EQ(back.signal.gaussians.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(back.signal.gaussians[i].mean, spec.signal.gaussians[i].mean);
        EXPECT_EQ(back.signal.gaussians[i].sigma, spec.signal.gaussians[i].sigma);
    }
    EXPECT_THROW(nlohmann::json::parse("{\"dimension\": 1}").get<MixtureSpec>(), SpecError);
}

TEST(Spec, BuiltinLookup) {
    EXPECT_EQ(builtin_spec("fig1").dimension, 1);
    EXPECT_EQ(builtin_spec("sec3").dimension, 3);
    EXPECT_THROW(builtin_spec("fig9"), SpecError);
}
