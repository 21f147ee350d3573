#include "momentpoly/moment_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace momentpoly;

namespace {

std::vector<Event> random_events(int d, std::size_t n, std::uint64_t seed,
                                 bool random_weights = false) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> uw(0.1, 2.0);
    std::vector<Event> out(n);
    for (auto& e : out) {
        e.features.resize(static_cast<std::size_t>(d));
        for (auto& f : e.features) f = u(rng);
        e.weight = random_weights ? uw(rng) : 1.0;
        e.label = u(rng) > 0 ? 1.0 : -1.0;
    }
    return out;
}

}  // namespace

TEST(Accumulate, SingleEventPowersOfTwo) {
    std::vector<Event> ev{{{2.0}, 1.0, 1.0}};
    const auto acc = accumulate(ev, 1, 3);
    EXPECT_DOUBLE_EQ(acc.sum(0), 1.0);
    EXPECT_DOUBLE_EQ(acc.sum(1), 2.0);
    EXPECT_DOUBLE_EQ(acc.sum(2), 4.0);
    EXPECT_DOUBLE_EQ(acc.sum(3), 8.0);
}

TEST(Accumulate, TwoUnitVectorsOrderOne) {
    std::vector<Event> ev{{{1.0, 0.0}, 1.0, 1.0}, {{0.0, 1.0}, -1.0, 1.0}};
    const auto acc = accumulate(ev, 2, 1);
    EXPECT_DOUBLE_EQ(acc.total_weight(), 2.0);
    EXPECT_DOUBLE_EQ(acc.sum(1), 1.0);  // <x1> sum
    EXPECT_DOUBLE_EQ(acc.sum(2), 1.0);  // <x2> sum
}

TEST(Accumulate, DimensionMismatchThrows) {
    std::vector<Event> ev{{{1.0, 2.0}, 1.0, 1.0}};
    EXPECT_THROW(accumulate(ev, 3, 2), InputError);
}

TEST(Accumulate, NegativeWeightThrows) {
    std::vector<Event> ev{{{1.0}, 1.0, -0.5}};
    EXPECT_THROW(accumulate(ev, 1, 2), InputError);
}

TEST(Accumulate, NonFiniteEventsAreRejectedAndCounted) {
    std::vector<Event> ev{{{1.0}, 1.0, 1.0},
                          {{std::nan("")}, 1.0, 1.0},
                          {{std::numeric_limits<double>::infinity()}, 1.0, 1.0},
                          {{2.0}, 1.0, 1.0}};
    const auto acc = accumulate(ev, 1, 1);
    EXPECT_EQ(acc.rejected(), 2u);
    EXPECT_DOUBLE_EQ(acc.total_weight(), 2.0);
    EXPECT_DOUBLE_EQ(acc.sum(1), 3.0);
}

TEST(Merge, EmptyIsIdentity) {
    auto events = random_events(2, 50, 11);
    auto a = accumulate(events, 2, 4);
    MomentAccumulator empty(2, 4);
    auto merged = a;
    merged.merge(empty);
    for (std::size_t p = 0; p < a.component_count(); ++p)
        EXPECT_DOUBLE_EQ(merged.sum(p), a.sum(p));
}

TEST(Merge, CommutesComponentwise) {
    auto ev = random_events(2, 100, 12, true);
    std::span<const Event> all(ev);
    auto a = accumulate(all.subspan(0, 60), 2, 4);
    auto b = accumulate(all.subspan(60), 2, 4);
    auto ab = a;
    ab.merge(b);
    auto ba = b;
    ba.merge(a);
    for (std::size_t p = 0; p < ab.component_count(); ++p)
        EXPECT_NEAR(ab.sum(p), ba.sum(p), 1e-13 * std::max(1.0, std::fabs(ab.sum(p))));
}

TEST(Merge, ShapeMismatchThrows) {
    MomentAccumulator a(2, 4), b(2, 3), c(3, 4);
    EXPECT_THROW(a.merge(b), InputError);
    EXPECT_THROW(a.merge(c), InputError);
}

TEST(Merge, SelfMergeDoubles) {
    auto ev = random_events(1, 20, 21);
    auto a = accumulate(ev, 1, 3);
    const auto before = a;
    a.merge(a);
    for (std::size_t p = 0; p < a.component_count(); ++p)
        EXPECT_NEAR(a.sum(p), 2.0 * before.sum(p), 1e-13 * std::max(1.0, std::fabs(a.sum(p))));
}

TEST(Merge, FourWaySplitMatchesSinglePass) {
    // acceptance-style oracle: sharded accumulation equals one pass
    auto ev = random_events(3, 100, 13, true);
    const auto single = accumulate(ev, 3, 5);
    std::span<const Event> all(ev);
    MomentAccumulator merged(3, 5);
    for (int s = 0; s < 4; ++s) {
        auto shard = accumulate(all.subspan(static_cast<std::size_t>(s) * 25, 25), 3, 5);
        merged.merge(shard);
    }
    for (std::size_t p = 0; p < single.component_count(); ++p)
        EXPECT_NEAR(merged.sum(p), single.sum(p),
                    1e-12 * std::max(1.0, std::fabs(single.sum(p))));
}

TEST(Normalize, DividesByTotalWeight) {
    std::vector<Event> ev{{{1.0}, 1.0, 1.0}, {{0.0}, 1.0, 1.0}};
    const auto ms = normalize(accumulate(ev, 1, 2));
    EXPECT_DOUBLE_EQ(ms.value(0), 1.0);
    EXPECT_DOUBLE_EQ(ms.value(1), 0.5);
}

TEST(Normalize, OrderZeroIsExactlyOne) {
    auto ev = random_events(2, 777, 14, true);
    const auto ms = normalize(accumulate(ev, 2, 6));
    EXPECT_EQ(ms.value(0), 1.0);
}

TEST(Normalize, EmptySampleThrows) {
    MomentAccumulator acc(1, 2);
    EXPECT_THROW(normalize(acc), EmptySampleError);
    std::vector<Event> zero_w{{{1.0}, 1.0, 0.0}};
    EXPECT_THROW(normalize(accumulate(zero_w, 1, 2)), EmptySampleError);
}

TEST(Normalize, PointMassMomentsArePowers) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int d = 1; d <= 3; ++d) {
        std::vector<double> c(static_cast<std::size_t>(d));
        for (auto& v : c) v = u(rng);
        std::vector<Event> ev{{c, 1.0, 3.5}};
        const auto ms = normalize(accumulate(ev, d, 6));
        const auto& basis = ms.basis();
        for (std::size_t p = 0; p < basis.size(); ++p) {
            double expect = 1;
            const auto e = basis.exponents(p);
            for (int i = 0; i < d; ++i)
                expect *= std::pow(c[static_cast<std::size_t>(i)], e[static_cast<std::size_t>(i)]);
            EXPECT_NEAR(ms.value(p), expect, 1e-12 * std::max(1.0, std::fabs(expect)));
        }
    }
}

TEST(CombineBinary, GAndHComponents) {
    std::vector<Event> s{{{0.2}, 1.0, 1.0}};
    std::vector<Event> b{{{-0.2}, -1.0, 1.0}};
    const auto cm = combine_binary(normalize(accumulate(s, 1, 2)),
                                   normalize(accumulate(b, 1, 2)), 1);
    EXPECT_DOUBLE_EQ(cm.g[0], 2.0);
    EXPECT_DOUBLE_EQ(cm.h[0], 0.0);
    EXPECT_NEAR(cm.g[1], 0.0, 1e-15);
    EXPECT_NEAR(cm.h[1], 0.4, 1e-15);
}

TEST(CombineBinary, IdenticalClassesGiveZeroH) {
    auto ev = random_events(2, 64, 16);
    const auto ms = normalize(accumulate(ev, 2, 4));
    const auto cm = combine_binary(ms, ms, 2);
    for (double v : cm.h) EXPECT_DOUBLE_EQ(v, 0.0);
    EXPECT_DOUBLE_EQ(cm.g[0], 2.0);
}

TEST(CombineBinary, PriorWeightsRescaleClasses) {
    std::vector<Event> s{{{0.5}, 1.0, 1.0}};
    std::vector<Event> b{{{-0.5}, -1.0, 1.0}};
    const auto cm = combine_binary(normalize(accumulate(s, 1, 2)),
                                   normalize(accumulate(b, 1, 2)), 1, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(cm.g[0], 3.0);  // 2*1 + 1*1
    EXPECT_DOUBLE_EQ(cm.h[0], 1.0);  // 2*1 - 1*1
    EXPECT_DOUBLE_EQ(cm.g[1], 0.5);  // 2*0.5 - 1*0.5
    EXPECT_DOUBLE_EQ(cm.h[1], 1.5);  // 2*0.5 + 1*0.5
}

TEST(CombineBinary, InsufficientOrderThrows) {
    auto ev = random_events(1, 10, 17);
    const auto ms = normalize(accumulate(ev, 1, 3));
    EXPECT_THROW(combine_binary(ms, ms, 2), OrderError);  // needs order 4
    EXPECT_NO_THROW(combine_binary(ms, ms, 1));
}

TEST(CombineRegression, UnitTargetMatchesPlainMoments) {
    auto ev = random_events(2, 200, 18);
    for (auto& e : ev) e.label = 1.0;
    auto [plain, target] = accumulate_regression(ev, 2, 2);
    const auto cm = combine_regression(plain, target, 2);
    for (std::size_t p = 0; p < cm.h.size(); ++p) EXPECT_NEAR(cm.h[p], cm.g[p], 1e-12);
}

TEST(CombineRegression, PlusMinusOneTargetsMatchBinaryUpToFactorTwo) {
    auto ev = random_events(2, 300, 19);
    // equal class weights: first half signal, second half background
    for (std::size_t i = 0; i < ev.size(); ++i) ev[i].label = i < 150 ? 1.0 : -1.0;
    std::span<const Event> all(ev);
    auto [plain, target] = accumulate_regression(ev, 2, 2);
    const auto reg = combine_regression(plain, target, 2);
    const auto bin = combine_binary(normalize(accumulate(all.subspan(0, 150), 2, 4)),
                                    normalize(accumulate(all.subspan(150), 2, 4)), 2);
    for (std::size_t p = 0; p < reg.g.size(); ++p)
        EXPECT_NEAR(2.0 * reg.g[p], bin.g[p], 1e-12 * std::max(1.0, std::fabs(bin.g[p])));
    for (std::size_t p = 0; p < reg.h.size(); ++p)
        EXPECT_NEAR(2.0 * reg.h[p], bin.h[p], 1e-12 * std::max(1.0, std::fabs(bin.h[p])));
}

TEST(CombineRegression, NonFiniteTargetRejectsEvent) {
    std::vector<Event> ev{{{1.0}, 1.0, 1.0}, {{1.0}, std::nan(""), 1.0}};
    auto [plain, target] = accumulate_regression(ev, 1, 1);
    EXPECT_EQ(plain.rejected(), 1u);
    EXPECT_DOUBLE_EQ(plain.total_weight(), 1.0);
}

TEST(MergeProperty, AssociativityUpToRelativeTolerance) {
    auto ev = random_events(2, 120, 20, true);
    std::span<const Event> all(ev);
    auto a = accumulate(all.subspan(0, 40), 2, 5);
    auto b = accumulate(all.subspan(40, 40), 2, 5);
    auto c = accumulate(all.subspan(80), 2, 5);
    auto ab_c = a;
    ab_c.merge(b);
    ab_c.merge(c);
    auto bc = b;
    bc.merge(c);
    auto a_bc = a;
    a_bc.merge(bc);
    for (std::size_t p = 0; p < ab_c.component_count(); ++p)
        EXPECT_NEAR(ab_c.sum(p), a_bc.sum(p), 1e-12 * std::max(1.0, std::fabs(ab_c.sum(p))));
}
