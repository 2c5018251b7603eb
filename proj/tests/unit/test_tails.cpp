#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lrdlab/tails.hpp"
#include "oracles.hpp"

using namespace lrdlab;

namespace {

double phi_upper(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

TEST(NormalInterval, MatchesErf) {
    EXPECT_NEAR(normal_interval(-1.0, 1.0), std::erf(1.0 / std::numbers::sqrt2), 1e-15);
    EXPECT_NEAR(normal_interval(8.0, 9.0) / (phi_upper(8.0) - phi_upper(9.0)), 1.0, 1e-12);
    EXPECT_NEAR(normal_interval(-9.0, -8.0), normal_interval(8.0, 9.0), 1e-25);
    EXPECT_EQ(normal_interval(1.0, 1.0), 0.0);
}

TEST(TailProbabilities, SingularPower) {
    const double r = -0.7;
    const auto f = FunctionalSpec::power_abs(r);
    for (double x : {2.0, 1e2, 1e5}) {
        const auto p = tail_probabilities(f, x);
        EXPECT_NEAR(p.p_plus / std::erf(std::pow(x, 1.0 / r) / std::numbers::sqrt2), 1.0, 1e-10);
        EXPECT_EQ(p.p_minus, 0.0);
    }
    const auto s = FunctionalSpec::signed_power(-0.5);
    const auto q = tail_probabilities(s, 10.0);
    EXPECT_NEAR(q.p_plus, q.p_minus, 1e-15);
    EXPECT_NEAR(q.p_plus + q.p_minus, std::erf(0.01 / std::numbers::sqrt2), 1e-14);
}

TEST(TailProbabilities, SecondHermite) {
    const auto f = FunctionalSpec::hermite(2);
    const auto p = tail_probabilities(f, 3.0);
    EXPECT_NEAR(p.p_plus, 2.0 * phi_upper(2.0), 1e-12);
    EXPECT_EQ(p.p_minus, 0.0);
    const auto q = tail_probabilities(f, 0.75);
    EXPECT_NEAR(q.p_minus, std::erf(0.5 / std::numbers::sqrt2), 1e-12);
    EXPECT_THROW(tail_probabilities(f, 0.0), Error);
}

TEST(TruncatedMoments, MatchOracle) {
    const double r = -0.7;
    const auto f = FunctionalSpec::power_abs(r);
    for (double u : {3.0, 1e2, 1e4}) {
        const double lib = truncated_second_moment(f, u);
        EXPECT_NEAR(lib / oracle::power_truncated_second_moment(r, u), 1.0, 1e-8) << u;
    }
    // Odd functional: the truncated first moment vanishes.
    EXPECT_NEAR(truncated_first_moment(FunctionalSpec::signed_power(-0.6), 50.0), 0.0, 1e-12);
}

TEST(TruncatedMoments, KaramataLimit) {
    const double r = -0.7, alpha = -1.0 / r;
    const auto f = FunctionalSpec::power_abs(r);
    const double limit = alpha / (2.0 - alpha);
    EXPECT_NEAR(oracle::karamata_constant(r), limit, 1e-6);
    double prev = 1e9;
    for (double u : {1e2, 1e4, 1e6}) {
        const double ratio = truncated_second_moment(f, u) / (u * u * abs_tail_probability(f, u));
        const double gap = std::abs(ratio - limit);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
    EXPECT_LT(prev / limit, 0.02);
}

TEST(TailModel, AnalyticPowerFamilies) {
    const auto m = fit_tail_model(FunctionalSpec::power_abs(-0.7));
    EXPECT_TRUE(m.analytic);
    EXPECT_NEAR(m.alpha, 1.0 / 0.7, 1e-14);
    EXPECT_EQ(m.beta, 1.0);
    EXPECT_NEAR(m.l2(1e3), std::sqrt(2.0 / std::numbers::pi), 1e-15);
    const double x = 1e6;
    EXPECT_NEAR(m.model_tail(x, true) / tail_probabilities(FunctionalSpec::power_abs(-0.7), x).p_plus, 1.0, 1e-3);
    EXPECT_LE(m.x_min, 1e3);

    const auto s = fit_tail_model(FunctionalSpec::signed_power(-0.8));
    EXPECT_EQ(s.beta, 0.0);
    EXPECT_NEAR(s.alpha, 1.25, 1e-14);

    const auto neg = fit_tail_model(FunctionalSpec::affine(FunctionalSpec::power_abs(-0.7), -2.0, 0.0));
    EXPECT_EQ(neg.beta, -1.0);
    EXPECT_NEAR(neg.l2(1.0), std::sqrt(2.0 / std::numbers::pi) * std::pow(2.0, 1.0 / 0.7), 1e-12);
}

TEST(TailModel, NoPowerTail) {
    for (const auto& f : {FunctionalSpec::power_abs(-0.4), FunctionalSpec::power_abs(2.0), FunctionalSpec::hermite(2)}) {
        try {
            fit_tail_model(f);
            FAIL() << f.canonical();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NoPowerTail) << f.canonical();
        }
    }
}

TEST(Norming, AnalyticAgreesWithOracleAndInversion) {
    const double r = -0.7;
    const auto f = FunctionalSpec::power_abs(r);
    const NormingSequence a(f);
    EXPECT_EQ(a.mode(), NormingMode::Analytic);
    for (std::uint64_t n : {10ULL, 1000ULL, 1000000ULL}) {
        const double nd = static_cast<double>(n);
        EXPECT_NEAR(a(n) / oracle::power_norming(r, nd), 1.0, 1e-12);
        EXPECT_NEAR(detail::numeric_norming(f, nd) / a(n), 1.0, 1e-9);
        EXPECT_NEAR(abs_tail_probability(f, a(n)) * nd, 1.0, 1e-9);
    }
    try {
        a(1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NTooSmall);
    }
}

TEST(Norming, NumericForSignedPower) {
    const auto f = FunctionalSpec::signed_power(-0.6);
    const NormingSequence a(f);
    EXPECT_EQ(a.mode(), NormingMode::NumericInversion);
    for (std::uint64_t n : {100ULL, 100000ULL})
        EXPECT_NEAR(a(n) / oracle::power_norming(-0.6, static_cast<double>(n)), 1.0, 1e-9);
    EXPECT_EQ(a.cached().size(), 2u);
}

TEST(Norming, RegularVariationOfConstants) {
    const double r = -0.7, alpha = 1.0 / 0.7;
    const auto f = FunctionalSpec::power_abs(r);
    const NormingSequence a(f);
    const auto l3 = derive_l3(a.tail());
    for (std::uint64_t n : {1000000ULL, 1000000000ULL}) {
        const double ratio = a(n) / (std::pow(static_cast<double>(n), 1.0 / alpha) * l3(static_cast<double>(n)));
        EXPECT_NEAR(ratio, 1.0, 1e-3);
    }
}
