#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "lrdlab/fft.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/stats.hpp"

using namespace lrdlab;

TEST(CounterRng, SameKeyAndStreamReproduce) {
    CounterRng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(CounterRng, StreamsDiffer) {
    CounterRng a(42, 7), b(42, 8), c(43, 7);
    int same_b = 0, same_c = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        same_b += x == b();
        same_c += x == c();
    }
    EXPECT_EQ(same_b, 0);
    EXPECT_EQ(same_c, 0);
}

TEST(CounterRng, UniformIsOpenInterval) {
    CounterRng rng(1, 0);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    constexpr int kDraws = 200000;
    for (int i = 0; i < kDraws; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_NEAR(sum / kDraws, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / kDraws));
}

TEST(CounterRng, NormalMoments) {
    CounterRng rng(9, 3);
    std::vector<double> x(400000);
    for (auto& v : x) v = rng.normal();
    const double se = 1.0 / std::sqrt(static_cast<double>(x.size()));
    EXPECT_NEAR(stats::mean(x), 0.0, 4.0 * se);
    EXPECT_NEAR(stats::variance(x), 1.0, 4.0 * std::sqrt(2.0) * se);
    EXPECT_GT(stats::anderson_darling_normal(std::span<const double>(x.data(), 5000)).p_value, 0.01);
}

TEST(Fft, RealRoundTrip) {
    std::vector<double> x(37);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i)) + 0.1 * static_cast<double>(i);
    const std::size_t n = fft::good_size(2 * x.size());
    const auto spec = fft::rfft(x, n);
    const auto back = fft::irfft(spec, n);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
    for (std::size_t i = x.size(); i < n; ++i) EXPECT_NEAR(back[i], 0.0, 1e-12);
}

TEST(Fft, MatchesDirectDft) {
    const std::vector<double> x{1.0, -2.0, 0.5, 3.0, 0.25, -1.0};
    const auto spec = fft::rfft(x, x.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        std::complex<double> direct = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            direct += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(x.size()));
        EXPECT_NEAR(spec[k].real(), direct.real(), 1e-12);
        EXPECT_NEAR(spec[k].imag(), direct.imag(), 1e-12);
    }
}

TEST(Fft, GoodSizeIsSmooth) {
    for (std::size_t n : {1u, 7u, 97u, 1000u, 4097u}) {
        std::size_t m = fft::good_size(n);
        EXPECT_GE(m, n);
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (m % p == 0) m /= p;
        EXPECT_EQ(m, 1u);
    }
}
