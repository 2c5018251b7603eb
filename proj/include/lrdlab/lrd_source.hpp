#pragma once

// Long-range dependent Gaussian sequences X_i = sum_j b_j xi_{i-j} with
// b_j ~ j^{H-3/2} L1(j), plus a fractional Gaussian noise generator used as an
// independent cross-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/fft.hpp"
#include "lrdlab/hash.hpp"
#include "lrdlab/quadrature.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/slowly_varying.hpp"

namespace lrdlab {

inline constexpr std::size_t kDefaultTruncation = std::size_t{1} << 18;

inline std::size_t default_truncation(std::size_t n) { return std::max(n, kDefaultTruncation); }

struct LrdConfig {
    double hurst = 0.75;
    SlowlyVarying l1{};
    std::size_t truncation = kDefaultTruncation;

    void validate() const {
        require(std::isfinite(hurst) && hurst > 0.0 && hurst < 1.0, ErrorCode::InvalidHurst,
                "H must lie in (0, 1), got " + format_double(hurst));
        require(truncation >= 2, ErrorCode::TruncationTooShort, "truncation length M must be at least 2");
        l1.validate();
    }

    /// H <= 1/2 is accepted but is not long-range dependent.
    bool short_memory() const { return hurst <= 0.5; }

    std::string canonical() const {
        return "H=" + format_double(hurst) + ";l1=" + l1.family_name() + "," + format_double(l1.c) + "," +
               format_double(l1.p) + ";M=" + std::to_string(truncation);
    }
};

struct CoefficientSeq {
    std::vector<double> b;
    double hurst = 0.0;
    SlowlyVarying l1{};
    /// Factor applied to the raw weights (j+1)^{H-3/2} L1(j+1).
    double scale = 1.0;
    /// Estimate of sum_{j >= M} b_j^2 under the same scaling, ~ C M^{2H-2}.
    double tail_mass_bound = 0.0;

    std::size_t size() const { return b.size(); }

    /// Slowly varying part of the normalized weights: b_j ~ j^{H-3/2} L(j).
    SlowlyVarying effective_l1() const { return l1.scaled(scale); }
};

namespace detail {

inline double raw_weight(double hurst, const SlowlyVarying& l1, double x) {
    return std::pow(x, hurst - 1.5) * l1(x);
}

}  // namespace detail

/// Weights b_j proportional to (j+1)^{H-3/2} L1(j+1), 0 <= j < M, with sum b_j^2 = 1.
inline CoefficientSeq build_coefficients(const LrdConfig& cfg) {
    cfg.validate();
    const std::size_t m = cfg.truncation;
    CoefficientSeq out;
    out.hurst = cfg.hurst;
    out.l1 = cfg.l1;
    out.b.resize(m);
    // Summed smallest-first so the long tail is not swamped by the leading terms.
    long double sum = 0.0L;
    for (std::size_t j = m; j-- > 0;) {
        const double v = detail::raw_weight(cfg.hurst, cfg.l1, static_cast<double>(j + 1));
        out.b[j] = v;
        sum += static_cast<long double>(v) * v;
    }
    out.scale = static_cast<double>(1.0L / std::sqrt(sum));
    for (auto& v : out.b) v *= out.scale;

    const double edge = detail::raw_weight(cfg.hurst, cfg.l1, static_cast<double>(m) + 0.5) * out.scale;
    out.tail_mass_bound = edge * edge * (static_cast<double>(m) + 0.5) / (2.0 - 2.0 * cfg.hurst);
    return out;
}

/// rho(k) = sum_j b_j b_{j+k}, truncated at M.
inline double autocovariance(const CoefficientSeq& coeffs, std::size_t k) {
    require(k < coeffs.size(), ErrorCode::LagOutOfRange,
            "lag " + std::to_string(k) + " is not below M = " + std::to_string(coeffs.size()));
    long double sum = 0.0L;
    for (std::size_t j = coeffs.size() - k; j-- > 0;)
        sum += static_cast<long double>(coeffs.b[j]) * coeffs.b[j + k];
    return static_cast<double>(sum);
}

/// rho(0..max_lag) by FFT correlation. Agrees with autocovariance() to round-off.
inline std::vector<double> autocovariance_sequence(const CoefficientSeq& coeffs, std::size_t max_lag) {
    require(max_lag < coeffs.size(), ErrorCode::LagOutOfRange,
            "lag " + std::to_string(max_lag) + " is not below M = " + std::to_string(coeffs.size()));
    const std::size_t size = fft::good_size(coeffs.size() + max_lag + 1);
    auto spectrum = fft::rfft(coeffs.b, size);
    for (auto& z : spectrum) z = std::norm(z);
    auto full = fft::irfft(spectrum, size);
    full.resize(max_lag + 1);
    return full;
}

/// fGn autocovariance 0.5(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}), written so the
/// second difference does not cancel at large k.
inline double fgn_autocovariance(double hurst, std::size_t k) {
    if (k == 0) return 1.0;
    const double two_h = 2.0 * hurst;
    if (k == 1) return 0.5 * (std::pow(2.0, two_h) - 2.0);
    const double x = 1.0 / static_cast<double>(k);
    const double bracket = std::expm1(two_h * std::log1p(x)) + std::expm1(two_h * std::log1p(-x));
    return 0.5 * std::pow(static_cast<double>(k), two_h) * bracket;
}

/// L1 constant that makes fGn asymptotically match the moving average,
/// c^2 = H(2H-1) / B(H-1/2, 2-2H). Only meaningful for H > 1/2.
inline double fgn_equivalent_l1(double hurst) {
    if (hurst <= 0.5) return std::numeric_limits<double>::quiet_NaN();
    const double beta = std::exp(std::lgamma(hurst - 0.5) + std::lgamma(2.0 - 2.0 * hurst) -
                                 std::lgamma(1.5 - hurst));
    return std::sqrt(hurst * (2.0 * hurst - 1.0) / beta);
}

/// Autocovariance of the untruncated moving average sum_{j>=0} b_j xi_{i-j}.
struct StationaryMaCovariance {
    std::vector<double> acov;  // lags 0..max_lag, acov[0] = 1
    double scale = 1.0;        // b_j = scale * (j+1)^{H-3/2} L1(j+1)
    SlowlyVarying effective_l1{};
};

/// The first `direct_terms` products are summed exactly (FFT correlation); the
/// remainder is the midpoint integral  int_{J+1/2}^inf f(x) f(x+k) dx  with
/// f(x) = x^{H-3/2} L1(x), evaluated by Gauss–Laguerre after x = Y e^{z/(2-2H)}.
inline StationaryMaCovariance stationary_ma_autocovariance(const LrdConfig& cfg, std::size_t max_lag,
                                                           std::size_t direct_terms = std::size_t{1} << 20) {
    cfg.validate();
    const double g = cfg.hurst - 1.5;
    const std::size_t total = direct_terms + max_lag;
    std::vector<double> head(direct_terms), all(total);
    for (std::size_t j = 0; j < total; ++j) {
        const double v = detail::raw_weight(cfg.hurst, cfg.l1, static_cast<double>(j + 1));
        all[j] = v;
        if (j < direct_terms) head[j] = v;
    }
    const std::size_t size = fft::good_size(total + 1);
    auto fa = fft::rfft(head, size);
    const auto fb = fft::rfft(all, size);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
    auto raw = fft::irfft(fa, size);
    raw.resize(max_lag + 1);

    const quad::GaussRule& rule = quad::gauss_laguerre(64);
    const double lambda = 2.0 - 2.0 * cfg.hurst;
    const double y0 = static_cast<double>(direct_terms) + 0.5;
    const double lead = std::pow(y0, 2.0 * g + 1.0) / lambda;
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double tail = 0.0;
        const double kd = static_cast<double>(k);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double x = y0 * std::exp(rule.nodes[i] / lambda);
            tail += rule.weights[i] * std::pow(1.0 + kd / x, g) * cfg.l1(x) * cfg.l1(x + kd);
        }
        raw[k] += lead * tail;
    }

    StationaryMaCovariance out;
    const double r0 = raw[0];
    out.scale = 1.0 / std::sqrt(r0);
    out.effective_l1 = cfg.l1.scaled(out.scale);
    out.acov.resize(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) out.acov[k] = raw[k] / r0;
    out.acov[0] = 1.0;
    return out;
}

/// Exact stationary Gaussian sampler by circulant embedding of lags 0..n
/// (circulant size 2n). Each call yields two independent paths.
class CirculantSampler {
public:
    explicit CirculantSampler(std::span<const double> acov) {
        require(acov.size() >= 2, ErrorCode::InvalidParameter, "circulant embedding needs at least lags 0 and 1");
        n_ = acov.size() - 1;
        const std::size_t m = 2 * n_;
        std::vector<double> row(m);
        for (std::size_t k = 0; k <= n_; ++k) row[k] = acov[k];
        for (std::size_t k = 1; k < n_; ++k) row[m - k] = acov[k];
        const auto eig = fft::rfft(row, m);
        amplitude_.assign(m, 0.0);
        min_eigenvalue_ = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < m; ++k) {
            const double lam = eig[k <= m / 2 ? k : m - k].real();
            min_eigenvalue_ = std::min(min_eigenvalue_, lam);
            amplitude_[k] = std::sqrt(std::max(lam, 0.0) / static_cast<double>(m));
        }
        require(min_eigenvalue_ >= -1e-9, ErrorCode::EmbeddingNotPSD,
                "circulant embedding has eigenvalue " + format_double(min_eigenvalue_));
    }

    std::size_t length() const { return n_; }
    double min_eigenvalue() const { return min_eigenvalue_; }

    void sample_pair(CounterRng& rng, std::span<double> first, std::span<double> second) const {
        const std::size_t m = amplitude_.size();
        std::vector<fft::Complex> w(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double re = rng.normal();
            const double im = rng.normal();
            w[k] = amplitude_[k] * fft::Complex(re, im);
        }
        fft::forward(w);
        for (std::size_t i = 0; i < n_ && i < first.size(); ++i) first[i] = w[i].real();
        for (std::size_t i = 0; i < n_ && i < second.size(); ++i) second[i] = w[i].imag();
    }

private:
    std::size_t n_ = 0;
    std::vector<double> amplitude_;
    double min_eigenvalue_ = 0.0;
};

/// Fast convolution of innovations with truncated weights. Innovation t feeds
/// time t - (M-1), so n + M - 1 innovations give n stationary values.
class TruncatedMaSampler {
public:
    TruncatedMaSampler(const CoefficientSeq& coeffs, std::size_t n) : n_(n), m_(coeffs.size()) {
        require(n >= 1, ErrorCode::InvalidParameter, "sample length must be positive");
        size_ = fft::good_size(n_ + m_ - 1);
        spectrum_.assign(size_, fft::Complex(0.0, 0.0));
        for (std::size_t j = 0; j < m_; ++j) spectrum_[j] = coeffs.b[j];
        fft::forward(spectrum_);
    }

    std::size_t length() const { return n_; }

    void sample(CounterRng& rng, std::span<double> out) const {
        std::vector<double> xi(n_ + m_ - 1);
        for (auto& v : xi) v = rng.normal();
        auto spec = fft::rfft(xi, size_);
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= spectrum_[k];
        const auto y = fft::irfft(spec, size_);
        std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(m_ - 1), std::min(n_, out.size()), out.begin());
    }

    void sample_pair(CounterRng& rng, std::span<double> first, std::span<double> second) const {
        std::vector<fft::Complex> z(size_, fft::Complex(0.0, 0.0));
        for (std::size_t t = 0; t < n_ + m_ - 1; ++t) {
            const double re = rng.normal();
            const double im = rng.normal();
            z[t] = fft::Complex(re, im);
        }
        fft::forward(z);
        for (std::size_t k = 0; k < size_; ++k) z[k] *= spectrum_[k];
        fft::backward(z);
        const double inv = 1.0 / static_cast<double>(size_);
        for (std::size_t i = 0; i < n_; ++i) {
            if (i < first.size()) first[i] = z[i + m_ - 1].real() * inv;
            if (i < second.size()) second[i] = z[i + m_ - 1].imag() * inv;
        }
    }

private:
    std::size_t n_, m_, size_ = 0;
    std::vector<fft::Complex> spectrum_;
};

struct GaussianSample {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    nlohmann::json metadata = nlohmann::json::object();
};

/// Truncated moving-average path of length n; innovations come from stream 0.
inline GaussianSample sample_ma_path(const CoefficientSeq& coeffs, std::size_t n, std::uint64_t seed) {
    TruncatedMaSampler sampler(coeffs, n);
    CounterRng rng(seed, streams::kInnovations);
    GaussianSample out;
    out.values.resize(n);
    sampler.sample(rng, out.values);
    out.seed = seed;
    const LrdConfig cfg{coeffs.hurst, coeffs.l1, coeffs.size()};
    out.config_hash = fnv1a(cfg.canonical() + ";source=truncated_ma;n=" + std::to_string(n));
    out.metadata = {{"source", "truncated_ma"},
                    {"H", coeffs.hurst},
                    {"M", coeffs.size()},
                    {"l1", coeffs.l1},
                    {"b_index_shift", 1},
                    {"tail_mass_bound", coeffs.tail_mass_bound},
                    {"short_memory", coeffs.hurst <= 0.5}};
    return out;
}

/// Exact fractional Gaussian noise of length n (circulant embedding).
inline GaussianSample sample_fgn_circulant(double hurst, std::size_t n, std::uint64_t seed) {
    require(std::isfinite(hurst) && hurst > 0.0 && hurst < 1.0, ErrorCode::InvalidHurst,
            "H must lie in (0, 1), got " + format_double(hurst));
    require(n >= 1, ErrorCode::InvalidParameter, "sample length must be positive");
    const std::size_t lags = std::max<std::size_t>(n, 2);
    std::vector<double> acov(lags + 1);
    for (std::size_t k = 0; k <= lags; ++k) acov[k] = fgn_autocovariance(hurst, k);
    CirculantSampler sampler(acov);
    CounterRng rng(seed, streams::kInnovations);
    std::vector<double> first(lags), second(lags);
    sampler.sample_pair(rng, first, second);
    GaussianSample out;
    out.values.assign(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(n));
    out.seed = seed;
    out.config_hash = fnv1a("H=" + format_double(hurst) + ";source=fgn;n=" + std::to_string(n));
    out.metadata = {{"source", "fgn"}, {"H", hurst}, {"min_eigenvalue", sampler.min_eigenvalue()}};
    return out;
}

enum class SourceKind { TruncatedMa, StationaryMa, Fgn };

inline std::string to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::TruncatedMa: return "truncated_ma";
        case SourceKind::StationaryMa: return "stationary_ma";
        case SourceKind::Fgn: return "fgn";
    }
    return "unknown";
}

inline SourceKind parse_source_kind(const std::string& name) {
    if (name == "truncated_ma") return SourceKind::TruncatedMa;
    if (name == "stationary_ma") return SourceKind::StationaryMa;
    if (name == "fgn") return SourceKind::Fgn;
    fail(ErrorCode::ConfigError, "unknown source '" + name + "' (expected truncated_ma, stationary_ma or fgn)");
}

/// A prepared Gaussian generator for repeated sampling of length-n paths.
/// Immutable after construction; sample_pair may be called from any thread.
class GaussianSource {
public:
    GaussianSource(const LrdConfig& cfg, SourceKind kind, std::size_t n) : cfg_(cfg), kind_(kind), n_(n) {
        cfg.validate();
        require(n >= 2, ErrorCode::InvalidParameter, "sample length must be at least 2");
        switch (kind) {
            case SourceKind::TruncatedMa: {
                const auto coeffs = build_coefficients(cfg);
                acov_ = autocovariance_sequence(coeffs, std::min(n, coeffs.size() - 1));
                acov_.resize(n + 1, 0.0);
                effective_l1_ = coeffs.effective_l1();
                tail_mass_bound_ = coeffs.tail_mass_bound;
                impl_ = std::make_shared<const TruncatedMaSampler>(coeffs, n);
                break;
            }
            case SourceKind::StationaryMa: {
                auto cov = stationary_ma_autocovariance(cfg, n);
                acov_ = std::move(cov.acov);
                effective_l1_ = cov.effective_l1;
                auto sampler = std::make_shared<const CirculantSampler>(acov_);
                min_eigenvalue_ = sampler->min_eigenvalue();
                impl_ = sampler;
                break;
            }
            case SourceKind::Fgn: {
                acov_.resize(n + 1);
                for (std::size_t k = 0; k <= n; ++k) acov_[k] = fgn_autocovariance(cfg.hurst, k);
                effective_l1_ = SlowlyVarying::constant(cfg.hurst > 0.5 ? fgn_equivalent_l1(cfg.hurst) : 1.0);
                auto sampler = std::make_shared<const CirculantSampler>(acov_);
                min_eigenvalue_ = sampler->min_eigenvalue();
                impl_ = sampler;
                break;
            }
        }
    }

    SourceKind kind() const { return kind_; }
    std::size_t length() const { return n_; }
    const LrdConfig& config() const { return cfg_; }
    const SlowlyVarying& effective_l1() const { return effective_l1_; }
    /// Autocovariance at lags 0..n.
    const std::vector<double>& autocovariance() const { return acov_; }
    double min_eigenvalue() const { return min_eigenvalue_; }

    std::uint64_t config_hash() const {
        return fnv1a(cfg_.canonical() + ";source=" + to_string(kind_) + ";n=" + std::to_string(n_));
    }

    /// Two independent paths from (seed, stream).
    void sample_pair(std::uint64_t seed, std::uint64_t stream, std::span<double> first,
                     std::span<double> second) const {
        CounterRng rng(seed, stream);
        std::visit([&](const auto& s) { s->sample_pair(rng, first, second); }, impl_);
    }

    GaussianSample sample(std::uint64_t seed) const {
        GaussianSample out;
        out.values.resize(n_);
        std::vector<double> discard(n_);
        sample_pair(seed, streams::kInnovations, out.values, discard);
        out.seed = seed;
        out.config_hash = config_hash();
        out.metadata = {{"source", to_string(kind_)},
                        {"H", cfg_.hurst},
                        {"M", cfg_.truncation},
                        {"l1", cfg_.l1},
                        {"effective_l1", effective_l1_},
                        {"b_index_shift", 1},
                        {"short_memory", cfg_.short_memory()}};
        if (kind_ == SourceKind::TruncatedMa) out.metadata["tail_mass_bound"] = tail_mass_bound_;
        if (kind_ != SourceKind::TruncatedMa) out.metadata["min_eigenvalue"] = min_eigenvalue_;
        return out;
    }

private:
    LrdConfig cfg_;
    SourceKind kind_;
    std::size_t n_;
    std::vector<double> acov_;
    SlowlyVarying effective_l1_{};
    double tail_mass_bound_ = 0.0;
    double min_eigenvalue_ = std::numeric_limits<double>::quiet_NaN();
    std::variant<std::shared_ptr<const TruncatedMaSampler>, std::shared_ptr<const CirculantSampler>> impl_;
};

// Serialization. CSV: '#' header lines with H, M, seed and hash, then a
// "value" column. Binary: a 32-byte header {magic "LRDS", u32 version,
// u64 json length, u64 count, u64 reserved}, the JSON metadata, then the
// values as little-endian IEEE doubles.

inline void write_csv(const GaussianSample& s, std::ostream& os) {
    os << "# H=" << format_double(s.metadata.value("H", std::numeric_limits<double>::quiet_NaN()))
       << " M=" << s.metadata.value("M", std::size_t{0}) << " seed=" << s.seed
       << " config_hash=" << hex64(s.config_hash) << '\n';
    os << "# " << s.metadata.dump() << '\n';
    os << "value\n";
    for (double v : s.values) os << format_double(v) << '\n';
}

namespace detail {

inline constexpr char kSampleMagic[4] = {'L', 'R', 'D', 'S'};

template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    is.read(reinterpret_cast<char*>(bytes), sizeof(T));
    require(static_cast<bool>(is), ErrorCode::IoError, "truncated binary sample header");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void write_binary(const GaussianSample& s, std::ostream& os) {
    nlohmann::json header = s.metadata;
    header["seed"] = s.seed;
    header["config_hash"] = hex64(s.config_hash);
    const std::string text = header.dump();
    os.write(detail::kSampleMagic, 4);
    detail::put_le<std::uint32_t>(os, 1);
    detail::put_le<std::uint64_t>(os, text.size());
    detail::put_le<std::uint64_t>(os, s.values.size());
    detail::put_le<std::uint64_t>(os, 0);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (double v : s.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        detail::put_le(os, bits);
    }
}

inline GaussianSample read_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    require(is && std::equal(magic, magic + 4, detail::kSampleMagic), ErrorCode::IoError, "not an LRDS sample file");
    const auto version = detail::get_le<std::uint32_t>(is);
    require(version == 1, ErrorCode::IoError, "unsupported sample version " + std::to_string(version));
    const auto json_len = detail::get_le<std::uint64_t>(is);
    const auto count = detail::get_le<std::uint64_t>(is);
    (void)detail::get_le<std::uint64_t>(is);
    std::string text(json_len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(json_len));
    require(static_cast<bool>(is), ErrorCode::IoError, "truncated sample metadata");
    GaussianSample s;
    s.metadata = nlohmann::json::parse(text);
    s.seed = s.metadata.at("seed").get<std::uint64_t>();
    s.config_hash = std::stoull(s.metadata.at("config_hash").get<std::string>(), nullptr, 16);
    s.metadata.erase("seed");
    s.metadata.erase("config_hash");
    s.values.resize(count);
    for (auto& v : s.values) {
        const auto bits = detail::get_le<std::uint64_t>(is);
        std::memcpy(&v, &bits, sizeof v);
    }
    return s;
}

}  // namespace lrdlab
