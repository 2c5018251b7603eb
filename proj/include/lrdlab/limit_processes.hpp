#pragma once

// Samplers for the limit objects: stable laws and stable Levy motion in the
// S_alpha(sigma, beta, mu) parameterization, and Hermite processes of order
// 1 and 2 as discretized multiple Wiener–Ito integrals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrdlab/error.hpp"
#include "lrdlab/hash.hpp"
#include "lrdlab/quadrature.hpp"
#include "lrdlab/regimes.hpp"
#include "lrdlab/rng.hpp"

namespace lrdlab {

/// E exp(i theta X) for X ~ S_alpha(sigma, beta, mu).
inline std::complex<double> stable_cf(const StableParams& p, double theta) {
    if (theta == 0.0) return {1.0, 0.0};
    const double a = std::abs(theta);
    const double sgn = theta > 0.0 ? 1.0 : -1.0;
    double re, im;
    if (std::abs(p.alpha - 1.0) > 0.0) {
        const double scale = std::pow(p.sigma * a, p.alpha);
        re = -scale;
        im = scale * p.beta * sgn * std::tan(std::numbers::pi * p.alpha / 2.0) + p.mu * theta;
    } else {
        re = -p.sigma * a;
        im = -p.sigma * a * p.beta * sgn * (2.0 / std::numbers::pi) * std::log(a) + p.mu * theta;
    }
    return std::exp(std::complex<double>(re, im));
}

/// One Chambers–Mallows–Stuck draw from S_alpha(sigma, beta, mu).
inline double stable_draw(const StableParams& p, CounterRng& rng) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    const double v = rng.uniform(-half_pi, half_pi);
    const double w = rng.exponential();
    if (p.alpha != 1.0) {
        const double t = p.beta * std::tan(half_pi * p.alpha);
        const double b = std::atan(t) / p.alpha;
        const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * p.alpha));
        const double x = s * std::sin(p.alpha * (v + b)) / std::pow(std::cos(v), 1.0 / p.alpha) *
                         std::pow(std::cos(v - p.alpha * (v + b)) / w, (1.0 - p.alpha) / p.alpha);
        return p.sigma * x + p.mu;
    }
    const double shifted = half_pi + p.beta * v;
    const double x = (shifted * std::tan(v) - p.beta * std::log(half_pi * w * std::cos(v) / shifted)) / half_pi;
    return p.sigma * x + p.beta * p.sigma * std::log(p.sigma) / half_pi + p.mu;
}

inline std::vector<double> stable_sample(const StableParams& p, std::size_t m, std::uint64_t seed,
                                         std::uint64_t stream = streams::kReferenceBase) {
    p.validate();
    require(m >= 1, ErrorCode::InvalidParameter, "need at least one draw");
    CounterRng rng(seed, stream);
    std::vector<double> out(m);
    for (auto& x : out) x = stable_draw(p, rng);
    return out;
}

struct ProcessPath {
    std::vector<double> times;
    std::vector<double> values;
    nlohmann::json metadata = nlohmann::json::object();
};

inline void write_csv(const ProcessPath& path, std::ostream& os) {
    os << "# " << path.metadata.dump() << '\n';
    os << "t,value\n";
    for (std::size_t i = 0; i < path.times.size(); ++i)
        os << format_double(path.times[i]) << ',' << format_double(path.values[i]) << '\n';
}

namespace detail {

inline void require_grid(std::span<const double> grid) {
    require(!grid.empty(), ErrorCode::InvalidParameter, "time grid is empty");
    require(grid[0] >= 0.0, ErrorCode::InvalidParameter, "time grid must start at t >= 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        require(grid[i] > grid[i - 1], ErrorCode::InvalidParameter, "time grid must be strictly increasing");
}

}  // namespace detail

/// Stable Levy motion on `grid`, X(0) = 0. Increments over dt are
/// S_alpha(sigma dt^{1/alpha}, beta, mu dt); at alpha = 1 the draw of
/// S_1(sigma, beta, 0) is scaled by dt and shifted by (2/pi) beta sigma dt ln dt.
inline ProcessPath stable_levy_path(const StableParams& p, std::span<const double> grid, std::uint64_t seed,
                                    std::uint64_t stream = streams::kReferenceBase) {
    p.validate();
    detail::require_grid(grid);
    CounterRng rng(seed, stream);
    const StableParams unit{p.alpha, p.sigma, p.beta, 0.0};
    ProcessPath path;
    path.times.assign(grid.begin(), grid.end());
    path.values.resize(grid.size());
    double level = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double dt = grid[i] - prev;
        if (dt > 0.0) {
            const double x = stable_draw(unit, rng);
            if (p.alpha != 1.0)
                level += std::pow(dt, 1.0 / p.alpha) * x + p.mu * dt;
            else
                level += dt * x + (2.0 / std::numbers::pi) * p.beta * p.sigma * dt * std::log(dt) + p.mu * dt;
        }
        path.values[i] = level;
        prev = grid[i];
    }
    path.metadata = {{"process", "stable_levy_motion"},
                     {"stable", p},
                     {"self_similarity", 1.0 / p.alpha},
                     {"seed", seed},
                     {"stream", stream}};
    return path;
}

/// Var R_{1,H}(t) = B t^{2H} / (H(2H-1)) and Var R_{2,H}(t) = 4 B^2 t^{4H-2} / ((4H-3)(4H-2)),
/// B = Beta(H - 1/2, 2 - 2H), for the kernel  int_0^t prod (s - x_i)_+^{H-3/2} ds.
inline double hermite_process_variance(int kappa, double hurst, double t) {
    const double beta = std::exp(std::lgamma(hurst - 0.5) + std::lgamma(2.0 - 2.0 * hurst) - std::lgamma(1.5 - hurst));
    if (kappa == 1) return beta * std::pow(t, 2.0 * hurst) / (hurst * (2.0 * hurst - 1.0));
    require(kappa == 2, ErrorCode::InvalidParameter, "only kappa in {1, 2} is supported");
    require(hurst > 0.75, ErrorCode::InvalidParameter, "the second-order Hermite process needs H > 3/4");
    return 4.0 * beta * beta * std::pow(t, 4.0 * hurst - 2.0) / ((4.0 * hurst - 3.0) * (4.0 * hurst - 2.0));
}

struct HermiteDiscretization {
    /// Left end of the spatial grid is -extent; 0 selects it from the tail-mass target.
    double extent = 0.0;
    int fine_cells = 512;    // uniform cells on [0, T]
    int coarse_cells = 512;  // geometric cells on [-extent, 0]
    std::vector<double> times{0.25, 0.5, 0.75, 1.0};
    bool diagonal_exclusion = true;
    /// Largest acceptable relative variance deficit at the final time.
    double epsilon = 0.02;
    /// Target for the neglected kernel mass beyond -extent, relative to the total.
    double tail_mass_target = 1e-4;
    int panel_nodes = 8;
};

/// Discretized Hermite process of order 1 or 2. Space is cut into cells; each
/// Brownian increment over a cell is sqrt(|cell|) xi_a. For order 2,
/// R(t) = xi' W(t) xi - tr W(t), which removes the diagonal (Wick product)
/// exactly; W_ab(t) = sqrt(|a||b|) int_0^t phi_a(s) phi_b(s) ds with phi_a the
/// cell average of (s - x)_+^{H-3/2}.
class HermiteProcessSampler {
public:
    HermiteProcessSampler(int kappa, double hurst, HermiteDiscretization disc)
        : kappa_(kappa), hurst_(hurst), disc_(std::move(disc)) {
        require(kappa == 1 || kappa == 2, ErrorCode::InvalidParameter, "only kappa in {1, 2} is supported");
        require(hurst > 0.5 && hurst < 1.0, ErrorCode::InvalidHurst, "Hermite processes need H in (1/2, 1)");
        require(kappa == 1 || hurst > 0.75, ErrorCode::InvalidHurst, "kappa = 2 needs H > 3/4");
        detail::require_grid(disc_.times);
        require(disc_.times.front() > 0.0, ErrorCode::InvalidParameter, "Hermite time grid must be positive");
        require(disc_.fine_cells >= 4 && disc_.coarse_cells >= 4, ErrorCode::InvalidParameter, "too few cells");
        build_grid();
        if (kappa_ == 1)
            build_order_one();
        else
            build_order_two();
        const double exact = hermite_process_variance(kappa_, hurst_, disc_.times.back());
        variance_ratio_ = discrete_variance(disc_.times.size() - 1) / exact;
        bias_ = std::abs(1.0 - variance_ratio_);
        require(bias_ <= disc_.epsilon, ErrorCode::GridTooCoarse,
                "discretization variance deficit " + format_double(bias_) + " exceeds epsilon " +
                    format_double(disc_.epsilon));
    }

    int kappa() const { return kappa_; }
    double hurst() const { return hurst_; }
    double self_similarity() const { return 1.0 - kappa_ * (1.0 - hurst_); }
    const HermiteDiscretization& discretization() const { return disc_; }
    std::size_t cells() const { return widths_.size(); }
    double extent() const { return extent_; }
    double tail_mass() const { return tail_mass_; }
    /// Discrete over exact variance at the last time.
    double variance_ratio() const { return variance_ratio_; }
    double bias_estimate() const { return bias_; }

    /// Variance of the discretized R(t_j).
    double discrete_variance(std::size_t j) const {
        if (kappa_ == 1) return weights_[j].squaredNorm();
        return 2.0 * kernels_[j].squaredNorm();
    }

    /// Mean of the discretized R(t_j): zero with exclusion, tr W otherwise.
    double discrete_mean(std::size_t j) const {
        if (kappa_ == 1 || disc_.diagonal_exclusion) return 0.0;
        return kernels_[j].trace();
    }

    /// Paths for replicas first_stream .. first_stream+count-1; row i holds
    /// R(t_0..t_m) of replica i. Rows do not depend on `count` or batching:
    /// every product runs on a full kBatch-column block (zero padded), so each
    /// column goes through the same kernel.
    Eigen::MatrixXd sample_paths(std::uint64_t seed, std::uint64_t first_stream, std::size_t count) const {
        const auto g = static_cast<Eigen::Index>(cells());
        const auto m = static_cast<Eigen::Index>(disc_.times.size());
        Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m);
        constexpr std::size_t kBatch = 256;
        for (std::size_t start = 0; start < count; start += kBatch) {
            const auto b = static_cast<Eigen::Index>(std::min(kBatch, count - start));
            Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(g, static_cast<Eigen::Index>(kBatch));
            for (Eigen::Index c = 0; c < b; ++c) {
                CounterRng rng(seed, first_stream + start + static_cast<std::size_t>(c));
                for (Eigen::Index a = 0; a < g; ++a) xi(a, c) = rng.normal();
            }
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (kappa_ == 1) {
                    const Eigen::RowVectorXd wx = weights_[ju].transpose() * xi;
                    out.block(static_cast<Eigen::Index>(start), j, b, 1) = wx.head(b).transpose();
                } else {
                    const Eigen::MatrixXd wx = kernels_[ju] * xi;
                    const double shift = disc_.diagonal_exclusion ? kernels_[ju].trace() : 0.0;
                    for (Eigen::Index c = 0; c < b; ++c)
                        out(static_cast<Eigen::Index>(start) + c, j) = xi.col(c).dot(wx.col(c)) - shift;
                }
            }
        }
        return out;
    }

    /// Draws of R(t_j) alone, via the spectral form sum_i lambda_i (eta_i^2 - 1).
    std::vector<double> sample_marginal(std::size_t j, std::size_t count, std::uint64_t seed,
                                        std::uint64_t stream) const {
        require(j < disc_.times.size(), ErrorCode::InvalidParameter, "time index out of range");
        CounterRng rng(seed, stream);
        std::vector<double> out(count);
        if (kappa_ == 1) {
            const double sd = weights_[j].norm();
            for (auto& v : out) v = sd * rng.normal();
            return out;
        }
        const Eigen::VectorXd& lam = spectrum(j);
        const double shift = disc_.diagonal_exclusion ? lam.sum() : 0.0;
        for (auto& v : out) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < lam.size(); ++i) {
                const double z = rng.normal();
                acc += lam(i) * z * z;
            }
            v = acc - shift;
        }
        return out;
    }

    nlohmann::json metadata() const {
        return {{"process", kappa_ == 1 ? "hermite_order_1" : "hermite_order_2"},
                {"kappa", kappa_},
                {"H", hurst_},
                {"H_ss", self_similarity()},
                {"index_base_H", "R_{" + std::to_string(kappa_) + "," + format_short(hurst_) + "}"},
                {"index_self_similarity", "R_{" + std::to_string(kappa_) + "," + format_short(self_similarity()) + "}"},
                {"extent", extent_},
                {"fine_cells", disc_.fine_cells},
                {"coarse_cells", disc_.coarse_cells},
                {"diagonal_exclusion", disc_.diagonal_exclusion},
                {"tail_mass", tail_mass_},
                {"variance_ratio", variance_ratio_},
                {"bias_estimate", bias_}};
    }

private:
    void build_grid() {
        const double horizon = disc_.times.back();
        const double h = horizon / disc_.fine_cells;
        const double exact1 = hermite_process_variance(1, hurst_, horizon);
        // Beyond -A the order-one kernel is ~ T (-x)^{H-3/2}, so the missing
        // mass is T^2 A^{2H-2} / (2-2H).
        extent_ = disc_.extent;
        if (extent_ <= 0.0) {
            const double target = disc_.tail_mass_target * exact1 * (2.0 - 2.0 * hurst_) / (horizon * horizon);
            extent_ = std::clamp(std::pow(target, 1.0 / (2.0 * hurst_ - 2.0)), 1e6, 1e30);
        }
        require(extent_ > 2.0 * h, ErrorCode::InvalidParameter, "spatial extent is smaller than the fine grid");
        tail_mass_ = horizon * horizon * std::pow(extent_, 2.0 * hurst_ - 2.0) / (2.0 - 2.0 * hurst_) / exact1;

        edges_.clear();
        const int gg = disc_.coarse_cells;
        const double ratio = std::log(extent_ / h) / (gg - 1);
        for (int i = gg - 1; i >= 0; --i) edges_.push_back(-h * std::exp(ratio * i));
        for (int i = 0; i <= disc_.fine_cells; ++i) edges_.push_back(horizon * i / disc_.fine_cells);
        widths_.resize(edges_.size() - 1);
        for (std::size_t a = 0; a + 1 < edges_.size(); ++a) widths_[a] = edges_[a + 1] - edges_[a];
    }

    // G(x) = (t-x)_+^{p+1} - (-x)_+^{p+1}, p = H - 1/2, without cancellation for x << 0.
    double order_one_antiderivative(double t, double x) const {
        const double q = hurst_ + 0.5;
        if (x >= t) return 0.0;
        if (x >= 0.0) return std::pow(t - x, q);
        const double y = -x;
        return std::pow(y, q) * std::expm1(q * std::log1p(t / y));
    }

    void build_order_one() {
        const double p = hurst_ - 0.5;
        const auto g = static_cast<Eigen::Index>(widths_.size());
        weights_.clear();
        for (double t : disc_.times) {
            Eigen::VectorXd w(g);
            for (Eigen::Index a = 0; a < g; ++a) {
                const auto au = static_cast<std::size_t>(a);
                const double integral =
                    (order_one_antiderivative(t, edges_[au]) - order_one_antiderivative(t, edges_[au + 1])) /
                    (p * (p + 1.0));
                w(a) = integral / std::sqrt(widths_[au]);
            }
            weights_.push_back(std::move(w));
        }
    }

    void build_order_two() {
        const double p = hurst_ - 0.5;
        const auto g = static_cast<Eigen::Index>(widths_.size());
        // Quadrature panels in s: every fine edge and every requested time.
        std::vector<double> breaks{0.0};
        for (double e : edges_)
            if (e > 0.0) breaks.push_back(e);
        for (double t : disc_.times) breaks.push_back(t);
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end(),
                                 [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); }),
                     breaks.end());
        const auto& rule = quad::gauss_legendre(static_cast<std::size_t>(disc_.panel_nodes));

        kernels_.assign(disc_.times.size(), Eigen::MatrixXd::Zero(g, g));
        Eigen::MatrixXd running = Eigen::MatrixXd::Zero(g, g);
        std::size_t next_time = 0;
        std::size_t panel = 0;
        const Eigen::VectorXd sqrt_w = Eigen::Map<const Eigen::VectorXd>(widths_.data(), g).cwiseSqrt();
        while (next_time < disc_.times.size()) {
            // Collect the panels up to the next requested time.
            std::vector<double> nodes, weights;
            while (panel + 1 < breaks.size() && breaks[panel + 1] <= disc_.times[next_time] * (1.0 + 1e-14)) {
                const double lo = breaks[panel], hi = breaks[panel + 1];
                for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                    nodes.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[i]);
                    weights.push_back(0.5 * (hi - lo) * rule.weights[i]);
                }
                ++panel;
            }
            const auto s = static_cast<Eigen::Index>(nodes.size());
            Eigen::MatrixXd phi(g, s);
            for (Eigen::Index c = 0; c < s; ++c) {
                const double sc = nodes[static_cast<std::size_t>(c)];
                const double sw = std::sqrt(weights[static_cast<std::size_t>(c)]);
                for (Eigen::Index a = 0; a < g; ++a) {
                    const auto au = static_cast<std::size_t>(a);
                    const double xl = edges_[au], xr = edges_[au + 1];
                    double v = 0.0;
                    if (sc > xl) {
                        if (xr <= 0.0 && sc < -xl * 1e-3) {
                            // Far cell: difference of nearly equal powers.
                            const double y = sc - xr;
                            v = std::pow(y, p) * std::expm1(p * std::log1p(widths_[au] / y));
                        } else {
                            v = std::pow(sc - xl, p) - (sc > xr ? std::pow(sc - xr, p) : 0.0);
                        }
                    }
                    // phi_a(s) sqrt(|a|) = v / (p sqrt(|a|)), times sqrt(quadrature weight).
                    phi(a, c) = v / (p * sqrt_w(a)) * sw;
                }
            }
            running.noalias() += phi * phi.transpose();
            kernels_[next_time] = running;
            ++next_time;
        }
        spectra_.resize(kernels_.size());
    }

    const Eigen::VectorXd& spectrum(std::size_t j) const {
        std::lock_guard lock(spectrum_mutex_);
        if (spectra_[j].size() == 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernels_[j], Eigen::EigenvaluesOnly);
            spectra_[j] = solver.eigenvalues();
        }
        return spectra_[j];
    }

    int kappa_;
    double hurst_;
    HermiteDiscretization disc_;
    std::vector<double> edges_, widths_;
    double extent_ = 0.0, tail_mass_ = 0.0, variance_ratio_ = 0.0, bias_ = 0.0;
    std::vector<Eigen::VectorXd> weights_;   // order 1: R(t_j) = w_j . xi
    std::vector<Eigen::MatrixXd> kernels_;   // order 2: W(t_j)
    mutable std::vector<Eigen::VectorXd> spectra_;
    mutable std::mutex spectrum_mutex_;
};

/// One path of R_{kappa,H} on disc.times (with R(0) = 0 prepended).
inline ProcessPath hermite_process_sample(int kappa, double hurst, const HermiteDiscretization& disc,
                                          std::uint64_t seed, std::uint64_t stream = streams::kReferenceBase) {
    const HermiteProcessSampler sampler(kappa, hurst, disc);
    const Eigen::MatrixXd row = sampler.sample_paths(seed, stream, 1);
    ProcessPath path;
    path.times.push_back(0.0);
    path.values.push_back(0.0);
    for (std::size_t j = 0; j < disc.times.size(); ++j) {
        path.times.push_back(disc.times[j]);
        path.values.push_back(row(0, static_cast<Eigen::Index>(j)));
    }
    path.metadata = sampler.metadata();
    path.metadata["seed"] = seed;
    path.metadata["stream"] = stream;
    return path;
}

}  // namespace lrdlab
