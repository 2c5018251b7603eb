#pragma once

// Thin FFTW3 wrapper. Plans are created once per (size, kind) with
// FFTW_ESTIMATE, which keeps plan choice (and therefore every result)
// deterministic across runs. Plan creation is serialized; execution through
// the new-array interface is thread safe.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace lrdlab::fft {

using Complex = std::complex<double>;

namespace detail {

enum class PlanKind { Forward, Backward, RealToComplex, ComplexToReal };

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, PlanKind kind) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, kind);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        const int size = static_cast<int>(n);
        fftw_plan plan = nullptr;
        switch (kind) {
            case PlanKind::Forward:
            case PlanKind::Backward: {
                auto* buf = fftw_alloc_complex(n);
                plan = fftw_plan_dft_1d(size, buf, buf,
                                        kind == PlanKind::Forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
                fftw_free(buf);
                break;
            }
            case PlanKind::RealToComplex: {
                auto* in = fftw_alloc_real(n);
                auto* out = fftw_alloc_complex(n / 2 + 1);
                plan = fftw_plan_dft_r2c_1d(size, in, out, flags);
                fftw_free(in);
                fftw_free(out);
                break;
            }
            case PlanKind::ComplexToReal: {
                auto* in = fftw_alloc_complex(n / 2 + 1);
                auto* out = fftw_alloc_real(n);
                plan = fftw_plan_dft_c2r_1d(size, in, out, flags);
                fftw_free(in);
                fftw_free(out);
                break;
            }
        }
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<std::size_t, PlanKind>, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Smallest 2^a 3^b 5^c that is >= n.
inline std::size_t good_size(std::size_t n) {
    if (n <= 1) return 1;
    std::size_t best = 1;
    while (best < n) best <<= 1;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5)
        for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
            std::size_t v = p35;
            while (v < n) v <<= 1;
            if (v < best) best = v;
        }
    return best;
}

/// In-place unnormalized forward transform (sign -1).
inline void forward(std::span<Complex> data) {
    auto plan = detail::PlanCache::instance().get(data.size(), detail::PlanKind::Forward);
    fftw_execute_dft(plan, detail::as_fftw(data.data()), detail::as_fftw(data.data()));
}

/// In-place unnormalized backward transform (sign +1).
inline void backward(std::span<Complex> data) {
    auto plan = detail::PlanCache::instance().get(data.size(), detail::PlanKind::Backward);
    fftw_execute_dft(plan, detail::as_fftw(data.data()), detail::as_fftw(data.data()));
}

/// Real-to-complex transform of `input` zero padded to length n.
inline std::vector<Complex> rfft(std::span<const double> input, std::size_t n) {
    std::vector<double> padded(n, 0.0);
    for (std::size_t i = 0; i < input.size() && i < n; ++i) padded[i] = input[i];
    std::vector<Complex> out(n / 2 + 1);
    auto plan = detail::PlanCache::instance().get(n, detail::PlanKind::RealToComplex);
    fftw_execute_dft_r2c(plan, padded.data(), detail::as_fftw(out.data()));
    return out;
}

/// Inverse of rfft, normalized by 1/n.
inline std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n) {
    std::vector<Complex> in(spectrum.begin(), spectrum.end());
    in.resize(n / 2 + 1);
    std::vector<double> out(n);
    auto plan = detail::PlanCache::instance().get(n, detail::PlanKind::ComplexToReal);
    fftw_execute_dft_c2r(plan, detail::as_fftw(in.data()), out.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= scale;
    return out;
}

}  // namespace lrdlab::fft
