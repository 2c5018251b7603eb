#pragma once

// Self-contained SVG plots. Plotted data is repeated in an XML comment so a
// figure can be audited without the CSV next to it.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lrdlab/hash.hpp"
#include "lrdlab/regimes.hpp"
#include "lrdlab/stats.hpp"

namespace lrdlab::svg {

inline constexpr double kWidth = 640, kHeight = 420, kMargin = 50;

struct Frame {
    double x_lo, x_hi, y_lo, y_hi;
    double px(double x) const { return kMargin + (x - x_lo) / (x_hi - x_lo) * (kWidth - 2 * kMargin); }
    double py(double y) const { return kHeight - kMargin - (y - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin); }
};

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '-':
                // "--" is not allowed inside comments.
                out += (!out.empty() && out.back() == '-') ? " -" : "-";
                break;
            default: out += c;
        }
    }
    return out;
}

inline std::string open(const std::string& title, const std::string& provenance, const std::optional<std::string>& timestamp) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
       << "<!-- " << escape(provenance) << " -->\n";
    if (timestamp) os << "<!-- generated " << escape(*timestamp) << " -->\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
       << escape(title) << "</text>\n";
    return os.str();
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    std::ostringstream os;
    os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
       << kWidth - 2 * kMargin << "\" height=\"" << kHeight - 2 * kMargin << "\"/></g>\n"
       << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = f.x_lo + (f.x_hi - f.x_lo) * i / 4.0;
        const double y = f.y_lo + (f.y_hi - f.y_lo) * i / 4.0;
        os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << kHeight - kMargin + 15 << "\" text-anchor=\"middle\">"
           << num(x) << "</text>\n"
           << "<text x=\"" << kMargin - 5 << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
           << "</text>\n";
    }
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << escape(xlabel)
       << "</text>\n"
       << "<text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 " << kHeight / 2
       << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n</g>\n";
    return os.str();
}

/// Density histograms of two samples on common bins between the 1% and 99%
/// pooled quantiles.
inline std::string histogram_overlay(std::span<const double> a, std::span<const double> b, const std::string& label_a,
                                     const std::string& label_b, const std::string& title, const std::string& provenance,
                                     const std::optional<std::string>& timestamp = std::nullopt, std::size_t bins = 40) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const double lo = stats::quantile_sorted(pooled, 0.01), hi = stats::quantile_sorted(pooled, 0.99);
    const double width = (hi - lo) / static_cast<double>(bins);
    auto density = [&](std::span<const double> x) {
        std::vector<double> d(bins, 0.0);
        for (double v : x) {
            if (v < lo || v >= hi) continue;
            d[std::min(bins - 1, static_cast<std::size_t>((v - lo) / width))] += 1.0;
        }
        for (auto& v : d) v /= static_cast<double>(x.size()) * width;
        return d;
    };
    const auto da = density(a), db = density(b);
    const double top = std::max(*std::max_element(da.begin(), da.end()), *std::max_element(db.begin(), db.end()));
    const Frame f{lo, hi, 0.0, top > 0 ? top * 1.1 : 1.0};
    std::ostringstream os;
    os << open(title, provenance, timestamp) << axes(f, "value", "density");
    os << "<!-- bins lo=" << num(lo) << " width=" << num(width) << "\n";
    for (std::size_t i = 0; i < bins; ++i) os << num(da[i]) << ' ' << num(db[i]) << '\n';
    os << " -->\n";
    auto bars = [&](const std::vector<double>& d, const char* color) {
        for (std::size_t i = 0; i < bins; ++i) {
            const double x0 = f.px(lo + width * static_cast<double>(i)), x1 = f.px(lo + width * static_cast<double>(i + 1));
            os << "<rect x=\"" << num(x0) << "\" y=\"" << num(f.py(d[i])) << "\" width=\"" << num(x1 - x0)
               << "\" height=\"" << num(f.py(0) - f.py(d[i])) << "\" fill=\"" << color << "\" fill-opacity=\"0.45\"/>\n";
        }
    };
    bars(da, "steelblue");
    bars(db, "darkorange");
    os << "<g font-family=\"sans-serif\" font-size=\"12\"><text x=\"" << kWidth - kMargin - 5 << "\" y=\"" << kMargin + 15
       << "\" text-anchor=\"end\" fill=\"steelblue\">" << escape(label_a) << "</text><text x=\"" << kWidth - kMargin - 5
       << "\" y=\"" << kMargin + 30 << "\" text-anchor=\"end\" fill=\"darkorange\">" << escape(label_b)
       << "</text></g>\n</svg>\n";
    return os.str();
}

/// Points (log x, log y) with the least-squares line.
inline std::string loglog_plot(std::span<const double> x, std::span<const double> y, const std::string& title,
                               const std::string& provenance, const std::optional<std::string>& timestamp = std::nullopt) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const auto fit = stats::ols(lx, ly);
    auto [xmin, xmax] = std::minmax_element(lx.begin(), lx.end());
    auto [ymin, ymax] = std::minmax_element(ly.begin(), ly.end());
    const double padx = 0.1 * (*xmax - *xmin + 1e-9), pady = 0.1 * (*ymax - *ymin + 1e-9);
    const Frame f{*xmin - padx, *xmax + padx, *ymin - pady, *ymax + pady};
    std::ostringstream os;
    os << open(title, provenance, timestamp) << axes(f, "log t", "log spread");
    os << "<!-- slope=" << num(fit.slope) << " intercept=" << num(fit.intercept) << "\n";
    for (std::size_t i = 0; i < lx.size(); ++i) os << num(x[i]) << ' ' << num(y[i]) << '\n';
    os << " -->\n";
    os << "<line x1=\"" << num(f.px(f.x_lo)) << "\" y1=\"" << num(f.py(fit.intercept + fit.slope * f.x_lo)) << "\" x2=\""
       << num(f.px(f.x_hi)) << "\" y2=\"" << num(f.py(fit.intercept + fit.slope * f.x_hi))
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t i = 0; i < lx.size(); ++i)
        os << "<circle cx=\"" << num(f.px(lx[i])) << "\" cy=\"" << num(f.py(ly[i])) << "\" r=\"4\" fill=\"steelblue\"/>\n";
    os << "<text x=\"" << kMargin + 8 << "\" y=\"" << kMargin + 16
       << "\" font-family=\"sans-serif\" font-size=\"12\">slope " << num(fit.slope) << "</text>\n</svg>\n";
    return os.str();
}

/// Regime of the rank-kappa trichotomy over (H, alpha) in (1/2, 1) x (1, 2).
inline std::string regime_map(int kappa, const std::string& provenance,
                              const std::optional<std::string>& timestamp = std::nullopt, int cells = 60) {
    const Frame f{0.5, 1.0, 1.0, 2.0};
    std::ostringstream os;
    os << open("regime map, kappa = " + std::to_string(kappa), provenance, timestamp) << axes(f, "H", "alpha");
    const double dh = 0.5 / cells, da = 1.0 / cells;
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j) {
            const double h = 0.5 + dh * (i + 0.5), a = 1.0 + da * (j + 0.5);
            const int sign = boundary_sign(kappa, h, a);
            const char* color = sign > 0 ? "#4c72b0" : (sign < 0 ? "#dd8452" : "#55a868");
            os << "<rect x=\"" << num(f.px(0.5 + dh * i)) << "\" y=\"" << num(f.py(1.0 + da * (j + 1))) << "\" width=\""
               << num(f.px(dh) - f.px(0)) << "\" height=\"" << num(f.py(0) - f.py(da)) << "\" fill=\"" << color
               << "\"/>\n";
        }
    // Boundary 1 - kappa(1 - H) = 1/alpha.
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (int i = 0; i <= 200; ++i) {
        const double h = 0.5 + 0.5 * i / 200.0;
        const double e = 1.0 - kappa * (1.0 - h);
        if (e <= 0.5 || e >= 1.0) continue;
        os << num(f.px(h)) << ',' << num(f.py(1.0 / e)) << ' ';
    }
    os << "\"/>\n<g font-family=\"sans-serif\" font-size=\"12\"><text x=\"" << kMargin + 8 << "\" y=\"" << kMargin + 16
       << "\" fill=\"white\">stable</text><text x=\"" << kWidth - kMargin - 8 << "\" y=\"" << kHeight - kMargin - 8
       << "\" text-anchor=\"end\" fill=\"white\">Hermite</text></g>\n</svg>\n";
    return os.str();
}

}  // namespace lrdlab::svg
