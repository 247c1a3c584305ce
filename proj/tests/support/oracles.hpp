#pragma once

// Reference implementations used only by tests. Each one is written from the
// textbook definition with no code shared with the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Quadrature and root finding

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

/// Adaptive Simpson quadrature of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

/// Root of a decreasing function g on [lo, hi] by bisection.
inline double bisect_decreasing(const std::function<double(double)>& g, double lo, double hi) {
    for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::fabs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Student t and normal quantiles

inline double t_pdf(double x, double df) {
    const double log_c = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                         0.5 * std::log(df * std::numbers::pi);
    return std::exp(log_c - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

/// P(T > q) for q >= 0: one half minus the integral of the density over [0, q].
/// The interval is cut into unit pieces so the adaptive rule sees the peak.
inline double t_upper_tail(double q, double df) {
    double mass = 0.0;
    double a = 0.0;
    while (a < q) {
        const double b = std::min(q, a + 1.0);
        mass += integrate([df](double x) { return t_pdf(x, df); }, a, b);
        a = b;
    }
    return 0.5 - mass;
}

inline double t_quantile(double alpha_half, double df) {
    double hi = 1.0;
    while (t_upper_tail(hi, df) > alpha_half) {
        hi *= 2.0;
    }
    return bisect_decreasing([&](double q) { return t_upper_tail(q, df) - alpha_half; }, 0.0, hi);
}

inline double normal_quantile(double alpha_half) {
    return bisect_decreasing(
        [&](double q) { return 0.5 * std::erfc(q / std::numbers::sqrt2) - alpha_half; }, 0.0, 40.0);
}

// ---------------------------------------------------------------------------
// Energy

/// Midpoint Riemann sum with `substeps` sub-intervals per segment, power
/// linearly interpolated between samples. Compensated summation.
inline double riemann_energy(const std::vector<std::pair<double, double>>& samples,
                             int substeps = 10000) {
    double sum = 0.0;
    double carry = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto [t0, p0] = samples[i];
        const auto [t1, p1] = samples[i + 1];
        const double h = (t1 - t0) / substeps;
        for (int k = 0; k < substeps; ++k) {
            const double u = (k + 0.5) / substeps;
            const double term = (p0 + (p1 - p0) * u) * h - carry;
            const double next = sum + term;
            carry = (next - sum) - term;
            sum = next;
        }
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Statistics

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Rank = 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double smaller = 0.0, equal = 0.0;
        for (double w : v) {
            smaller += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
    }
    return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks(x), ranks(y));
}

/// Tau-b by enumerating every unordered pair.
inline double kendall(const std::vector<double>& x, const std::vector<double>& y) {
    long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, pairs = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            ++pairs;
            const double dx = x[j] - x[i];
            const double dy = y[j] - y[i];
            if (dx == 0.0) {
                ++tied_x;
            }
            if (dy == 0.0) {
                ++tied_y;
            }
            if (dx != 0.0 && dy != 0.0) {
                ((dx > 0) == (dy > 0) ? concordant : discordant) += 1;
            }
        }
    }
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(pairs - tied_x) * static_cast<double>(pairs - tied_y));
}

struct Line {
    double slope;
    double intercept;
};

/// Solves the 2x2 normal equations [n Sx; Sx Sxx] [b; a] = [Sy; Sxy].
inline Line ols(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) {
        throw std::invalid_argument("singular normal equations");
    }
    return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

} // namespace oracle
