#pragma once

// Multistep constants of the k-step BDF methods: exact coefficients of the
// generating polynomials delta(zeta) and gamma(zeta), their order conditions,
// A(alpha) angles and Nevanlinna-Odeh multipliers.

#include "qlbdf/errors.hpp"

#include <boost/rational.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qlbdf {

using Rational = boost::rational<std::int64_t>;

inline constexpr int kMinOrder = 1;
inline constexpr int kMaxOrder = 6;
inline constexpr int kMaxMultiplierOrder = 5;

/// Boundary sampling density used for angles and positivity checks.
inline constexpr int kBoundarySamples = 1 << 14;

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::vector<double> to_double(std::span<const Rational> r) {
    std::vector<double> out(r.size());
    std::transform(r.begin(), r.end(), out.begin(), [](const Rational& x) { return to_double(x); });
    return out;
}

namespace detail {

inline void require_order(int k, int lo = kMinOrder, int hi = kMaxOrder) {
    if (k < lo || k > hi)
        throw DomainError("BDF order k = " + std::to_string(k) + " outside " +
                          std::to_string(lo) + ".." + std::to_string(hi));
}

inline std::int64_t binomial(int n, int j) {
    std::int64_t c = 1;
    for (int i = 1; i <= j; ++i) c = c * (n - j + i) / i;
    return c;
}

inline Rational ipow(std::int64_t base, int e) {
    // 0^0 = 1, the convention the order conditions are written with.
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return Rational(r);
}

template <typename Coeffs>
std::complex<double> polyval(const Coeffs& c, std::complex<double> z) {
    std::complex<double> acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + static_cast<double>(*it);
    return acc;
}

/// Golden-section maximisation of f on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         int iterations = 80) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - g * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + g * (b - a); fd = f(d);
        }
    }
    return std::max({f(a), f(b), fc, fd});
}

/// Maximum of f over phi in [lo, hi]: uniform sampling, then golden-section
/// refinement on the bracket around the best sample.
inline double sampled_max(const std::function<double(double)>& f, double lo, double hi, int samples) {
    const double step = (hi - lo) / samples;
    int best = 0;
    double best_val = f(lo);
    for (int i = 1; i <= samples; ++i) {
        const double v = f(lo + i * step);
        if (v > best_val) { best_val = v; best = i; }
    }
    const double a = lo + std::max(0, best - 1) * step;
    const double b = lo + std::min(samples, best + 1) * step;
    return std::max(best_val, golden_max(f, a, b));
}

}  // namespace detail

/// delta_0..delta_k with delta(zeta) = sum_{l=1}^k (1/l)(1 - zeta)^l, exact.
inline std::vector<Rational> bdf_delta_coeffs(int k) {
    detail::require_order(k);
    std::vector<Rational> delta(k + 1, Rational(0));
    for (int l = 1; l <= k; ++l)
        for (int j = 0; j <= l; ++j) {
            const std::int64_t sign = (j % 2 == 0) ? 1 : -1;
            delta[j] += Rational(sign * detail::binomial(l, j), l);
        }
    return delta;
}

/// gamma_0..gamma_{k-1} with gamma(zeta) = [1 - (1 - zeta)^k] / zeta, exact.
inline std::vector<Rational> bdf_gamma_coeffs(int k) {
    detail::require_order(k);
    std::vector<Rational> gamma(k);
    for (int i = 0; i < k; ++i) {
        const std::int64_t sign = (i % 2 == 0) ? 1 : -1;
        gamma[i] = Rational(sign * detail::binomial(k, i + 1));
    }
    return gamma;
}

struct OrderResidual {
    int l = 0;
    Rational target;            // l k^{l-1}
    Rational implicit_residual; // sum_i (k-i)^l delta_i - target
    Rational explicit_residual; // l sum_i (k-i-1)^{l-1} gamma_i - target
};

struct OrderReport {
    int k = 0;
    bool satisfied = false;
    std::vector<OrderResidual> residuals;
};

/// Exact check of sum_i (k-i)^l delta_i = l k^{l-1} = l sum_i (k-i-1)^{l-1} gamma_i, l = 0..k.
inline OrderReport check_order_conditions(std::span<const Rational> delta,
                                          std::span<const Rational> gamma) {
    const int k = static_cast<int>(delta.size()) - 1;
    OrderReport report{k, true, {}};
    for (int l = 0; l <= k; ++l) {
        OrderResidual r;
        r.l = l;
        r.target = l == 0 ? Rational(0) : Rational(l) * detail::ipow(k, l - 1);
        Rational lhs(0);
        for (int i = 0; i <= k; ++i) lhs += detail::ipow(k - i, l) * delta[i];
        Rational rhs(0);
        if (l > 0)
            for (int i = 0; i < static_cast<int>(gamma.size()); ++i)
                rhs += Rational(l) * detail::ipow(k - i - 1, l - 1) * gamma[i];
        r.implicit_residual = lhs - r.target;
        r.explicit_residual = rhs - r.target;
        if (r.implicit_residual != Rational(0) || r.explicit_residual != Rational(0)) report.satisfied = false;
        report.residuals.push_back(r);
    }
    return report;
}

inline OrderReport check_order_conditions(int k) {
    const auto delta = bdf_delta_coeffs(k);
    const auto gamma = bdf_gamma_coeffs(k);
    return check_order_conditions(delta, gamma);
}

/// Smallest Nevanlinna-Odeh multipliers, four decimals.
inline double multiplier_theta(int k) {
    detail::require_order(k);
    if (k > kMaxMultiplierOrder)
        throw UnsupportedError("no Nevanlinna-Odeh multiplier is available for k = " + std::to_string(k));
    static constexpr std::array<double, 5> table{0.0, 0.0, 0.0836, 0.2878, 0.8160};
    return table[k - 1];
}

/// Minimum of Re[delta(zeta) / (1 - theta zeta)] over zeta = radius e^{i phi}.
/// radius = 1 evaluates on the unit circle itself, where the minimum principle
/// makes the value equivalent to the infimum over the open disk.
inline double verify_multiplier_positivity(std::span<const double> delta, double theta,
                                           double radius, int n_samples = kBoundarySamples) {
    if (!(theta >= 0.0) || theta >= 1.0)
        throw DomainError("multiplier theta must lie in [0, 1); theta >= 1 puts a pole inside the disk");
    if (!(radius > 0.0) || radius > 1.0) throw DomainError("sampling radius must lie in (0, 1]");
    if (n_samples < 1024) throw DomainError("at least 1024 boundary samples are required");
    auto neg_re = [&](double phi) {
        const auto z = std::polar(radius, phi);
        return -(detail::polyval(delta, z) / (1.0 - theta * z)).real();
    };
    // Real coefficients: the upper half circle suffices.
    return -detail::sampled_max(neg_re, 0.0, std::numbers::pi, n_samples / 2);
}

inline double verify_multiplier_positivity(int k, double theta, double radius,
                                           int n_samples = kBoundarySamples) {
    const auto delta = to_double(bdf_delta_coeffs(k));
    return verify_multiplier_positivity(delta, theta, radius, n_samples);
}

/// Tolerance below which a sampled boundary minimum still counts as nonnegative.
inline constexpr double kPositivityTolerance = 1e-12;

inline bool multiplier_feasible(std::span<const double> delta, double theta) {
    return verify_multiplier_positivity(delta, theta, 1.0) >= -kPositivityTolerance;
}

/// Bisection for the infimum of admissible theta; the result is feasible and
/// result - tol is not.
inline double smallest_theta(int k, double tol = 1e-5) {
    detail::require_order(k, 3, kMaxMultiplierOrder);
    if (!(tol > 0.0)) throw DomainError("bisection tolerance must be positive");
    const auto delta = to_double(bdf_delta_coeffs(k));
    double lo = 0.0, hi = 0.999;
    if (multiplier_feasible(delta, lo)) return lo;
    while (hi - lo >= tol) {
        const double mid = 0.5 * (lo + hi);
        (multiplier_feasible(delta, mid) ? hi : lo) = mid;
    }
    return hi;
}

/// A(alpha) angle in degrees: 180 - max_{|zeta|=1} |arg delta(zeta)|.
inline double a_alpha_angle(int k) {
    const auto delta = to_double(bdf_delta_coeffs(k));
    auto abs_arg = [&](double phi) {
        const auto v = detail::polyval(delta, std::polar(1.0, phi));
        return std::abs(v) == 0.0 ? 0.0 : std::abs(std::arg(v));
    };
    const double max_arg = detail::sampled_max(abs_arg, 0.0, std::numbers::pi, kBoundarySamples / 2);
    return 180.0 - max_arg * 180.0 / std::numbers::pi;
}

struct BdfScheme {
    int k = 0;
    std::vector<Rational> delta;
    std::vector<Rational> gamma;
    std::optional<double> theta;
    double alpha_deg = 0.0;

    std::vector<double> delta_d;
    std::vector<double> gamma_d;

    bool energy_supported() const noexcept { return theta.has_value(); }
};

inline BdfScheme make_scheme(int k) {
    BdfScheme s;
    s.k = k;
    s.delta = bdf_delta_coeffs(k);
    s.gamma = bdf_gamma_coeffs(k);
    if (k <= kMaxMultiplierOrder) s.theta = multiplier_theta(k);
    s.alpha_deg = a_alpha_angle(k);
    s.delta_d = to_double(s.delta);
    s.gamma_d = to_double(s.gamma);
    return s;
}

inline std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace qlbdf
