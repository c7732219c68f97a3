#pragma once

// Consistency defects of the two BDF schemes for a manufactured solution.
//
//   d_n  = (1/tau) sum_j delta_j u(t_{n-j}) - u_t(t_n)               (time-difference form)
//   d~_n = d_n + (A_h(u_hat(t_n)) - A_h(u(t_n))) u(t_n),  u_hat = sum_i gamma_i u(t_{n-i-1})
//
// The operator form (1/tau) sum_j delta_j u(t_{n-j}) + A_h(u) u - f differs
// from the time-difference form only by the spatial truncation error; that gap
// is reported alongside. Kernels run in long double: at k = 5 and tau = 1/320
// the defect is far below the double rounding of the difference quotient.

#include "qlbdf/bdf_core.hpp"
#include "qlbdf/mms.hpp"
#include "qlbdf/norms.hpp"
#include "qlbdf/spatial_operator.hpp"
#include "qlbdf/timestepper.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace qlbdf {

enum class DefectKind { fully_implicit, linearly_implicit };

struct DefectSeries {
    DefectKind kind = DefectKind::fully_implicit;
    int k = 0;
    double tau = 0.0;
    std::vector<std::size_t> steps;  // n = k..N
    std::vector<StateVector> defects;
    std::vector<double> linf;
    std::vector<double> l2;
    double form_gap = 0.0;  // max_n ||operator form - time-difference form||_inf

    double max_linf() const {
        double m = 0.0;
        for (double v : linf) m = std::max(m, v);
        return m;
    }
};

namespace detail {

using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline LVector sample_long(const Grid& grid, const ScalarField& field, Real t) {
    LVector v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = field(grid.node(i), t);
    return v;
}

inline DefectSeries compute_defects(const ManufacturedProblem& p, const BdfScheme& scheme, double tau,
                                    DefectKind kind) {
    const std::size_t N = step_count(p.T, tau);
    const int k = scheme.k;
    const Real tl = tau;
    std::vector<Real> delta(k + 1), gamma(k);
    for (int j = 0; j <= k; ++j)
        delta[j] = static_cast<Real>(scheme.delta[j].numerator()) / scheme.delta[j].denominator();
    for (int j = 0; j < k; ++j)
        gamma[j] = static_cast<Real>(scheme.gamma[j].numerator()) / scheme.gamma[j].denominator();

    DefectSeries s;
    s.kind = kind;
    s.k = k;
    s.tau = tau;

    std::vector<LVector> u(N + 1);
    for (std::size_t n = 0; n <= N; ++n) u[n] = sample_long(p.grid, p.u, static_cast<Real>(n) * tl);

    for (std::size_t n = static_cast<std::size_t>(k); n <= N; ++n) {
        const Real t = static_cast<Real>(n) * tl;
        LVector d = -sample_long(p.grid, p.u_t, t);
        for (int j = 0; j <= k; ++j) d += (delta[j] / tl) * u[n - j];

        if (kind == DefectKind::linearly_implicit) {
            LVector hat = LVector::Zero(d.size());
            for (int i = 0; i < k; ++i) hat += gamma[i] * u[n - i - 1];
            d += operator_difference(p.grid, p.coeff, hat, u[n], u[n]);
        }

        // Spatial truncation u_t + A_h(u) u - f, the gap between the two forms.
        const StateVector un = u[n].cast<double>();
        StateVector trunc = apply_operator(assemble_operator(p.grid, p.coeff, un), un);
        for (std::size_t i = 0; i < p.grid.size(); ++i)
            trunc[i] += static_cast<double>(p.u_t(p.grid.node(i), t) - forcing(p, p.grid.node(i), t));
        s.form_gap = std::max(s.form_gap, spatial_norm(trunc, p.grid, SpatialNorm::linf));

        StateVector dd = d.cast<double>();
        s.steps.push_back(n);
        s.linf.push_back(spatial_norm(dd, p.grid, SpatialNorm::linf));
        s.l2.push_back(spatial_norm(dd, p.grid, SpatialNorm::l2));
        s.defects.push_back(std::move(dd));
    }
    return s;
}

}  // namespace detail

inline DefectSeries defect_fully(const ManufacturedProblem& problem, const BdfScheme& scheme, double tau) {
    return detail::compute_defects(problem, scheme, tau, DefectKind::fully_implicit);
}

inline DefectSeries defect_linearly(const ManufacturedProblem& problem, const BdfScheme& scheme, double tau) {
    return detail::compute_defects(problem, scheme, tau, DefectKind::linearly_implicit);
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("slope needs at least two matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct OrderEstimate {
    bool exact = false;  // all defects vanish to rounding
    double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Defects at or below this level count as zero.
inline constexpr double kExactDefectLevel = 1e-13;

/// Observed order of a tau sweep from the max-norm defects.
inline OrderEstimate defect_order(std::span<const DefectSeries> sweep) {
    if (sweep.size() < 3) throw DomainError("defect order needs at least three step sizes");
    for (std::size_t i = 2; i < sweep.size(); ++i) {
        const double r0 = sweep[i - 1].tau / sweep[i - 2].tau, r1 = sweep[i].tau / sweep[i - 1].tau;
        if (std::abs(r0 - r1) > 1e-12 * std::abs(r0)) throw DomainError("step sizes must form a geometric sequence");
    }
    std::vector<double> taus, maxes;
    for (const auto& s : sweep) {
        const double m = s.max_linf();
        if (m > kExactDefectLevel) {
            taus.push_back(s.tau);
            maxes.push_back(m);
        }
    }
    if (taus.empty()) return {true, std::numeric_limits<double>::quiet_NaN()};
    if (taus.size() < 2) throw DomainError("defects vanish at too many step sizes to fit a slope");
    return {false, log_log_slope(taus, maxes)};
}

}  // namespace qlbdf
