#pragma once

// Grid norms of interior vectors (Dirichlet zero extension) and composite
// norms in time.

#include "qlbdf/errors.hpp"
#include "qlbdf/grid.hpp"
#include "qlbdf/history.hpp"
#include "qlbdf/mms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

namespace qlbdf {

enum class SpatialNorm { linf, l2, h1, h1_seminorm, h2_proxy, w1inf_proxy };

inline double spatial_norm(const StateVector& v, const Grid& grid, SpatialNorm which) {
    if (static_cast<std::size_t>(v.size()) != grid.size())
        throw DimensionError("vector size does not match the grid");
    const double vol = grid.cell_volume();
    auto at = [&](long i) { return i >= 0 ? v[i] : 0.0; };
    switch (which) {
    case SpatialNorm::linf:
        return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
    case SpatialNorm::l2:
        return std::sqrt(vol * v.squaredNorm());
    case SpatialNorm::h1:
    case SpatialNorm::h1_seminorm: {
        double semi = 0.0;
        grid.for_each_face([&](int axis, long p, long q) {
            const double d = (at(q) - at(p)) / grid.h(axis);
            semi += vol * d * d;
        });
        return std::sqrt(which == SpatialNorm::h1 ? semi + vol * v.squaredNorm() : semi);
    }
    case SpatialNorm::w1inf_proxy: {
        double m = 0.0;
        grid.for_each_face([&](int axis, long p, long q) {
            m = std::max(m, std::abs(at(q) - at(p)) / grid.h(axis));
        });
        return m;
    }
    case SpatialNorm::h2_proxy: {
        StateVector lap = StateVector::Zero(v.size());
        grid.for_each_face([&](int axis, long p, long q) {
            const double flux = (at(q) - at(p)) / (grid.h(axis) * grid.h(axis));
            lap[p] += flux;
            if (q >= 0) lap[q] -= flux;
        });
        return std::sqrt(vol * lap.squaredNorm());
    }
    }
    return 0.0;
}

struct TemporalNorm {
    enum class Kind { max, lp } kind = Kind::max;
    double p = 2.0;

    static TemporalNorm max() { return {Kind::max, 0.0}; }
    static TemporalNorm lp(double p) { return {Kind::lp, p}; }
};

/// max_n v_n, or (tau sum_n v_n^p)^{1/p}.
inline double time_composite(std::span<const double> values, double tau, TemporalNorm spec) {
    if (values.empty()) throw DomainError("time composite of an empty sequence");
    if (!(tau > 0.0)) throw DomainError("time step must be positive");
    if (spec.kind == TemporalNorm::Kind::max) return *std::max_element(values.begin(), values.end());
    if (!(spec.p > 1.0) || !std::isfinite(spec.p)) throw DomainError("lp exponent must lie in (1, inf)");
    double s = 0.0;
    for (double v : values) s += std::pow(v, spec.p);
    return std::pow(tau * s, 1.0 / spec.p);
}

struct ErrorReport {
    double max_linf = 0.0;
    double max_w1inf = 0.0;
    double l2_h1 = 0.0;
    double l2_h2 = 0.0;
};

/// Errors of u_n - reference(n) for n = k..N.
inline ErrorReport error_report(const SolutionHistory& history,
                                const std::function<StateVector(std::size_t)>& reference) {
    const std::size_t k = static_cast<std::size_t>(history.scheme.k);
    std::vector<double> linf, w1, h1, h2;
    for (std::size_t n = k; n <= history.steps; ++n) {
        if (!history.has_step(n)) continue;
        const StateVector e = history.at_step(n) - reference(n);
        linf.push_back(spatial_norm(e, history.grid, SpatialNorm::linf));
        w1.push_back(spatial_norm(e, history.grid, SpatialNorm::w1inf_proxy));
        h1.push_back(spatial_norm(e, history.grid, SpatialNorm::h1));
        h2.push_back(spatial_norm(e, history.grid, SpatialNorm::h2_proxy));
    }
    if (linf.empty()) throw DomainError("history holds no steps n >= k");
    const double tau_eff = history.tau * history.stride;
    return {time_composite(linf, tau_eff, TemporalNorm::max()), time_composite(w1, tau_eff, TemporalNorm::max()),
            time_composite(h1, tau_eff, TemporalNorm::lp(2.0)), time_composite(h2, tau_eff, TemporalNorm::lp(2.0))};
}

/// Errors against the exact samples of a manufactured problem.
inline ErrorReport error_report(const SolutionHistory& history, const ManufacturedProblem& problem) {
    if (!(history.grid == problem.grid)) throw DimensionError("history and problem live on different grids");
    return error_report(history, [&](std::size_t n) {
        return sample_on_grid(problem, static_cast<Real>(n) * static_cast<Real>(history.tau));
    });
}

}  // namespace qlbdf
