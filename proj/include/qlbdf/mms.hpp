#pragma once

// Manufactured solutions for du/dt = div(a(u) grad u) + f with homogeneous
// Dirichlet data. Closed forms are provided by hand in extended precision.

#include "qlbdf/errors.hpp"
#include "qlbdf/grid.hpp"
#include "qlbdf/spatial_operator.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace qlbdf {

using Real = long double;
using ScalarField = std::function<Real(const Point&, Real)>;
using VectorField = std::function<std::array<Real, 2>(const Point&, Real)>;

struct ManufacturedProblem {
    std::string label;
    Grid grid;
    CoefficientFn coeff;
    double T = 1.0;
    ScalarField u;
    ScalarField u_t;
    VectorField grad;
    ScalarField laplacian;
};

/// f = u_t - a'(u)|grad u|^2 - a(u) Laplacian u.
inline Real forcing(const ManufacturedProblem& p, const Point& x, Real t) {
    const Real u = p.u(x, t);
    const auto g = p.grad(x, t);
    return p.u_t(x, t) - p.coeff.a_prime(u) * (g[0] * g[0] + g[1] * g[1]) - p.coeff.a(u) * p.laplacian(x, t);
}

inline StateVector sample_field(const Grid& grid, const ScalarField& field, Real t) {
    StateVector v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = static_cast<double>(field(grid.node(i), t));
    return v;
}

/// Exact solution at the interior nodes, lexicographic order.
inline StateVector sample_on_grid(const ManufacturedProblem& p, Real t) { return sample_field(p.grid, p.u, t); }

enum class ForcingMode {
    /// Nodal samples of the continuum forcing f: the discrete solution then
    /// carries both the spatial and the temporal error.
    continuum,
    /// f_h(t) = d/dt I_h u(t) + A_h(I_h u(t)) I_h u(t): the nodal samples I_h u
    /// solve the semidiscrete system exactly, so only temporal error remains.
    discrete,
};

inline StateVector grid_forcing(const ManufacturedProblem& p, Real t, ForcingMode mode) {
    if (mode == ForcingMode::continuum) {
        StateVector f(p.grid.size());
        for (std::size_t i = 0; i < p.grid.size(); ++i) f[i] = static_cast<double>(forcing(p, p.grid.node(i), t));
        return f;
    }
    const StateVector u = sample_on_grid(p, t);
    return sample_field(p.grid, p.u_t, t) + apply_operator(assemble_operator(p.grid, p.coeff, u), u);
}

namespace problems {

inline constexpr Real pi = std::numbers::pi_v<long double>;

/// M1: u = e^{-t} sin(pi x), a(u) = e^u on (0,1).
inline ManufacturedProblem m1(int n = 255) {
    ManufacturedProblem p{"M1", Grid::unit_interval(n), exp_coefficient(), 1.0, {}, {}, {}, {}};
    p.u = [](const Point& x, Real t) { return std::exp(-t) * std::sin(pi * x[0]); };
    p.u_t = [](const Point& x, Real t) { return -std::exp(-t) * std::sin(pi * x[0]); };
    p.grad = [](const Point& x, Real t) {
        return std::array<Real, 2>{pi * std::exp(-t) * std::cos(pi * x[0]), 0.0L};
    };
    p.laplacian = [](const Point& x, Real t) { return -pi * pi * std::exp(-t) * std::sin(pi * x[0]); };
    return p;
}

/// M2: u = sin(pi t) x(1-x), a(u) = 1/(1+u^2).
inline ManufacturedProblem m2(int n = 255) {
    ManufacturedProblem p{"M2", Grid::unit_interval(n), rational_coefficient(), 1.0, {}, {}, {}, {}};
    p.u = [](const Point& x, Real t) { return std::sin(pi * t) * x[0] * (1.0L - x[0]); };
    p.u_t = [](const Point& x, Real t) { return pi * std::cos(pi * t) * x[0] * (1.0L - x[0]); };
    p.grad = [](const Point& x, Real t) {
        return std::array<Real, 2>{std::sin(pi * t) * (1.0L - 2.0L * x[0]), 0.0L};
    };
    p.laplacian = [](const Point&, Real t) { return -2.0L * std::sin(pi * t); };
    return p;
}

/// M3: u = e^{-t} sin(pi x) sin(pi y) on the unit square, a(u) = 1 + u^2.
inline ManufacturedProblem m3(int n = 63) {
    ManufacturedProblem p{"M3", Grid::unit_square(n), quadratic_coefficient(), 1.0, {}, {}, {}, {}};
    p.u = [](const Point& x, Real t) { return std::exp(-t) * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    p.u_t = [](const Point& x, Real t) { return -std::exp(-t) * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    p.grad = [](const Point& x, Real t) {
        const Real e = std::exp(-t);
        return std::array<Real, 2>{pi * e * std::cos(pi * x[0]) * std::sin(pi * x[1]),
                                   pi * e * std::sin(pi * x[0]) * std::cos(pi * x[1])};
    };
    p.laplacian = [](const Point& x, Real t) {
        return -2.0L * pi * pi * std::exp(-t) * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    };
    return p;
}

/// A1: u = 1.8 sin(pi x) cos(8 pi t), a(u) = 4 - u^2. The exact solution stays
/// in |u| <= 1.8 where a >= 0.76, but extrapolation from coarse time samples
/// leaves the interval of positivity.
inline ManufacturedProblem adversarial(int n = 63) {
    ManufacturedProblem p{"A1", Grid::unit_interval(n), bounded_range_coefficient(), 1.0, {}, {}, {}, {}};
    constexpr Real amp = 1.8L, freq = 8.0L * pi;
    p.u = [=](const Point& x, Real t) { return amp * std::sin(pi * x[0]) * std::cos(freq * t); };
    p.u_t = [=](const Point& x, Real t) { return -amp * freq * std::sin(pi * x[0]) * std::sin(freq * t); };
    p.grad = [=](const Point& x, Real t) {
        return std::array<Real, 2>{amp * pi * std::cos(pi * x[0]) * std::cos(freq * t), 0.0L};
    };
    p.laplacian = [=](const Point& x, Real t) {
        return -amp * pi * pi * std::sin(pi * x[0]) * std::cos(freq * t);
    };
    return p;
}

/// Exact heat solution u = e^{-pi^2 t} sin(pi x) with a = 1, so f = 0.
inline ManufacturedProblem heat(int n = 255) {
    ManufacturedProblem p{"heat", Grid::unit_interval(n), constant_coefficient(1.0), 1.0, {}, {}, {}, {}};
    p.u = [](const Point& x, Real t) { return std::exp(-pi * pi * t) * std::sin(pi * x[0]); };
    p.u_t = [](const Point& x, Real t) { return -pi * pi * std::exp(-pi * pi * t) * std::sin(pi * x[0]); };
    p.grad = [](const Point& x, Real t) {
        return std::array<Real, 2>{pi * std::exp(-pi * pi * t) * std::cos(pi * x[0]), 0.0L};
    };
    p.laplacian = [](const Point& x, Real t) {
        return -pi * pi * std::exp(-pi * pi * t) * std::sin(pi * x[0]);
    };
    return p;
}

}  // namespace problems

inline std::vector<std::string> catalogue_labels() { return {"M1", "M2", "M3", "A1", "heat"}; }

/// Catalogue problem by label. n is the interior node count per axis; n <= 0
/// selects the problem's default (255 in 1D, 63 in 2D).
inline ManufacturedProblem find_problem(const std::string& label, int n = 0) {
    auto pick = [n](int fallback) { return n > 0 ? n : fallback; };
    if (label == "M1") return problems::m1(pick(255));
    if (label == "M2") return problems::m2(pick(255));
    if (label == "M3") return problems::m3(pick(63));
    if (label == "A1") return problems::adversarial(pick(63));
    if (label == "heat") return problems::heat(pick(255));
    std::string known;
    for (const auto& l : catalogue_labels()) known += (known.empty() ? "" : ", ") + l;
    throw ConfigError("problem", "unknown problem '" + label + "'; catalogue: " + known);
}

inline std::vector<ManufacturedProblem> builtin_problems() {
    std::vector<ManufacturedProblem> out;
    for (const auto& l : catalogue_labels()) out.push_back(find_problem(l));
    return out;
}

}  // namespace qlbdf
