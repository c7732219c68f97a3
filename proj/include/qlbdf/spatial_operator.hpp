#pragma once

// Conservative finite-difference realisation of A(w)u = -div(a(w) grad u)
// with homogeneous Dirichlet data. The face coefficient is a((w_p + w_q)/2),
// with w = 0 on the boundary.

#include "qlbdf/errors.hpp"
#include "qlbdf/grid.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace qlbdf {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SpatialOperator {
    Grid grid;
    SparseMatrix matrix;
    std::string coeff_label;
    StateVector frozen_state;
};

namespace detail {

inline void require_size(const Grid& grid, const StateVector& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != grid.size())
        throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) +
                             " entries, grid has " + std::to_string(grid.size()) + " nodes");
}

inline double face_argument(const StateVector& w, long p, long q) {
    return 0.5 * (w[p] + (q >= 0 ? w[q] : 0.0));
}

inline double checked_coefficient(const CoefficientFn& coeff, double arg, long p) {
    const double value = coeff(arg);
    if (!(value > 0.0) || !std::isfinite(value))
        throw CoefficientPositivityError(static_cast<std::size_t>(p), arg, value);
    return value;
}

inline double inv_h2(const Grid& grid, int axis) { return 1.0 / (grid.h(axis) * grid.h(axis)); }

}  // namespace detail

/// Assembles A_h(w); symmetric by construction.
inline SpatialOperator assemble_operator(const Grid& grid, const CoefficientFn& coeff, const StateVector& w) {
    detail::require_size(grid, w, "frozen state");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(grid.size() * (1 + 2 * grid.dim()));
    grid.for_each_face([&](int axis, long p, long q) {
        const double c = detail::checked_coefficient(coeff, detail::face_argument(w, p, q), p) *
                         detail::inv_h2(grid, axis);
        trips.emplace_back(p, p, c);
        if (q >= 0) {
            trips.emplace_back(q, q, c);
            trips.emplace_back(p, q, -c);
            trips.emplace_back(q, p, -c);
        }
    });
    const auto n = static_cast<Eigen::Index>(grid.size());
    SparseMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return {grid, std::move(m), coeff.label, w};
}

inline StateVector apply_operator(const SpatialOperator& op, const StateVector& u) {
    if (u.size() != op.matrix.cols())
        throw DimensionError("operator of size " + std::to_string(op.matrix.cols()) +
                             " applied to vector of size " + std::to_string(u.size()));
    return op.matrix * u;
}

/// B = d/dw [A_h(w) u] at w. For u = w, A_h(w) + B is the Jacobian of w -> A_h(w) w.
inline SparseMatrix assemble_jacobian_correction(const Grid& grid, const CoefficientFn& coeff,
                                                 const StateVector& w, const StateVector& u) {
    detail::require_size(grid, w, "frozen state");
    detail::require_size(grid, u, "state");
    const auto n = static_cast<Eigen::Index>(grid.size());
    SparseMatrix b(n, n);
    if (coeff.is_constant) return b;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(grid.size() * (1 + 2 * grid.dim()) * 2);
    grid.for_each_face([&](int axis, long p, long q) {
        const double arg = detail::face_argument(w, p, q);
        detail::checked_coefficient(coeff, arg, p);
        const double slope = 0.5 * coeff.derivative(arg) * detail::inv_h2(grid, axis);
        const double jump = u[p] - (q >= 0 ? u[q] : 0.0);
        trips.emplace_back(p, p, slope * jump);
        if (q >= 0) {
            trips.emplace_back(p, q, slope * jump);
            trips.emplace_back(q, p, -slope * jump);
            trips.emplace_back(q, q, -slope * jump);
        }
    });
    b.setFromTriplets(trips.begin(), trips.end());
    return b;
}

/// (A_h(v) - A_h(w)) u evaluated face by face in extended precision, so the
/// result does not suffer cancellation between two O(1/h^2) products.
/// Works for double and long double vectors alike.
template <typename Vec>
Eigen::Matrix<long double, Eigen::Dynamic, 1> operator_difference(const Grid& grid, const CoefficientFn& coeff,
                                                                 const Vec& v, const Vec& w, const Vec& u) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (v.size() != n || w.size() != n || u.size() != n)
        throw DimensionError("operator difference: vector sizes do not match the grid");
    using L = long double;
    Eigen::Matrix<L, Eigen::Dynamic, 1> acc = Eigen::Matrix<L, Eigen::Dynamic, 1>::Zero(n);
    auto at = [](const Vec& x, long i) { return i >= 0 ? static_cast<L>(x[i]) : L(0); };
    grid.for_each_face([&](int axis, long p, long q) {
        const L av = coeff.a(0.5L * (at(v, p) + at(v, q)));
        const L aw = coeff.a(0.5L * (at(w, p) + at(w, q)));
        const L h = grid.h(axis);
        const L flux = (av - aw) * (at(u, p) - at(u, q)) / (h * h);
        acc[p] += flux;
        if (q >= 0) acc[q] -= flux;
    });
    return acc;
}

/// Size up to which SPD systems are factorised directly.
inline constexpr Eigen::Index kDirectSolveLimit = 10000;

namespace detail {

inline double relative_residual(const SparseMatrix& m, const StateVector& x, const StateVector& rhs) {
    const double nb = rhs.norm();
    const double nr = (m * x - rhs).norm();
    return nb == 0.0 ? nr : nr / nb;
}

}  // namespace detail

/// Reusable SPD solver: keeps the symbolic factorisation as long as the
/// sparsity pattern size does not change.
class SpdSolver {
public:
    StateVector solve(const SparseMatrix& m, const StateVector& rhs, double tol = 1e-10) {
        if (m.rows() != m.cols() || m.rows() != rhs.size())
            throw DimensionError("linear system dimensions do not match");
        StateVector x;
        if (m.rows() <= kDirectSolveLimit) {
            if (pattern_nnz_ != m.nonZeros() || pattern_rows_ != m.rows()) {
                ldlt_.analyzePattern(m);
                pattern_nnz_ = m.nonZeros();
                pattern_rows_ = m.rows();
            }
            ldlt_.factorize(m);
            if (ldlt_.info() != Eigen::Success)
                throw SolverError("sparse LDLT factorisation failed (matrix not SPD?)",
                                  std::numeric_limits<double>::quiet_NaN());
            x = ldlt_.solve(rhs);
        } else {
            Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                     Eigen::IncompleteCholesky<double>> cg;
            cg.setTolerance(tol * 0.5);
            cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * m.rows()));
            cg.compute(m);
            x = cg.solve(rhs);
            if (cg.info() != Eigen::Success)
                throw SolverError("preconditioned CG did not converge", cg.error());
        }
        const double res = detail::relative_residual(m, x, rhs);
        if (!(res <= tol)) throw SolverError("SPD solve missed its tolerance", res);
        return x;
    }

private:
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    Eigen::Index pattern_nnz_ = -1;
    Eigen::Index pattern_rows_ = -1;
};

/// Reusable general sparse solver (Newton Jacobians are not symmetric).
class GeneralSolver {
public:
    StateVector solve(const SparseMatrix& m, const StateVector& rhs, double tol = 1e-10) {
        if (m.rows() != m.cols() || m.rows() != rhs.size())
            throw DimensionError("linear system dimensions do not match");
        if (pattern_nnz_ != m.nonZeros() || pattern_rows_ != m.rows()) {
            lu_.analyzePattern(m);
            pattern_nnz_ = m.nonZeros();
            pattern_rows_ = m.rows();
        }
        lu_.factorize(m);
        if (lu_.info() != Eigen::Success)
            throw SolverError("sparse LU factorisation failed: " + lu_.lastErrorMessage(),
                              std::numeric_limits<double>::quiet_NaN());
        StateVector x = lu_.solve(rhs);
        const double res = detail::relative_residual(m, x, rhs);
        if (!(res <= tol)) throw SolverError("sparse LU solve missed its tolerance", res);
        return x;
    }

private:
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
    Eigen::Index pattern_nnz_ = -1;
    Eigen::Index pattern_rows_ = -1;
};

/// Solves an SPD system to relative residual tol: sparse LDLT up to
/// kDirectSolveLimit unknowns, incomplete-Cholesky CG above.
inline StateVector solve_linear(const SparseMatrix& m, const StateVector& rhs, double tol = 1e-10) {
    SpdSolver solver;
    return solver.solve(m, rhs, tol);
}

/// Coordinate text dump, one "row col value" triple per line (0-based).
inline void dump_coordinate(std::ostream& os, const SparseMatrix& m) {
    char buf[96];
    for (int col = 0; col < m.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                          static_cast<long>(it.col()), it.value());
            os << buf;
        }
}

}  // namespace qlbdf
