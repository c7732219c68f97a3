#pragma once

#include "qlbdf/errors.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace qlbdf {

using StateVector = Eigen::VectorXd;
using Point = std::array<double, 2>;

/// Uniform tensor grid of interior nodes on an interval or rectangle with
/// homogeneous Dirichlet boundary. Nodes are ordered lexicographically with
/// the x index running fastest.
class Grid {
public:
    static Grid line(double lo, double hi, int n) { return Grid(1, {lo, 0.0}, {hi, 0.0}, {n, 1}); }
    static Grid rectangle(Point lo, Point hi, std::array<int, 2> n) { return Grid(2, lo, hi, n); }
    static Grid unit_interval(int n) { return line(0.0, 1.0, n); }
    static Grid unit_square(int n) { return rectangle({0.0, 0.0}, {1.0, 1.0}, {n, n}); }

    int dim() const noexcept { return dim_; }
    int n(int axis) const noexcept { return n_[axis]; }
    double h(int axis) const noexcept { return h_[axis]; }
    double lo(int axis) const noexcept { return lo_[axis]; }
    double hi(int axis) const noexcept { return hi_[axis]; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_[0]) * n_[1]; }

    /// h^d, the weight of the discrete L2 inner product.
    double cell_volume() const noexcept { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }

    std::size_t index(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(j) * n_[0] + static_cast<std::size_t>(i);
    }

    Point node(std::size_t idx) const noexcept {
        const int i = static_cast<int>(idx % n_[0]);
        const int j = static_cast<int>(idx / n_[0]);
        return {lo_[0] + (i + 1) * h_[0], dim_ == 2 ? lo_[1] + (j + 1) * h_[1] : 0.0};
    }

    /// Visits every cell face once: f(axis, p, q), q = -1 for a boundary face
    /// where the Dirichlet zero extension applies.
    template <typename F>
    void for_each_face(F&& f) const {
        for (int axis = 0; axis < dim_; ++axis) {
            const int ni = n_[0], nj = n_[1];
            for (int j = 0; j < nj; ++j)
                for (int i = 0; i < ni; ++i) {
                    const long p = static_cast<long>(index(i, j));
                    const int along = axis == 0 ? i : j;
                    const int count = n_[axis];
                    if (along == 0) f(axis, p, -1L);
                    if (along + 1 < count) {
                        const long q = axis == 0 ? static_cast<long>(index(i + 1, j))
                                                 : static_cast<long>(index(i, j + 1));
                        f(axis, p, q);
                    } else {
                        f(axis, p, -1L);
                    }
                }
        }
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_ == b.dim_ && a.n_ == b.n_ && a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

private:
    Grid(int dim, Point lo, Point hi, std::array<int, 2> n) : dim_(dim), n_(n), lo_(lo), hi_(hi) {
        if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 1) throw DomainError("grid needs at least one interior node per axis");
            if (!(hi[a] > lo[a])) throw DomainError("grid bounds must satisfy lo < hi");
            h_[a] = (hi[a] - lo[a]) / (n[a] + 1);
        }
        if (dim == 1) { n_[1] = 1; h_[1] = 1.0; }
    }

    int dim_;
    std::array<int, 2> n_;
    Point lo_;
    Point hi_;
    std::array<double, 2> h_{1.0, 1.0};
};

/// Diffusion coefficient a(u) together with its derivative. Evaluated in
/// extended precision so defect computations can resolve tiny differences.
struct CoefficientFn {
    std::string label;
    std::function<long double(long double)> a;
    std::function<long double(long double)> a_prime;

    double operator()(double u) const { return static_cast<double>(a(u)); }
    double derivative(double u) const { return static_cast<double>(a_prime(u)); }
    bool is_constant = false;
};

inline CoefficientFn constant_coefficient(double c) {
    const long double v = c;
    return {"const(" + std::to_string(c) + ")", [v](long double) { return v; },
            [](long double) { return 0.0L; }, true};
}

inline CoefficientFn exp_coefficient() {
    return {"exp", [](long double u) { return std::exp(u); }, [](long double u) { return std::exp(u); }};
}

inline CoefficientFn rational_coefficient() {
    return {"1/(1+u^2)", [](long double u) { return 1.0L / (1.0L + u * u); },
            [](long double u) {
                const long double d = 1.0L + u * u;
                return -2.0L * u / (d * d);
            }};
}

inline CoefficientFn quadratic_coefficient() {
    return {"1+u^2", [](long double u) { return 1.0L + u * u; }, [](long double u) { return 2.0L * u; }};
}

/// 4 - u^2: positive only for |u| < 2.
inline CoefficientFn bounded_range_coefficient() {
    return {"4-u^2", [](long double u) { return 4.0L - u * u; }, [](long double u) { return -2.0L * u; }};
}

}  // namespace qlbdf
