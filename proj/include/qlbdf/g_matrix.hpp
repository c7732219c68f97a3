#pragma once

// Constructive form of Dahlquist's G-stability lemma for the BDF polynomial
// delta and the multiplier mu(zeta) = 1 - theta zeta:
//
//   (sum_i delta_i v_{k-i}) (sum_j mu_j v_{k-j})
//       = |V_k|_G^2 - |V_{k-1}|_G^2 + (sum_i kappa_i v_i)^2,
//
// with |V_n|_G^2 = sum_{i,j=1}^k g_ij v_{n-k+i} v_{n-k+j}.
//
// kappa comes from a Fejer-Riesz factorisation of the nonnegative boundary
// polynomial Re[rho(zeta) conj(sigma(zeta))]; G then follows from matching
// the remaining quadratic form along its diagonals.

#include "qlbdf/bdf_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace qlbdf {

struct GMatrixCert {
    int k = 0;
    double theta = 0.0;
    Eigen::MatrixXd g;     // k x k, symmetric positive definite
    Eigen::VectorXd kappa; // kappa_0..kappa_k
    Eigen::VectorXd mu;    // mu_0..mu_k

    double min_eigenvalue() const {
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    }
    double max_eigenvalue() const {
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    }
};

namespace detail {

using Cplx = std::complex<double>;

// Ascending coefficients.
inline std::vector<double> deflate_double_root_at_one(std::vector<double> p) {
    // Divide by (z - 1)^2 = z^2 - 2z + 1 via synthetic division from the top.
    const int n = static_cast<int>(p.size()) - 1;
    std::vector<double> q(n - 1, 0.0);
    std::vector<double> r = p;
    for (int d = n; d >= 2; --d) {
        const double c = r[d];
        q[d - 2] = c;
        r[d] -= c;
        r[d - 1] += 2.0 * c;
        r[d - 2] -= c;
    }
    return q;
}

inline std::vector<Cplx> polynomial_roots(const std::vector<double>& asc) {
    const int n = static_cast<int>(asc.size()) - 1;
    if (n <= 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) companion(i, n - 1) = -asc[i] / asc[n];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    std::vector<Cplx> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = es.eigenvalues()[i];
    return roots;
}

inline double abs_sum(const std::vector<double>& p) {
    double s = 0.0;
    for (double c : p) s += std::abs(c);
    return s;
}

inline double eval_real(const std::vector<double>& asc, double z) {
    double acc = 0.0;
    for (auto it = asc.rbegin(); it != asc.rend(); ++it) acc = acc * z + *it;
    return acc;
}

}  // namespace detail

/// Builds the certificate for (delta, mu = 1 - theta zeta).
/// Throws CertificationError when Re[delta / mu] is negative somewhere on the
/// unit circle (no real G, kappa can exist) or the construction degenerates.
inline GMatrixCert dahlquist_g_matrix(int k, double theta) {
    detail::require_order(k, kMinOrder, kMaxMultiplierOrder);
    if (!(theta >= 0.0) || theta >= 1.0) throw DomainError("multiplier theta must lie in [0, 1)");
    const auto delta = to_double(bdf_delta_coeffs(k));

    const double min_re = verify_multiplier_positivity(delta, theta, 1.0);
    if (min_re < -kPositivityTolerance)
        throw CertificationError("Re delta(zeta)/(1 - theta zeta) reaches " + std::to_string(min_re) +
                                 " on the unit circle for k = " + std::to_string(k) +
                                 ", theta = " + std::to_string(theta));

    GMatrixCert cert;
    cert.k = k;
    cert.theta = theta;
    cert.mu = Eigen::VectorXd::Zero(k + 1);
    cert.mu[0] = 1.0;
    cert.mu[1] -= theta;

    // Coefficient of v_m in the two linear forms.
    Eigen::VectorXd a(k + 1), b(k + 1);
    for (int m = 0; m <= k; ++m) {
        a[m] = delta[k - m];
        b[m] = cert.mu[k - m];
    }
    const Eigen::MatrixXd sym = 0.5 * (a * b.transpose() + b * a.transpose());

    // z^k P(z), P the Laurent polynomial of the boundary form.
    std::vector<double> poly(2 * k + 1, 0.0);
    for (int p = 0; p <= k; ++p)
        for (int q = 0; q <= k; ++q) poly[p - q + k] += sym(p, q);
    const double top = poly.back();

    int multiplicity = 0;
    while (poly.size() >= 3 &&
           std::abs(detail::eval_real(poly, 1.0)) <= 1e-12 * detail::abs_sum(poly)) {
        poly = detail::deflate_double_root_at_one(poly);
        ++multiplicity;
    }

    std::vector<detail::Cplx> chosen(multiplicity, 1.0);
    std::vector<detail::Cplx> on_circle;
    constexpr double circle_band = 1e-7;
    for (const auto& r : detail::polynomial_roots(poly)) {
        const double m = std::abs(r);
        if (m > 1.0 + circle_band) chosen.push_back(r);
        else if (m >= 1.0 - circle_band) on_circle.push_back(r);
    }
    // Unit-circle roots of a nonnegative polynomial are even; merge each pair.
    std::sort(on_circle.begin(), on_circle.end(),
              [](const auto& x, const auto& y) { return std::arg(x) < std::arg(y); });
    if (on_circle.size() % 2 != 0)
        throw CertificationError("odd number of unit-circle roots: boundary form changes sign");
    for (std::size_t i = 0; i < on_circle.size(); i += 2) {
        const auto mid = 0.5 * (on_circle[i] + on_circle[i + 1]);
        chosen.push_back(mid / std::abs(mid));
    }
    if (static_cast<int>(chosen.size()) != k)
        throw CertificationError("spectral factor has " + std::to_string(chosen.size()) +
                                 " roots, expected " + std::to_string(k));

    // kappa(z) = lambda prod (z - r_j), lambda > 0.
    std::vector<detail::Cplx> monic{1.0};
    detail::Cplx prod_neg = 1.0;
    for (const auto& r : chosen) {
        std::vector<detail::Cplx> next(monic.size() + 1, 0.0);
        for (std::size_t i = 0; i < monic.size(); ++i) {
            next[i + 1] += monic[i];
            next[i] -= r * monic[i];
        }
        monic = std::move(next);
        prod_neg *= -r;
    }
    const double lambda_sq = top / prod_neg.real();
    if (!(lambda_sq > 0.0)) throw CertificationError("spectral factor normalisation is not positive");
    const double lambda = std::sqrt(lambda_sq);
    cert.kappa.resize(k + 1);
    for (int i = 0; i <= k; ++i) cert.kappa[i] = lambda * monic[i].real();

    // sym - kappa kappa^T = [0 0; 0 G] - [G 0; 0 0], solved down each diagonal.
    const Eigen::MatrixXd rest = sym - cert.kappa * cert.kappa.transpose();
    cert.g = Eigen::MatrixXd::Zero(k, k);
    for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q)
            cert.g(p, q) = (p > 0 && q > 0 ? cert.g(p - 1, q - 1) : 0.0) - rest(p, q);
    cert.g = 0.5 * (cert.g + cert.g.transpose()).eval();

    if (!(cert.min_eigenvalue() > 0.0))
        throw CertificationError("constructed G is not positive definite");
    return cert;
}

/// Inner product used to apply G blockwise to vector-valued windows.
template <typename Vec>
using InnerProduct = std::function<double(const Vec&, const Vec&)>;

/// |V|_G^2 = sum_{i,j} g_ij (v_i, v_j) for a window of k vectors (oldest first).
template <typename Vec>
double g_norm_sq(const GMatrixCert& cert, std::span<const Vec> window, const InnerProduct<Vec>& inner) {
    double s = 0.0;
    for (int i = 0; i < cert.k; ++i)
        for (int j = 0; j < cert.k; ++j) s += cert.g(i, j) * inner(window[i], window[j]);
    return s;
}

/// Relative defect of the Dahlquist identity for scalars v_0..v_k.
inline double dahlquist_identity_residual(const GMatrixCert& cert, std::span<const double> v) {
    const int k = cert.k;
    const auto delta = to_double(bdf_delta_coeffs(k));
    double lin_delta = 0.0, lin_mu = 0.0, lin_kappa = 0.0;
    for (int i = 0; i <= k; ++i) {
        lin_delta += delta[i] * v[k - i];
        lin_mu += cert.mu[i] * v[k - i];
        lin_kappa += cert.kappa[i] * v[i];
    }
    double g_new = 0.0, g_old = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            g_new += cert.g(i, j) * v[i + 1] * v[j + 1];
            g_old += cert.g(i, j) * v[i] * v[j];
        }
    const double lhs = lin_delta * lin_mu;
    const double rhs = g_new - g_old + lin_kappa * lin_kappa;
    const double scale = std::abs(lhs) + std::abs(g_new) + std::abs(g_old) + lin_kappa * lin_kappa;
    return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

/// Worst relative identity residual over `trials` Gaussian windows.
inline double dahlquist_identity_check(const GMatrixCert& cert, int trials = 1000, unsigned seed = 20240601u) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(cert.k + 1);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        for (auto& x : v) x = normal(rng);
        worst = std::max(worst, dahlquist_identity_residual(cert, v));
    }
    return worst;
}

/// Multiplier used for certificates and energy diagnostics: the tabulated
/// four-decimal value when it is admissible on the unit circle, otherwise the
/// smallest admissible value rounded up to five decimals.
inline double certified_theta(int k) {
    const double tabulated = multiplier_theta(k);
    const auto delta = to_double(bdf_delta_coeffs(k));
    if (multiplier_feasible(delta, tabulated)) return tabulated;
    const double inf = smallest_theta(k, 1e-8);
    return std::ceil(inf * 1e5) / 1e5;
}

}  // namespace qlbdf
