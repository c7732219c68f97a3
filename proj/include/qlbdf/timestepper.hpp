#pragma once

// Fully implicit (Newton) and linearly implicit k-step BDF time stepping for
// the semidiscrete system u' + A_h(u) u = f_h on the uniform partition
// t_n = n tau, with starting values u_0..u_{k-1} sampled from the exact solution.

#include "qlbdf/bdf_core.hpp"
#include "qlbdf/errors.hpp"
#include "qlbdf/g_matrix.hpp"
#include "qlbdf/history.hpp"
#include "qlbdf/mms.hpp"
#include "qlbdf/spatial_operator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qlbdf {

struct NewtonConfig {
    double tol_abs = 1e-12;
    double tol_rel = 1e-10;
    int max_iterations = 25;
};

struct NewtonStepDiag {
    std::size_t step = 0;
    int iterations = 0;
    std::vector<double> residuals;  // ||F|| at the predictor, then after each update
    bool converged = false;
};

struct NewtonDiag {
    std::vector<NewtonStepDiag> steps;

    int max_iterations() const {
        int m = 0;
        for (const auto& s : steps) m = std::max(m, s.iterations);
        return m;
    }
};

class NewtonNonconvergence : public StepError {
public:
    explicit NewtonNonconvergence(NewtonStepDiag diag)
        : StepError(diag.step, "Newton iteration did not converge in " + std::to_string(diag.iterations) +
                                   " iterations (last residual " +
                                   std::to_string(diag.residuals.empty() ? 0.0 : diag.residuals.back()) + ")"),
          diag_(std::move(diag)) {}
    const NewtonStepDiag& diag() const noexcept { return diag_; }

private:
    NewtonStepDiag diag_;
};

struct EnergyTrace {
    GMatrixCert cert;
    std::vector<std::size_t> steps;
    std::vector<double> g_norm_sq;  // |E_n|_G^2
    std::vector<double> slack;      // (e_n - theta e_{n-1}, sum delta_j e_{n-j}) - (|E_n|_G^2 - |E_{n-1}|_G^2)

    double min_slack() const {
        double m = std::numeric_limits<double>::infinity();
        for (double s : slack) m = std::min(m, s);
        return m;
    }
};

/// Solver objects reused across steps of one run.
struct StepWorkspace {
    SpdSolver spd;
    GeneralSolver general;
};

namespace detail {

inline void require_tail(std::span<const StateVector> tail, const BdfScheme& scheme, double tau) {
    if (static_cast<int>(tail.size()) != scheme.k)
        throw DomainError("time step needs exactly k = " + std::to_string(scheme.k) + " previous states");
    if (!(tau > 0.0)) throw DomainError("time step tau must be positive");
}

// f_n - (1/tau) sum_{j>=1} delta_j u_{n-j}; tail is oldest first, tail[k-j] = u_{n-j}.
inline StateVector history_rhs(std::span<const StateVector> tail, const BdfScheme& scheme, double tau,
                               const StateVector& f) {
    StateVector rhs = f;
    const int k = scheme.k;
    for (int j = 1; j <= k; ++j) rhs -= (scheme.delta_d[j] / tau) * tail[k - j];
    return rhs;
}

inline StateVector extrapolate(std::span<const StateVector> tail, const BdfScheme& scheme) {
    const int k = scheme.k;
    StateVector w = scheme.gamma_d[0] * tail[k - 1];
    for (int j = 1; j < k; ++j) w += scheme.gamma_d[j] * tail[k - 1 - j];
    return w;
}

inline SparseMatrix shifted(const SparseMatrix& a, double shift) {
    SparseMatrix id(a.rows(), a.cols());
    id.setIdentity();
    return SparseMatrix(a + shift * id);
}

}  // namespace detail

/// One linearly implicit step: (delta_0/tau + A_h(u_hat)) u_n = f_n - (1/tau) sum_{j>=1} delta_j u_{n-j},
/// u_hat = sum_j gamma_j u_{n-j-1}. `tail` holds u_{n-k}..u_{n-1}, oldest first.
inline StateVector step_linearly_implicit(std::span<const StateVector> tail, const BdfScheme& scheme, double tau,
                                          const Grid& grid, const CoefficientFn& coeff, const StateVector& f,
                                          StepWorkspace* ws = nullptr) {
    detail::require_tail(tail, scheme, tau);
    const StateVector rhs = detail::history_rhs(tail, scheme, tau, f);
    const auto op = assemble_operator(grid, coeff, detail::extrapolate(tail, scheme));
    const SparseMatrix system = detail::shifted(op.matrix, scheme.delta_d[0] / tau);
    if (ws) return ws->spd.solve(system, rhs);
    return solve_linear(system, rhs);
}

/// One fully implicit step by Newton's method on
/// F(u) = (delta_0/tau) u + A_h(u) u - rhs, started from the linearly implicit
/// step. Always performs at least one Newton update.
inline std::pair<StateVector, NewtonStepDiag> step_fully_implicit(std::span<const StateVector> tail,
                                                                  const BdfScheme& scheme, double tau,
                                                                  const Grid& grid, const CoefficientFn& coeff,
                                                                  const StateVector& f, const NewtonConfig& cfg = {},
                                                                  StepWorkspace* ws = nullptr) {
    detail::require_tail(tail, scheme, tau);
    StepWorkspace local;
    StepWorkspace& work = ws ? *ws : local;
    const double shift = scheme.delta_d[0] / tau;
    const StateVector rhs = detail::history_rhs(tail, scheme, tau, f);
    const double stop = cfg.tol_abs + cfg.tol_rel * rhs.norm();

    StateVector u = step_linearly_implicit(tail, scheme, tau, grid, coeff, f, &work);
    SparseMatrix a_mat;
    auto residual = [&](const StateVector& v) {
        a_mat = assemble_operator(grid, coeff, v).matrix;
        return StateVector(shift * v + a_mat * v - rhs);
    };

    NewtonStepDiag diag;
    StateVector r = residual(u);
    diag.residuals.push_back(r.norm());
    while (true) {
        if (diag.iterations >= cfg.max_iterations) throw NewtonNonconvergence(diag);
        const SparseMatrix jac =
            detail::shifted(SparseMatrix(a_mat + assemble_jacobian_correction(grid, coeff, u, u)), shift);
        u -= work.general.solve(jac, r);
        ++diag.iterations;
        r = residual(u);
        diag.residuals.push_back(r.norm());
        if (!std::isfinite(diag.residuals.back())) throw NewtonNonconvergence(diag);
        if (diag.residuals.back() <= stop) break;
    }
    diag.converged = true;
    return {std::move(u), std::move(diag)};
}

/// u_0..u_{k-1}: exact-solution samples at t_j = j tau.
inline std::vector<StateVector> starting_values(const ManufacturedProblem& problem, const BdfScheme& scheme,
                                                double tau) {
    std::vector<StateVector> out;
    for (int j = 0; j < scheme.k; ++j) out.push_back(sample_on_grid(problem, static_cast<Real>(j) * tau));
    return out;
}

struct RunOptions {
    ForcingMode forcing = ForcingMode::discrete;
    NewtonConfig newton;
    bool energy = false;
    std::optional<double> theta;  // multiplier override for the energy diagnostic
    std::size_t stride = 1;       // keep every stride-th state
};

struct RunResult {
    SolutionHistory history;
    std::optional<EnergyTrace> energy;
    std::optional<NewtonDiag> newton;
};

/// Number of steps N with N tau = T; throws if T/tau is not an integer.
inline std::size_t step_count(double T, double tau) {
    if (!(tau > 0.0)) throw DomainError("time step tau must be positive");
    const double ratio = T / tau;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
        throw DomainError("T / tau = " + std::to_string(ratio) + " is not an integer");
    return static_cast<std::size_t>(n);
}

inline RunResult run(const ManufacturedProblem& problem, const BdfScheme& scheme, Variant variant, double tau,
                     const RunOptions& opts = {}) {
    const std::size_t N = step_count(problem.T, tau);
    const std::size_t k = static_cast<std::size_t>(scheme.k);
    if (N < k) throw DomainError("horizon holds fewer than k steps");
    if (opts.stride == 0) throw DomainError("stride must be positive");

    RunResult result;
    auto& hist = result.history;
    hist.grid = problem.grid;
    hist.scheme = scheme;
    hist.variant = variant;
    hist.tau = tau;
    hist.steps = N;
    hist.stride = opts.stride;

    auto time_of = [tau](std::size_t n) { return static_cast<Real>(n) * static_cast<Real>(tau); };
    auto keep = [&](std::size_t n, const StateVector& u) {
        if (n % opts.stride == 0) {
            hist.times.push_back(static_cast<double>(time_of(n)));
            hist.states.push_back(u);
        }
    };

    std::deque<StateVector> window;
    for (std::size_t j = 0; j < k; ++j) {
        window.push_back(sample_on_grid(problem, time_of(j)));
        keep(j, window.back());
    }

    std::deque<StateVector> errors;
    if (opts.energy) {
        if (!scheme.energy_supported())
            throw UnsupportedError("energy diagnostics need a multiplier; none exists for k = " +
                                   std::to_string(scheme.k));
        result.energy = EnergyTrace{dahlquist_g_matrix(scheme.k, opts.theta.value_or(certified_theta(scheme.k))),
                                    {}, {}, {}};
        for (const auto& u : window) errors.push_back(StateVector::Zero(u.size()));
    }
    if (variant == Variant::fully_implicit) result.newton.emplace();

    const double vol = problem.grid.cell_volume();
    const InnerProduct<StateVector> inner = [vol](const StateVector& x, const StateVector& y) {
        return vol * x.dot(y);
    };

    StepWorkspace ws;
    std::vector<StateVector> tail(k);
    for (std::size_t n = k; n <= N; ++n) {
        const Real t = time_of(n);
        std::copy(window.begin(), window.end(), tail.begin());
        StateVector u;
        try {
            const StateVector f = grid_forcing(problem, t, opts.forcing);
            if (variant == Variant::linearly_implicit) {
                u = step_linearly_implicit(tail, scheme, tau, problem.grid, problem.coeff, f, &ws);
            } else {
                auto [un, diag] =
                    step_fully_implicit(tail, scheme, tau, problem.grid, problem.coeff, f, opts.newton, &ws);
                diag.step = n;
                result.newton->steps.push_back(std::move(diag));
                u = std::move(un);
            }
        } catch (const CoefficientPositivityError& e) {
            throw e.at_step(n);
        } catch (const NewtonNonconvergence& e) {
            auto d = e.diag();
            d.step = n;
            throw NewtonNonconvergence(d);
        } catch (const StepError&) {
            throw;
        } catch (const std::exception& e) {
            throw StepError(n, e.what());
        }

        if (result.energy) {
            errors.push_back(u - sample_on_grid(problem, t));
            // errors holds e_{n-k}..e_n.
            const auto& cert = result.energy->cert;
            StateVector combo = StateVector::Zero(u.size());
            for (std::size_t j = 0; j <= k; ++j) combo += scheme.delta_d[j] * errors[k - j];
            const StateVector tested = errors[k] - cert.theta * errors[k - 1];
            std::vector<StateVector> now(errors.begin() + 1, errors.end());
            std::vector<StateVector> before(errors.begin(), errors.end() - 1);
            const double g_now = g_norm_sq<StateVector>(cert, now, inner);
            const double g_before = g_norm_sq<StateVector>(cert, before, inner);
            result.energy->steps.push_back(n);
            result.energy->g_norm_sq.push_back(g_now);
            result.energy->slack.push_back(inner(tested, combo) - (g_now - g_before));
            errors.pop_front();
        }

        keep(n, u);
        window.pop_front();
        window.push_back(std::move(u));
    }
    return result;
}

}  // namespace qlbdf
