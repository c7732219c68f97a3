// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "qlbdf/qlbdf.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace qlbdf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0.0 && secs > limit_s) {
        o.pass = false;
        o.detail += " [runtime " + std::to_string(secs) + " s exceeds " + std::to_string(limit_s) + " s]";
    }
    std::printf("%s %2d %-34s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

StudyConfig m1_study(Variant v) {
    StudyConfig c;
    c.problem = "M1";
    c.grid_n = 255;
    c.orders = {1, 2, 3, 4, 5};
    c.variants = {v};
    c.taus = {1.0 / 10, 1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160};
    c.reference = ReferenceMode::fine_reference;
    c.refinement = 16;
    c.order_tolerance = 0.25;
    c.energy = true;
    return c;
}

// Minimum energy slack and positivity failures over all accepted runs.
struct RunLedger {
    double min_slack = std::numeric_limits<double>::infinity();
    int energy_runs = 0;
    int positivity_errors = 0;
    int m1_runs = 0;

    void absorb(const ConvergenceReport& r, bool is_m1) {
        for (const auto& g : r.groups) {
            if (g.error.find("not positive") != std::string::npos) ++positivity_errors;
            if (is_m1) m1_runs += static_cast<int>(g.rows.size());
            for (const auto& row : g.rows)
                if (!std::isnan(row.energy_min_slack)) {
                    min_slack = std::min(min_slack, row.energy_min_slack);
                    ++energy_runs;
                }
        }
    }
} ledger;

std::string slopes(const ConvergenceReport& r, bool proxies) {
    std::string s;
    for (const auto& g : r.groups) {
        s += " k" + std::to_string(g.k) + ":";
        if (!g.error.empty()) {
            s += "ERR(" + g.error + ")";
            continue;
        }
        const int a = proxies ? 1 : 0, b = proxies ? 3 : 2;
        s += fmt("%.2f", proxies ? g.slope_w1inf : g.slope_linf) + "/" + fmt("%.2f", proxies ? g.slope_l2h2 : g.slope_l2h1);
        const int total = static_cast<int>(g.rows.size());
        if (g.fit_points[a] < total || g.fit_points[b] < total)
            s += "(fit " + std::to_string(g.fit_points[a]) + "/" + std::to_string(g.fit_points[b]) + " of " +
                 std::to_string(total) + ")";
    }
    return s;
}

Eigen::MatrixXd dense_operator_1d(const CoefficientFn& a, const Eigen::VectorXd& w, double h) {
    const int n = static_cast<int>(w.size());
    auto val = [&](int i) { return (i < 0 || i >= n) ? 0.0 : w[i]; };
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double left = a(0.5 * (val(i - 1) + val(i))), right = a(0.5 * (val(i) + val(i + 1)));
        m(i, i) = (left + right) / (h * h);
        if (i > 0) m(i, i - 1) = -left / (h * h);
        if (i + 1 < n) m(i, i + 1) = -right / (h * h);
    }
    return m;
}

}  // namespace

int main() {
    std::printf("qlbdf acceptance suite\n");

    report(1, "coefficient exactness", 1.0, [] {
        for (int k = 1; k <= 6; ++k)
            if (!check_order_conditions(k).satisfied) return Outcome{false, "order conditions fail for k=" + std::to_string(k)};
        return Outcome{true, "k=1..6 zero rational residual"};
    });

    report(2, "stability angles", 5.0, [] {
        const double table[] = {90.0, 90.0, 86.03, 73.35, 51.84, 17.84};
        Outcome o{true, ""};
        for (int k = 1; k <= 6; ++k) {
            const double a = a_alpha_angle(k);
            o.detail += fmt(" %.3f", a);
            if (std::abs(a - table[k - 1]) > 0.05) o.pass = false;
        }
        return o;
    });

    report(3, "multiplier table", 10.0, [] {
        Outcome o{true, ""};
        for (int k = 3; k <= 5; ++k) {
            const double t = smallest_theta(k);
            o.detail += " theta" + std::to_string(k) + "=" + fmt("%.5f", t);
            if (std::abs(t - multiplier_theta(k)) > 5e-4) o.pass = false;
        }
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 5; ++k)
            worst = std::min(worst, verify_multiplier_positivity(k, multiplier_theta(k), 0.999, 1 << 14));
        o.detail += " minRe(r=0.999)=" + fmt("%.3e", worst);
        if (worst < -1e-9) o.pass = false;
        return o;
    });

    report(4, "Dahlquist certificate", 5.0, [] {
        Outcome o{true, ""};
        double worst_res = 0.0, min_eig = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 5; ++k) {
            const auto cert = dahlquist_g_matrix(k, certified_theta(k));
            min_eig = std::min(min_eig, cert.min_eigenvalue());
            worst_res = std::max(worst_res, dahlquist_identity_check(cert, 1000));
        }
        o.pass = min_eig > 0.0 && worst_res <= 1e-10;
        o.detail = "min eig " + fmt("%.3e", min_eig) + ", residual " + fmt("%.2e", worst_res) +
                   ", theta4 used " + fmt("%.5f", certified_theta(4)) + " (tabulated 0.2878 is infeasible by " +
                   fmt("%.1e", -verify_multiplier_positivity(4, 0.2878, 1.0)) + " on |zeta|=1)";
        return o;
    });

    report(5, "defect orders", 30.0, [] {
        StudyConfig c;
        c.problem = "M1";
        c.grid_n = 255;
        c.orders = {1, 2, 3, 4, 5};
        c.taus = {1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160, 1.0 / 320};
        c.order_tolerance = 0.25;
        const auto study = run_defect_study(c);
        Outcome o{study.all_pass(), ""};
        for (const auto& r : study.orders)
            o.detail += " k" + std::to_string(r.k) + ":" + fmt("%.2f", r.fully.slope) + "/" + fmt("%.2f", r.lin.slope);
        return o;
    });

    report(6, "convergence, linearly implicit", 120.0, [] {
        const auto r = run_convergence(m1_study(Variant::linearly_implicit));
        ledger.absorb(r, true);
        return Outcome{r.all_pass() && !r.any_error(), "Linf/l2H1 slopes" + slopes(r, false)};
    });

    report(7, "convergence, fully implicit", 300.0, [] {
        const auto r = run_convergence(m1_study(Variant::fully_implicit));
        ledger.absorb(r, true);
        int newton = 0;
        for (const auto& g : r.groups) newton = std::max(newton, g.newton_iterations_finest);

        StudyConfig m3 = m1_study(Variant::fully_implicit);
        m3.problem = "M3";
        m3.grid_n = 63;
        m3.refinement = 8;
        const auto r3 = run_convergence(m3);
        ledger.absorb(r3, false);
        bool proxies = !r3.any_error();
        for (const auto& g : r3.groups)
            proxies = proxies && std::abs(g.slope_w1inf - g.k) <= 0.3 && std::abs(g.slope_l2h2 - g.k) <= 0.3;

        Outcome o;
        o.pass = r.all_pass() && !r.any_error() && newton <= 5 && proxies;
        o.detail = "M1 Linf/l2H1" + slopes(r, false) + "; Newton its " + std::to_string(newton) +
                   "; M3 W1inf/l2H2" + slopes(r3, true);
        return o;
    });

    report(8, "energy diagnostic", 0.0, [] {
        Outcome o;
        o.pass = ledger.energy_runs > 0 && ledger.min_slack >= -1e-10;
        o.detail = std::to_string(ledger.energy_runs) + " runs, min slack " + fmt("%.3e", ledger.min_slack);
        return o;
    });

    report(9, "degenerate-coefficient robustness", 0.0, [] {
        Outcome o{true, ""};
        if (ledger.m1_runs == 0 || ledger.positivity_errors > 0) o.pass = false;
        o.detail = std::to_string(ledger.m1_runs) + " M1 runs with a=e^u, " + std::to_string(ledger.positivity_errors) +
                   " positivity errors; ";
        try {
            run(problems::adversarial(), make_scheme(2), Variant::linearly_implicit, 1.0 / 8);
            o.pass = false;
            o.detail += "adversarial run completed silently";
        } catch (const CoefficientPositivityError& e) {
            o.detail += "adversarial run stopped: ";
            o.detail += e.what();
            if (!e.step()) o.pass = false;
        }
        return o;
    });

    report(10, "oracle equivalence", 0.0, [] {
        // Linearly implicit BDF2 step on three nodes against a dense solve.
        const auto grid = Grid::unit_interval(3);
        const auto coeff = exp_coefficient();
        const double tau = 0.05;
        const StateVector u0{{0.3, -0.2, 0.7}}, u1{{0.4, 0.1, 0.5}}, f{{1.0, -2.0, 0.5}};
        const std::vector<StateVector> tail{u0, u1};
        const StateVector got = step_linearly_implicit(tail, make_scheme(2), tau, grid, coeff, f);
        const Eigen::MatrixXd sys =
            1.5 / tau * Eigen::MatrixXd::Identity(3, 3) + dense_operator_1d(coeff, 2.0 * u1 - u0, 0.25);
        const Eigen::VectorXd want = sys.fullPivLu().solve(f - (-2.0 * u1 + 0.5 * u0) / tau);
        const double lin_err = (got - want).cwiseAbs().maxCoeff();

        // Fully implicit Euler on one node (A(u)u = 8 e^{u/2} u) against bisection.
        const auto one = Grid::unit_interval(1);
        const std::vector<StateVector> start{StateVector::Ones(1)};
        const auto [u, diag] = step_fully_implicit(start, make_scheme(1), 0.1, one, coeff, StateVector::Zero(1));
        auto g = [](double v) { return (v - 1.0) / 0.1 + 8.0 * std::exp(v / 2.0) * v; };
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) > 0.0 ? hi : lo) = mid;
        }
        const double newton_err = std::abs(u[0] - 0.5 * (lo + hi));
        return Outcome{lin_err <= 1e-12 && newton_err <= 1e-10,
                       "dense " + fmt("%.1e", lin_err) + ", bisection " + fmt("%.1e", newton_err)};
    });

    std::printf("%s: %d of 10 criteria failed\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
