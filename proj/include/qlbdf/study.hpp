#pragma once

// Configuration-driven studies behind the command line tool: coefficient
// tables, multiplier/G certification, defect sweeps and convergence sweeps.

#include "qlbdf/bdf_core.hpp"
#include "qlbdf/consistency.hpp"
#include "qlbdf/errors.hpp"
#include "qlbdf/g_matrix.hpp"
#include "qlbdf/mms.hpp"
#include "qlbdf/norms.hpp"
#include "qlbdf/timestepper.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <future>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace qlbdf {

enum class ReferenceMode { exact_mms, fine_reference };

struct StudyConfig {
    std::string problem = "M1";
    std::vector<int> orders{1, 2, 3, 4, 5};
    std::vector<Variant> variants{Variant::linearly_implicit};
    std::vector<double> taus{0.1, 0.05, 0.025, 0.0125, 0.00625};
    ReferenceMode reference = ReferenceMode::fine_reference;
    int refinement = 16;
    int grid_n = 0;  // problem default when 0
    ForcingMode forcing = ForcingMode::discrete;
    double order_tolerance = 0.25;
    bool energy = true;
    NewtonConfig newton;
    int jobs = 1;
    std::string output_dir = ".";
};

enum class ExitCode : int { success = 0, failure = 1, usage = 2 };

// ---------------------------------------------------------------------------
// Formatting

namespace detail {

inline std::string fmt_sci(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

inline std::string fmt_fixed(double v, int digits) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double parse_number(const std::string& field, const std::string& text) {
    // Accepts plain reals and fractions such as 1/160.
    auto parse_real = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw ConfigError(field, "'" + text + "' is not a number");
        }
        if (used != t.size()) throw ConfigError(field, "'" + text + "' is not a number");
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_real(text);
    const double num = parse_real(text.substr(0, slash));
    const double den = parse_real(text.substr(slash + 1));
    if (den == 0.0) throw ConfigError(field, "division by zero in '" + text + "'");
    return num / den;
}

inline int parse_int(const std::string& field, const std::string& text) {
    const double v = parse_number(field, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(field, "'" + text + "' is not an integer");
    return static_cast<int>(v);
}

inline bool parse_bool(const std::string& field, const std::string& text) {
    if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
    if (text == "false" || text == "no" || text == "off" || text == "0") return false;
    throw ConfigError(field, "'" + text + "' is not a boolean");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Configuration

inline Variant parse_variant(const std::string& field, const std::string& s) {
    if (s == "linear" || s == "linearly-implicit" || s == "linearly_implicit") return Variant::linearly_implicit;
    if (s == "fully" || s == "fully-implicit" || s == "fully_implicit") return Variant::fully_implicit;
    throw ConfigError(field, "unknown variant '" + s + "' (expected linear or fully)");
}

inline void validate(const StudyConfig& c) {
    if (c.orders.empty()) throw ConfigError("study.orders", "at least one order is required");
    for (int k : c.orders)
        if (k < kMinOrder || k > kMaxOrder) throw ConfigError("study.orders", "order " + std::to_string(k) + " outside 1..6");
    if (c.variants.empty()) throw ConfigError("study.variants", "at least one variant is required");
    if (c.taus.size() < 2) throw ConfigError("study.taus", "at least two step sizes are required");
    for (std::size_t i = 0; i < c.taus.size(); ++i) {
        if (!(c.taus[i] > 0.0)) throw ConfigError("study.taus", "step sizes must be positive");
        if (i > 0 && !(c.taus[i] < c.taus[i - 1])) throw ConfigError("study.taus", "step sizes must strictly decrease");
        if (i > 1) {
            const double r0 = c.taus[i - 1] / c.taus[i - 2], r1 = c.taus[i] / c.taus[i - 1];
            if (std::abs(r0 - r1) > 1e-12 * r0) throw ConfigError("study.taus", "step sizes must form a geometric sequence");
        }
    }
    if (c.reference == ReferenceMode::fine_reference && c.refinement < 8)
        throw ConfigError("study.refinement", "fine-reference mode needs refinement >= 8");
    if (!(c.order_tolerance > 0.0)) throw ConfigError("study.order_tolerance", "must be positive");
    if (c.jobs < 1) throw ConfigError("study.jobs", "must be at least 1");
}

/// Parses the INI-style study file:
///
///   [study]        problem, orders, variants, taus (or tau_max/tau_ratio/tau_count),
///                  reference, refinement, forcing, order_tolerance, jobs
///   [grid]         n
///   [diagnostics]  energy
///   [newton]       tol_abs, tol_rel, max_iterations
///   [output]       dir
///
/// Syntax errors carry the line number; semantic errors name the field.
inline StudyConfig parse_study_config(std::istream& in, const std::string& source = "<config>") {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", source + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    static const std::map<std::string, std::set<std::string>> known{
        {"study", {"problem", "orders", "variants", "taus", "tau_max", "tau_ratio", "tau_count", "reference",
                   "refinement", "forcing", "order_tolerance", "jobs"}},
        {"grid", {"n"}},
        {"diagnostics", {"energy"}},
        {"newton", {"tol_abs", "tol_rel", "max_iterations"}},
        {"output", {"dir"}},
    };
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) throw ConfigError(section, "unknown section");
        if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a section");
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }

    StudyConfig c;
    auto get = [&](const std::string& path) { return tree.get_optional<std::string>(path); };

    if (auto v = get("study.problem")) c.problem = *v;
    if (auto v = get("study.orders")) {
        c.orders.clear();
        for (const auto& s : detail::split_list(*v)) c.orders.push_back(detail::parse_int("study.orders", s));
    }
    if (auto v = get("study.variants")) {
        c.variants.clear();
        for (const auto& s : detail::split_list(*v)) c.variants.push_back(parse_variant("study.variants", s));
    }
    if (auto v = get("study.taus")) {
        if (get("study.tau_max")) throw ConfigError("study.taus", "give either taus or tau_max/tau_ratio/tau_count");
        c.taus.clear();
        for (const auto& s : detail::split_list(*v)) c.taus.push_back(detail::parse_number("study.taus", s));
    } else if (auto v = get("study.tau_max")) {
        const double tau_max = detail::parse_number("study.tau_max", *v);
        const double ratio = detail::parse_number("study.tau_ratio", get("study.tau_ratio").value_or("2"));
        const int count = detail::parse_int("study.tau_count", get("study.tau_count").value_or("5"));
        if (!(ratio > 1.0)) throw ConfigError("study.tau_ratio", "must exceed 1");
        if (count < 2) throw ConfigError("study.tau_count", "must be at least 2");
        c.taus.clear();
        for (int i = 0; i < count; ++i) c.taus.push_back(tau_max / std::pow(ratio, i));
    }
    if (auto v = get("study.reference")) {
        if (*v == "fine-reference") c.reference = ReferenceMode::fine_reference;
        else if (*v == "exact-mms") c.reference = ReferenceMode::exact_mms;
        else throw ConfigError("study.reference", "expected fine-reference or exact-mms, got '" + *v + "'");
    }
    if (auto v = get("study.refinement")) c.refinement = detail::parse_int("study.refinement", *v);
    if (auto v = get("study.forcing")) {
        if (*v == "discrete") c.forcing = ForcingMode::discrete;
        else if (*v == "continuum") c.forcing = ForcingMode::continuum;
        else throw ConfigError("study.forcing", "expected discrete or continuum, got '" + *v + "'");
    }
    if (auto v = get("study.order_tolerance")) c.order_tolerance = detail::parse_number("study.order_tolerance", *v);
    if (auto v = get("study.jobs")) c.jobs = detail::parse_int("study.jobs", *v);
    if (auto v = get("grid.n")) {
        c.grid_n = detail::parse_int("grid.n", *v);
        if (c.grid_n < 1) throw ConfigError("grid.n", "must be at least 1");
    }
    if (auto v = get("diagnostics.energy")) c.energy = detail::parse_bool("diagnostics.energy", *v);
    if (auto v = get("newton.tol_abs")) c.newton.tol_abs = detail::parse_number("newton.tol_abs", *v);
    if (auto v = get("newton.tol_rel")) c.newton.tol_rel = detail::parse_number("newton.tol_rel", *v);
    if (auto v = get("newton.max_iterations")) c.newton.max_iterations = detail::parse_int("newton.max_iterations", *v);
    if (auto v = get("output.dir")) c.output_dir = *v;

    // Resolve the label early so a typo lists the catalogue.
    (void)find_problem(c.problem, 1);
    validate(c);
    return c;
}

// ---------------------------------------------------------------------------
// Coefficient table

inline void write_coefficient_table(std::ostream& os, int k_lo, int k_hi) {
    char line[256];
    std::snprintf(line, sizeof line, "%-3s %-11s %-8s %-40s %s\n", "k", "alpha(deg)", "theta", "delta_0..delta_k",
                  "gamma_0..gamma_{k-1}");
    os << line;
    for (int k = k_lo; k <= k_hi; ++k) {
        const auto s = make_scheme(k);
        std::string d, g;
        for (const auto& r : s.delta) d += (d.empty() ? "" : " ") + to_string(r);
        for (const auto& r : s.gamma) g += (g.empty() ? "" : " ") + to_string(r);
        const std::string theta = s.theta ? detail::fmt_fixed(*s.theta, 4) : "none";
        std::snprintf(line, sizeof line, "%-3d %-11s %-8s %-40s %s\n", k, detail::fmt_fixed(s.alpha_deg, 2).c_str(),
                      theta.c_str(), d.c_str(), g.c_str());
        os << line;
    }
    if (k_hi >= 6) os << "note: no theta_6 multiplier exists; k = 6 runs without energy diagnostics\n";
}

/// CSV with columns k,j,numerator,denominator.
inline void write_coefficient_csv(std::ostream& os, int k_lo, int k_hi, bool gamma) {
    os << "k,j,numerator,denominator\n";
    for (int k = k_lo; k <= k_hi; ++k) {
        const auto c = gamma ? bdf_gamma_coeffs(k) : bdf_delta_coeffs(k);
        for (std::size_t j = 0; j < c.size(); ++j)
            os << k << ',' << j << ',' << c[j].numerator() << ',' << c[j].denominator() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Certification

struct CertificationRow {
    int k = 0;
    double theta_tabulated = 0.0;
    double theta_tested = 0.0;        // tabulated or user override
    double min_re_disk = 0.0;         // radius 0.999
    double min_re_circle = 0.0;       // radius 1
    double theta_smallest = std::numeric_limits<double>::quiet_NaN();  // k >= 3
    double theta_certified = 0.0;     // theta used for G
    double g_min_eig = std::numeric_limits<double>::quiet_NaN();
    double g_max_eig = std::numeric_limits<double>::quiet_NaN();
    double identity_residual = std::numeric_limits<double>::quiet_NaN();
    std::string failure;
    bool pass = false;
};

inline constexpr double kDiskPositivityTolerance = 1e-9;
inline constexpr double kThetaTableTolerance = 5e-4;
inline constexpr double kIdentityTolerance = 1e-10;

inline CertificationRow certify_order(int k, std::optional<double> theta_override = std::nullopt) {
    CertificationRow row;
    row.k = k;
    row.theta_tabulated = multiplier_theta(k);
    row.theta_tested = theta_override.value_or(row.theta_tabulated);
    std::vector<std::string> failures;
    row.min_re_disk = verify_multiplier_positivity(k, row.theta_tested, 0.999);
    row.min_re_circle = verify_multiplier_positivity(k, row.theta_tested, 1.0);
    if (row.min_re_disk < -kDiskPositivityTolerance) failures.push_back("Re delta/mu negative inside the disk");
    if (k >= 3) {
        row.theta_smallest = smallest_theta(k, 1e-5);
        if (std::abs(row.theta_smallest - row.theta_tabulated) > kThetaTableTolerance)
            failures.push_back("bisected theta differs from the table");
    }
    row.theta_certified = theta_override.value_or(certified_theta(k));
    try {
        const auto cert = dahlquist_g_matrix(k, row.theta_certified);
        row.g_min_eig = cert.min_eigenvalue();
        row.g_max_eig = cert.max_eigenvalue();
        row.identity_residual = dahlquist_identity_check(cert, 1000);
        if (!(row.g_min_eig > 0.0)) failures.push_back("G not positive definite");
        if (!(row.identity_residual <= kIdentityTolerance)) failures.push_back("identity residual too large");
    } catch (const CertificationError& e) {
        failures.push_back(e.what());
    }
    for (const auto& f : failures) row.failure += (row.failure.empty() ? "" : "; ") + f;
    row.pass = failures.empty();
    return row;
}

inline void write_certification_table(std::ostream& os, const std::vector<CertificationRow>& rows) {
    char line[512];
    std::snprintf(line, sizeof line, "%-3s %-8s %-14s %-14s %-10s %-9s %-12s %-12s %-12s %s\n", "k", "theta",
                  "minRe(r=.999)", "minRe(r=1)", "theta_min", "theta_G", "G_min_eig", "G_max_eig", "G_residual",
                  "status");
    os << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-3d %-8s %-14s %-14s %-10s %-9s %-12s %-12s %-12s %s\n", r.k,
                      detail::fmt_fixed(r.theta_tested, 4).c_str(), detail::fmt_sci(r.min_re_disk).c_str(),
                      detail::fmt_sci(r.min_re_circle).c_str(),
                      std::isnan(r.theta_smallest) ? "-" : detail::fmt_fixed(r.theta_smallest, 6).c_str(),
                      detail::fmt_fixed(r.theta_certified, 5).c_str(), detail::fmt_sci(r.g_min_eig).c_str(),
                      detail::fmt_sci(r.g_max_eig).c_str(), detail::fmt_sci(r.identity_residual).c_str(),
                      r.pass ? "ok" : ("FAIL: " + r.failure).c_str());
        os << line;
    }
}

/// Certificate dump: rows (k, kind, i, j, value) for G entries and kappa.
inline void write_certificate_csv(std::ostream& os, const std::vector<int>& orders) {
    os << "k,kind,i,j,value\n";
    char buf[64];
    for (int k : orders) {
        const auto cert = dahlquist_g_matrix(k, certified_theta(k));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", cert.g(i, j));
                os << k << ",g," << i + 1 << ',' << j + 1 << ',' << buf << '\n';
            }
        for (int j = 0; j <= k; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", cert.kappa[j]);
            os << k << ",kappa,," << j << ',' << buf << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
    int k = 0;
    Variant variant = Variant::linearly_implicit;
    double tau = 0.0;
    ErrorReport errors;
    double order_linf = std::numeric_limits<double>::quiet_NaN();
    double order_l2h1 = std::numeric_limits<double>::quiet_NaN();
    int newton_max_iterations = 0;
    double energy_min_slack = std::numeric_limits<double>::quiet_NaN();
    bool pass = false;
};

struct ConvergenceGroup {
    int k = 0;
    Variant variant = Variant::linearly_implicit;
    double slope_linf = std::numeric_limits<double>::quiet_NaN();
    double slope_w1inf = std::numeric_limits<double>::quiet_NaN();
    double slope_l2h1 = std::numeric_limits<double>::quiet_NaN();
    double slope_l2h2 = std::numeric_limits<double>::quiet_NaN();
    double energy_min_slack = std::numeric_limits<double>::quiet_NaN();
    int newton_iterations_finest = 0;
    std::optional<ErrorReport> noise_floor;  // reference vs exact samples, see run_convergence_group
    std::array<int, 4> fit_points{};         // step sizes entering each slope (Linf, W1inf, l2H1, l2H2)
    std::string error;  // non-empty when a run failed
    bool pass = false;
    std::vector<ConvergenceRow> rows;
};

struct ConvergenceReport {
    std::vector<ConvergenceGroup> groups;

    bool all_pass() const {
        return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.pass; });
    }
    bool any_error() const {
        return std::any_of(groups.begin(), groups.end(), [](const auto& g) { return !g.error.empty(); });
    }
};

/// Optional per-run hooks used by the CLI to dump trajectories and energy traces.
struct ConvergenceHooks {
    std::function<void(int k, Variant v, std::size_t tau_index, const RunResult&)> on_run;
};

/// Errors below this multiple of the measured noise floor are left out of slope fits.
inline constexpr double kNoiseFloorFactor = 2.0;
inline constexpr std::size_t kMinFitPoints = 3;

/// Least-squares slope over the points whose error clears factor * floor.
inline std::pair<double, int> fitted_slope(const std::vector<double>& taus, const std::vector<double>& errs,
                                           double floor) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < taus.size(); ++i)
        if (errs[i] > kNoiseFloorFactor * floor) {
            x.push_back(taus[i]);
            y.push_back(errs[i]);
        }
    const int used = static_cast<int>(x.size());
    if (x.size() < kMinFitPoints) return {std::numeric_limits<double>::quiet_NaN(), used};
    return {log_log_slope(x, y), used};
}

inline double pair_order(double e_coarse, double e_fine, double tau_coarse, double tau_fine) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(e_coarse / e_fine) / std::log(tau_coarse / tau_fine);
}

inline ConvergenceGroup run_convergence_group(const StudyConfig& cfg, int k, Variant variant,
                                              const ConvergenceHooks& hooks = {}) {
    ConvergenceGroup group;
    group.k = k;
    group.variant = variant;
    const auto problem = find_problem(cfg.problem, cfg.grid_n);
    const auto scheme = make_scheme(k);

    RunOptions opts;
    opts.forcing = cfg.forcing;
    opts.newton = cfg.newton;
    opts.energy = cfg.energy && scheme.energy_supported();

    std::size_t current_tau = 0;
    try {
        std::optional<RunResult> reference;
        std::vector<std::size_t> ratios;
        if (cfg.reference == ReferenceMode::fine_reference) {
            const double tau_ref = cfg.taus.back() / cfg.refinement;
            std::size_t stride = 0;
            for (double tau : cfg.taus) {
                const double r = tau / tau_ref;
                const double rr = std::round(r);
                if (std::abs(r - rr) > 1e-9 * rr)
                    throw ConfigError("study.taus", "step sizes must be integer multiples of the reference step");
                ratios.push_back(static_cast<std::size_t>(rr));
                stride = std::gcd(stride, ratios.back());
            }
            RunOptions ref_opts = opts;
            ref_opts.energy = false;
            ref_opts.stride = stride;
            reference = run(problem, scheme, variant, tau_ref, ref_opts);
            // With discrete forcing the exact samples solve the semidiscrete
            // system, so their distance to the reference is rounding plus the
            // reference's own temporal error: the resolution limit of the study.
            if (cfg.forcing == ForcingMode::discrete) group.noise_floor = error_report(reference->history, problem);
        }

        for (std::size_t i = 0; i < cfg.taus.size(); ++i) {
            current_tau = i;
            const double tau = cfg.taus[i];
            const auto result = run(problem, scheme, variant, tau, opts);
            if (hooks.on_run) hooks.on_run(k, variant, i, result);

            ConvergenceRow row;
            row.k = k;
            row.variant = variant;
            row.tau = tau;
            if (reference) {
                const std::size_t ratio = ratios[i];
                row.errors = error_report(result.history, [&](std::size_t n) -> StateVector {
                    return reference->history.at_step(n * ratio);
                });
            } else {
                row.errors = error_report(result.history, problem);
            }
            if (result.newton) row.newton_max_iterations = result.newton->max_iterations();
            if (result.energy) row.energy_min_slack = result.energy->min_slack();
            if (!group.rows.empty()) {
                const auto& prev = group.rows.back();
                row.order_linf = pair_order(prev.errors.max_linf, row.errors.max_linf, prev.tau, tau);
                row.order_l2h1 = pair_order(prev.errors.l2_h1, row.errors.l2_h1, prev.tau, tau);
            }
            group.rows.push_back(row);
        }
    } catch (const std::exception& e) {
        group.error = "k=" + std::to_string(k) + " " + to_string(variant) + " tau=" +
                      detail::fmt_g(cfg.taus[current_tau]) + ": " + e.what();
        return group;
    }

    std::vector<double> taus, linf, w1, h1, h2;
    for (const auto& r : group.rows) {
        taus.push_back(r.tau);
        linf.push_back(r.errors.max_linf);
        w1.push_back(r.errors.max_w1inf);
        h1.push_back(r.errors.l2_h1);
        h2.push_back(r.errors.l2_h2);
        if (!std::isnan(r.energy_min_slack))
            group.energy_min_slack = std::isnan(group.energy_min_slack) ? r.energy_min_slack
                                                                        : std::min(group.energy_min_slack, r.energy_min_slack);
    }
    const ErrorReport floor = group.noise_floor.value_or(ErrorReport{});
    std::tie(group.slope_linf, group.fit_points[0]) = fitted_slope(taus, linf, floor.max_linf);
    std::tie(group.slope_w1inf, group.fit_points[1]) = fitted_slope(taus, w1, floor.max_w1inf);
    std::tie(group.slope_l2h1, group.fit_points[2]) = fitted_slope(taus, h1, floor.l2_h1);
    std::tie(group.slope_l2h2, group.fit_points[3]) = fitted_slope(taus, h2, floor.l2_h2);
    group.newton_iterations_finest = group.rows.back().newton_max_iterations;
    group.pass = std::abs(group.slope_linf - k) <= cfg.order_tolerance &&
                 std::abs(group.slope_l2h1 - k) <= cfg.order_tolerance;
    for (auto& r : group.rows) r.pass = group.pass;
    return group;
}

/// Runs every (k, variant) group; groups may run concurrently, the report is
/// assembled in configuration order.
inline ConvergenceReport run_convergence(const StudyConfig& cfg, const ConvergenceHooks& hooks = {}) {
    validate(cfg);
    std::vector<std::pair<int, Variant>> points;
    for (int k : cfg.orders)
        for (Variant v : cfg.variants) points.emplace_back(k, v);

    ConvergenceReport report;
    report.groups.resize(points.size());
    if (cfg.jobs <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i)
            report.groups[i] = run_convergence_group(cfg, points[i].first, points[i].second, hooks);
        return report;
    }
    for (std::size_t start = 0; start < points.size(); start += cfg.jobs) {
        std::vector<std::future<ConvergenceGroup>> batch;
        const std::size_t end = std::min(points.size(), start + static_cast<std::size_t>(cfg.jobs));
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(std::async(std::launch::async, [&, i] {
                return run_convergence_group(cfg, points[i].first, points[i].second, hooks);
            }));
        for (std::size_t i = start; i < end; ++i) report.groups[i] = batch[i - start].get();
    }
    return report;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
    os << "k,variant,tau,err_Linf,err_W1inf,err_l2H1,err_l2H2,order_Linf,order_l2H1,pass\n";
    for (const auto& g : report.groups)
        for (const auto& r : g.rows)
            os << r.k << ',' << to_string(r.variant) << ',' << detail::fmt_g(r.tau) << ','
               << detail::fmt_sci(r.errors.max_linf) << ',' << detail::fmt_sci(r.errors.max_w1inf) << ','
               << detail::fmt_sci(r.errors.l2_h1) << ',' << detail::fmt_sci(r.errors.l2_h2) << ','
               << detail::fmt_fixed(r.order_linf, 4) << ',' << detail::fmt_fixed(r.order_l2h1, 4) << ','
               << (r.pass ? "true" : "false") << '\n';
}

inline void write_convergence_summary(std::ostream& os, const ConvergenceReport& report) {
    for (const auto& g : report.groups) {
        if (!g.error.empty()) {
            os << "k=" << g.k << ' ' << to_string(g.variant) << ": ERROR " << g.error << '\n';
            continue;
        }
        os << "k=" << g.k << ' ' << to_string(g.variant) << ": slope Linf " << detail::fmt_fixed(g.slope_linf, 3)
           << ", W1inf " << detail::fmt_fixed(g.slope_w1inf, 3) << ", l2H1 " << detail::fmt_fixed(g.slope_l2h1, 3)
           << ", l2H2 " << detail::fmt_fixed(g.slope_l2h2, 3);
        if (g.variant == Variant::fully_implicit) os << ", Newton its (finest tau) " << g.newton_iterations_finest;
        if (!std::isnan(g.energy_min_slack)) os << ", min energy slack " << detail::fmt_sci(g.energy_min_slack);
        const int total = static_cast<int>(g.rows.size());
        if (std::any_of(g.fit_points.begin(), g.fit_points.end(), [&](int n) { return n < total; })) {
            os << ", fit points " << g.fit_points[0] << '/' << g.fit_points[1] << '/' << g.fit_points[2] << '/'
               << g.fit_points[3] << " of " << total << " (noise floor";
            for (double f : {g.noise_floor->max_linf, g.noise_floor->max_w1inf, g.noise_floor->l2_h1,
                             g.noise_floor->l2_h2})
                os << ' ' << detail::fmt_sci(f);
            os << ')';
        }
        os << (g.pass ? "  [pass]" : "  [FAIL]") << '\n';
    }
}

// ---------------------------------------------------------------------------
// Defect study

struct DefectRow {
    int k = 0;
    double tau = 0.0;
    double max_fully = 0.0;
    double max_lin = 0.0;
    double form_gap = 0.0;
};

struct DefectStudy {
    std::vector<DefectRow> rows;
    struct Order {
        int k = 0;
        OrderEstimate fully;
        OrderEstimate lin;
        bool pass = false;
    };
    std::vector<Order> orders;

    bool all_pass() const {
        return std::all_of(orders.begin(), orders.end(), [](const auto& o) { return o.pass; });
    }
};

inline DefectStudy run_defect_study(const StudyConfig& cfg) {
    validate(cfg);
    const auto problem = find_problem(cfg.problem, cfg.grid_n);
    DefectStudy study;
    for (int k : cfg.orders) {
        const auto scheme = make_scheme(k);
        std::vector<DefectSeries> fully, lin;
        for (double tau : cfg.taus) {
            fully.push_back(defect_fully(problem, scheme, tau));
            lin.push_back(defect_linearly(problem, scheme, tau));
            study.rows.push_back({k, tau, fully.back().max_linf(), lin.back().max_linf(), fully.back().form_gap});
        }
        DefectStudy::Order o;
        o.k = k;
        o.fully = defect_order(fully);
        o.lin = defect_order(lin);
        auto ok = [&](const OrderEstimate& e) { return e.exact || std::abs(e.slope - k) <= cfg.order_tolerance; };
        o.pass = ok(o.fully) && ok(o.lin);
        study.orders.push_back(o);
    }
    return study;
}

inline void write_defect_csv(std::ostream& os, const DefectStudy& study) {
    os << "k,tau,max_defect_fully,max_defect_lin,form_gap\n";
    for (const auto& r : study.rows)
        os << r.k << ',' << detail::fmt_g(r.tau) << ',' << detail::fmt_sci(r.max_fully) << ','
           << detail::fmt_sci(r.max_lin) << ',' << detail::fmt_sci(r.form_gap) << '\n';
}

inline void write_defect_summary(std::ostream& os, const DefectStudy& study) {
    auto show = [](const OrderEstimate& e) { return e.exact ? std::string("exact") : detail::fmt_fixed(e.slope, 3); };
    for (const auto& o : study.orders)
        os << "k=" << o.k << ": defect order fully " << show(o.fully) << ", linear " << show(o.lin)
           << (o.pass ? "  [pass]" : "  [FAIL]") << '\n';
}

// ---------------------------------------------------------------------------
// Trajectory and energy dumps

inline void write_trajectory_csv(std::ostream& os, const SolutionHistory& h) {
    os << "n,t";
    for (std::size_t i = 0; i < h.grid.size(); ++i) os << ",u" << i;
    os << '\n';
    char buf[48];
    for (std::size_t m = 0; m < h.states.size(); ++m) {
        os << m * h.stride << ',' << detail::fmt_g(h.times[m]);
        for (Eigen::Index i = 0; i < h.states[m].size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", h.states[m][i]);
            os << buf;
        }
        os << '\n';
    }
}

inline void write_energy_csv(std::ostream& os, const EnergyTrace& e) {
    os << "n,E_G_sq,slack\n";
    for (std::size_t i = 0; i < e.steps.size(); ++i)
        os << e.steps[i] << ',' << detail::fmt_sci(e.g_norm_sq[i]) << ',' << detail::fmt_sci(e.slack[i]) << '\n';
}

}  // namespace qlbdf
