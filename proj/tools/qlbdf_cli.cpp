// qlbdf: coefficient tables, multiplier certification, defect and
// convergence studies for BDF discretisations of quasilinear parabolic problems.

#include "qlbdf/qlbdf.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace qlbdf;

namespace {

struct Options {
    std::string k_range = "1-6";
    std::optional<double> theta;
    std::string config;
    std::string out_dir;
    bool dump_operator = false;
    bool dump_trajectory = false;
};

std::pair<int, int> parse_k_range(const std::string& text, int hi_limit) {
    int lo = 0, hi = 0;
    const auto dash = text.find('-');
    try {
        if (dash == std::string::npos) {
            lo = hi = std::stoi(text);
        } else {
            lo = std::stoi(text.substr(0, dash));
            hi = std::stoi(text.substr(dash + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError("--k", "expected an order or a range such as 1-5, got '" + text + "'");
    }
    if (lo < kMinOrder || hi > hi_limit || lo > hi)
        throw ConfigError("--k", "orders must lie in 1.." + std::to_string(hi_limit));
    return {lo, hi};
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw ConfigError("--out-dir", "cannot write " + (dir / name).string());
    return os;
}

StudyConfig load_config(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config", "a study configuration file is required");
    std::ifstream in(o.config);
    if (!in) throw ConfigError("--config", "cannot open " + o.config);
    auto cfg = parse_study_config(in, o.config);
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    return cfg;
}

int cmd_coeffs(const Options& o) {
    const auto [lo, hi] = parse_k_range(o.k_range, kMaxOrder);
    write_coefficient_table(std::cout, lo, hi);
    if (!o.out_dir.empty()) {
        auto d = open_output(o.out_dir, "delta.csv");
        write_coefficient_csv(d, lo, hi, false);
        auto g = open_output(o.out_dir, "gamma.csv");
        write_coefficient_csv(g, lo, hi, true);
    }
    return 0;
}

int cmd_certify(const Options& o) {
    const auto [lo, hi] = parse_k_range(o.k_range == "1-6" ? "1-5" : o.k_range, kMaxMultiplierOrder);
    std::vector<CertificationRow> rows;
    std::vector<int> orders;
    for (int k = lo; k <= hi; ++k) {
        rows.push_back(certify_order(k, o.theta));
        orders.push_back(k);
    }
    write_certification_table(std::cout, rows);
    const bool ok = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    if (!o.out_dir.empty() && ok && !o.theta) {
        auto os = open_output(o.out_dir, "certificate.csv");
        write_certificate_csv(os, orders);
    }
    return ok ? 0 : 1;
}

int cmd_convergence(const Options& o) {
    const auto cfg = load_config(o);
    const fs::path out = cfg.output_dir;

    if (o.dump_operator) {
        const auto p = find_problem(cfg.problem, cfg.grid_n);
        const auto op = assemble_operator(p.grid, p.coeff, sample_on_grid(p, 0.0L));
        auto os = open_output(out, "operator.txt");
        dump_coordinate(os, op.matrix);
    }

    ConvergenceHooks hooks;
    hooks.on_run = [&](int k, Variant v, std::size_t i, const RunResult& r) {
        const std::string tag = "k" + std::to_string(k) + "_" + to_string(v) + "_tau" + std::to_string(i);
        if (o.dump_trajectory) {
            auto os = open_output(out, "trajectory_" + tag + ".csv");
            write_trajectory_csv(os, r.history);
        }
        if (r.energy) {
            auto os = open_output(out, "energy_" + tag + ".csv");
            write_energy_csv(os, *r.energy);
        }
    };
    const auto report = run_convergence(cfg, hooks);
    auto csv = open_output(out, "convergence.csv");
    write_convergence_csv(csv, report);
    write_convergence_summary(std::cout, report);
    if (report.any_error()) return 2;
    return report.all_pass() ? 0 : 1;
}

int cmd_defects(const Options& o) {
    const auto cfg = load_config(o);
    const auto study = run_defect_study(cfg);
    auto csv = open_output(cfg.output_dir, "defects.csv");
    write_defect_csv(csv, study);
    write_defect_summary(std::cout, study);
    return study.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BDF time discretisation of quasilinear parabolic problems"};
    app.require_subcommand(1);
    Options o;

    auto* coeffs = app.add_subcommand("coeffs", "print delta/gamma coefficients, A(alpha) angles and multipliers");
    coeffs->add_option("--k", o.k_range, "order or range, e.g. 3 or 1-6");
    coeffs->add_option("--out-dir", o.out_dir, "write delta.csv and gamma.csv here");

    auto* certify = app.add_subcommand("certify", "check multiplier positivity and the G-matrix certificate");
    certify->add_option("--k", o.k_range, "order or range within 1-5");
    certify->add_option("--theta", o.theta, "test this multiplier instead of the tabulated one");
    certify->add_option("--out-dir", o.out_dir, "write certificate.csv here");

    auto* conv = app.add_subcommand("convergence", "run a convergence study");
    auto* defects = app.add_subcommand("defects", "run a consistency defect study");
    for (auto* sub : {conv, defects}) {
        sub->add_option("--config", o.config, "study configuration (INI)")->required();
        sub->add_option("--out-dir", o.out_dir, "output directory (overrides the config)");
    }
    conv->add_flag("--dump-operator", o.dump_operator, "write A_h(u_0) in coordinate format");
    conv->add_flag("--dump-trajectory", o.dump_trajectory, "write every run's trajectory as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*coeffs) return cmd_coeffs(o);
        if (*certify) return cmd_certify(o);
        if (*conv) return cmd_convergence(o);
        if (*defects) return cmd_defects(o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
