#include "qlbdf/consistency.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qlbdf;

namespace {

// u(x, t) = p(t) x (1 - x) on a 1D grid with coefficient `a`.
ManufacturedProblem separable(std::function<Real(Real)> p, std::function<Real(Real)> dp, CoefficientFn a, int n = 15) {
    ManufacturedProblem m{"poly", Grid::unit_interval(n), std::move(a), 1.0, {}, {}, {}, {}};
    m.u = [p](const Point& x, Real t) { return p(t) * x[0] * (1.0L - x[0]); };
    m.u_t = [dp](const Point& x, Real t) { return dp(t) * x[0] * (1.0L - x[0]); };
    m.grad = [p](const Point& x, Real t) { return std::array<Real, 2>{p(t) * (1.0L - 2.0L * x[0]), 0.0L}; };
    m.laplacian = [p](const Point&, Real t) { return -2.0L * p(t); };
    return m;
}

double max_diff(const DefectSeries& a, const DefectSeries& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.defects.size(); ++i)
        m = std::max(m, (a.defects[i] - b.defects[i]).cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

TEST(Defect, ImplicitEulerOnSquare) {
    ManufacturedProblem m{"t2", Grid::unit_interval(1), constant_coefficient(1.0), 1.0, {}, {}, {}, {}};
    m.u = [](const Point&, Real t) { return t * t; };
    m.u_t = [](const Point&, Real t) { return 2.0L * t; };
    m.grad = [](const Point&, Real) { return std::array<Real, 2>{0.0L, 0.0L}; };
    m.laplacian = [](const Point&, Real) { return 0.0L; };
    const double tau = 0.125;
    const auto s = defect_fully(m, make_scheme(1), tau);
    ASSERT_EQ(s.defects.size(), 8u);
    for (const auto& d : s.defects) EXPECT_NEAR(d[0], -tau, 1e-15);
}

TEST(Defect, LinearInTimeIsExact) {
    const auto m = separable([](Real t) { return t; }, [](Real) { return 1.0L; }, constant_coefficient(1.0));
    for (int k = 1; k <= 6; ++k) EXPECT_LT(defect_fully(m, make_scheme(k), 0.05).max_linf(), 1e-13) << "k=" << k;
}

TEST(Defect, PolynomialOfDegreeKIsExact) {
    for (int k = 1; k <= 6; ++k) {
        const auto m = separable([k](Real t) { return std::pow(1.0L + t, k); },
                                 [k](Real t) { return k * std::pow(1.0L + t, k - 1); }, exp_coefficient());
        EXPECT_LT(defect_fully(m, make_scheme(k), 0.05).max_linf(), 1e-11) << "k=" << k;
    }
}

TEST(Defect, ConstantCoefficientLinearEqualsFully) {
    const auto p = problems::heat(31);
    for (int k = 1; k <= 5; ++k) {
        const auto scheme = make_scheme(k);
        EXPECT_EQ(max_diff(defect_fully(p, scheme, 0.05), defect_linearly(p, scheme, 0.05)), 0.0);
    }
}

TEST(Defect, ExtrapolationExactBelowDegreeK) {
    for (int k = 2; k <= 5; ++k) {
        const auto m = separable([k](Real t) { return std::pow(1.0L + t, k - 1); },
                                 [k](Real t) { return (k - 1) * std::pow(1.0L + t, k - 2); }, exp_coefficient());
        const auto scheme = make_scheme(k);
        EXPECT_LT(max_diff(defect_fully(m, scheme, 0.05), defect_linearly(m, scheme, 0.05)), 1e-9) << "k=" << k;
    }
}

TEST(Defect, CorrectionIsOrderK) {
    const auto p = problems::m1();
    const auto scheme = make_scheme(3);
    std::vector<double> taus, diffs;
    for (double tau : {1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160}) {
        taus.push_back(tau);
        diffs.push_back(max_diff(defect_fully(p, scheme, tau), defect_linearly(p, scheme, tau)));
    }
    EXPECT_NEAR(log_log_slope(taus, diffs), 3.0, 0.25);
}

TEST(DefectOrder, SweepSlopes) {
    const auto p = problems::m1();
    for (int k : {1, 4}) {
        const auto scheme = make_scheme(k);
        std::vector<DefectSeries> fully, lin;
        for (double tau : {1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160, 1.0 / 320}) {
            fully.push_back(defect_fully(p, scheme, tau));
            lin.push_back(defect_linearly(p, scheme, tau));
        }
        const auto a = defect_order(fully), b = defect_order(lin);
        EXPECT_FALSE(a.exact);
        EXPECT_NEAR(a.slope, k, 0.25);
        EXPECT_NEAR(b.slope, k, 0.25);
    }
}

TEST(DefectOrder, PolynomialIsExact) {
    const auto m = separable([](Real t) { return 2.0L * t; }, [](Real) { return 2.0L; }, quadratic_coefficient());
    std::vector<DefectSeries> sweep;
    for (double tau : {0.1, 0.05, 0.025}) sweep.push_back(defect_linearly(m, make_scheme(2), tau));
    EXPECT_TRUE(defect_order(sweep).exact);
}

TEST(DefectOrder, Contracts) {
    const auto p = problems::m1(15);
    std::vector<DefectSeries> two{defect_fully(p, make_scheme(1), 0.1), defect_fully(p, make_scheme(1), 0.05)};
    EXPECT_THROW(defect_order(two), DomainError);
    two.push_back(defect_fully(p, make_scheme(1), 0.02));
    EXPECT_THROW(defect_order(two), DomainError);
}

TEST(Defect, OperatorFormSlopeAgrees) {
    // Operator form (1/tau) sum delta_j u_{n-j} + A_h(u) u - f = d_n + spatial truncation.
    const auto p = problems::m1(1023);  // fine grid: spatial truncation well below d_n
    const auto scheme = make_scheme(1);
    std::vector<double> taus, time_form, op_form;
    for (double tau : {1.0 / 20, 1.0 / 40, 1.0 / 80}) {
        const auto s = defect_fully(p, scheme, tau);
        double worst = 0.0;
        for (std::size_t i = 0; i < s.steps.size(); ++i) {
            const Real t = static_cast<Real>(s.steps[i]) * tau;
            const StateVector u = sample_on_grid(p, t);
            const StateVector trunc = sample_field(p.grid, p.u_t, t) +
                                      apply_operator(assemble_operator(p.grid, p.coeff, u), u) -
                                      grid_forcing(p, t, ForcingMode::continuum);
            worst = std::max(worst, (s.defects[i] + trunc).cwiseAbs().maxCoeff());
        }
        taus.push_back(tau);
        time_form.push_back(s.max_linf());
        op_form.push_back(worst);
    }
    EXPECT_NEAR(log_log_slope(taus, time_form), log_log_slope(taus, op_form), 0.1);
}

TEST(Defect, FormGapIsSecondOrderInSpace) {
    const auto scheme = make_scheme(2);
    const double coarse = defect_fully(problems::m1(63), scheme, 0.1).form_gap;
    const double fine = defect_fully(problems::m1(127), scheme, 0.1).form_gap;
    EXPECT_NEAR(coarse / fine, 4.0, 0.3);
}

TEST(LogLogSlope, ExactPowerLaw) {
    const std::vector<double> x{1.0, 0.5, 0.25}, y{3.0, 0.375, 0.046875};
    EXPECT_NEAR(log_log_slope(x, y), 3.0, 1e-12);
}
