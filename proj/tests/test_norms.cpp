#include "qlbdf/norms.hpp"
#include "qlbdf/timestepper.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qlbdf;

TEST(SpatialNorm, MaxNorm) {
    EXPECT_EQ(spatial_norm(StateVector{{1.0, -2.0, 3.0}}, Grid::unit_interval(3), SpatialNorm::linf), 3.0);
}

TEST(SpatialNorm, RampSeminorm) {
    // Faces: slopes 1, 1, 1 and (0 - 3/4)/h = -3 at the right boundary.
    const auto g = Grid::unit_interval(3);
    const StateVector v{{0.25, 0.5, 0.75}};
    const double direct = 0.25 * (1.0 + 1.0 + 1.0 + 9.0);
    EXPECT_NEAR(std::pow(spatial_norm(v, g, SpatialNorm::h1_seminorm), 2), direct, 1e-14);
    EXPECT_NEAR(std::pow(spatial_norm(v, g, SpatialNorm::h1), 2), direct + 0.25 * v.squaredNorm(), 1e-14);
    EXPECT_NEAR(spatial_norm(v, g, SpatialNorm::w1inf_proxy), 3.0, 1e-14);
}

TEST(SpatialNorm, SineSeminormLimit) {
    const auto g = Grid::unit_interval(255);
    StateVector s(255), c(255);
    for (int i = 0; i < 255; ++i) {
        const double x = g.node(i)[0];
        s[i] = std::sin(std::numbers::pi * x);
        c[i] = std::cos(std::numbers::pi * x);
    }
    const double ratio = spatial_norm(s, g, SpatialNorm::h1_seminorm) /
                         (std::numbers::pi * spatial_norm(c, g, SpatialNorm::l2));
    EXPECT_NEAR(ratio, 1.0, 0.02);
}

TEST(SpatialNorm, H2ProxyOfSine) {
    const auto g = Grid::unit_interval(255);
    StateVector s(255);
    for (int i = 0; i < 255; ++i) s[i] = std::sin(std::numbers::pi * g.node(i)[0]);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    EXPECT_NEAR(spatial_norm(s, g, SpatialNorm::h2_proxy) / (pi2 * spatial_norm(s, g, SpatialNorm::l2)), 1.0, 1e-3);
}

TEST(SpatialNorm, Axioms) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (const auto& g : {Grid::unit_interval(20), Grid::unit_square(5)}) {
        for (auto which : {SpatialNorm::linf, SpatialNorm::l2, SpatialNorm::h1, SpatialNorm::h1_seminorm,
                           SpatialNorm::h2_proxy, SpatialNorm::w1inf_proxy}) {
            for (int t = 0; t < 20; ++t) {
                const StateVector u = StateVector::NullaryExpr(g.size(), [&] { return nd(rng); });
                const StateVector v = StateVector::NullaryExpr(g.size(), [&] { return nd(rng); });
                const double nu = spatial_norm(u, g, which), nv = spatial_norm(v, g, which);
                EXPECT_GT(nu, 0.0);
                EXPECT_NEAR(spatial_norm(-2.5 * u, g, which), 2.5 * nu, 1e-12 * nu);
                EXPECT_LE(spatial_norm(u + v, g, which), (nu + nv) * (1.0 + 1e-14));
            }
            EXPECT_EQ(spatial_norm(StateVector::Zero(g.size()), g, which), 0.0);
        }
    }
}

TEST(SpatialNorm, SizeMismatch) {
    EXPECT_THROW(spatial_norm(StateVector::Zero(2), Grid::unit_interval(3), SpatialNorm::l2), DimensionError);
}

TEST(TimeComposite, Examples) {
    const std::vector<double> a{2, 1, 3}, b{1, 1, 1, 1}, c{1, 2};
    EXPECT_EQ(time_composite(a, 0.1, TemporalNorm::max()), 3.0);
    EXPECT_NEAR(time_composite(b, 0.25, TemporalNorm::lp(2.0)), 1.0, 1e-15);
    EXPECT_NEAR(time_composite(c, 0.5, TemporalNorm::lp(2.0)), std::sqrt(2.5), 1e-15);
}

TEST(TimeComposite, Contracts) {
    const std::vector<double> a{1.0};
    EXPECT_THROW(time_composite({}, 0.1, TemporalNorm::max()), DomainError);
    EXPECT_THROW(time_composite(a, 0.0, TemporalNorm::max()), DomainError);
    EXPECT_THROW(time_composite(a, 0.1, TemporalNorm::lp(1.0)), DomainError);
}

TEST(ErrorReport, ExactHistoryHasZeroError) {
    const auto p = problems::m1(15);
    SolutionHistory h;
    h.grid = p.grid;
    h.scheme = make_scheme(2);
    h.tau = 0.1;
    h.steps = 10;
    for (int n = 0; n <= 10; ++n) {
        h.times.push_back(0.1 * n);
        h.states.push_back(sample_on_grid(p, static_cast<Real>(n) * static_cast<Real>(h.tau)));
    }
    const auto r = error_report(h, p);
    EXPECT_EQ(r.max_linf, 0.0);
    EXPECT_EQ(r.max_w1inf, 0.0);
    EXPECT_EQ(r.l2_h1, 0.0);
    EXPECT_EQ(r.l2_h2, 0.0);
}

TEST(ErrorReport, FirstOrderAgainstFineReference) {
    const auto p = problems::m1(63);
    const auto scheme = make_scheme(1);
    RunOptions ref_opts;
    ref_opts.stride = 16;
    const auto ref = run(p, scheme, Variant::linearly_implicit, 0.05 / 16, ref_opts);
    auto err = [&](double tau, std::size_t ratio) {
        const auto r = run(p, scheme, Variant::linearly_implicit, tau);
        return error_report(r.history, [&](std::size_t n) { return ref.history.at_step(n * ratio); });
    };
    const auto coarse = err(0.1, 32), fine = err(0.05, 16);
    EXPECT_GE(coarse.max_linf, 0.0);
    EXPECT_NEAR(coarse.max_linf / fine.max_linf, 2.0, 0.25);
    EXPECT_NEAR(coarse.l2_h1 / fine.l2_h1, 2.0, 0.25);
}

TEST(ErrorReport, GridMismatch) {
    SolutionHistory h;
    h.grid = Grid::unit_interval(7);
    h.scheme = make_scheme(1);
    h.tau = 0.5;
    h.steps = 2;
    h.states.assign(3, StateVector::Zero(7));
    EXPECT_THROW(error_report(h, problems::m1(15)), DimensionError);
}
