#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ahres/flow.hpp"

using namespace ahres;

namespace {

MetricModel half_space(int n) { return make_model(MetricModel::Family::half_space, n); }

}  // namespace

TEST_CASE("Hamilton field values on the half-space") {
    const MetricModel m = half_space(2);
    PhasePoint0 p{1.0, {0., 0.}, 0.0, {1., 0.}};
    const FlowDeriv d = hamilton_field_0(m, p);
    CHECK(d.xdot == 0.0);
    CHECK(d.ydot[0] == Catch::Approx(2.0));
    CHECK(d.ydot[1] == 0.0);
    CHECK(d.lambdadot == Catch::Approx(-2.0));
    CHECK(d.mudot[0] == 0.0);

    SECTION("restriction to the boundary face") {
        PhasePoint0 q{0.0, {0.3, -1.0}, 0.4, {0.5, -0.2}};
        const FlowDeriv b = hamilton_field_0(m, q);
        CHECK(b.xdot == 0.0);
        CHECK(b.ydot[0] == 0.0);
        CHECK(b.ydot[1] == 0.0);
        const double mu2 = 0.5 * 0.5 + 0.2 * 0.2;
        CHECK(b.lambdadot == Catch::Approx(-2.0 * mu2));
        CHECK(b.mudot[0] == Catch::Approx(2.0 * 0.4 * 0.5));
        CHECK(b.mudot[1] == Catch::Approx(2.0 * 0.4 * -0.2));
    }
}

TEST_CASE("geodesic through the half-space matches the closed form") {
    // from (x, y, lambda, mu) = (1, 0, 0, e1):
    //   x = sech 2t, y = tanh 2t e1, lambda = -tanh 2t, mu = sech 2t e1
    const MetricModel m = half_space(2);
    PhasePoint0 start{1.0, {0., 0.}, 0.0, {1., 0.}};
    FlowOptions opt;
    opt.t_max = 2.0;
    const Trajectory traj = integrate_flow(m, start, opt);
    REQUIRE(traj.terminal == Terminal::time_limit);

    double worst = 0.0;
    for (double t : {0.1, 0.25, 0.5, 1.0, 1.7}) {
        const vecd s = traj.dense.eval(t);
        const double x_ref = 1.0 / std::cosh(2 * t);
        const double y_ref = std::tanh(2 * t);
        worst = std::max(worst, std::fabs(s[0] - x_ref));
        worst = std::max(worst, std::fabs(s[1] - y_ref));
        worst = std::max(worst, std::fabs(s[3] + y_ref));   // lambda = -tanh
        worst = std::max(worst, std::fabs(s[4] - x_ref));   // mu_1 = sech
    }
    CHECK(worst < 1e-8);
    CHECK(traj.energy_drift < 1e-9);
}

TEST_CASE("energy is conserved on the perturbed model") {
    const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.1);
    PhasePoint0 start{0.5, {0.2, -0.1}, 0.3, {}};
    // fill mu on-shell: g0^{ij} mu mu = 1 - lambda^2 with g0 = (1+eps b) Id
    const Metric0 g = g0_eval(m, start.x, start.y);
    const double want = (1.0 - 0.09) / g.Ginv(0, 0);
    start.mu = {std::sqrt(want), 0.0};
    REQUIRE(std::fabs(symbol_p(m, start)) < 1e-12);

    FlowOptions opt;
    opt.t_max = 6.0;
    opt.x_floor = 1e-6;
    const Trajectory traj = integrate_flow(m, start, opt);
    CHECK(traj.energy_drift < 1e-9);
}

TEST_CASE("boundary exponents of lambda + 1 and |mu|^2 fit near 2") {
    const MetricModel m = half_space(1);
    PhasePoint0 start{1.0, {0.}, 0.0, {1.}};
    FlowOptions opt;
    opt.t_max = 30.0;
    opt.x_floor = 1e-4;
    const Trajectory traj = integrate_flow(m, start, opt);
    REQUIRE(traj.terminal == Terminal::hit_boundary);
    REQUIRE(traj.fit.valid);
    CHECK(traj.fit.slope_lambda == Catch::Approx(2.0).margin(0.05));
    CHECK(traj.fit.slope_mu == Catch::Approx(2.0).margin(0.05));

    SECTION("perturbed metric keeps the decay exponent above 3/2") {
        const MetricModel mp = make_model(MetricModel::Family::perturbed, 1, 0.1);
        PhasePoint0 s2{0.6, {-0.4}, -0.2, {}};
        const Metric0 g = g0_eval(mp, s2.x, s2.y);
        s2.mu = {std::sqrt((1.0 - 0.04) / g.Ginv(0, 0))};
        const Trajectory tp = integrate_flow(mp, s2, opt);
        REQUIRE(tp.terminal == Terminal::hit_boundary);
        REQUIRE(tp.fit.valid);
        CHECK(tp.fit.slope_lambda > 1.5);
        CHECK(tp.fit.slope_mu > 1.5);
    }
}

TEST_CASE("time reversal symmetry of the flow") {
    const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.08);
    PhasePoint0 start{0.45, {0.3, 0.1}, 0.25, {}};
    const Metric0 g = g0_eval(m, start.x, start.y);
    const double mu1 = std::sqrt((1.0 - start.lambda * start.lambda) / g.Ginv(0, 0) * 0.7);
    const double mu2 = std::sqrt((1.0 - start.lambda * start.lambda) / g.Ginv(1, 1) * 0.3);
    start.mu = {mu1, mu2};
    REQUIRE(std::fabs(symbol_p(m, start)) < 1e-12);

    FlowOptions opt;
    opt.t_max = 1.2;
    opt.x_floor = 1e-9;
    const Trajectory fwd = integrate_flow(m, start, opt);
    REQUIRE(fwd.terminal == Terminal::time_limit);
    PhasePoint0 turn = fwd.samples.back().pt;
    turn.lambda = -turn.lambda;
    for (auto& v : turn.mu) v = -v;
    const Trajectory back = integrate_flow(m, turn, opt);
    const PhasePoint0 end = back.samples.back().pt;
    CHECK(std::fabs(end.x - start.x) < 1e-9);
    CHECK(std::fabs(end.y[0] - start.y[0]) < 1e-9);
    CHECK(std::fabs(end.lambda + start.lambda) < 1e-9);
    CHECK(std::fabs(end.mu[0] + start.mu[0]) < 1e-9);
}

TEST_CASE("shifted field values and straight-line example") {
    const MetricModel m = half_space(2);
    ShiftedPoint s{0.5, {0., 0.}, 0.0, {0., 0.}};
    REQUIRE(std::fabs(symbol_p_shifted(m, s)) < 1e-15);
    const ShiftedDeriv d = hamilton_field_shifted(m, s);
    CHECK(d.xdot == Catch::Approx(-2.0));
    CHECK(d.xidot == Catch::Approx(0.0).margin(1e-15));

    FlowOptions opt;
    opt.t_max = 1.0;
    opt.x_floor = 1e-10;
    const ShiftedTrajectory traj = integrate_shifted(m, s, opt);
    REQUIRE(traj.terminal == Terminal::hit_boundary);
    CHECK(traj.t_end == Catch::Approx(0.25).margin(1e-9));
    CHECK(traj.xdot_end == Catch::Approx(-2.0).margin(1e-9));
    CHECK(traj.energy_drift < 1e-10);
}

TEST_CASE("shifted flow reaches the boundary with xdot near -2 on curved starts") {
    const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.1);
    ShiftedPoint s;
    s.x = 0.8;
    s.y = {0.2, -0.3};
    s.eta = {0.4, 0.1};
    // solve ptilde = 0 for xi on the incoming branch: x xi^2 - 2 xi + x g eta eta = 0
    const Metric0 g = g0_eval(m, s.x, s.y);
    double ee = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) ee += g.Ginv(i, j) * s.eta[i] * s.eta[j];
    const double disc = 4.0 - 4.0 * s.x * s.x * ee;
    REQUIRE(disc > 0.0);
    s.xi = (2.0 - std::sqrt(disc)) / (2.0 * s.x);
    REQUIRE(std::fabs(symbol_p_shifted(m, s)) < 1e-12);

    FlowOptions opt;
    opt.t_max = 5.0;
    opt.x_floor = 1e-9;
    const ShiftedTrajectory traj = integrate_shifted(m, s, opt);
    REQUIRE(traj.terminal == Terminal::hit_boundary);
    CHECK(std::fabs(traj.xdot_end + 2.0) < 1e-3);
    CHECK(traj.energy_drift < 1e-9);
}

TEST_CASE("shifting a trajectory pointwise agrees with the shifted flow as a point set") {
    const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.05);
    PhasePoint0 start{1.0, {0.1, 0.2}, -0.6, {}};
    const Metric0 g = g0_eval(m, start.x, start.y);
    start.mu = {std::sqrt((1.0 - 0.36) / g.Ginv(0, 0)), 0.0};
    REQUIRE(std::fabs(symbol_p(m, start)) < 1e-12);

    FlowOptions opt;
    opt.t_max = 40.0;
    opt.x_floor = 1e-3;  // stay clearly away from the face for the comparison
    const Trajectory plain = integrate_flow(m, start, opt);
    REQUIRE(plain.terminal == Terminal::hit_boundary);

    const ShiftedPoint s0 = shift_to_standard(start);
    FlowOptions opt2 = opt;
    opt2.x_floor = 2e-3;
    const ShiftedTrajectory sh = integrate_shifted(m, s0, opt2);
    REQUIRE(sh.terminal == Terminal::hit_boundary);

    double worst = 0.0;
    int matched = 0;
    for (const auto& smp : sh.samples) {
        if (smp.pt.x > 0.95 || smp.pt.x < 3e-3) continue;
        const auto t_plain = time_at_x(plain, smp.pt.x);
        if (!t_plain) continue;
        const vecd st = plain.dense.eval(*t_plain);
        const PhasePoint0 p = {st[0], {st[1], st[2]}, st[3], {st[4], st[5]}};
        const ShiftedPoint q = shift_to_standard(p);
        worst = std::max(worst, std::fabs(q.y[0] - smp.pt.y[0]));
        worst = std::max(worst, std::fabs(q.y[1] - smp.pt.y[1]));
        worst = std::max(worst, std::fabs(q.xi - smp.pt.xi));
        worst = std::max(worst, std::fabs(q.eta[0] - smp.pt.eta[0]));
        ++matched;
    }
    REQUIRE(matched > 10);
    CHECK(worst < 1e-8);
}

TEST_CASE("off-shell and out-of-domain starts are rejected") {
    const MetricModel m = half_space(2);
    PhasePoint0 bad{1.0, {0., 0.}, 0.5, {1., 0.}};  // p = 0.25
    CHECK_THROWS_AS(integrate_flow(m, bad), error);
    PhasePoint0 outside{20.0, {0., 0.}, 1.0, {0., 0.}};
    CHECK_THROWS_AS(integrate_flow(m, outside), error);
}
