#include "doctest.h"
#include "tasrl/stability.hpp"
#include "test_util.hpp"

using namespace tasrl;
using tasrl::test::error_of;

namespace {

SteadyStateProblem unit(double c, double x) {
    return make_problem(Mat::Constant(1, 1, x), Vec::Constant(1, c), Vec::Zero(1), Vec::Constant(1, -1.0),
                        Vec::Constant(1, 1.0));
}

// One-unit high branch scaled so that pi(1.15) = -0.2 at q = 0 with
// c = 0.8, alpha = 1 and q_lo' = -0.5.
PolicyParams quotient_policy() {
    PolicyParams p = make_initial_policy(std::vector<int>{1}, 1, 0.8, 0.5);
    p.buses[0].high.u[0] = std::log(10.0 * std::atanh(0.5));
    return p;
}

}  // namespace

TEST_CASE("policy slope matrix examples") {
    const SteadyStateProblem p = unit(1.0, 1.0);
    const PolicyParams pol = quotient_policy();
    const Vec v_star = Vec::Ones(1);
    CHECK(policy_slope_matrix(pol, p, 1.0, v_star, v_star, Vec::Zero(1))(0) == 0.0);
    CHECK(policy_slope_matrix(pol, p, 1.0, Vec::Constant(1, 1.04), v_star, Vec::Zero(1))(0) == 0.0);
    const double K = policy_slope_matrix(pol, p, 1.0, Vec::Constant(1, 1.15), v_star, Vec::Zero(1))(0);
    CHECK(K == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(error_of([&] { policy_slope_matrix(pol, p, 1.0, v_star, Vec::Constant(1, 1.2), Vec::Zero(1)); }) ==
          ErrorCode::DegenerateReference);
}

TEST_CASE("slope condition examples") {
    const SteadyStateProblem p = unit(1.0, 1.0);
    CHECK(stability_sigma_min(p) == doctest::Approx(2.0).epsilon(1e-14));
    const ConditionCheck zero = check_slope_condition(p, Vec::Zero(1));
    CHECK(zero.holds);
    CHECK(zero.margin == doctest::Approx(2.0));
    CHECK(check_slope_condition(p, Vec::Constant(1, 1.0)).holds);
    CHECK(!check_slope_condition(p, Vec::Constant(1, 1.01)).holds);

    SteadyStateProblem singular = p;
    singular.X.setZero();
    CHECK(error_of([&] { stability_sigma_min(singular); }) == ErrorCode::SingularX);
}

TEST_CASE("sigma_min matches an eigen-decomposition oracle") {
    const Network net = make_feeder13();
    const SteadyStateProblem p = make_problem(net, Vec::Ones(net.size()));
    const Mat A = p.cost.asDiagonal() * p.X.inverse() + Mat::Identity(p.size(), p.size());
    Eigen::SelfAdjointEigenSolver<Mat> eig(A.transpose() * A);
    CHECK(std::abs(stability_sigma_min(p) - std::sqrt(eig.eigenvalues().minCoeff())) < 1e-10);
}

TEST_CASE("gradient-policy inequality") {
    const Network net = make_feeder13();
    Rng rng(2);
    const SteadyStateProblem p = make_problem(net, test::random_vec(rng, net.size(), 0.9, 1.1));
    const PolicyParams zero = make_initial_policy(net, 8, 0.0);
    const Vec q = test::random_vec(rng, p.size(), -0.2, 0.2);
    const Vec v = p.voltage(q);
    const double g2 = gradient(p, q, v).squaredNorm();
    CHECK(check_descent_inequality(p, zero, 0.5, v, q) == doctest::Approx(g2).epsilon(1e-14));

    const SteadyStateProblem mild = make_problem(net, generate_scenarios(net, ScenarioKind::HighVoltage, 0.03,
                                                                         0.03, 1, 1)[0].v_env);
    const SolveReport s = qp_oracle(mild);
    CHECK(std::abs(check_descent_inequality(mild, make_initial_policy(net), 0.5, s.v_star, s.q_star)) < 1e-24);
}

TEST_CASE("Lyapunov monitor") {
    const Network net = make_feeder13();
    const Scenario sc = generate_scenarios(net, ScenarioKind::HighVoltage, 0.05, 0.05, 1, 1)[0];
    const SteadyStateProblem p = make_problem(net, sc.v_env);
    const SolveReport s = qp_oracle(p);
    Trajectory still;
    still.bus_ids = p.bus_ids;
    Vec q_full = Vec::Zero(net.size());
    for (std::size_t a = 0; a < p.bus_ids.size(); ++a) q_full(p.bus_ids[a] - 1) = s.q_star(static_cast<Eigen::Index>(a));
    for (int t = 0; t < 50; ++t) {
        still.q.push_back(q_full);
        still.v.push_back(voltage(net, q_full, sc.v_env));
    }
    const LyapunovReport r = lyapunov_monitor(still, p);
    CHECK(r.steps == 49);
    CHECK(r.violations == 0);

    // Gradient flow with small h on the 13-bus feeder descends.
    ControllerConfig c;
    c.variant = Variant::SafeGradientFlow;
    c.h = 0.01;
    Scenario fine = sc;
    fine.horizon = 500;
    CHECK(lyapunov_monitor(run_episode(net, c, fine).trajectory, p).violations == 0);

    // Moving uphill from q = 0 (gradient dv > 0 there) is flagged.
    Trajectory up = still;
    for (int t = 0; t < 50; ++t) {
        Vec q = Vec::Zero(net.size());
        for (int id : p.bus_ids) q(id - 1) = 0.002 * t;
        up.q[static_cast<std::size_t>(t)] = q;
    }
    CHECK(lyapunov_monitor(up, p).violations > 0);
}

TEST_CASE("a steep policy on a two-bus chain breaks monotone decrease") {
    std::vector<Bus> buses{test::substation(), test::controlled_bus(1), test::controlled_bus(2)};
    buses[1].eta = 1.129;
    buses[2].eta = 2.584;
    const Network net = build_network(buses, {{0, 1, 0.152, 0.304}, {1, 2, 0.0412, 0.0824}}, 1.0);
    PolicyParams steep = make_initial_policy(net, 8, 0.99, 0.1);
    for (BusPolicy& bp : steep.buses) {
        for (double& u : bp.high.u) u = 5.0;
        for (double& u : bp.low.u) u = 5.0;
    }
    ControllerConfig c;
    c.alpha = 5.0;
    c.h = 0.01;
    c.policy = steep;
    Scenario s;
    s.v_env = Vec(2);
    s.v_env << 0.9873, 0.9352;  // keeps v* inside the band
    s.q0 = Vec(2);
    s.q0 << -0.2863, 0.5844;
    s.horizon = 500;
    const Episode ep = run_episode(net, c, s);
    const SteadyStateProblem p = make_problem(net, s.v_env);
    CHECK(lyapunov_monitor(ep.trajectory, p).violations > 0);

    // The slope condition fails somewhere along it, as it must.
    const SolveReport ref = qp_oracle(p);
    bool violated = false;
    for (std::size_t t = 0; t < ep.trajectory.rows() && !violated; ++t) {
        const Vec v = ep.trajectory.v[t];
        const Vec q = ep.trajectory.q[t];
        const Vec K = policy_slope_matrix(steep, p, c.alpha, v, ref.v_star, q);
        violated = !check_slope_condition(p, K).holds;
    }
    CHECK(violated);
}

TEST_CASE("certificate on the initial policy") {
    const Network net = make_feeder13();
    ControllerConfig c;
    c.h = 0.01;
    c.policy = make_initial_policy(net);
    CertifyOptions o;
    o.trajectories = 20;
    o.steps = 200;
    o.uniform_samples = 200;
    const CertificateReport r = certify(net, c, o);
    CHECK(r.ok());
    CHECK(r.trajectories == 20);
    CHECK(r.n_samples > 0);
    CHECK(r.inequality_checked > 0);
    CHECK(r.sigma_min > 0.0);
    CHECK(certificate_to_json(r).find("\"condition_violations\"") != std::string::npos);
}
