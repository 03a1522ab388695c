#include "doctest.h"
#include "tasrl/steady_state.hpp"
#include "test_util.hpp"

using namespace tasrl;
using tasrl::test::error_of;

namespace {

SteadyStateProblem scalar(double c, double x, double dv, double lo = -1.0, double hi = 1.0) {
    return make_problem(Mat::Constant(1, 1, x), Vec::Constant(1, c), Vec::Constant(1, dv), Vec::Constant(1, lo),
                        Vec::Constant(1, hi));
}

SteadyStateProblem random_problem(Rng& rng, int n, std::uint64_t seed) {
    const Network net = make_random_tree(n, seed);
    Vec v_env(net.size());
    for (int i = 0; i < net.size(); ++i) v_env(i) = rng.uniform(0.85, 1.15);
    return make_problem(net, v_env);
}

double largest_eigenvalue_by_power_iteration(const Mat& H) {
    Vec x = Vec::Ones(H.rows());
    double lambda = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const Vec y = H * x;
        const double next = x.dot(y) / x.dot(x);
        x = y.normalized();
        if (std::abs(next - lambda) < 1e-15 * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace

TEST_CASE("objective scalar examples") {
    const SteadyStateProblem p = scalar(1.0, 0.4, 0.1);
    CHECK(objective(p, Vec::Zero(1)) == 0.0);
    CHECK(objective(p, Vec::Constant(1, 1.0)) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("objective equals the nodal decomposition") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const SteadyStateProblem p = random_problem(rng, 6, static_cast<std::uint64_t>(trial + 1));
        const Vec q = test::random_vec(rng, p.size(), -0.5, 0.5);
        const Vec v = p.voltage(q);
        const Vec v_env = p.v_env();
        double nodal = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            nodal += 0.5 * p.cost(i) * q(i) * q(i) + 0.5 * q(i) * (v(i) + v_env(i) - 2.0 * p.v_nom(i));
        }
        CHECK(std::abs(nodal - objective(p, q)) < 1e-12);
    }
}

TEST_CASE("gradient examples and finite differences") {
    const SteadyStateProblem p = scalar(1.0, 0.4, 0.0);
    CHECK(gradient(p, Vec::Zero(1), Vec::Ones(1))(0) == 0.0);
    CHECK(gradient(p, Vec::Constant(1, 0.5), Vec::Constant(1, 1.1))(0) == doctest::Approx(0.6).epsilon(1e-15));

    const Network net = make_feeder13();
    Rng rng(9);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const SteadyStateProblem prob = make_problem(net, test::random_vec(rng, net.size(), 0.85, 1.15));
        const Vec q = test::random_vec(rng, prob.size(), -0.4, 0.4);
        const Vec g = gradient(prob, q, prob.voltage(q));
        const double step = 1e-6;
        for (Eigen::Index i = 0; i < prob.size(); ++i) {
            Vec a = q, b = q;
            a(i) += step;
            b(i) -= step;
            const double fd = (objective(prob, a) - objective(prob, b)) / (2.0 * step);
            worst = std::max(worst, std::abs(fd - g(i)));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("step size bound") {
    CHECK(step_size_bound(scalar(1.0, 1.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-15));

    const Network net = make_feeder13();
    const SteadyStateProblem p = make_problem(net, Vec::Ones(net.size()));
    Mat H = p.X;
    H.diagonal() += p.cost;
    CHECK(std::abs(step_size_bound(p) - 2.0 / largest_eigenvalue_by_power_iteration(H)) < 1e-10);

    SteadyStateProblem scaled = p;
    scaled.X *= 10.0;
    CHECK(step_size_bound(scaled) < step_size_bound(p));
    CHECK(step_size_bound(scaled) > step_size_bound(p) / 10.0);
    CHECK(default_step_size(p) == doctest::Approx(0.9 * step_size_bound(p)));
}

TEST_CASE("projected gradient examples") {
    const Network net = make_feeder13();
    const SteadyStateProblem zero = make_problem(net, Vec::Ones(net.size()));
    const SolveReport r0 = projected_gradient_solve(zero);
    CHECK(r0.q_star.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r0.objective == 0.0);

    const SolveReport clipped = projected_gradient_solve(scalar(1.0, 1.0, -3.0));
    CHECK(clipped.converged);
    CHECK(clipped.q_star(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(qp_oracle(scalar(1.0, 1.0, -3.0)).q_star(0) == 1.0);
    CHECK(qp_oracle(zero).q_star.cwiseAbs().maxCoeff() == 0.0);

    CHECK(error_of([&] { projected_gradient_solve(zero, step_size_bound(zero)); }) == ErrorCode::InvalidInput);
}

TEST_CASE("projected gradient agrees with exhaustive enumeration") {
    Rng rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 8;
        const SteadyStateProblem p = random_problem(rng, n, static_cast<std::uint64_t>(100 + trial));
        const SolveReport pgd = projected_gradient_solve(p, default_step_size(p), 1e-12);
        const SolveReport exact = qp_oracle(p);
        CHECK(pgd.converged);
        CHECK(std::abs(pgd.objective - exact.objective) < 1e-8);
        CHECK((pgd.q_star - exact.q_star).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("projected gradient descends at every iterate and meets the residual") {
    for (const Network& net : {make_feeder13(), make_feeder123()}) {
        Rng rng(net.size());
        for (int trial = 0; trial < 10; ++trial) {
            const SteadyStateProblem p = make_problem(net, test::random_vec(rng, net.size(), 0.85, 1.15));
            Mat H = p.X;
            H.diagonal() += p.cost;
            Vec last = Vec::Zero(p.size());
            bool descent = true;
            // Exact expansion of F(q) - F(last); differencing F loses the sign near the optimum.
            const SolveReport r = projected_gradient_solve(p, default_step_size(p), 1e-8, 100000,
                                                           [&](int, const Vec& q) {
                                                               const Vec dq = q - last;
                                                               const Vec g = H * last + p.delta_v_tilde;
                                                               if (g.dot(dq) + 0.5 * dq.dot(H * dq) > 0.0)
                                                                   descent = false;
                                                               last = q;
                                                           });
            CHECK(descent);
            CHECK(r.converged);
            CHECK(r.residual < 1e-8);
            CHECK(r.iterations <= 100000);
        }
    }
}

TEST_CASE("optimum satisfies KKT sign conditions") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const SteadyStateProblem p = random_problem(rng, 5, static_cast<std::uint64_t>(300 + trial));
        const SolveReport s = qp_oracle(p);
        const Vec g = gradient(p, s.q_star, s.v_star);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (s.q_star(i) <= p.q_lo(i)) {
                CHECK(g(i) >= -1e-10);
            } else if (s.q_star(i) >= p.q_hi(i)) {
                CHECK(g(i) <= 1e-10);
            } else {
                CHECK(std::abs(g(i)) < 1e-10);
            }
        }
    }
}

TEST_CASE("oracle rejects large problems") {
    const Network net = make_chain(13, 1);
    const SteadyStateProblem p = make_problem(net, Vec::Ones(net.size()));
    CHECK(error_of([&] { qp_oracle(p); }) == ErrorCode::ProblemTooLarge);
}
