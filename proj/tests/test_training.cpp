#include <sstream>

#include "doctest.h"
#include "tasrl/training.hpp"
#include "test_util.hpp"

using namespace tasrl;
using tasrl::test::error_of;

namespace {

using Blocks = std::vector<std::vector<double>>;

ControllerConfig tasrl_config(const Network& net) {
    ControllerConfig c;
    c.policy = make_initial_policy(net);
    return c;
}

// Deadband, monotonicity and output-bound checks on every bus of `p` against the feeder's limits.
int structural_failures(const PolicyParams& p, const Network& net, Rng& rng) {
    int failures = 0;
    for (const BusPolicy& bp : p.buses) {
        const Bus& b = net.bus(bp.bus);
        const CompiledBusPolicy pol(bp, p.c, p.epsilon);
        const BusLimits lim{b.v_lo, b.v_hi, b.q_min, b.q_max};
        double prev = std::numeric_limits<double>::infinity();
        const double q = rng.uniform(b.q_min, b.q_max);
        for (int k = 0; k < 1000; ++k) {
            const double v = 0.8 + 0.4 * k / 999.0;
            const double pi = pol(lim, 0.5, v, q);
            if (pi > prev) ++failures;
            if (v >= b.v_lo && v <= b.v_hi && pi != 0.0) ++failures;
            prev = pi;
        }
        const double lo = b.q_min * (1.0 - p.epsilon), hi = b.q_max * (1.0 - p.epsilon);
        for (int k = 0; k < 1000; ++k) {
            const double qq = rng.uniform(lo, hi);
            const double pi = pol(lim, 0.5, rng.uniform(0.8, 1.2), qq);
            if (pi < p.c * 0.5 * (lo - qq) || pi > p.c * 0.5 * (hi - qq)) ++failures;
        }
    }
    return failures;
}

}  // namespace

TEST_CASE("replay buffer evicts the oldest entries") {
    ReplayBuffer buf(3);
    for (int k = 0; k < 5; ++k) buf.push({static_cast<double>(k), 0, 0, 0, 0, 0});
    CHECK(buf.size() == 3);
    CHECK(buf.at(0).v == 2.0);
    CHECK(buf.at(2).v == 4.0);
    Rng rng(1);
    const auto s = buf.sample(rng, 10);
    CHECK(s.size() == 10);
    for (const Transition& t : s) CHECK(t.v >= 2.0);
}

TEST_CASE("zeroth-order step examples") {
    const Blocks x{{0.0}};
    const BlockReward quad = [](std::size_t, int, const Blocks& b) {
        return Vec::Constant(1, -(b[0][0] - 3.0) * (b[0][0] - 3.0));
    };
    CHECK(zeroth_order_step(x, quad, 4, 0.1, 0.0, 1) == x);

    Blocks it = x;
    for (int k = 0; k < 100; ++k) it = zeroth_order_step(it, quad, 4, 0.1, 0.1, static_cast<std::uint64_t>(k));
    CHECK(std::abs(it[0][0] - 3.0) < 0.05 * 3.0);

    CHECK(zeroth_order_step(x, quad, 4, 0.1, 0.1, 7) == zeroth_order_step(x, quad, 4, 0.1, 0.1, 7));

    const BlockReward bad = [](std::size_t, int, const Blocks&) { return Vec::Constant(1, std::nan("")); };
    CHECK(error_of([&] { zeroth_order_step(x, bad, 2, 0.1, 0.1, 1); }) == ErrorCode::NonFiniteLoss);
}

TEST_CASE("each block only sees its own reward") {
    const Blocks x{{0.5, -0.2}, {1.0, 0.3}};
    const BlockReward own = [](std::size_t, int, const Blocks& b) {
        Vec r(2);
        r(0) = -(b[0][0] * b[0][0] + b[0][1] * b[0][1]);
        r(1) = -(b[1][0] - 2.0) * (b[1][0] - 2.0);
        return r;
    };
    // The second reward is tainted by the first block's parameters.
    const BlockReward tainted = [&](std::size_t d, int s, const Blocks& b) {
        Vec r = own(d, s, b);
        r(0) += 100.0 * b[1][0] + 50.0 * b[1][1];
        return r;
    };
    const BlockReward tainted_other = [&](std::size_t d, int s, const Blocks& b) {
        Vec r = own(d, s, b);
        r(1) += 100.0 * b[0][0];
        return r;
    };
    const Blocks a = zeroth_order_step(x, own, 6, 0.1, 0.05, 3);
    const Blocks b = zeroth_order_step(x, tainted_other, 6, 0.1, 0.05, 3);
    CHECK(a[0] == b[0]);
    CHECK(a[1] != b[1]);
    const Blocks c = zeroth_order_step(x, tainted, 6, 0.1, 0.05, 3);
    CHECK(a[1] == c[1]);
}

TEST_CASE("policy updates on the feeder stay admissible and reproducible") {
    const Network net = make_feeder13();
    const ControllerConfig cfg = tasrl_config(net);
    const ScenarioSampler sampler = make_scenario_sampler(net, 0.05, 0.15, 50, 1);
    std::vector<Scenario> batch;
    for (std::uint64_t k = 0; k < 4; ++k) batch.push_back(sampler(k));
    PolicyParams p = *cfg.policy;
    Rng rng(1);
    for (int j = 0; j < 5; ++j) {
        p = zeroth_order_update(p, net, cfg, batch, 0.3, 20.0, static_cast<std::uint64_t>(j));
        p.validate();
        CHECK(structural_failures(p, net, rng) == 0);
    }
    const PolicyParams again = zeroth_order_update(*cfg.policy, net, cfg, batch, 0.3, 20.0, 0);
    const PolicyParams once = zeroth_order_update(*cfg.policy, net, cfg, batch, 0.3, 20.0, 0);
    for (std::size_t i = 0; i < once.buses.size(); ++i) CHECK(once.flatten(i) == again.flatten(i));
    const PolicyParams still = zeroth_order_update(*cfg.policy, net, cfg, batch, 0.3, 0.0, 0);
    for (std::size_t i = 0; i < still.buses.size(); ++i) CHECK(still.flatten(i) == cfg.policy->flatten(i));
}

TEST_CASE("zero training episodes return the initialization") {
    const Network net = make_feeder13();
    TrainerConfig t;
    t.episodes = 0;
    t.heldout = 4;
    const ControllerConfig cfg = tasrl_config(net);
    const TrainResult r = train(t, cfg, net, make_scenario_sampler(net, 0.05, 0.15, 50, 1));
    for (std::size_t i = 0; i < r.checkpoint.params.buses.size(); ++i) {
        CHECK(r.checkpoint.params.flatten(i) == cfg.policy->flatten(i));
    }
    CHECK(!r.aborted);
    CHECK(r.log.empty());
}

TEST_CASE("short training runs of both methods") {
    const Network net = make_feeder13();
    const ControllerConfig cfg = tasrl_config(net);
    const ScenarioSampler sampler = make_scenario_sampler(net, 0.05, 0.15, 40, 2);
    for (TrainMethod m : {TrainMethod::ZerothOrder, TrainMethod::ActorCritic}) {
        TrainerConfig t;
        t.method = m;
        t.episodes = 6;
        t.steps = 40;
        t.batch = 4;
        t.heldout = 8;
        int rows = 0;
        const TrainResult r = train(t, cfg, net, sampler, [&](const TrainLogRow&) { ++rows; });
        CHECK(!r.aborted);
        CHECK(rows == 6);
        r.checkpoint.params.validate();
        Rng rng(3);
        CHECK(structural_failures(r.checkpoint.params, net, rng) == 0);
        CHECK(r.heldout_improved_fraction >= 0.0);
        CHECK(r.heldout_improved_fraction <= 1.0);
        CHECK(r.checkpoint.meta.training_ineffective == (r.heldout_improved_fraction < kIneffectiveThreshold));
        for (const TrainLogRow& row : r.log) CHECK(std::isfinite(row.mean_transient_cost));
        std::ostringstream out;
        write_train_log_csv(r.log, out);
        CHECK(out.str().rfind("episode,", 0) == 0);
        const TrainResult again = train(t, cfg, net, sampler);
        for (std::size_t i = 0; i < r.checkpoint.params.buses.size(); ++i) {
            CHECK(r.checkpoint.params.flatten(i) == again.checkpoint.params.flatten(i));
        }
    }
}

TEST_CASE("critic gradients match central differences") {
    Critic q(32, 5);
    CHECK(q(1.0, 0.1, 0.01) == 0.0);
    Rng rng(6);
    std::vector<double> theta = q.parameters();
    for (double& x : theta) x = 0.5 * rng.normal();
    q.set_parameters(theta);
    double worst = 0.0;
    const double step = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        const double v = rng.uniform(0.85, 1.15), qq = rng.uniform(-0.4, 0.4), f = rng.uniform(-0.1, 0.1);
        const Critic::Gradient g = q.gradient(v, qq, f);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            std::vector<double> a = theta, b = theta;
            a[k] += step;
            b[k] -= step;
            Critic qa = q, qb = q;
            qa.set_parameters(a);
            qb.set_parameters(b);
            worst = std::max(worst, std::abs((qa(v, qq, f) - qb(v, qq, f)) / (2 * step) - g.params[k]));
        }
        worst = std::max(worst, std::abs((q(v + step, qq, f) - q(v - step, qq, f)) / (2 * step) - g.dv));
        worst = std::max(worst, std::abs((q(v, qq + step, f) - q(v, qq - step, f)) / (2 * step) - g.dq));
        worst = std::max(worst, std::abs((q(v, qq, f + step) - q(v, qq, f - step)) / (2 * step) - g.df));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("critic fits a quadratic reward") {
    Critic q(32, 9);
    Rng rng(10);
    auto target = [](double v, double qq, double f) {
        const double dv = 10.0 * (v - 1.0);
        return -(dv * dv + 4.0 * qq * qq + 50.0 * f * qq);
    };
    for (int k = 0; k < 200000; ++k) {
        const double v = rng.uniform(0.85, 1.15), qq = rng.uniform(-0.4, 0.4), f = rng.uniform(-0.1, 0.1);
        q.train_step(v, qq, f, target(v, qq, f), 5e-3);
    }
    double mean = 0.0, mse = 0.0;
    std::vector<double> ys;
    for (int k = 0; k < 2000; ++k) {
        const double v = rng.uniform(0.85, 1.15), qq = rng.uniform(-0.4, 0.4), f = rng.uniform(-0.1, 0.1);
        const double y = target(v, qq, f);
        ys.push_back(y);
        mean += y;
        mse += (q(v, qq, f) - y) * (q(v, qq, f) - y);
    }
    mean /= ys.size();
    mse /= ys.size();
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    var /= ys.size();
    CHECK(mse < 0.1 * var);
}

TEST_CASE("analytic policy gradient matches finite differences") {
    const Network net = make_feeder13();
    Rng rng(12);
    PolicyParams p = make_initial_policy(net, 4);
    for (std::size_t i = 0; i < p.buses.size(); ++i) {
        std::vector<double> flat = p.flatten(i);
        for (double& x : flat) x = rng.normal();
        p.assign(i, flat);
    }
    const Bus& b = net.bus(p.buses[1].bus);
    const BusLimits lim{b.v_lo, b.v_hi, b.q_min, b.q_max};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double v = trial % 2 ? rng.uniform(1.06, 1.2) : rng.uniform(0.8, 0.94);
        const double q = rng.uniform(b.q_min * 0.8, b.q_max * 0.8);
        const std::vector<double> g = policy_parameter_gradient(p, 1, lim, 0.5, v, q);
        const std::vector<double> flat = p.flatten(1);
        for (std::size_t k = 0; k < flat.size(); ++k) {
            const double step = 1e-6;
            PolicyParams a = p, c = p;
            std::vector<double> fa = flat, fc = flat;
            fa[k] += step;
            fc[k] -= step;
            a.assign(1, fa);
            c.assign(1, fc);
            const double fd = (policy_eval(a, b, 0.5, v, q) - policy_eval(c, b, 0.5, v, q)) / (2 * step);
            worst = std::max(worst, std::abs(fd - g[k]));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("trainer configuration checks") {
    TrainerConfig t;
    t.batch = 0;
    CHECK(error_of([&] { t.validate(); }) == ErrorCode::InvalidInput);
    CHECK(TrainerConfig{}.effective_actor_lr() == 20.0);
    CHECK(parse_method("ac") == TrainMethod::ActorCritic);
    CHECK(error_of([] { parse_method("ppo"); }) == ErrorCode::InvalidInput);
}
