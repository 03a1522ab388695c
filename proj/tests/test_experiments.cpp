#include <algorithm>

#include "doctest.h"
#include "tasrl/experiments.hpp"
#include "test_util.hpp"

using namespace tasrl;
using tasrl::test::error_of;

TEST_CASE("benchmark on the shipped feeder") {
    const Network net = make_feeder13();
    const PolicyParams pol = make_initial_policy(net);
    const auto scenarios = generate_scenarios(net, ScenarioKind::HighVoltage, 0.05, 0.15, 100, 1);
    const BenchmarkReport r = run_benchmark(net, pol, 0.5, 1.0, scenarios);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].variant == Variant::Tasrl);
    CHECK(r.rows[1].variant == Variant::SafeGradientFlow);
    CHECK(std::abs(r.rows[0].mean_objective - r.rows[1].mean_objective) < 1e-4);
    CHECK(r.rows[0].scenario_hash == r.rows[1].scenario_hash);
    CHECK(r.scenario_hash == scenario_hash(scenarios));
    CHECK(r.scenario_count == 100);

    const BenchmarkReport again = run_benchmark(net, pol, 0.5, 1.0, scenarios);
    CHECK(benchmark_table(r) == benchmark_table(again));
    CHECK(benchmark_episodes_csv(r) == benchmark_episodes_csv(again));
}

TEST_CASE("benchmark without a disturbance") {
    const Network net = make_feeder13();
    Scenario s;
    s.v_env = net.v_nom();
    const BenchmarkReport r = run_benchmark(net, make_initial_policy(net), 0.5, 1.0, {s});
    for (const BenchmarkRow& row : r.rows) {
        CHECK(row.mean_recovery_time == 0.0);
        CHECK(row.mean_transient_cost == 0.0);
    }
}

TEST_CASE("scenario hash is sensitive to content") {
    const Network net = make_feeder13();
    auto a = generate_scenarios(net, ScenarioKind::HighVoltage, 0.05, 0.15, 3, 1);
    const std::string h = scenario_hash(a);
    CHECK(h.size() == 16);
    CHECK(scenario_hash(a) == h);
    a[1].v_env(0) += 1e-12;
    CHECK(scenario_hash(a) != h);
}

TEST_CASE("alpha sweep") {
    const Network net = make_feeder13();
    ControllerConfig base;
    base.policy = make_initial_policy(net);
    const Scenario s = generate_scenarios(net, ScenarioKind::HighVoltage, 0.12, 0.12, 1, 1)[0];

    const auto single = alpha_sweep(net, base, s, {0.5});
    const Episode ref = run_episode(net, base, s);
    CHECK(single[0].episode.metrics.transient_cost == ref.metrics.transient_cost);
    CHECK(single[0].episode.metrics.recovery_time == ref.metrics.recovery_time);
    for (std::size_t t = 0; t < ref.trajectory.rows(); ++t) {
        CHECK((single[0].episode.trajectory.q[t] - ref.trajectory.q[t]).norm() == 0.0);
    }

    CHECK(error_of([&] { alpha_sweep(net, base, s, {0.5, 1.5}); }) == ErrorCode::InvalidAlpha);

    const int bus = most_constrained_bus(net, s);
    CHECK(std::find(net.controlled().begin(), net.controlled().end(), bus) != net.controlled().end());

    const auto runs = alpha_sweep(net, base, s, {0.1, 0.5});
    ControllerConfig lo = base, hi = base;
    lo.alpha = 0.1;
    hi.alpha = 0.5;
    const SaturationComparison c =
        compare_saturation(net, s, lo, runs[0].episode.trajectory, hi, runs[1].episode.trajectory, bus);
    CHECK(c.compared_steps > 0);
    CHECK(c.exceed_steps == 0);
    CHECK(c.holds());
}

TEST_CASE("run config validation") {
    RunConfig rc;
    rc.alpha = 2.0;
    CHECK(error_of([&] { rc.validate(); }) == ErrorCode::InvalidAlpha);
    rc.alpha = 0.5;
    rc.gamma = 1.5;
    CHECK(error_of([&] { rc.validate(); }) == ErrorCode::InvalidInput);
}
