#include "doctest.h"
#include "tasrl/policy.hpp"
#include "test_util.hpp"

using namespace tasrl;
using tasrl::test::error_of;

namespace {

MonotoneBranchParams random_branch(Rng& rng, int d) {
    MonotoneBranchParams p = MonotoneBranchParams::zeros(d);
    for (double& u : p.u) u = 2.0 * rng.normal();
    for (double& b : p.beta) b = rng.normal() - 2.0;
    return p;
}

BusPolicy random_bus(Rng& rng, int id, int d) { return {id, random_branch(rng, d), random_branch(rng, d)}; }

const BusLimits kLimits{0.95, 1.05, -0.4, 0.6};

}  // namespace

TEST_CASE("branch weight construction") {
    MonotoneBranchParams one = MonotoneBranchParams::zeros(1);
    BranchWeights w = branch_weights(one, Branch::High);
    CHECK(w.w == std::vector<double>{-1.0});
    CHECK(w.b == std::vector<double>{0.0});

    MonotoneBranchParams two = MonotoneBranchParams::zeros(2);
    two.u = {0.0, std::log(0.5)};
    w = branch_weights(two, Branch::High);
    CHECK(w.w[0] == doctest::Approx(-1.0));
    CHECK(w.w[1] == doctest::Approx(0.5));
    CHECK(w.b == std::vector<double>{0.0, -1.0});

    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const MonotoneBranchParams p = random_branch(rng, 3);
        for (Branch br : {Branch::High, Branch::Low}) {
            const BranchWeights bw = branch_weights(p, br);
            double sum = 0.0;
            for (std::size_t l = 0; l < 3; ++l) {
                sum += bw.w[l];
                CHECK((br == Branch::High ? sum < 0.0 : sum > 0.0));
                if (l > 0) CHECK(bw.b[l] < bw.b[l - 1]);
            }
            CHECK(bw.b[0] == 0.0);
        }
    }
}

TEST_CASE("stacked ReLU examples") {
    const BranchWeights bw = branch_weights(MonotoneBranchParams::zeros(1), Branch::High);
    CHECK(stacked_relu(-0.01, bw.w, bw.b, Branch::High) == 0.0);
    CHECK(stacked_relu(0.05, bw.w, bw.b, Branch::High) == doctest::Approx(-0.05).epsilon(1e-15));
    const BranchWeights lo = branch_weights(MonotoneBranchParams::zeros(1), Branch::Low);
    CHECK(stacked_relu(0.01, lo.w, lo.b, Branch::Low) == 0.0);
    CHECK(stacked_relu(-0.05, lo.w, lo.b, Branch::Low) == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("structural suite on random parameter draws") {
    Rng rng(2024);
    const double alpha = 0.5;
    int failures = 0;
    for (int draw = 0; draw < 100; ++draw) {
        const BusPolicy bp = random_bus(rng, 1, 1 + draw % 8);
        const double c = rng.uniform(0.0, 0.99);
        const double eps = rng.uniform(0.01, 0.5);
        const CompiledBusPolicy pol(bp, c, eps);

        // Deadband exactness.
        for (int k = 0; k <= 200; ++k) {
            const double v = kLimits.v_lo + (kLimits.v_hi - kLimits.v_lo) * k / 200.0;
            if (pol(kLimits, alpha, v, rng.uniform(kLimits.q_lo, kLimits.q_hi)) != 0.0) ++failures;
        }
        // Monotone branches on 1000-point grids.
        double prev_hi = 0.0, prev_lo = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const double dev = 0.3 * k / 999.0;
            const double hi = pol.high(dev);
            const double lo = pol.low(-dev);
            if (hi > 0.0 || hi > prev_hi) ++failures;
            if (lo < 0.0 || lo < prev_lo) ++failures;
            prev_hi = hi;
            prev_lo = lo;
        }
        // pi is non-increasing in v at fixed q.
        const double q = rng.uniform(kLimits.q_lo, kLimits.q_hi);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 1000; ++k) {
            const double v = 0.7 + 0.6 * k / 999.0;
            const double pi = pol(kLimits, alpha, v, q);
            if (pi > prev) ++failures;
            prev = pi;
        }
        // Output bound on the epsilon-shrunk box.
        const double lo_m = kLimits.q_lo * (1.0 - eps);
        const double hi_m = kLimits.q_hi * (1.0 - eps);
        for (int k = 0; k < 10000; ++k) {
            const double v = rng.uniform(0.7, 1.3);
            const double qq = rng.uniform(lo_m, hi_m);
            const double pi = pol(kLimits, alpha, v, qq);
            if (pi < c * alpha * (lo_m - qq) || pi > c * alpha * (hi_m - qq)) ++failures;
        }
        // Over the full box the output never leaves the safe-set rates.
        for (int k = 0; k < 1000; ++k) {
            const double qq = rng.uniform(kLimits.q_lo, kLimits.q_hi);
            const double pi = pol(kLimits, alpha, rng.uniform(0.7, 1.3), qq);
            if (pi < alpha * (kLimits.q_lo - qq) || pi > alpha * (kLimits.q_hi - qq)) ++failures;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("policy at the shrunk lower limit is zero under high voltage") {
    const BusPolicy bp{1, MonotoneBranchParams::zeros(4), MonotoneBranchParams::zeros(4)};
    const CompiledBusPolicy pol(bp, 0.5, 0.1);
    CHECK(pol(kLimits, 0.5, 1.2, kLimits.q_lo * 0.9) == 0.0);
    CHECK(pol(kLimits, 0.5, 1.2, 0.0) < 0.0);
    CHECK(pol(kLimits, 0.5, 0.8, 0.0) > 0.0);
}

TEST_CASE("vector evaluation is decentralized and matches the per-bus loop") {
    const Network net = make_feeder13();
    Rng rng(5);
    PolicyParams params = make_initial_policy(net);
    for (BusPolicy& bp : params.buses) bp = random_bus(rng, bp.bus, params.units);
    const Vec q = Vec::Zero(net.size());

    CHECK(policy_eval_vector(params, net, 0.5, Vec::Ones(net.size()), q).cwiseAbs().maxCoeff() == 0.0);

    Vec v = Vec::Ones(net.size());
    v(1) = 1.1;  // bus 2
    const Vec one = policy_eval_vector(params, net, 0.5, v, q);
    for (int i = 0; i < net.size(); ++i) CHECK((i == 1 ? one(i) != 0.0 : one(i) == 0.0));

    for (int trial = 0; trial < 100; ++trial) {
        const Vec vv = test::random_vec(rng, net.size(), 0.85, 1.15);
        Vec qq = Vec::Zero(net.size());
        for (int id : net.controlled()) qq(id - 1) = rng.uniform(net.bus(id).q_min, net.bus(id).q_max);
        const Vec out = policy_eval_vector(params, net, 0.5, vv, qq);
        for (int id = 1; id <= net.size(); ++id) {
            CHECK(out(id - 1) == policy_eval(params, net.bus(id), 0.5, vv(id - 1), qq(id - 1)));
        }
    }
}

TEST_CASE("flatten and assign are inverse") {
    Rng rng(8);
    PolicyParams p = make_initial_policy(std::vector<int>{1, 4}, 5);
    p.buses[1] = random_bus(rng, 4, 5);
    const std::vector<double> flat = p.flatten(1);
    CHECK(static_cast<int>(flat.size()) == p.bus_parameter_count());
    PolicyParams q = make_initial_policy(std::vector<int>{1, 4}, 5);
    q.assign(1, flat);
    CHECK(q.buses[1].high.u == p.buses[1].high.u);
    CHECK(q.buses[1].low.beta == p.buses[1].low.beta);
    CHECK(error_of([&] { q.assign(0, {1.0}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("parameter validation") {
    PolicyParams p = make_initial_policy(std::vector<int>{1}, 3);
    p.c = 1.0;
    CHECK(error_of([&] { p.validate(); }) == ErrorCode::InvariantViolation);
    p.c = 0.5;
    p.buses[0].high.u[1] = std::nan("");
    CHECK(error_of([&] { p.validate(); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("checkpoint round trip and load-time checks") {
    const Network net = make_feeder13();
    Rng rng(6);
    Checkpoint ck;
    ck.params = make_initial_policy(net);
    for (BusPolicy& bp : ck.params.buses) bp = random_bus(rng, bp.bus, ck.params.units);
    ck.meta.method = "zo";
    const Checkpoint back = parse_checkpoint(checkpoint_to_json(ck));
    for (std::size_t k = 0; k < ck.params.buses.size(); ++k) {
        CHECK(back.params.flatten(k) == ck.params.flatten(k));
    }
    CHECK(back.meta.method == "zo");
    CHECK(back.params.c == ck.params.c);

    std::string broken = checkpoint_to_json(ck);
    const auto pos = broken.find("\"b_plus\"");
    REQUIRE(pos != std::string::npos);
    const auto zero = broken.find("0.0", pos);
    broken.replace(zero, 3, "0.5");
    CHECK(error_of([&] { parse_checkpoint(broken); }) == ErrorCode::InvariantViolation);

    Checkpoint other;
    other.params = make_initial_policy(std::vector<int>{2, 7});
    CHECK(error_of([&] { check_matches(other.params, net); }) == ErrorCode::InvariantViolation);
    try {
        check_matches(other.params, net);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("3 controlled buses") != std::string::npos);
    }
    CHECK(error_of([] { parse_checkpoint("{]"); }) == ErrorCode::CorruptCheckpoint);
}
