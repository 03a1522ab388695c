#include "tasrl/policy.hpp"

#include <algorithm>

namespace tasrl {

MonotoneBranchParams MonotoneBranchParams::zeros(int units) {
    MonotoneBranchParams p;
    p.u.assign(static_cast<std::size_t>(units), 0.0);
    p.beta.assign(static_cast<std::size_t>(std::max(units - 1, 0)), 0.0);
    return p;
}

BranchWeights branch_weights(const MonotoneBranchParams& params, Branch branch) {
    const std::size_t d = params.u.size();
    const double sign = branch == Branch::High ? -1.0 : 1.0;
    BranchWeights out;
    out.w.resize(d);
    out.b.resize(d);
    double prev_sum = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        const double sum = sign * std::exp(params.u[l]);
        out.w[l] = sum - prev_sum;
        prev_sum = sum;
        out.b[l] = l == 0 ? 0.0 : out.b[l - 1] - std::exp(params.beta[l - 1]);
    }
    return out;
}

double stacked_relu(double v_dev, const std::vector<double>& w, const std::vector<double>& b, Branch branch) {
    const double x = branch == Branch::High ? v_dev : -v_dev;
    double out = 0.0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        const double a = x + b[l];
        if (a <= 0.0) break;  // biases are non-increasing
        out += w[l] * a;
    }
    return out;
}

const BusPolicy* PolicyParams::find(int bus) const {
    for (const BusPolicy& p : buses) {
        if (p.bus == bus) return &p;
    }
    return nullptr;
}

std::vector<double> PolicyParams::flatten(std::size_t bus_index) const {
    const BusPolicy& p = buses.at(bus_index);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(bus_parameter_count()));
    out.insert(out.end(), p.high.u.begin(), p.high.u.end());
    out.insert(out.end(), p.high.beta.begin(), p.high.beta.end());
    out.insert(out.end(), p.low.u.begin(), p.low.u.end());
    out.insert(out.end(), p.low.beta.begin(), p.low.beta.end());
    return out;
}

void PolicyParams::assign(std::size_t bus_index, const std::vector<double>& flat) {
    if (static_cast<int>(flat.size()) != bus_parameter_count()) {
        fail(ErrorCode::DimensionMismatch, "PolicyParams::assign: wrong parameter count");
    }
    BusPolicy& p = buses.at(bus_index);
    const auto d = static_cast<std::ptrdiff_t>(units);
    auto it = flat.begin();
    p.high.u.assign(it, it + d);
    it += d;
    p.high.beta.assign(it, it + d - 1);
    it += d - 1;
    p.low.u.assign(it, it + d);
    it += d;
    p.low.beta.assign(it, it + d - 1);
}

void PolicyParams::validate() const {
    if (units < 1) fail(ErrorCode::InvariantViolation, "policy: d must be at least 1");
    if (!(c >= 0.0 && c < 1.0)) fail(ErrorCode::InvariantViolation, "policy: c must lie in [0, 1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvariantViolation, "policy: epsilon must lie in (0, 1)");
    int last = 0;
    for (const BusPolicy& p : buses) {
        const std::string where = "policy bus " + std::to_string(p.bus) + ": ";
        if (p.bus <= last) fail(ErrorCode::InvariantViolation, where + "bus ids must be ascending and positive");
        last = p.bus;
        for (const MonotoneBranchParams* br : {&p.high, &p.low}) {
            if (br->units() != units || static_cast<int>(br->beta.size()) != units - 1) {
                fail(ErrorCode::InvariantViolation, where + "parameter arrays do not match d");
            }
            for (double x : br->u) {
                if (!std::isfinite(x)) fail(ErrorCode::InvariantViolation, where + "non-finite u");
            }
            for (double x : br->beta) {
                if (!std::isfinite(x)) fail(ErrorCode::InvariantViolation, where + "non-finite beta");
            }
        }
    }
}

PolicyParams make_initial_policy(const std::vector<int>& bus_ids, int units, double c, double epsilon) {
    PolicyParams p;
    p.units = units;
    p.c = c;
    p.epsilon = epsilon;
    for (int id : bus_ids) {
        p.buses.push_back({id, MonotoneBranchParams::zeros(units), MonotoneBranchParams::zeros(units)});
    }
    p.validate();
    return p;
}

PolicyParams make_initial_policy(const Network& network, int units, double c, double epsilon) {
    return make_initial_policy(network.controlled(), units, c, epsilon);
}

CompiledBusPolicy::CompiledBusPolicy(const BusPolicy& policy, double c, double epsilon)
    : high_(branch_weights(policy.high, Branch::High)),
      low_(branch_weights(policy.low, Branch::Low)),
      c_(c),
      epsilon_(epsilon) {}

double CompiledBusPolicy::operator()(const BusLimits& limits, double alpha, double v, double q) const {
    const double q_lo_margin = limits.q_lo * (1.0 - epsilon_);
    const double q_hi_margin = limits.q_hi * (1.0 - epsilon_);
    // Headroom factors are floored at zero so the sign and monotonicity of
    // each branch survive when q sits in the epsilon margin.
    const double down = std::max(q - q_lo_margin, 0.0);
    const double up = std::max(q_hi_margin - q, 0.0);
    double out = 0.0;
    if (v > limits.v_hi) out += c_ * alpha * down * std::tanh(high(v - limits.v_hi));
    if (v < limits.v_lo) out += c_ * alpha * up * std::tanh(low(v - limits.v_lo));
    return out;
}

double policy_eval(const PolicyParams& params, const Bus& bus, double alpha, double v, double q) {
    const BusPolicy* p = params.find(bus.id);
    if (p == nullptr) return 0.0;
    const CompiledBusPolicy compiled(*p, params.c, params.epsilon);
    return compiled({bus.v_lo, bus.v_hi, bus.q_min, bus.q_max}, alpha, v, q);
}

Vec policy_eval_vector(const PolicyParams& params, const Network& network, double alpha, const Vec& v,
                       const Vec& q) {
    require_size(v, network.size(), "policy_eval_vector: v");
    require_size(q, network.size(), "policy_eval_vector: q");
    Vec out = Vec::Zero(network.size());
    for (int id : network.controlled()) {
        out(id - 1) = policy_eval(params, network.bus(id), alpha, v(id - 1), q(id - 1));
    }
    return out;
}

CompiledPolicy::CompiledPolicy(const PolicyParams& params, const std::vector<int>& bus_ids) {
    buses_.reserve(bus_ids.size());
    for (int id : bus_ids) {
        const BusPolicy* p = params.find(id);
        if (p == nullptr) {
            fail(ErrorCode::InvariantViolation, "policy has no parameters for bus " + std::to_string(id));
        }
        buses_.emplace_back(*p, params.c, params.epsilon);
    }
}

}  // namespace tasrl
