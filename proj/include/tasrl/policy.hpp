#pragma once

// Decentralized transient policy built from two stacked-ReLU branches per bus.
//
// The high-voltage branch acts on v - v_hi and is non-positive and
// non-increasing; the low-voltage branch acts on v - v_lo and is non-negative
// and non-increasing. Both are exactly zero inside [v_lo, v_hi]. A tanh
// squashes each branch and scales it by the remaining reactive headroom, so
// the output stays inside [c alpha (q_lo' - q), c alpha (q_hi' - q)].
//
// Constraints on the weights are realized by construction: partial sums of the
// weights are -exp(u) (high branch) or +exp(u) (low branch) and biases drop by
// exp(beta) from b_1 = 0. Every parameter value is therefore admissible.

#include <optional>
#include <string>
#include <vector>

#include "tasrl/grid.hpp"

namespace tasrl {

enum class Branch { High, Low };

struct MonotoneBranchParams {
    std::vector<double> u;     // d entries
    std::vector<double> beta;  // d - 1 entries

    [[nodiscard]] int units() const noexcept { return static_cast<int>(u.size()); }
    static MonotoneBranchParams zeros(int units);
};

struct BranchWeights {
    std::vector<double> w;
    std::vector<double> b;
};

BranchWeights branch_weights(const MonotoneBranchParams& params, Branch branch);

/// w' ReLU(+-1 v_dev + b): "+" for the high branch, "-" for the low branch.
double stacked_relu(double v_dev, const std::vector<double>& w, const std::vector<double>& b, Branch branch);

struct BusPolicy {
    int bus = 0;
    MonotoneBranchParams high;
    MonotoneBranchParams low;
};

struct PolicyParams {
    int units = 8;
    double c = 0.5;
    double epsilon = 0.1;
    std::vector<BusPolicy> buses;  // one per controlled bus, ascending id

    [[nodiscard]] const BusPolicy* find(int bus) const;
    /// Number of unconstrained reals per bus: 2 (d + d - 1).
    [[nodiscard]] int bus_parameter_count() const noexcept { return 2 * (2 * units - 1); }

    /// Flat (u+, beta+, u-, beta-) view for optimizers.
    [[nodiscard]] std::vector<double> flatten(std::size_t bus_index) const;
    void assign(std::size_t bus_index, const std::vector<double>& flat);

    /// Structural checks: sizes, finiteness, c in [0, 1), epsilon in (0, 1).
    void validate() const;
};

/// u = beta = 0 on every controlled bus.
PolicyParams make_initial_policy(const Network& network, int units = 8, double c = 0.5, double epsilon = 0.1);
PolicyParams make_initial_policy(const std::vector<int>& bus_ids, int units = 8, double c = 0.5,
                                 double epsilon = 0.1);

/// Per-bus limits the policy needs.
struct BusLimits {
    double v_lo = 0.95;
    double v_hi = 1.05;
    double q_lo = -1.0;
    double q_hi = 1.0;
};

/// Evaluation of one bus policy with its weights expanded once.
class CompiledBusPolicy {
public:
    CompiledBusPolicy(const BusPolicy& policy, double c, double epsilon);

    [[nodiscard]] double operator()(const BusLimits& limits, double alpha, double v, double q) const;

    /// Raw branch outputs before tanh scaling.
    [[nodiscard]] double high(double v_dev) const { return stacked_relu(v_dev, high_.w, high_.b, Branch::High); }
    [[nodiscard]] double low(double v_dev) const { return stacked_relu(v_dev, low_.w, low_.b, Branch::Low); }

private:
    BranchWeights high_;
    BranchWeights low_;
    double c_;
    double epsilon_;
};

double policy_eval(const PolicyParams& params, const Bus& bus, double alpha, double v, double q);

/// Componentwise policy on every bus of the network (length n); zero on
/// buses without a controller.
Vec policy_eval_vector(const PolicyParams& params, const Network& network, double alpha, const Vec& v,
                       const Vec& q);

/// The same policy aligned to an ordered list of controlled buses.
class CompiledPolicy {
public:
    CompiledPolicy(const PolicyParams& params, const std::vector<int>& bus_ids);

    [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(buses_.size()); }
    [[nodiscard]] double eval(Eigen::Index i, const BusLimits& limits, double alpha, double v, double q) const {
        return buses_[static_cast<std::size_t>(i)](limits, alpha, v, q);
    }

private:
    std::vector<CompiledBusPolicy> buses_;
};

// ---------------------------------------------------------------------------
// Checkpoints: JSON with per-bus u/beta arrays, derived weights, c, epsilon, d.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
    bool training_ineffective = false;
    std::string method;
    std::string certificate;  // serialized verify-stability report, if attached
};

struct Checkpoint {
    PolicyParams params;
    CheckpointMeta meta;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
/// Also requires the controlled buses of `network` to match the checkpoint.
Checkpoint load_checkpoint(const std::string& path, const Network& network);
void check_matches(const PolicyParams& params, const Network& network);

}  // namespace tasrl
