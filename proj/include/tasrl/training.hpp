#pragma once

// Policy optimization for the transient term. Every rollout goes through the
// safe controller, so any parameter value visited here is admissible; the
// trainers only try to lower the discounted transient cost.

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "tasrl/simulation.hpp"

namespace tasrl {

enum class TrainMethod { ActorCritic, ZerothOrder };

const char* to_string(TrainMethod m) noexcept;
TrainMethod parse_method(const std::string& name);  // ac | zo

/// One per-bus transition (v_i, q_i, f_i, -c_i, v_i'). q_i' is kept as well
/// so the next rate can be recomputed locally.
struct Transition {
    double v = 0.0;
    double q = 0.0;
    double f = 0.0;
    double reward = 0.0;
    double v_next = 0.0;
    double q_next = 0.0;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Transition& t);  // evicts the oldest entry when full
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] const Transition& at(std::size_t i) const { return data_.at(i); }
    /// Uniform with replacement.
    [[nodiscard]] std::vector<Transition> sample(Rng& rng, std::size_t count) const;

private:
    std::size_t capacity_;
    std::deque<Transition> data_;
};

/// Per-bus action-value estimate Q(v_i, q_i, f_i): one tanh hidden layer and
/// a linear output. Inputs are shifted and scaled by fixed constants.
class Critic {
public:
    Critic() = default;
    Critic(int width, std::uint64_t seed);

    [[nodiscard]] int width() const noexcept { return static_cast<int>(b1_.size()); }
    [[nodiscard]] double operator()(double v, double q, double f) const;

    struct Gradient {
        std::vector<double> params;  // same order as parameters()
        double dv = 0.0;
        double dq = 0.0;
        double df = 0.0;
    };
    [[nodiscard]] Gradient gradient(double v, double q, double f) const;

    /// W1 (width x 3, row major), b1, w2, b2.
    [[nodiscard]] std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& p);

    /// One SGD step on (Q - target)^2 / 2; returns the squared error before it.
    double train_step(double v, double q, double f, double target, double lr);

private:
    std::vector<double> W1_;
    std::vector<double> b1_;
    std::vector<double> w2_;
    double b2_ = 0.0;
};

double critic_eval(const Critic& critic, double v, double q, double f);

/// d pi / d theta for one bus in the flatten() order (u+, beta+, u-, beta-).
std::vector<double> policy_parameter_gradient(const PolicyParams& params, std::size_t bus_index,
                                              const BusLimits& limits, double alpha, double v, double q);

/// Rewards per block for a full set of block parameters, evaluated for
/// perturbation `direction` taken with `sign` (+1 or -1). Must be safe to call
/// concurrently.
using BlockReward =
    std::function<Vec(std::size_t direction, int sign, const std::vector<std::vector<double>>& blocks)>;

/// One antithetic two-point step: for each of `directions` Gaussian
/// perturbations e, block k moves by step * (R_k(x + s e) - R_k(x - s e)) /
/// (2 s) * e_k / directions. Each block only sees its own reward.
/// Throws NonFiniteLoss if a reward is not finite.
std::vector<std::vector<double>> zeroth_order_step(const std::vector<std::vector<double>>& blocks,
                                                   const BlockReward& reward, int directions, double scale,
                                                   double step, std::uint64_t seed);

/// The same step on policy parameters with bus i rewarded by its own
/// discounted return -sum gamma^t h c_i over the scenario batch. scenario k
/// uses perturbation k.
PolicyParams zeroth_order_update(const PolicyParams& params, const Network& network, const ControllerConfig& config,
                                 const std::vector<Scenario>& batch, double scale, double step, std::uint64_t seed,
                                 double discount = kDefaultDiscount);

using ScenarioSampler = std::function<Scenario(std::uint64_t index)>;

/// Alternating high/low scenarios with magnitudes in [lo, hi].
ScenarioSampler make_scenario_sampler(const Network& network, double magnitude_lo, double magnitude_hi, int horizon,
                                      std::uint64_t seed);

struct TrainerConfig {
    TrainMethod method = TrainMethod::ZerothOrder;
    int episodes = 200;  // zo: updates; ac: environment episodes
    int steps = kDefaultHorizon;
    int batch = 8;
    double actor_lr = 0.0;  // 0 picks the method default (zo 20, ac 0.05)
    double critic_lr = 1e-2;
    int critic_width = 32;
    double perturbation = 0.3;
    std::size_t buffer_capacity = 100000;
    double discount = kDefaultDiscount;
    int heldout = 100;
    double magnitude_lo = 0.05;
    double magnitude_hi = 0.15;
    std::uint64_t seed = 1;

    void validate() const;
    [[nodiscard]] double effective_actor_lr() const noexcept;
};

struct TrainLogRow {
    int episode = 0;
    double mean_transient_cost = 0.0;
    double clipped_fraction = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<TrainLogRow> log;
    double heldout_improved_fraction = 0.0;
    bool aborted = false;  // NonFiniteLoss; checkpoint holds the last finite params
    std::string message;
};

using TrainProgress = std::function<void(const TrainLogRow&)>;

/// Starts from `config.policy` (required). The held-out set is drawn from
/// the sampler at indices after the training range.
TrainResult train(const TrainerConfig& trainer, const ControllerConfig& config, const Network& network,
                  const ScenarioSampler& sampler, const TrainProgress& progress = {});

void write_train_log_csv(const std::vector<TrainLogRow>& log, std::ostream& out);

inline constexpr double kIneffectiveThreshold = 0.8;
/// Sampler indices from here on form the held-out set.
inline constexpr std::uint64_t kHeldoutIndexOffset = 1ULL << 32;

}  // namespace tasrl
