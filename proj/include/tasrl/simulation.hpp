#pragma once

// Discrete closed loop q(t+1) = q(t) + h xi(t) on the linearized grid, plus
// scenario generation and the per-episode metrics.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tasrl/controller.hpp"

namespace tasrl {

enum class ScenarioKind { HighVoltage, LowVoltage };

const char* to_string(ScenarioKind kind) noexcept;
ScenarioKind parse_kind(const std::string& name);  // high | low

struct Scenario {
    Vec v_env;  // length n
    Vec q0;     // length n; empty means zero
    int horizon = 100;
    std::uint64_t seed = 0;

    /// Finite v_env, horizon >= 1, q0 inside the capacity box (zero off the
    /// controlled buses).
    void validate(const Network& network) const;
    [[nodiscard]] Vec initial_q(const Network& network) const;
};

/// One row per step t = 0..horizon. Vectors are full length n; xi and q are
/// zero on uncontrolled buses.
struct Trajectory {
    std::vector<int> bus_ids;  // controlled buses
    double h = 1.0;
    std::vector<Vec> v;
    std::vector<Vec> q;
    std::vector<Vec> xi;
    std::vector<double> cost;
    std::vector<double> clipped_fraction;
    std::vector<std::vector<bool>> clipped;  // per row, over bus_ids

    [[nodiscard]] std::size_t rows() const noexcept { return v.size(); }
};

struct EpisodeMetrics {
    int recovery_time = 0;  // steps; horizon + 1 if never back in band
    double transient_cost = 0.0;
    double steady_state_objective = 0.0;
    bool converged = false;
    double final_kkt_residual = 0.0;
    double mean_clipped_fraction = 0.0;
    Vec bus_transient_cost;  // per controlled bus, same discounting
};

struct Episode {
    Trajectory trajectory;
    EpisodeMetrics metrics;
};

struct StepResult {
    Vec q_next;
    Vec v_next;
    ControlDecision decision;
};

/// One control step in controlled-bus coordinates. Rounding overshoot of a
/// few ulps past a bound is snapped onto it; anything larger is reported as
/// SafetyViolation.
StepResult step(const SafeController& controller, const Vec& v, const Vec& q);

/// Per-bus cost c_i = C_i(q_i) + q_i (v_i + v_env_i - 2 v_nom_i) / 2.
Vec bus_costs(const SteadyStateProblem& problem, const Vec& v, const Vec& q);
double step_cost(const SteadyStateProblem& problem, const Vec& v, const Vec& q, const Vec& v_env);

inline constexpr double kDefaultDiscount = 0.99;
inline constexpr int kDefaultHorizon = 100;
inline constexpr double kConvergenceTolerance = 1e-6;

struct EpisodeOptions {
    double discount = kDefaultDiscount;
    bool record = true;  // false keeps only the metrics
};

Episode run_episode(const Network& network, const ControllerConfig& config, const Scenario& scenario,
                    const EpisodeOptions& options = {});

std::vector<Scenario> generate_scenarios(const Network& network, ScenarioKind kind, double magnitude_lo,
                                         double magnitude_hi, int count, std::uint64_t seed,
                                         int horizon = kDefaultHorizon);

/// {"v_env": [...], "q0": [...], "horizon": 100}; q0 and horizon optional.
Scenario parse_scenario(const std::string& text, const Network& network, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path, const Network& network);
std::string scenario_to_json(const Scenario& scenario);

/// Header t,v_1..v_n,q_1..q_n,xi_1..xi_n,cost then one row per step, %.17g.
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);

}  // namespace tasrl
