#pragma once

// Benchmark and alpha-sweep drivers over shared scenario lists.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tasrl/simulation.hpp"

namespace tasrl {

struct RunConfig {
    std::string network_path;
    Variant variant = Variant::Tasrl;
    std::string checkpoint_path;
    ScenarioKind kind = ScenarioKind::HighVoltage;
    int count = 100;
    std::uint64_t seed = 1;
    double magnitude_lo = 0.05;
    double magnitude_hi = 0.15;
    double alpha = 0.5;
    double h = 1.0;
    double c = 0.5;
    double epsilon = 0.1;
    double gamma = kDefaultDiscount;
    int t_f = kDefaultHorizon;
    std::string output_dir = ".";

    /// h alpha <= 1 (InvalidAlpha), gamma in (0, 1], t_f >= 1, count >= 0.
    void validate() const;
};

/// FNV-1a over the bytes of every v_env, q0 and horizon.
std::string scenario_hash(const std::vector<Scenario>& scenarios);

struct BenchmarkRow {
    Variant variant = Variant::Tasrl;
    double mean_recovery_time = 0.0;
    double mean_transient_cost = 0.0;
    double mean_objective = 0.0;
    double converged_fraction = 0.0;
    double mean_clipped_fraction = 0.0;
    std::string scenario_hash;  // of the list this row consumed
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;  // tasrl, sgf, transient
    std::vector<std::vector<EpisodeMetrics>> episodes;  // per row
    std::string scenario_hash;
    std::size_t scenario_count = 0;
    std::uint64_t seed = 0;
    std::string kind;
};

/// Runs the three variants over `scenarios` in parallel (TASRL_THREADS).
BenchmarkReport run_benchmark(const Network& network, const PolicyParams& policy, double alpha, double h,
                              const std::vector<Scenario>& scenarios, double discount = kDefaultDiscount);

/// variant,mean_recovery_time,mean_transient_cost,mean_objective,... one row
/// per variant, preceded by '#' metadata lines.
std::string benchmark_table(const BenchmarkReport& report);
/// variant,episode,recovery_time,transient_cost,objective,converged,kkt_residual
std::string benchmark_episodes_csv(const BenchmarkReport& report);

struct SweepRun {
    double alpha = 0.0;
    Episode episode;
};

/// One episode per alpha on the same scenario. Throws InvalidAlpha when
/// h alpha > 1 or alpha <= 0.
std::vector<SweepRun> alpha_sweep(const Network& network, const ControllerConfig& base, const Scenario& scenario,
                                  const std::vector<double>& alphas, double discount = kDefaultDiscount);

struct SaturationComparison {
    int compared_steps = 0;  // recorded states where the recording run clips at the bus
    int exceed_steps = 0;    // of those, |xi_small| > |xi_large|
    double worst_excess = 0.0;
    // Same comparison on time-aligned rows where both runs clip. Reported
    // only: the larger-alpha run reaches the bound first, after which its
    // clamp is narrower than the lagging smaller-alpha run's.
    int aligned_compared_steps = 0;
    int aligned_exceed_steps = 0;
    [[nodiscard]] bool holds() const noexcept { return compared_steps > 0 && exceed_steps == 0; }
};

/// Replays every recorded state of both runs through both controllers and
/// compares |xi| at controlled bus `bus_id` on the states where the run that
/// recorded it was clipped there.
SaturationComparison compare_saturation(const Network& network, const Scenario& scenario,
                                        const ControllerConfig& small_config, const Trajectory& small_alpha,
                                        const ControllerConfig& large_config, const Trajectory& large_alpha,
                                        int bus_id);

/// Controlled bus whose capacity is most used at the steady-state optimum.
int most_constrained_bus(const Network& network, const Scenario& scenario);

}  // namespace tasrl
