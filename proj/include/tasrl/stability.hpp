#pragma once

// Sampled checks of the stability argument for the safe closed loop: the
// slope condition 2 sigma_max(K(v)) <= sigma_min(C_q X^-1 + I), the
// gradient/policy inequality it implies, and decrease of F along
// trajectories.

#include <cstdint>
#include <string>

#include "tasrl/simulation.hpp"

namespace tasrl {

/// Diagonal of K(v) as stored: -pi_i(v_i) / (v_i - v*_i), zero where
/// v_i = v*_i. Entries are >= 0. Coordinates are the problem's controlled
/// buses. Throws DegenerateReference if v* leaves the deadband.
Vec policy_slope_matrix(const PolicyParams& policy, const SteadyStateProblem& problem, double alpha, const Vec& v,
                        const Vec& v_star, const Vec& q);

/// sigma_min(C_q X^-1 + I). Throws SingularX.
double stability_sigma_min(const SteadyStateProblem& problem);

struct ConditionCheck {
    bool holds = false;
    double margin = 0.0;  // sigma_min - 2 sigma_max(K)
};

ConditionCheck check_slope_condition(double sigma_min, const Vec& K);
ConditionCheck check_slope_condition(const SteadyStateProblem& problem, const Vec& K);

/// |grad F|^2 + 2 <pi(v), -grad F> at (v, q).
double check_descent_inequality(const SteadyStateProblem& problem, const PolicyParams& policy, double alpha,
                                const Vec& v, const Vec& q);

inline constexpr double kDescentTolerance = 1e-10;

struct LyapunovReport {
    int steps = 0;
    int violations = 0;
    double max_increase = 0.0;  // largest F(q_{t+1}) - F(q_t)
};

/// Counts steps with F(q_{t+1}) - F(q_t) > 0.5 L_F |q_{t+1} - q_t|^2 (the
/// forward-Euler remainder, L_F = lambda_max(C_q + X)). The increase is
/// evaluated from the exact quadratic expansion so roundoff in F does not
/// register near equilibrium.
LyapunovReport lyapunov_monitor(const Trajectory& trajectory, const SteadyStateProblem& problem);

struct CertifyOptions {
    int trajectories = 1000;
    int steps = 500;
    int uniform_samples = 1000;
    double magnitude_lo = 0.05;
    double magnitude_hi = 0.15;
    double voltage_box = 0.15;  // uniform draws cover v_nom (1 +- box)
    std::uint64_t seed = 1;
};

struct CertificateReport {
    int n_samples = 0;
    int condition_violations = 0;
    double worst_margin = 0.0;
    int inequality_checked = 0;
    int inequality_violations = 0;
    double inequality_min = 0.0;
    int lyapunov_violations = 0;
    double max_lyapunov_increase = 0.0;
    int trajectories = 0;
    int reference_skipped = 0;  // samples whose optimum breaks the interior / in-band premise
    double sigma_min = 0.0;

    [[nodiscard]] bool ok() const noexcept {
        return condition_violations == 0 && inequality_violations == 0 && lyapunov_violations == 0;
    }
};

/// Simulated trajectories (alternating high and low scenarios) plus uniform
/// draws of (v, q). The config must carry a policy.
CertificateReport certify(const Network& network, const ControllerConfig& config, const CertifyOptions& options);

std::string certificate_to_json(const CertificateReport& report);

}  // namespace tasrl
