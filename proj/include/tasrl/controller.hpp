#pragma once

// Safe-gradient-flow controllers. All three variants pass a nominal rate
// through the box CBF-QP
//
//   min 1/2 |xi - raw|^2   s.t.  alpha (q_lo - q) <= xi <= alpha (q_hi - q)
//
// whose solution is the componentwise clamp of raw. The variants differ only
// in raw: pi(v) - grad F (TASRL), -grad F (safe gradient flow) and pi(v)
// (transient only).

#include <memory>
#include <optional>
#include <vector>

#include "tasrl/policy.hpp"
#include "tasrl/steady_state.hpp"

namespace tasrl {

enum class Variant { Tasrl, SafeGradientFlow, TransientOnly };

const char* to_string(Variant v) noexcept;
Variant parse_variant(const std::string& name);  // tasrl | sgf | transient

struct ControllerConfig {
    double alpha = 0.5;
    double h = 1.0;
    Variant variant = Variant::Tasrl;
    std::optional<PolicyParams> policy;

    /// alpha > 0, h > 0, h alpha <= 1, and a policy for variants that use one.
    void validate() const;
};

struct ControlDecision {
    Vec xi;
    std::vector<bool> clipped;

    [[nodiscard]] double clipped_fraction() const;
};

/// g(q) = [q - q_hi; q_lo - q]; q is safe iff every entry is <= 0.
Vec barrier(const Vec& q, const Vec& q_lo, const Vec& q_hi);

/// Controller bound to one problem. Holds the expanded policy weights.
class SafeController {
public:
    SafeController(ControllerConfig config, const SteadyStateProblem& problem);

    [[nodiscard]] const ControllerConfig& config() const noexcept { return config_; }
    [[nodiscard]] const SteadyStateProblem& problem() const noexcept { return problem_; }

    /// Policy term pi(v) on the controlled buses (zero without a policy).
    [[nodiscard]] Vec policy(const Vec& v, const Vec& q) const;
    /// Unfiltered rate for the configured variant.
    [[nodiscard]] Vec raw(const Vec& v, const Vec& q) const;
    /// Filtered rate. Throws InfeasibleState if q leaves the box by > 1e-12.
    [[nodiscard]] ControlDecision control(const Vec& v, const Vec& q) const;

private:
    ControllerConfig config_;
    SteadyStateProblem problem_;
    std::optional<CompiledPolicy> compiled_;
    std::vector<BusLimits> limits_;
};

/// Closed-form filter: clamp(raw, alpha (q_lo - q), alpha (q_hi - q)).
ControlDecision safety_filter(double alpha, const Vec& raw, const Vec& q, const Vec& q_lo, const Vec& q_hi);

ControlDecision tasrl_control(const ControllerConfig& config, const SteadyStateProblem& problem, const Vec& v,
                              const Vec& q);
ControlDecision safe_gradient_flow_control(const ControllerConfig& config, const SteadyStateProblem& problem,
                                           const Vec& v, const Vec& q);
ControlDecision transient_only_control(const ControllerConfig& config, const SteadyStateProblem& problem,
                                       const Vec& v, const Vec& q);

/// Iterative solution of the stacked CBF-QP (dual projected gradient on the
/// 2n multipliers of dg/dq xi <= -alpha g(q)); does not use the clamp formula.
Vec cbf_qp_oracle(double alpha, const Vec& raw, const Vec& q, const Vec& q_lo, const Vec& q_hi, double tol = 1e-10,
                  int max_iter = 100000);

inline constexpr double kFeasibilityTolerance = 1e-12;

}  // namespace tasrl
