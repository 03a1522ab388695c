#include "tasrl/controller.hpp"

namespace tasrl {

const char* to_string(Variant v) noexcept {
    switch (v) {
        case Variant::Tasrl: return "tasrl";
        case Variant::SafeGradientFlow: return "sgf";
        case Variant::TransientOnly: return "transient";
    }
    return "unknown";
}

Variant parse_variant(const std::string& name) {
    if (name == "tasrl") return Variant::Tasrl;
    if (name == "sgf") return Variant::SafeGradientFlow;
    if (name == "transient") return Variant::TransientOnly;
    fail(ErrorCode::InvalidInput, "unknown controller '" + name + "' (expected tasrl, sgf or transient)");
}

void ControllerConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::InvalidAlpha, "alpha must be positive");
    if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorCode::InvalidInput, "sampling period h must be positive");
    if (h * alpha > 1.0) {
        fail(ErrorCode::InvalidAlpha, "h * alpha = " + std::to_string(h * alpha) +
                                          " exceeds 1; discrete steps could leave the capacity box");
    }
    if (variant != Variant::SafeGradientFlow && !policy) {
        fail(ErrorCode::InvalidInput, std::string("controller '") + to_string(variant) + "' requires a policy");
    }
    if (policy) policy->validate();
}

double ControlDecision::clipped_fraction() const {
    if (clipped.empty()) return 0.0;
    std::size_t k = 0;
    for (bool c : clipped) k += c ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(clipped.size());
}

Vec barrier(const Vec& q, const Vec& q_lo, const Vec& q_hi) {
    require_size(q_lo, q.size(), "barrier: q_lo");
    require_size(q_hi, q.size(), "barrier: q_hi");
    Vec g(2 * q.size());
    g.head(q.size()) = q - q_hi;
    g.tail(q.size()) = q_lo - q;
    return g;
}

namespace {

void check_feasible(const Vec& q, const Vec& q_lo, const Vec& q_hi) {
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (q(i) < q_lo(i) - kFeasibilityTolerance || q(i) > q_hi(i) + kFeasibilityTolerance) {
            fail(ErrorCode::InfeasibleState, "q[" + std::to_string(i) + "] = " + std::to_string(q(i)) +
                                                 " lies outside [" + std::to_string(q_lo(i)) + ", " +
                                                 std::to_string(q_hi(i)) + "]");
        }
    }
}

}  // namespace

ControlDecision safety_filter(double alpha, const Vec& raw, const Vec& q, const Vec& q_lo, const Vec& q_hi) {
    require_size(raw, q.size(), "safety_filter: raw");
    require_size(q_lo, q.size(), "safety_filter: q_lo");
    require_size(q_hi, q.size(), "safety_filter: q_hi");
    check_feasible(q, q_lo, q_hi);
    ControlDecision d;
    d.xi.resize(q.size());
    d.clipped.resize(static_cast<std::size_t>(q.size()));
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double lo = alpha * (q_lo(i) - q(i));
        const double hi = alpha * (q_hi(i) - q(i));
        const double x = clamp(raw(i), lo, hi);
        d.xi(i) = x;
        d.clipped[static_cast<std::size_t>(i)] = x != raw(i);
    }
    return d;
}

SafeController::SafeController(ControllerConfig config, const SteadyStateProblem& problem)
    : config_(std::move(config)), problem_(problem) {
    config_.validate();
    if (config_.policy && config_.variant != Variant::SafeGradientFlow) {
        compiled_.emplace(*config_.policy, problem_.bus_ids);
    }
    limits_.resize(static_cast<std::size_t>(problem_.size()));
    for (Eigen::Index i = 0; i < problem_.size(); ++i) {
        limits_[static_cast<std::size_t>(i)] = {problem_.v_lo(i), problem_.v_hi(i), problem_.q_lo(i),
                                                problem_.q_hi(i)};
    }
}

Vec SafeController::policy(const Vec& v, const Vec& q) const {
    require_size(v, problem_.size(), "policy: v");
    require_size(q, problem_.size(), "policy: q");
    Vec out = Vec::Zero(problem_.size());
    if (!compiled_) return out;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out(i) = compiled_->eval(i, limits_[static_cast<std::size_t>(i)], config_.alpha, v(i), q(i));
    }
    return out;
}

Vec SafeController::raw(const Vec& v, const Vec& q) const {
    switch (config_.variant) {
        case Variant::Tasrl: return policy(v, q) - gradient(problem_, q, v);
        case Variant::SafeGradientFlow: return -gradient(problem_, q, v);
        case Variant::TransientOnly: return policy(v, q);
    }
    return Vec::Zero(problem_.size());
}

ControlDecision SafeController::control(const Vec& v, const Vec& q) const {
    check_feasible(q, problem_.q_lo, problem_.q_hi);
    return safety_filter(config_.alpha, raw(v, q), q, problem_.q_lo, problem_.q_hi);
}

namespace {

ControlDecision run_variant(ControllerConfig config, Variant variant, const SteadyStateProblem& problem,
                            const Vec& v, const Vec& q) {
    config.variant = variant;
    return SafeController(std::move(config), problem).control(v, q);
}

}  // namespace

ControlDecision tasrl_control(const ControllerConfig& config, const SteadyStateProblem& problem, const Vec& v,
                              const Vec& q) {
    return run_variant(config, Variant::Tasrl, problem, v, q);
}

ControlDecision safe_gradient_flow_control(const ControllerConfig& config, const SteadyStateProblem& problem,
                                           const Vec& v, const Vec& q) {
    return run_variant(config, Variant::SafeGradientFlow, problem, v, q);
}

ControlDecision transient_only_control(const ControllerConfig& config, const SteadyStateProblem& problem,
                                       const Vec& v, const Vec& q) {
    return run_variant(config, Variant::TransientOnly, problem, v, q);
}

Vec cbf_qp_oracle(double alpha, const Vec& raw, const Vec& q, const Vec& q_lo, const Vec& q_hi, double tol,
                  int max_iter) {
    const Eigen::Index n = q.size();
    require_size(raw, n, "cbf_qp_oracle: raw");
    check_feasible(q, q_lo, q_hi);
    // Constraints G xi <= -alpha g(q) with G = dg/dq = [I; -I].
    Mat G(2 * n, n);
    G << Mat::Identity(n, n), -Mat::Identity(n, n);
    const Vec rhs = -alpha * barrier(q, q_lo, q_hi);
    // Dual ascent: xi(w) = raw - G' w, w <- max(0, w + tau (G xi(w) - rhs)).
    // lambda_max(G G') = 2, so tau = 0.5 is a safe ascent step.
    constexpr double tau = 0.5;
    Vec w = Vec::Zero(2 * n);
    Vec xi = raw;
    for (int k = 0; k < max_iter; ++k) {
        w = (w + tau * (G * xi - rhs)).cwiseMax(0.0);
        Vec next = raw - G.transpose() * w;
        const double change = (next - xi).lpNorm<Eigen::Infinity>();
        xi = std::move(next);
        const double infeasibility = (G * xi - rhs).maxCoeff();
        if (change < tol && infeasibility < tol) break;
    }
    return xi;
}

}  // namespace tasrl
