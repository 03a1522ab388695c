#include "tasrl/stability.hpp"

#include <algorithm>
#include <limits>

#include "json.hpp"
#include "tasrl/parallel.hpp"

namespace tasrl {

namespace {

std::vector<BusLimits> limits_of(const SteadyStateProblem& p) {
    std::vector<BusLimits> out;
    for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back({p.v_lo(i), p.v_hi(i), p.q_lo(i), p.q_hi(i)});
    return out;
}

Vec policy_terms(const CompiledPolicy& compiled, const std::vector<BusLimits>& limits, double alpha, const Vec& v,
                 const Vec& q) {
    Vec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out(i) = compiled.eval(i, limits[static_cast<std::size_t>(i)], alpha, v(i), q(i));
    }
    return out;
}

Vec slope_diagonal(const SteadyStateProblem& problem, const Vec& pi, const Vec& v, const Vec& v_star) {
    Vec K = Vec::Zero(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v_star(i) < problem.v_lo(i) || v_star(i) > problem.v_hi(i)) {
            fail(ErrorCode::DegenerateReference, "reference voltage at bus " +
                                                     std::to_string(problem.bus_ids[static_cast<std::size_t>(i)]) +
                                                     " lies outside the deadband");
        }
        const double dv = v(i) - v_star(i);
        if (dv != 0.0) K(i) = -pi(i) / dv;
    }
    return K;
}

double descent_inequality_lhs(const SteadyStateProblem& problem, const Vec& pi, const Vec& v, const Vec& q) {
    const Vec g = gradient(problem, q, v);
    return g.squaredNorm() - 2.0 * pi.dot(g);
}

}  // namespace

Vec policy_slope_matrix(const PolicyParams& policy, const SteadyStateProblem& problem, double alpha, const Vec& v,
                        const Vec& v_star, const Vec& q) {
    require_size(v, problem.size(), "policy_slope_matrix: v");
    require_size(v_star, problem.size(), "policy_slope_matrix: v_star");
    require_size(q, problem.size(), "policy_slope_matrix: q");
    const CompiledPolicy compiled(policy, problem.bus_ids);
    return slope_diagonal(problem, policy_terms(compiled, limits_of(problem), alpha, v, q), v, v_star);
}

double stability_sigma_min(const SteadyStateProblem& problem) {
    const Eigen::Index n = problem.size();
    if (n == 0) return 1.0;
    Eigen::FullPivLU<Mat> lu(problem.X);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) fail(ErrorCode::SingularX, "X is singular");
    Mat A = problem.cost.asDiagonal() * lu.inverse();
    A.diagonal().array() += 1.0;
    Eigen::JacobiSVD<Mat> svd(A);
    return svd.singularValues().minCoeff();
}

ConditionCheck check_slope_condition(double sigma_min, const Vec& K) {
    const double sigma_max_k = K.size() == 0 ? 0.0 : K.cwiseAbs().maxCoeff();
    ConditionCheck c;
    c.margin = sigma_min - 2.0 * sigma_max_k;
    c.holds = c.margin >= 0.0;
    return c;
}

ConditionCheck check_slope_condition(const SteadyStateProblem& problem, const Vec& K) {
    require_size(K, problem.size(), "check_slope_condition: K");
    return check_slope_condition(stability_sigma_min(problem), K);
}

double check_descent_inequality(const SteadyStateProblem& problem, const PolicyParams& policy, double alpha,
                                const Vec& v, const Vec& q) {
    require_size(v, problem.size(), "check_descent_inequality: v");
    require_size(q, problem.size(), "check_descent_inequality: q");
    const CompiledPolicy compiled(policy, problem.bus_ids);
    return descent_inequality_lhs(problem, policy_terms(compiled, limits_of(problem), alpha, v, q), v, q);
}

LyapunovReport lyapunov_monitor(const Trajectory& trajectory, const SteadyStateProblem& problem) {
    const Eigen::Index m = problem.size();
    Mat H = problem.X;
    H.diagonal() += problem.cost;
    const double L = m == 0 ? 0.0 : Eigen::SelfAdjointEigenSolver<Mat>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    auto gather = [&](const Vec& full) {
        Vec out(m);
        for (Eigen::Index a = 0; a < m; ++a) out(a) = full(problem.bus_ids[static_cast<std::size_t>(a)] - 1);
        return out;
    };
    LyapunovReport r;
    r.max_increase = -std::numeric_limits<double>::infinity();
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t t = 0; t + 1 < trajectory.rows(); ++t) {
        const Vec q = gather(trajectory.q[t]);
        const Vec dq = gather(trajectory.q[t + 1]) - q;
        const Vec g = problem.cost.cwiseProduct(q) + problem.X * q + problem.delta_v_tilde;
        const double increase = g.dot(dq) + 0.5 * dq.dot(H * dq);
        // Roundoff of g is relative to the terms it sums, not to g itself.
        const Vec g_scale = problem.cost.cwiseProduct(q).cwiseAbs() + problem.X.cwiseAbs() * q.cwiseAbs() +
                            problem.delta_v_tilde.cwiseAbs();
        const double tol = 0.5 * L * dq.squaredNorm() + 64.0 * eps * g_scale.dot(dq.cwiseAbs());
        ++r.steps;
        r.max_increase = std::max(r.max_increase, increase);
        if (increase > tol) ++r.violations;
    }
    if (r.steps == 0) r.max_increase = 0.0;
    return r;
}

namespace {

struct Reference {
    bool usable = false;
    Vec v_star;
};

Reference reference_of(const SteadyStateProblem& problem) {
    const SolveReport s = problem.size() <= kQpOracleMaxSize ? qp_oracle(problem) : projected_gradient_solve(problem);
    Reference r;
    r.v_star = s.v_star;
    r.usable = true;
    for (Eigen::Index i = 0; i < problem.size(); ++i) {
        const bool interior = s.q_star(i) > problem.q_lo(i) && s.q_star(i) < problem.q_hi(i);
        const bool band = s.v_star(i) >= problem.v_lo(i) && s.v_star(i) <= problem.v_hi(i);
        if (!interior || !band) r.usable = false;
    }
    return r;
}

struct Partial {
    int n_samples = 0;
    int condition_violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    int inequality_checked = 0;
    int inequality_violations = 0;
    double inequality_min = std::numeric_limits<double>::infinity();
    int lyapunov_violations = 0;
    double max_lyapunov_increase = -std::numeric_limits<double>::infinity();
    int reference_skipped = 0;

    void sample(const SteadyStateProblem& problem, const CompiledPolicy& compiled,
                const std::vector<BusLimits>& limits, double alpha, double sigma_min, const Reference& ref,
                const Vec& v, const Vec& q) {
        if (!ref.usable) {
            ++reference_skipped;
            return;
        }
        const Vec pi = policy_terms(compiled, limits, alpha, v, q);
        const ConditionCheck c = check_slope_condition(sigma_min, slope_diagonal(problem, pi, v, ref.v_star));
        ++n_samples;
        worst_margin = std::min(worst_margin, c.margin);
        if (!c.holds) {
            ++condition_violations;
            return;
        }
        const double lhs = descent_inequality_lhs(problem, pi, v, q);
        ++inequality_checked;
        inequality_min = std::min(inequality_min, lhs);
        if (lhs < -kDescentTolerance) ++inequality_violations;
    }
};

}  // namespace

CertificateReport certify(const Network& network, const ControllerConfig& config, const CertifyOptions& options) {
    config.validate();
    if (!config.policy) fail(ErrorCode::InvalidInput, "certify: a policy is required");
    if (options.trajectories < 0 || options.uniform_samples < 0 || options.steps < 1) {
        fail(ErrorCode::InvalidInput, "certify: sample counts must be non-negative and steps >= 1");
    }
    const auto& ids = network.controlled();
    const PolicyParams& policy = *config.policy;
    const CompiledPolicy compiled(policy, ids);
    // sigma_min depends only on C_q and X, so any disturbance works here.
    const SteadyStateProblem base = make_problem(network, network.v_nom());
    const double sigma_min = stability_sigma_min(base);
    const std::vector<BusLimits> limits = limits_of(base);
    const double alpha = config.alpha;

    auto gather = [&](const Vec& full) {
        Vec out(static_cast<Eigen::Index>(ids.size()));
        for (std::size_t a = 0; a < ids.size(); ++a) out(static_cast<Eigen::Index>(a)) = full(ids[a] - 1);
        return out;
    };

    const auto n_traj = static_cast<std::size_t>(options.trajectories);
    const auto n_unif = static_cast<std::size_t>(options.uniform_samples);
    std::vector<Partial> parts(n_traj + n_unif);
    parallel_for(n_traj + n_unif, [&](std::size_t k) {
        Partial& part = parts[k];
        if (k < n_traj) {
            const ScenarioKind kind = k % 2 == 0 ? ScenarioKind::HighVoltage : ScenarioKind::LowVoltage;
            const Scenario s = generate_scenarios(network, kind, options.magnitude_lo, options.magnitude_hi, 1,
                                                  options.seed * 1000003ULL + k, options.steps)
                                   .front();
            const SteadyStateProblem problem = make_problem(network, s.v_env);
            const Reference ref = reference_of(problem);
            const Episode ep = run_episode(network, config, s);
            for (std::size_t t = 0; t < ep.trajectory.rows(); ++t) {
                part.sample(problem, compiled, limits, alpha, sigma_min, ref, gather(ep.trajectory.v[t]),
                            gather(ep.trajectory.q[t]));
            }
            const LyapunovReport ly = lyapunov_monitor(ep.trajectory, problem);
            part.lyapunov_violations += ly.violations;
            part.max_lyapunov_increase = std::max(part.max_lyapunov_increase, ly.max_increase);
            return;
        }
        // Uniform draw of (v, q); the disturbance is whatever makes them consistent.
        Rng rng(options.seed * 7919ULL + 0x9e3779b97f4a7c15ULL + k);
        const Eigen::Index m = base.size();
        Vec v(m), q(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            v(i) = base.v_nom(i) * (1.0 + rng.uniform(-options.voltage_box, options.voltage_box));
            q(i) = rng.uniform(base.q_lo(i), base.q_hi(i));
        }
        SteadyStateProblem problem = base;
        problem.delta_v_tilde = v - problem.X * q - problem.v_nom;
        part.sample(problem, compiled, limits, alpha, sigma_min, reference_of(problem), v, q);
    });

    CertificateReport r;
    r.trajectories = options.trajectories;
    r.sigma_min = sigma_min;
    Partial total;
    for (const Partial& p : parts) {
        total.n_samples += p.n_samples;
        total.condition_violations += p.condition_violations;
        total.worst_margin = std::min(total.worst_margin, p.worst_margin);
        total.inequality_checked += p.inequality_checked;
        total.inequality_violations += p.inequality_violations;
        total.inequality_min = std::min(total.inequality_min, p.inequality_min);
        total.lyapunov_violations += p.lyapunov_violations;
        total.max_lyapunov_increase = std::max(total.max_lyapunov_increase, p.max_lyapunov_increase);
        total.reference_skipped += p.reference_skipped;
    }
    r.n_samples = total.n_samples;
    r.condition_violations = total.condition_violations;
    r.worst_margin = total.n_samples > 0 ? total.worst_margin : sigma_min;
    r.inequality_checked = total.inequality_checked;
    r.inequality_violations = total.inequality_violations;
    r.inequality_min = total.inequality_checked > 0 ? total.inequality_min : 0.0;
    r.lyapunov_violations = total.lyapunov_violations;
    r.max_lyapunov_increase = n_traj > 0 ? total.max_lyapunov_increase : 0.0;
    r.reference_skipped = total.reference_skipped;
    return r;
}

std::string certificate_to_json(const CertificateReport& r) {
    nlohmann::json j;
    j["n_samples"] = r.n_samples;
    j["condition_violations"] = r.condition_violations;
    j["worst_margin"] = r.worst_margin;
    j["lemma_checked"] = r.inequality_checked;
    j["lemma_violations"] = r.inequality_violations;
    j["lemma_min"] = r.inequality_min;
    j["lyapunov_violations"] = r.lyapunov_violations;
    j["max_lyapunov_increase"] = r.max_lyapunov_increase;
    j["trajectories"] = r.trajectories;
    j["reference_skipped"] = r.reference_skipped;
    j["sigma_min"] = r.sigma_min;
    j["ok"] = r.ok();
    return j.dump(1) + "\n";
}

}  // namespace tasrl
