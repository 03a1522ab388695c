#include "tasrl/steady_state.hpp"

#include <limits>

namespace tasrl {

Vec SteadyStateProblem::voltage(const Vec& q) const {
    require_size(q, size(), "voltage: q");
    return X * q + v_env();
}

void SteadyStateProblem::validate() const {
    const Eigen::Index n = X.rows();
    if (X.cols() != n) fail(ErrorCode::DimensionMismatch, "steady-state problem: X must be square");
    require_size(cost, n, "steady-state problem: cost");
    require_size(delta_v_tilde, n, "steady-state problem: delta_v_tilde");
    require_size(q_lo, n, "steady-state problem: q_lo");
    require_size(q_hi, n, "steady-state problem: q_hi");
    require_size(v_nom, n, "steady-state problem: v_nom");
    require_size(v_lo, n, "steady-state problem: v_lo");
    require_size(v_hi, n, "steady-state problem: v_hi");
    if (static_cast<Eigen::Index>(bus_ids.size()) != n) {
        fail(ErrorCode::DimensionMismatch, "steady-state problem: bus_ids");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(cost(i) > 0.0)) fail(ErrorCode::InvariantViolation, "steady-state problem: C_q must be positive");
        if (!(q_lo(i) < q_hi(i))) fail(ErrorCode::InvariantViolation, "steady-state problem: requires q_lo < q_hi");
        if (!std::isfinite(delta_v_tilde(i))) fail(ErrorCode::InvalidInput, "steady-state problem: non-finite v_env");
    }
}

SteadyStateProblem make_problem(const Network& network, const Vec& v_env) {
    require_size(v_env, network.size(), "make_problem: v_env");
    const auto& ids = network.controlled();
    const auto m = static_cast<Eigen::Index>(ids.size());
    SteadyStateProblem p;
    p.bus_ids = ids;
    p.X.resize(m, m);
    p.cost.resize(m);
    p.delta_v_tilde.resize(m);
    p.q_lo.resize(m);
    p.q_hi.resize(m);
    p.v_nom.resize(m);
    p.v_lo.resize(m);
    p.v_hi.resize(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const Bus& b = network.bus(ids[static_cast<std::size_t>(a)]);
        for (Eigen::Index c = 0; c < m; ++c) p.X(a, c) = network.X()(b.id - 1, ids[static_cast<std::size_t>(c)] - 1);
        p.cost(a) = b.eta / b.s_bar;
        p.delta_v_tilde(a) = v_env(b.id - 1) - b.v_nom;
        p.q_lo(a) = b.q_min;
        p.q_hi(a) = b.q_max;
        p.v_nom(a) = b.v_nom;
        p.v_lo(a) = b.v_lo;
        p.v_hi(a) = b.v_hi;
    }
    p.validate();
    return p;
}

SteadyStateProblem make_problem(Mat X, Vec cost, Vec delta_v_tilde, Vec q_lo, Vec q_hi) {
    SteadyStateProblem p;
    const Eigen::Index n = X.rows();
    p.X = std::move(X);
    p.cost = std::move(cost);
    p.delta_v_tilde = std::move(delta_v_tilde);
    p.q_lo = std::move(q_lo);
    p.q_hi = std::move(q_hi);
    p.v_nom = Vec::Ones(n);
    p.v_lo = Vec::Constant(n, 0.95);
    p.v_hi = Vec::Constant(n, 1.05);
    for (Eigen::Index i = 0; i < n; ++i) p.bus_ids.push_back(static_cast<int>(i + 1));
    p.validate();
    return p;
}

double objective(const SteadyStateProblem& problem, const Vec& q) {
    require_size(q, problem.size(), "objective: q");
    return 0.5 * q.dot(problem.cost.cwiseProduct(q)) + 0.5 * q.dot(problem.X * q) + q.dot(problem.delta_v_tilde);
}

Vec gradient(const SteadyStateProblem& problem, const Vec& q, const Vec& v) {
    require_size(q, problem.size(), "gradient: q");
    require_size(v, problem.size(), "gradient: v");
    return problem.cost.cwiseProduct(q) + v - problem.v_nom;
}

double step_size_bound(const SteadyStateProblem& problem) {
    Mat H = problem.X;
    H.diagonal() += problem.cost;
    Eigen::SelfAdjointEigenSolver<Mat> eig(H, Eigen::EigenvaluesOnly);
    return 2.0 / eig.eigenvalues().maxCoeff();
}

double default_step_size(const SteadyStateProblem& problem) { return 0.9 * step_size_bound(problem); }

namespace {

Vec project(const SteadyStateProblem& problem, const Vec& q) {
    return q.cwiseMax(problem.q_lo).cwiseMin(problem.q_hi);
}

Vec full_gradient(const SteadyStateProblem& problem, const Vec& q) {
    return gradient(problem, q, problem.voltage(q));
}

SolveReport finish(const SteadyStateProblem& problem, Vec q, int iterations, double residual, bool converged) {
    SolveReport r;
    r.v_star = problem.voltage(q);
    r.objective = objective(problem, q);
    r.q_star = std::move(q);
    r.iterations = iterations;
    r.residual = residual;
    r.converged = converged;
    return r;
}

}  // namespace

double kkt_residual(const SteadyStateProblem& problem, const Vec& q, double gamma) {
    return (q - project(problem, q - gamma * full_gradient(problem, q))).lpNorm<Eigen::Infinity>();
}

double kkt_residual(const SteadyStateProblem& problem, const Vec& q) {
    return kkt_residual(problem, q, default_step_size(problem));
}

SolveReport projected_gradient_solve(const SteadyStateProblem& problem, double gamma, double tol, int max_iter,
                                     const IterateObserver& observer) {
    const double bound = step_size_bound(problem);
    if (!(gamma > 0.0) || !(gamma < bound)) {
        fail(ErrorCode::InvalidInput, "projected_gradient_solve: step size must lie in (0, " +
                                          std::to_string(bound) + ")");
    }
    if (!(tol > 0.0)) fail(ErrorCode::InvalidInput, "projected_gradient_solve: tol must be positive");

    Vec q = project(problem, Vec::Zero(problem.size()));
    if (observer) observer(0, q);
    for (int k = 0; k < max_iter; ++k) {
        Vec next = project(problem, q - gamma * full_gradient(problem, q));
        const double residual = (q - next).lpNorm<Eigen::Infinity>();
        if (residual < tol) return finish(problem, std::move(q), k, residual, true);
        q = std::move(next);
        if (observer) observer(k + 1, q);
    }
    const double residual = kkt_residual(problem, q, gamma);
    return finish(problem, std::move(q), max_iter, residual, residual < tol);
}

SolveReport projected_gradient_solve(const SteadyStateProblem& problem) {
    return projected_gradient_solve(problem, default_step_size(problem));
}

SolveReport qp_oracle(const SteadyStateProblem& problem) {
    const Eigen::Index n = problem.size();
    if (n > kQpOracleMaxSize) {
        fail(ErrorCode::ProblemTooLarge, "qp_oracle: enumeration limited to n <= " +
                                             std::to_string(kQpOracleMaxSize) + " (got " + std::to_string(n) + ")");
    }
    Mat H = problem.X;
    H.diagonal() += problem.cost;

    std::size_t patterns = 1;
    for (Eigen::Index i = 0; i < n; ++i) patterns *= 3;

    std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 free, 1 lower, 2 upper
    Vec best;
    double best_value = std::numeric_limits<double>::infinity();
    Vec q(n);
    for (std::size_t code = 0; code < patterns; ++code) {
        std::size_t c = code;
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
            if (state[static_cast<std::size_t>(i)] == 0) {
                free_idx.push_back(i);
                q(i) = 0.0;
            } else {
                q(i) = state[static_cast<std::size_t>(i)] == 1 ? problem.q_lo(i) : problem.q_hi(i);
            }
        }
        const auto k = static_cast<Eigen::Index>(free_idx.size());
        if (k > 0) {
            // H_FF q_F = -(dv_F + H_F,fixed q_fixed)
            Mat Hff(k, k);
            Vec rhs(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                const Eigen::Index i = free_idx[static_cast<std::size_t>(a)];
                double s = problem.delta_v_tilde(i);
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (state[static_cast<std::size_t>(j)] != 0) s += H(i, j) * q(j);
                }
                rhs(a) = -s;
                for (Eigen::Index b = 0; b < k; ++b) Hff(a, b) = H(i, free_idx[static_cast<std::size_t>(b)]);
            }
            const Vec qf = Hff.ldlt().solve(rhs);
            bool feasible = true;
            for (Eigen::Index a = 0; a < k && feasible; ++a) {
                const Eigen::Index i = free_idx[static_cast<std::size_t>(a)];
                if (qf(a) < problem.q_lo(i) || qf(a) > problem.q_hi(i)) feasible = false;
                q(i) = qf(a);
            }
            if (!feasible) continue;
        }
        const double value = objective(problem, q);
        if (value < best_value) {
            best_value = value;
            best = q;
        }
    }
    return finish(problem, best, static_cast<int>(patterns), kkt_residual(problem, best), true);
}

}  // namespace tasrl
