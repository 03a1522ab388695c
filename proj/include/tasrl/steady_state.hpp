#pragma once

// Steady-state volt-var problem over the controlled buses:
//
//   min F(q) = 1/2 q' C_q q + 1/2 q' X q + q' dv    s.t.  q_lo <= q <= q_hi
//
// with C_q = diag(eta_i / s_bar_i) and dv = v_env - v_nom. Uncontrolled buses
// carry q = 0, so restricting X to the controlled rows and columns gives the
// same objective as the full network.

#include <functional>
#include <vector>

#include "tasrl/grid.hpp"

namespace tasrl {

struct SteadyStateProblem {
    std::vector<int> bus_ids;  // network bus id of each coordinate
    Mat X;
    Vec cost;  // diagonal of C_q
    Vec delta_v_tilde;
    Vec q_lo;
    Vec q_hi;
    Vec v_nom;
    Vec v_lo;
    Vec v_hi;

    [[nodiscard]] Eigen::Index size() const noexcept { return X.rows(); }
    [[nodiscard]] Vec v_env() const { return delta_v_tilde + v_nom; }
    /// Voltage at the controlled buses: X q + v_env.
    [[nodiscard]] Vec voltage(const Vec& q) const;

    /// Throws InvariantViolation unless cost > 0, q_lo < q_hi and sizes agree.
    void validate() const;
};

/// Builds the problem for the controlled buses of `network` under the full
/// per-bus uncontrollable voltage `v_env` (length n).
SteadyStateProblem make_problem(const Network& network, const Vec& v_env);

/// Problem on explicit data with bus ids 1..n and band [0.95, 1.05] around
/// v_nom = 1.
SteadyStateProblem make_problem(Mat X, Vec cost, Vec delta_v_tilde, Vec q_lo, Vec q_hi);

struct SolveReport {
    Vec q_star;
    Vec v_star;
    double objective = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;  // false: MaxIterationsExceeded, best iterate returned
};

double objective(const SteadyStateProblem& problem, const Vec& q);

/// Nodal gradient C_q q + v - v_nom from local measurements.
Vec gradient(const SteadyStateProblem& problem, const Vec& q, const Vec& v);

/// 2 / lambda_max(C_q + X)
double step_size_bound(const SteadyStateProblem& problem);
double default_step_size(const SteadyStateProblem& problem);

/// Sup-norm of q - clamp(q - gamma * grad F(q)).
double kkt_residual(const SteadyStateProblem& problem, const Vec& q, double gamma);
double kkt_residual(const SteadyStateProblem& problem, const Vec& q);

using IterateObserver = std::function<void(int iteration, const Vec& q)>;

/// q <- clamp(q - gamma grad F(q), q_lo, q_hi) from q = 0 until the
/// fixed-point residual drops below tol.
SolveReport projected_gradient_solve(const SteadyStateProblem& problem, double gamma, double tol = 1e-8,
                                     int max_iter = 100000, const IterateObserver& observer = {});
SolveReport projected_gradient_solve(const SteadyStateProblem& problem);

/// Exact solution by enumerating every {lower, free, upper} pattern.
SolveReport qp_oracle(const SteadyStateProblem& problem);
inline constexpr Eigen::Index kQpOracleMaxSize = 12;

}  // namespace tasrl
