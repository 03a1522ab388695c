#include "tasrl/experiments.hpp"

#include <cstring>
#include <sstream>

#include "tasrl/format.hpp"
#include "tasrl/parallel.hpp"

namespace tasrl {

void RunConfig::validate() const {
    if (!(alpha > 0.0) || !(h > 0.0) || h * alpha > 1.0) {
        fail(ErrorCode::InvalidAlpha, "run config: need alpha > 0, h > 0 and h * alpha <= 1");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorCode::InvalidInput, "run config: gamma must lie in (0, 1]");
    if (t_f < 1) fail(ErrorCode::InvalidInput, "run config: t_f must be at least 1");
    if (count < 0) fail(ErrorCode::InvalidInput, "run config: scenario count must be non-negative");
}

namespace {

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

void fnv_vec(std::uint64_t& h, const Vec& v) {
    const auto n = static_cast<std::uint64_t>(v.size());
    fnv(h, &n, sizeof n);
    fnv(h, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

}  // namespace

std::string scenario_hash(const std::vector<Scenario>& scenarios) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const Scenario& s : scenarios) {
        fnv_vec(h, s.v_env);
        fnv_vec(h, s.q0);
        const auto horizon = static_cast<std::int64_t>(s.horizon);
        fnv(h, &horizon, sizeof horizon);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

BenchmarkReport run_benchmark(const Network& network, const PolicyParams& policy, double alpha, double h,
                              const std::vector<Scenario>& scenarios, double discount) {
    const Variant variants[3] = {Variant::Tasrl, Variant::SafeGradientFlow, Variant::TransientOnly};
    BenchmarkReport report;
    report.scenario_hash = scenario_hash(scenarios);
    report.scenario_count = scenarios.size();
    report.episodes.assign(3, std::vector<EpisodeMetrics>(scenarios.size()));
    std::vector<ControllerConfig> configs;
    for (Variant v : variants) {
        ControllerConfig c;
        c.alpha = alpha;
        c.h = h;
        c.variant = v;
        c.policy = policy;
        c.validate();
        configs.push_back(std::move(c));
    }
    const EpisodeOptions opts{discount, false};
    parallel_for(3 * scenarios.size(), [&](std::size_t k) {
        const std::size_t row = k / scenarios.size();
        const std::size_t s = k % scenarios.size();
        report.episodes[row][s] = run_episode(network, configs[row], scenarios[s], opts).metrics;
    });
    for (std::size_t row = 0; row < 3; ++row) {
        BenchmarkRow r;
        r.variant = variants[row];
        r.scenario_hash = report.scenario_hash;
        const double n = scenarios.empty() ? 1.0 : static_cast<double>(scenarios.size());
        for (const EpisodeMetrics& m : report.episodes[row]) {
            r.mean_recovery_time += m.recovery_time;
            r.mean_transient_cost += m.transient_cost;
            r.mean_objective += m.steady_state_objective;
            r.converged_fraction += m.converged ? 1.0 : 0.0;
            r.mean_clipped_fraction += m.mean_clipped_fraction;
        }
        r.mean_recovery_time /= n;
        r.mean_transient_cost /= n;
        r.mean_objective /= n;
        r.converged_fraction /= n;
        r.mean_clipped_fraction /= n;
        report.rows.push_back(std::move(r));
    }
    return report;
}

std::string benchmark_table(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "# scenarios=" << report.scenario_count << " kind=" << report.kind << " seed=" << report.seed
        << " scenario_hash=" << report.scenario_hash << '\n';
    out << "variant,mean_recovery_time,mean_transient_cost,mean_objective,converged_fraction,mean_clipped_fraction,"
           "scenario_hash\n";
    for (const BenchmarkRow& r : report.rows) {
        out << to_string(r.variant) << ',' << fmt17(r.mean_recovery_time) << ',' << fmt17(r.mean_transient_cost)
            << ',' << fmt17(r.mean_objective) << ',' << fmt17(r.converged_fraction) << ','
            << fmt17(r.mean_clipped_fraction) << ',' << r.scenario_hash << '\n';
    }
    return out.str();
}

std::string benchmark_episodes_csv(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "variant,episode,recovery_time,transient_cost,objective,converged,kkt_residual\n";
    for (std::size_t row = 0; row < report.rows.size(); ++row) {
        for (std::size_t k = 0; k < report.episodes[row].size(); ++k) {
            const EpisodeMetrics& m = report.episodes[row][k];
            out << to_string(report.rows[row].variant) << ',' << k << ',' << m.recovery_time << ','
                << fmt17(m.transient_cost) << ',' << fmt17(m.steady_state_objective) << ','
                << (m.converged ? 1 : 0) << ',' << fmt17(m.final_kkt_residual) << '\n';
        }
    }
    return out.str();
}

std::vector<SweepRun> alpha_sweep(const Network& network, const ControllerConfig& base, const Scenario& scenario,
                                  const std::vector<double>& alphas, double discount) {
    if (alphas.empty()) fail(ErrorCode::InvalidInput, "alpha sweep: no alpha values given");
    for (double a : alphas) {
        if (!(a > 0.0) || base.h * a > 1.0) {
            fail(ErrorCode::InvalidAlpha, "alpha sweep: alpha = " + fmt17(a) + " violates 0 < alpha <= 1/h");
        }
    }
    std::vector<SweepRun> runs(alphas.size());
    parallel_for(alphas.size(), [&](std::size_t k) {
        ControllerConfig c = base;
        c.alpha = alphas[k];
        runs[k].alpha = alphas[k];
        runs[k].episode = run_episode(network, c, scenario, {discount, true});
    });
    return runs;
}

SaturationComparison compare_saturation(const Network& network, const Scenario& scenario,
                                        const ControllerConfig& small_config, const Trajectory& small_alpha,
                                        const ControllerConfig& large_config, const Trajectory& large_alpha,
                                        int bus_id) {
    if (small_alpha.bus_ids != large_alpha.bus_ids) {
        fail(ErrorCode::InvalidInput, "compare_saturation: trajectories cover different buses");
    }
    std::size_t a = 0;
    while (a < small_alpha.bus_ids.size() && small_alpha.bus_ids[a] != bus_id) ++a;
    if (a == small_alpha.bus_ids.size()) {
        fail(ErrorCode::InvalidInput, "compare_saturation: bus " + std::to_string(bus_id) + " is not controlled");
    }
    const SteadyStateProblem problem = make_problem(network, scenario.v_env);
    const SafeController small(small_config, problem);
    const SafeController large(large_config, problem);
    const auto& ids = problem.bus_ids;
    const auto local = [&](const Vec& full) {
        Vec out(problem.size());
        for (Eigen::Index k = 0; k < problem.size(); ++k) out(k) = full(ids[static_cast<std::size_t>(k)] - 1);
        return out;
    };

    SaturationComparison out;
    const auto idx = static_cast<Eigen::Index>(a);
    for (const Trajectory* tr : {&small_alpha, &large_alpha}) {
        for (std::size_t t = 0; t < tr->rows(); ++t) {
            if (!tr->clipped[t][a]) continue;
            const Vec v = local(tr->v[t]);
            const Vec q = local(tr->q[t]);
            const double xs = std::abs(small.control(v, q).xi(idx));
            const double xl = std::abs(large.control(v, q).xi(idx));
            ++out.compared_steps;
            if (xs > xl) {
                ++out.exceed_steps;
                out.worst_excess = std::max(out.worst_excess, xs - xl);
            }
        }
    }
    const std::size_t rows = std::min(small_alpha.rows(), large_alpha.rows());
    for (std::size_t t = 0; t < rows; ++t) {
        if (!small_alpha.clipped[t][a] || !large_alpha.clipped[t][a]) continue;
        ++out.aligned_compared_steps;
        if (std::abs(small_alpha.xi[t](bus_id - 1)) > std::abs(large_alpha.xi[t](bus_id - 1))) {
            ++out.aligned_exceed_steps;
        }
    }
    return out;
}

int most_constrained_bus(const Network& network, const Scenario& scenario) {
    const SteadyStateProblem p = make_problem(network, scenario.v_env);
    if (p.size() == 0) fail(ErrorCode::InvalidInput, "network has no controlled buses");
    const SolveReport s = p.size() <= kQpOracleMaxSize ? qp_oracle(p) : projected_gradient_solve(p);
    Eigen::Index best = 0;
    double best_use = -1.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double use = s.q_star(i) >= 0.0 ? s.q_star(i) / p.q_hi(i) : s.q_star(i) / p.q_lo(i);
        if (use > best_use) {
            best_use = use;
            best = i;
        }
    }
    return p.bus_ids[static_cast<std::size_t>(best)];
}

}  // namespace tasrl
