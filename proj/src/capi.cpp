#include "tasrl/tasrl.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tasrl/experiments.hpp"
#include "tasrl/format.hpp"
#include "tasrl/parallel.hpp"
#include "tasrl/stability.hpp"
#include "tasrl/training.hpp"

struct tasrl_network {
    tasrl::Network net;
};

struct tasrl_policy {
    tasrl::Checkpoint checkpoint;
};

namespace {

using namespace tasrl;

thread_local std::string g_last_error;

int status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return TASRL_E_INVALID_INPUT;
        case ErrorCode::DimensionMismatch: return TASRL_E_DIMENSION_MISMATCH;
        case ErrorCode::CycleDetected: return TASRL_E_CYCLE_DETECTED;
        case ErrorCode::DisconnectedBus: return TASRL_E_DISCONNECTED_BUS;
        case ErrorCode::DuplicateLine: return TASRL_E_DUPLICATE_LINE;
        case ErrorCode::ProblemTooLarge: return TASRL_E_PROBLEM_TOO_LARGE;
        case ErrorCode::InfeasibleState: return TASRL_E_INFEASIBLE_STATE;
        case ErrorCode::SafetyViolation: return TASRL_E_SAFETY_VIOLATION;
        case ErrorCode::DegenerateReference: return TASRL_E_DEGENERATE_REFERENCE;
        case ErrorCode::SingularX: return TASRL_E_SINGULAR_X;
        case ErrorCode::NonFiniteLoss: return TASRL_E_NON_FINITE_LOSS;
        case ErrorCode::CorruptCheckpoint: return TASRL_E_CORRUPT_CHECKPOINT;
        case ErrorCode::InvariantViolation: return TASRL_E_INVARIANT_VIOLATION;
        case ErrorCode::InvalidAlpha: return TASRL_E_INVALID_ALPHA;
        case ErrorCode::Io: return TASRL_E_IO;
    }
    return TASRL_E_INTERNAL;
}

int set_error(int status, const std::string& msg) {
    g_last_error = msg;
    return status;
}

template <class F>
int guarded(F&& body) {
    try {
        g_last_error.clear();
        return body();
    } catch (const Error& e) {
        return set_error(status_of(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(TASRL_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(TASRL_E_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put(char** dst, const std::string& s) {
    if (dst != nullptr) *dst = dup_string(s);
}

void need(const void* p, const char* what) {
    if (p == nullptr) fail(ErrorCode::InvalidInput, std::string(what) + " must not be NULL");
}

Variant variant_of(tasrl_variant v) {
    switch (v) {
        case TASRL_VARIANT_TASRL: return Variant::Tasrl;
        case TASRL_VARIANT_SGF: return Variant::SafeGradientFlow;
        case TASRL_VARIANT_TRANSIENT: return Variant::TransientOnly;
    }
    fail(ErrorCode::InvalidInput, "unknown controller variant");
}

RunConfig run_config(const tasrl_run_options& o) {
    RunConfig c;
    c.variant = variant_of(o.variant);
    c.kind = o.kind == TASRL_KIND_LOW ? ScenarioKind::LowVoltage : ScenarioKind::HighVoltage;
    c.count = o.count;
    c.seed = o.seed;
    c.magnitude_lo = o.magnitude_lo;
    c.magnitude_hi = o.magnitude_hi;
    c.alpha = o.alpha;
    c.h = o.h;
    c.gamma = o.gamma;
    c.t_f = o.horizon;
    c.validate();
    return c;
}

std::vector<Scenario> scenarios_of(const Network& net, const tasrl_run_options& o, const RunConfig& c) {
    if (o.scenario_path != nullptr && *o.scenario_path != '\0') return {load_scenario(o.scenario_path, net)};
    return generate_scenarios(net, c.kind, c.magnitude_lo, c.magnitude_hi, c.count, c.seed, c.t_f);
}

ControllerConfig controller_of(const RunConfig& c, const tasrl_policy* policy) {
    ControllerConfig cfg;
    cfg.alpha = c.alpha;
    cfg.h = c.h;
    cfg.variant = c.variant;
    if (policy != nullptr) cfg.policy = policy->checkpoint.params;
    cfg.validate();
    return cfg;
}

void check_policy(const Network& net, const tasrl_policy* policy) {
    if (policy != nullptr) check_matches(policy->checkpoint.params, net);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) fail(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

std::filesystem::path prepare_dir(const char* dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory '" + p.string() + "': " + ec.message());
    return p;
}

}  // namespace

extern "C" {

const char* tasrl_last_error(void) { return g_last_error.c_str(); }

const char* tasrl_status_name(int status) {
    switch (status) {
        case TASRL_OK: return "Ok";
        case TASRL_E_INVALID_INPUT: return "InvalidInput";
        case TASRL_E_DIMENSION_MISMATCH: return "DimensionMismatch";
        case TASRL_E_CYCLE_DETECTED: return "CycleDetected";
        case TASRL_E_DISCONNECTED_BUS: return "DisconnectedBus";
        case TASRL_E_DUPLICATE_LINE: return "DuplicateLine";
        case TASRL_E_PROBLEM_TOO_LARGE: return "ProblemTooLarge";
        case TASRL_E_INFEASIBLE_STATE: return "InfeasibleState";
        case TASRL_E_SAFETY_VIOLATION: return "SafetyViolation";
        case TASRL_E_DEGENERATE_REFERENCE: return "DegenerateReference";
        case TASRL_E_SINGULAR_X: return "SingularX";
        case TASRL_E_NON_FINITE_LOSS: return "NonFiniteLoss";
        case TASRL_E_CORRUPT_CHECKPOINT: return "CorruptCheckpoint";
        case TASRL_E_INVARIANT_VIOLATION: return "InvariantViolation";
        case TASRL_E_INVALID_ALPHA: return "InvalidAlpha";
        case TASRL_E_IO: return "Io";
        case TASRL_E_NOT_CONVERGED: return "MaxIterationsExceeded";
        case TASRL_E_CHECK_FAILED: return "CheckFailed";
        default: return "Internal";
    }
}

int tasrl_exit_code(int status) {
    switch (status) {
        case TASRL_OK: return 0;
        case TASRL_E_INVALID_INPUT:
        case TASRL_E_DIMENSION_MISMATCH:
        case TASRL_E_PROBLEM_TOO_LARGE:
        case TASRL_E_INVALID_ALPHA:
        case TASRL_E_IO: return 1;
        case TASRL_E_CYCLE_DETECTED:
        case TASRL_E_DISCONNECTED_BUS:
        case TASRL_E_DUPLICATE_LINE:
        case TASRL_E_INFEASIBLE_STATE:
        case TASRL_E_SAFETY_VIOLATION:
        case TASRL_E_DEGENERATE_REFERENCE:
        case TASRL_E_CORRUPT_CHECKPOINT:
        case TASRL_E_INVARIANT_VIOLATION:
        case TASRL_E_CHECK_FAILED: return 2;
        default: return 3;
    }
}

void tasrl_string_free(char* s) { std::free(s); }

int tasrl_thread_count(void) { return tasrl::thread_count(); }

int tasrl_network_load(const char* path, tasrl_network** out) {
    return guarded([&]() -> int {
        need(path, "path");
        need(out, "out");
        *out = new tasrl_network{load_network(path)};
        return TASRL_OK;
    });
}

int tasrl_network_make(const char* name, int size, uint64_t seed, tasrl_network** out) {
    return guarded([&]() -> int {
        need(name, "name");
        need(out, "out");
        const std::string n(name);
        if (n == "feeder13") {
            *out = new tasrl_network{make_feeder13()};
        } else if (n == "feeder123") {
            *out = new tasrl_network{make_feeder123(seed == 0 ? kFeeder123Seed : seed)};
        } else if (n == "chain" || n == "tree") {
            if (size < 1) fail(ErrorCode::InvalidInput, "generated feeders need size >= 1");
            *out = new tasrl_network{n == "chain" ? make_chain(size, seed) : make_random_tree(size, seed)};
        } else {
            fail(ErrorCode::InvalidInput, "unknown feeder '" + n + "' (feeder13, feeder123, chain, tree)");
        }
        return TASRL_OK;
    });
}

int tasrl_network_save(const tasrl_network* net, const char* path) {
    return guarded([&]() -> int {
        need(net, "network");
        need(path, "path");
        save_network(net->net, path);
        return TASRL_OK;
    });
}

int tasrl_network_size(const tasrl_network* net, int* buses, int* controlled) {
    return guarded([&]() -> int {
        need(net, "network");
        if (buses) *buses = net->net.size();
        if (controlled) *controlled = static_cast<int>(net->net.controlled().size());
        return TASRL_OK;
    });
}

void tasrl_network_free(tasrl_network* net) { delete net; }

int tasrl_policy_initial(const tasrl_network* net, int units, double c, double epsilon, tasrl_policy** out) {
    return guarded([&]() -> int {
        need(net, "network");
        need(out, "out");
        auto* p = new tasrl_policy;
        try {
            p->checkpoint.params = make_initial_policy(net->net, units, c, epsilon);
            p->checkpoint.meta.method = "initial";
        } catch (...) {
            delete p;
            throw;
        }
        *out = p;
        return TASRL_OK;
    });
}

int tasrl_policy_load(const char* path, const tasrl_network* net, tasrl_policy** out) {
    return guarded([&]() -> int {
        need(path, "path");
        need(out, "out");
        Checkpoint c = net != nullptr ? load_checkpoint(path, net->net) : load_checkpoint(path);
        *out = new tasrl_policy{std::move(c)};
        return TASRL_OK;
    });
}

int tasrl_policy_save(const tasrl_policy* policy, const char* path) {
    return guarded([&]() -> int {
        need(policy, "policy");
        need(path, "path");
        save_checkpoint(policy->checkpoint, path);
        return TASRL_OK;
    });
}

int tasrl_policy_training_ineffective(const tasrl_policy* policy, int* flag) {
    return guarded([&]() -> int {
        need(policy, "policy");
        need(flag, "flag");
        *flag = policy->checkpoint.meta.training_ineffective ? 1 : 0;
        return TASRL_OK;
    });
}

int tasrl_policy_attach_certificate(tasrl_policy* policy, const char* certificate_json) {
    return guarded([&]() -> int {
        need(policy, "policy");
        need(certificate_json, "certificate");
        if (!nlohmann::json::accept(certificate_json)) fail(ErrorCode::InvalidInput, "certificate is not valid JSON");
        policy->checkpoint.meta.certificate = nlohmann::json::parse(certificate_json).dump();
        return TASRL_OK;
    });
}

void tasrl_policy_free(tasrl_policy* policy) { delete policy; }

void tasrl_run_options_default(tasrl_run_options* o) {
    if (o == nullptr) return;
    o->variant = TASRL_VARIANT_TASRL;
    o->kind = TASRL_KIND_HIGH;
    o->count = 100;
    o->seed = 1;
    o->magnitude_lo = 0.05;
    o->magnitude_hi = 0.15;
    o->alpha = 0.5;
    o->h = 1.0;
    o->gamma = kDefaultDiscount;
    o->horizon = kDefaultHorizon;
    o->scenario_path = nullptr;
}

int tasrl_simulate(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* opts,
                   const char* out_dir, char** summary) {
    return guarded([&]() -> int {
        need(net, "network");
        need(opts, "options");
        check_policy(net->net, policy);
        const RunConfig rc = run_config(*opts);
        const ControllerConfig cfg = controller_of(rc, policy);
        const std::vector<Scenario> scenarios = scenarios_of(net->net, *opts, rc);
        const bool files = out_dir != nullptr;
        std::vector<Episode> episodes(scenarios.size());
        parallel_for(scenarios.size(), [&](std::size_t k) {
            episodes[k] = run_episode(net->net, cfg, scenarios[k], {rc.gamma, files});
        });
        std::ostringstream metrics;
        metrics << "episode,recovery_time,transient_cost,objective,converged,kkt_residual,clipped_fraction\n";
        double rec = 0.0, cost = 0.0, obj = 0.0;
        for (std::size_t k = 0; k < episodes.size(); ++k) {
            const EpisodeMetrics& m = episodes[k].metrics;
            metrics << k << ',' << m.recovery_time << ',' << fmt17(m.transient_cost) << ','
                    << fmt17(m.steady_state_objective) << ',' << (m.converged ? 1 : 0) << ','
                    << fmt17(m.final_kkt_residual) << ',' << fmt17(m.mean_clipped_fraction) << '\n';
            rec += m.recovery_time;
            cost += m.transient_cost;
            obj += m.steady_state_objective;
        }
        const double n = episodes.empty() ? 1.0 : static_cast<double>(episodes.size());
        std::ostringstream table;
        table << "controller,episodes,mean_recovery_time,mean_transient_cost,mean_objective\n"
              << to_string(cfg.variant) << ',' << episodes.size() << ',' << fmt17(rec / n) << ','
              << fmt17(cost / n) << ',' << fmt17(obj / n) << '\n';
        if (files) {
            const auto dir = prepare_dir(out_dir);
            for (std::size_t k = 0; k < episodes.size(); ++k) {
                std::ostringstream csv;
                write_trajectory_csv(episodes[k].trajectory, csv);
                write_file(dir / ("trajectory_" + std::to_string(k) + ".csv"), csv.str());
            }
            write_file(dir / "metrics.csv", metrics.str());
            write_file(dir / "summary.csv", table.str());
        }
        put(summary, table.str());
        return TASRL_OK;
    });
}

int tasrl_benchmark(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* opts,
                    const char* out_dir, char** report) {
    return guarded([&]() -> int {
        need(net, "network");
        need(policy, "policy");
        need(opts, "options");
        check_policy(net->net, policy);
        const RunConfig rc = run_config(*opts);
        const std::vector<Scenario> scenarios = scenarios_of(net->net, *opts, rc);
        BenchmarkReport r = run_benchmark(net->net, policy->checkpoint.params, rc.alpha, rc.h, scenarios, rc.gamma);
        r.seed = rc.seed;
        r.kind = opts->scenario_path ? "file" : to_string(rc.kind);
        const std::string table = benchmark_table(r);
        if (out_dir != nullptr) {
            const auto dir = prepare_dir(out_dir);
            write_file(dir / "benchmark.csv", table);
            write_file(dir / "episodes.csv", benchmark_episodes_csv(r));
        }
        put(report, table);
        return TASRL_OK;
    });
}

int tasrl_alpha_sweep(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* opts,
                      const double* alphas, size_t n_alphas, const char* out_dir, char** summary) {
    return guarded([&]() -> int {
        need(net, "network");
        need(opts, "options");
        need(alphas, "alphas");
        check_policy(net->net, policy);
        const std::vector<double> values(alphas, alphas + n_alphas);
        for (double a : values) {
            if (!(a > 0.0) || opts->h * a > 1.0) {
                fail(ErrorCode::InvalidAlpha, "alpha = " + fmt17(a) + " violates 0 < alpha <= 1/h");
            }
        }
        tasrl_run_options one = *opts;
        one.count = 1;
        one.alpha = values.empty() ? opts->alpha : values.front();
        const RunConfig rc = run_config(one);
        const Scenario scenario = scenarios_of(net->net, one, rc).front();
        const ControllerConfig base = controller_of(rc, policy);
        const std::vector<SweepRun> runs = alpha_sweep(net->net, base, scenario, values, rc.gamma);
        const int bus = most_constrained_bus(net->net, scenario);
        std::ostringstream out;
        out << "# constrained_bus=" << bus << '\n';
        out << "alpha,recovery_time,transient_cost,objective,max_abs_xi_at_bus,saturated_steps_at_bus\n";
        std::vector<std::size_t> order(runs.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return runs[a].alpha < runs[b].alpha;
        });
        for (const SweepRun& r : runs) {
            const Trajectory& tr = r.episode.trajectory;
            std::size_t a = 0;
            while (tr.bus_ids[a] != bus) ++a;
            double peak = 0.0;
            int sat = 0;
            for (std::size_t t = 0; t < tr.rows(); ++t) {
                peak = std::max(peak, std::abs(tr.xi[t](bus - 1)));
                sat += tr.clipped[t][a] ? 1 : 0;
            }
            out << fmt17(r.alpha) << ',' << r.episode.metrics.recovery_time << ','
                << fmt17(r.episode.metrics.transient_cost) << ',' << fmt17(r.episode.metrics.steady_state_objective)
                << ',' << fmt17(peak) << ',' << sat << '\n';
        }
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const SweepRun& lo = runs[order[k]];
            const SweepRun& hi = runs[order[k + 1]];
            ControllerConfig lo_config = base;
            lo_config.alpha = lo.alpha;
            ControllerConfig hi_config = base;
            hi_config.alpha = hi.alpha;
            const SaturationComparison c = compare_saturation(net->net, scenario, lo_config, lo.episode.trajectory,
                                                              hi_config, hi.episode.trajectory, bus);
            out << "# alpha " << fmt17(lo.alpha) << " vs " << fmt17(hi.alpha) << ": compared_steps="
                << c.compared_steps << " exceed_steps=" << c.exceed_steps << " holds=" << (c.holds() ? 1 : 0)
                << " aligned_compared_steps=" << c.aligned_compared_steps
                << " aligned_exceed_steps=" << c.aligned_exceed_steps
                << '\n';
        }
        if (out_dir != nullptr) {
            const auto dir = prepare_dir(out_dir);
            for (const SweepRun& r : runs) {
                std::ostringstream csv;
                write_trajectory_csv(r.episode.trajectory, csv);
                char name[64];
                std::snprintf(name, sizeof name, "alpha_%g.csv", r.alpha);
                write_file(dir / name, csv.str());
            }
            write_file(dir / "alpha_sweep.csv", out.str());
        }
        put(summary, out.str());
        return TASRL_OK;
    });
}

int tasrl_solve_steady_state(const tasrl_network* net, const tasrl_run_options* opts, const char* method, double tol,
                             int max_iter, char** report) {
    return guarded([&]() -> int {
        need(net, "network");
        need(opts, "options");
        tasrl_run_options one = *opts;
        one.count = 1;
        const RunConfig rc = run_config(one);
        const Scenario scenario = scenarios_of(net->net, one, rc).front();
        const SteadyStateProblem problem = make_problem(net->net, scenario.v_env);
        const std::string m = method == nullptr ? "pgd" : method;
        SolveReport s;
        if (m == "oracle") {
            s = qp_oracle(problem);
        } else if (m == "pgd" || m == "auto") {
            s = projected_gradient_solve(problem, default_step_size(problem), tol, max_iter);
        } else {
            fail(ErrorCode::InvalidInput, "unknown solver '" + m + "' (pgd or oracle)");
        }
        nlohmann::json j;
        j["bus_ids"] = problem.bus_ids;
        j["q_star"] = std::vector<double>(s.q_star.data(), s.q_star.data() + s.q_star.size());
        j["v_star"] = std::vector<double>(s.v_star.data(), s.v_star.data() + s.v_star.size());
        j["objective"] = s.objective;
        j["iterations"] = s.iterations;
        j["residual"] = s.residual;
        j["converged"] = s.converged;
        j["solver"] = m == "oracle" ? "oracle" : "pgd";
        put(report, j.dump(1) + "\n");
        if (!s.converged) {
            return set_error(TASRL_E_NOT_CONVERGED,
                             "projected gradient stopped after " + std::to_string(s.iterations) + " iterations");
        }
        return TASRL_OK;
    });
}

void tasrl_train_options_default(tasrl_train_options* o) {
    if (o == nullptr) return;
    const TrainerConfig d;
    o->method = TASRL_METHOD_ZO;
    o->episodes = d.episodes;
    o->steps = d.steps;
    o->batch = d.batch;
    o->actor_lr = 0.0;
    o->critic_lr = d.critic_lr;
    o->critic_width = d.critic_width;
    o->perturbation = d.perturbation;
    o->heldout = d.heldout;
    o->seed = d.seed;
}

int tasrl_train(const tasrl_network* net, const tasrl_policy* start, const tasrl_train_options* train_opts,
                const tasrl_run_options* run, tasrl_policy** out, char** log) {
    return guarded([&]() -> int {
        need(net, "network");
        need(train_opts, "train options");
        need(run, "run options");
        need(out, "out");
        check_policy(net->net, start);
        TrainerConfig tc;
        tc.method = train_opts->method == TASRL_METHOD_AC ? TrainMethod::ActorCritic : TrainMethod::ZerothOrder;
        tc.episodes = train_opts->episodes;
        tc.steps = train_opts->steps;
        tc.batch = train_opts->batch;
        tc.actor_lr = train_opts->actor_lr;
        tc.critic_lr = train_opts->critic_lr;
        tc.critic_width = train_opts->critic_width;
        tc.perturbation = train_opts->perturbation;
        tc.heldout = train_opts->heldout;
        tc.seed = train_opts->seed;
        tc.discount = run->gamma;
        tc.magnitude_lo = run->magnitude_lo;
        tc.magnitude_hi = run->magnitude_hi;
        tasrl_run_options r = *run;
        r.variant = TASRL_VARIANT_TASRL;
        const RunConfig rc = run_config(r);
        ControllerConfig cfg;
        cfg.alpha = rc.alpha;
        cfg.h = rc.h;
        cfg.variant = Variant::Tasrl;
        cfg.policy = start != nullptr ? start->checkpoint.params : make_initial_policy(net->net);
        const ScenarioSampler sampler =
            make_scenario_sampler(net->net, tc.magnitude_lo, tc.magnitude_hi, tc.steps, tc.seed);
        TrainResult res = train(tc, cfg, net->net, sampler);
        std::ostringstream csv;
        write_train_log_csv(res.log, csv);
        put(log, csv.str());
        *out = new tasrl_policy{std::move(res.checkpoint)};
        if (res.aborted) return set_error(TASRL_E_NON_FINITE_LOSS, res.message);
        return TASRL_OK;
    });
}

void tasrl_certify_options_default(tasrl_certify_options* o) {
    if (o == nullptr) return;
    const CertifyOptions d;
    o->trajectories = d.trajectories;
    o->steps = d.steps;
    o->uniform_samples = d.uniform_samples;
    o->seed = d.seed;
}

int tasrl_verify_stability(const tasrl_network* net, const tasrl_policy* policy, const tasrl_run_options* run,
                           const tasrl_certify_options* opts, char** report) {
    return guarded([&]() -> int {
        need(net, "network");
        need(policy, "policy");
        need(run, "run options");
        need(opts, "certify options");
        check_policy(net->net, policy);
        tasrl_run_options r = *run;
        if (r.variant == TASRL_VARIANT_SGF) r.variant = TASRL_VARIANT_TASRL;
        const RunConfig rc = run_config(r);
        const ControllerConfig cfg = controller_of(rc, policy);
        CertifyOptions co;
        co.trajectories = opts->trajectories;
        co.steps = opts->steps;
        co.uniform_samples = opts->uniform_samples;
        co.seed = opts->seed;
        co.magnitude_lo = rc.magnitude_lo;
        co.magnitude_hi = rc.magnitude_hi;
        const CertificateReport cert = certify(net->net, cfg, co);
        put(report, certificate_to_json(cert));
        if (!cert.ok()) {
            return set_error(TASRL_E_CHECK_FAILED, std::to_string(cert.condition_violations) + " condition, " +
                                                       std::to_string(cert.inequality_violations) + " inequality and " +
                                                       std::to_string(cert.lyapunov_violations) +
                                                       " Lyapunov violations");
        }
        return TASRL_OK;
    });
}

}  // extern "C"
