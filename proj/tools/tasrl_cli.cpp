// Command-line front end. Talks to the library only through tasrl.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tasrl/tasrl.h"

namespace {

struct NetworkDeleter {
    void operator()(tasrl_network* n) const { tasrl_network_free(n); }
};
struct PolicyDeleter {
    void operator()(tasrl_policy* p) const { tasrl_policy_free(p); }
};
using NetworkPtr = std::unique_ptr<tasrl_network, NetworkDeleter>;
using PolicyPtr = std::unique_ptr<tasrl_policy, PolicyDeleter>;

struct Text {
    char* s = nullptr;
    ~Text() { tasrl_string_free(s); }
    char** out() { return &s; }
    [[nodiscard]] std::string str() const { return s ? s : ""; }
};

// Thrown to unwind with a library status.
struct Failure {
    int status;
};

void check(int status) {
    if (status != TASRL_OK) throw Failure{status};
}

struct Common {
    std::string network;
    std::string feeder;
    std::string controller = "tasrl";
    std::string checkpoint;
    std::string kind = "high";
    std::string scenario_file;
    int scenarios = 100;
    std::uint64_t seed = 1;
    double magnitude_lo = 0.05;
    double magnitude_hi = 0.15;
    double alpha = 0.5;
    double h = 1.0;
    double gamma = 0.99;
    int horizon = 100;
};

void add_network(CLI::App* app, Common& c) {
    auto* grp = app->add_option_group("network");
    grp->add_option("--network", c.network, "Network file (JSON with \"buses\" and \"lines\")");
    grp->add_option("--feeder", c.feeder, "Built-in feeder instead of a file: feeder13 | feeder123");
    grp->require_option(1);
}

void add_scenarios(CLI::App* app, Common& c) {
    app->add_option("--scenarios", c.scenarios, "Number of generated scenarios")->capture_default_str();
    app->add_option("--kind", c.kind, "Disturbance direction")
        ->check(CLI::IsMember({"high", "low"}))
        ->capture_default_str();
    app->add_option("--seed", c.seed, "Scenario seed")->capture_default_str();
    app->add_option("--magnitude-lo", c.magnitude_lo, "Smallest disturbance as a fraction of v_nom")
        ->capture_default_str();
    app->add_option("--magnitude-hi", c.magnitude_hi, "Largest disturbance as a fraction of v_nom")
        ->capture_default_str();
    app->add_option("--scenario-file", c.scenario_file, "Single scenario file {\"v_env\": [...]} (overrides --kind)");
    app->add_option("--horizon,--t-f", c.horizon, "Episode length in steps")->capture_default_str();
}

void add_control(CLI::App* app, Common& c, bool with_variant) {
    if (with_variant) {
        app->add_option("--controller", c.controller, "Controller variant")
            ->check(CLI::IsMember({"tasrl", "sgf", "transient"}))
            ->capture_default_str();
    }
    app->add_option("--alpha", c.alpha, "Barrier gain; h * alpha must not exceed 1")->capture_default_str();
    app->add_option("--dt", c.h, "Sampling period h")->capture_default_str();
    app->add_option("--gamma", c.gamma, "Discount factor for the transient cost")->capture_default_str();
}

NetworkPtr open_network(const Common& c) {
    tasrl_network* n = nullptr;
    if (!c.network.empty()) {
        check(tasrl_network_load(c.network.c_str(), &n));
    } else {
        check(tasrl_network_make(c.feeder.c_str(), 0, 0, &n));
    }
    return NetworkPtr(n);
}

PolicyPtr open_policy(const Common& c, const tasrl_network* net, bool required) {
    if (c.checkpoint.empty()) {
        if (required) {
            std::fprintf(stderr, "error: --checkpoint is required here\n");
            throw Failure{TASRL_E_INVALID_INPUT};
        }
        return nullptr;
    }
    tasrl_policy* p = nullptr;
    check(tasrl_policy_load(c.checkpoint.c_str(), net, &p));
    return PolicyPtr(p);
}

tasrl_run_options run_options(const Common& c) {
    tasrl_run_options o;
    tasrl_run_options_default(&o);
    o.variant = c.controller == "sgf" ? TASRL_VARIANT_SGF
                : c.controller == "transient" ? TASRL_VARIANT_TRANSIENT
                                              : TASRL_VARIANT_TASRL;
    o.kind = c.kind == "low" ? TASRL_KIND_LOW : TASRL_KIND_HIGH;
    o.count = c.scenarios;
    o.seed = c.seed;
    o.magnitude_lo = c.magnitude_lo;
    o.magnitude_hi = c.magnitude_hi;
    o.alpha = c.alpha;
    o.h = c.h;
    o.gamma = c.gamma;
    o.horizon = c.horizon;
    o.scenario_path = c.scenario_file.empty() ? nullptr : c.scenario_file.c_str();
    return o;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
        throw Failure{TASRL_E_IO};
    }
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safe transient/steady-state volt-var control on radial feeders"};
    app.require_subcommand(1);
    app.footer(
        "Environment:\n"
        "  TASRL_THREADS  worker threads for parallel episodes (default: hardware concurrency)\n"
        "Exit codes: 0 success, 1 usage error, 2 invariant or safety violation, 3 numerical failure");

    Common c;
    std::string out_dir = "out";
    std::string out_file;

    auto* sim = app.add_subcommand("simulate", "Run closed-loop episodes and write trajectories");
    add_network(sim, c);
    add_control(sim, c, true);
    add_scenarios(sim, c);
    sim->add_option("--checkpoint", c.checkpoint, "Policy checkpoint (required for tasrl and transient)");
    sim->add_option("--out", out_dir, "Output directory for trajectory_<k>.csv and metrics.csv")
        ->capture_default_str();

    std::string method = "zo";
    tasrl_train_options topt;
    tasrl_train_options_default(&topt);
    std::string init_checkpoint;
    std::string log_path;
    auto* tr = app.add_subcommand("train", "Optimize the transient policy");
    add_network(tr, c);
    add_control(tr, c, false);
    tr->add_option("--method", method, "zo (zeroth order) or ac (actor-critic)")
        ->check(CLI::IsMember({"zo", "ac"}))
        ->capture_default_str();
    tr->add_option("--episodes", topt.episodes, "zo: parameter updates; ac: environment episodes")
        ->capture_default_str();
    tr->add_option("--steps", topt.steps, "Steps per training episode")->capture_default_str();
    tr->add_option("--seed", topt.seed, "Training seed")->capture_default_str();
    tr->add_option("--batch", topt.batch, "zo: scenarios (directions) per update; ac: minibatch")
        ->capture_default_str();
    tr->add_option("--actor-lr", topt.actor_lr, "Policy step size (0: method default)")->capture_default_str();
    tr->add_option("--critic-lr", topt.critic_lr, "Critic step size (ac)")->capture_default_str();
    tr->add_option("--critic-width", topt.critic_width, "Critic hidden units (ac)")->capture_default_str();
    tr->add_option("--perturbation", topt.perturbation, "Parameter perturbation scale")->capture_default_str();
    tr->add_option("--heldout", topt.heldout, "Held-out scenarios for the effectiveness check")
        ->capture_default_str();
    tr->add_option("--magnitude-lo", c.magnitude_lo, "Smallest training disturbance")->capture_default_str();
    tr->add_option("--magnitude-hi", c.magnitude_hi, "Largest training disturbance")->capture_default_str();
    tr->add_option("--init", init_checkpoint, "Start from this checkpoint instead of the initial policy");
    tr->add_option("--out", out_file, "Checkpoint to write")->required();
    tr->add_option("--log", log_path, "Training log CSV (default: <out>.log.csv)");

    auto* bench = app.add_subcommand("benchmark", "Compare tasrl, sgf and transient on one scenario list");
    add_network(bench, c);
    add_control(bench, c, false);
    add_scenarios(bench, c);
    bench->add_option("--checkpoint", c.checkpoint, "Policy checkpoint")->required();
    bench->add_option("--out", out_dir, "Output directory for benchmark.csv and episodes.csv")
        ->capture_default_str();

    tasrl_certify_options copt;
    tasrl_certify_options_default(&copt);
    bool attach = false;
    auto* ver = app.add_subcommand("verify-stability", "Sample the stability condition and Lyapunov decrease");
    add_network(ver, c);
    add_control(ver, c, false);
    ver->add_option("--checkpoint", c.checkpoint, "Policy checkpoint")->required();
    ver->add_option("--trajectories", copt.trajectories, "Simulated trajectories")->capture_default_str();
    ver->add_option("--steps", copt.steps, "Steps per trajectory")->capture_default_str();
    ver->add_option("--uniform", copt.uniform_samples, "Uniform (v, q) draws")->capture_default_str();
    ver->add_option("--seed", copt.seed, "Sampling seed")->capture_default_str();
    ver->add_option("--magnitude-lo", c.magnitude_lo, "Smallest trajectory disturbance")->capture_default_str();
    ver->add_option("--magnitude-hi", c.magnitude_hi, "Largest trajectory disturbance")->capture_default_str();
    ver->add_option("--out", out_file, "Write the certificate JSON here as well as to stdout");
    ver->add_flag("--attach", attach, "Store the certificate in the checkpoint's metadata");

    std::string solver = "pgd";
    double tol = 1e-8;
    int max_iter = 100000;
    auto* ss = app.add_subcommand("solve-steady-state", "Solve the box-constrained steady-state problem");
    add_network(ss, c);
    add_scenarios(ss, c);
    ss->add_option("--solver", solver, "pgd (projected gradient) or oracle (exhaustive, <= 12 controllers)")
        ->check(CLI::IsMember({"pgd", "oracle"}))
        ->capture_default_str();
    ss->add_option("--tol", tol, "Fixed-point residual tolerance")->capture_default_str();
    ss->add_option("--max-iter", max_iter, "Iteration limit")->capture_default_str();
    ss->add_option("--out", out_file, "Write the report here as well as to stdout");

    std::vector<double> alphas{0.1, 0.5};
    auto* sweep = app.add_subcommand("alpha-sweep", "One episode per alpha on a fixed scenario");
    add_network(sweep, c);
    add_control(sweep, c, true);
    add_scenarios(sweep, c);
    sweep->add_option("--alphas", alphas, "Comma-separated alpha values")->delimiter(',')->capture_default_str();
    sweep->add_option("--checkpoint", c.checkpoint, "Policy checkpoint (required for tasrl and transient)");
    sweep->add_option("--out", out_dir, "Output directory for alpha_<value>.csv")->capture_default_str();

    std::string feeder_name = "feeder13";
    int feeder_size = 10;
    std::uint64_t feeder_seed = 0;
    auto* mk = app.add_subcommand("make-feeder", "Write a built-in or generated network file");
    mk->add_option("--name", feeder_name, "feeder13 | feeder123 | chain | tree")
        ->check(CLI::IsMember({"feeder13", "feeder123", "chain", "tree"}))
        ->capture_default_str();
    mk->add_option("--size", feeder_size, "Non-substation buses for chain/tree")->capture_default_str();
    mk->add_option("--seed", feeder_seed, "Impedance seed (feeder123: 0 keeps the shipped one)")
        ->capture_default_str();
    mk->add_option("--out", out_file, "Network file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*mk) {
            tasrl_network* n = nullptr;
            check(tasrl_network_make(feeder_name.c_str(), feeder_size, feeder_seed, &n));
            NetworkPtr net(n);
            check(tasrl_network_save(net.get(), out_file.c_str()));
            int buses = 0, controlled = 0;
            check(tasrl_network_size(net.get(), &buses, &controlled));
            std::printf("wrote %s: %d buses, %d controlled\n", out_file.c_str(), buses, controlled);
            return 0;
        }

        NetworkPtr net = open_network(c);
        const tasrl_run_options run = run_options(c);

        if (*sim) {
            PolicyPtr pol = open_policy(c, net.get(), false);
            Text summary;
            check(tasrl_simulate(net.get(), pol.get(), &run, out_dir.c_str(), summary.out()));
            std::fputs(summary.str().c_str(), stdout);
        } else if (*tr) {
            topt.method = method == "ac" ? TASRL_METHOD_AC : TASRL_METHOD_ZO;
            Common init = c;
            init.checkpoint = init_checkpoint;
            PolicyPtr start = open_policy(init, net.get(), false);
            tasrl_policy* trained = nullptr;
            Text log;
            const int status = tasrl_train(net.get(), start.get(), &topt, &run, &trained, log.out());
            PolicyPtr result(trained);
            if (result) check(tasrl_policy_save(result.get(), out_file.c_str()));
            write_text(log_path.empty() ? out_file + ".log.csv" : log_path, log.str());
            check(status);
            int flag = 0;
            check(tasrl_policy_training_ineffective(result.get(), &flag));
            std::printf("wrote %s%s\n", out_file.c_str(), flag ? " (flagged TrainingIneffective)" : "");
        } else if (*bench) {
            PolicyPtr pol = open_policy(c, net.get(), true);
            Text report;
            check(tasrl_benchmark(net.get(), pol.get(), &run, out_dir.c_str(), report.out()));
            std::fputs(report.str().c_str(), stdout);
        } else if (*ver) {
            PolicyPtr pol = open_policy(c, net.get(), true);
            Text report;
            const int status = tasrl_verify_stability(net.get(), pol.get(), &run, &copt, report.out());
            std::fputs(report.str().c_str(), stdout);
            if (!out_file.empty() && report.s) write_text(out_file, report.str());
            if (attach && report.s) {
                check(tasrl_policy_attach_certificate(pol.get(), report.s));
                check(tasrl_policy_save(pol.get(), c.checkpoint.c_str()));
            }
            check(status);
        } else if (*ss) {
            Text report;
            const int status = tasrl_solve_steady_state(net.get(), &run, solver.c_str(), tol, max_iter, report.out());
            std::fputs(report.str().c_str(), stdout);
            if (!out_file.empty() && report.s) write_text(out_file, report.str());
            check(status);
        } else if (*sweep) {
            PolicyPtr pol = open_policy(c, net.get(), false);
            Text summary;
            check(tasrl_alpha_sweep(net.get(), pol.get(), &run, alphas.data(), alphas.size(), out_dir.c_str(),
                                    summary.out()));
            std::fputs(summary.str().c_str(), stdout);
        }
    } catch (const Failure& f) {
        const char* msg = tasrl_last_error();
        if (msg != nullptr && *msg != '\0') {
            std::fprintf(stderr, "error (%s): %s\n", tasrl_status_name(f.status), msg);
        }
        return tasrl_exit_code(f.status);
    }
    return 0;
}
