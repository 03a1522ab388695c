#include "tasrl/simulation.hpp"

#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tasrl/format.hpp"

namespace tasrl {

const char* to_string(ScenarioKind kind) noexcept {
    return kind == ScenarioKind::HighVoltage ? "high" : "low";
}

ScenarioKind parse_kind(const std::string& name) {
    if (name == "high") return ScenarioKind::HighVoltage;
    if (name == "low") return ScenarioKind::LowVoltage;
    fail(ErrorCode::InvalidInput, "unknown scenario kind '" + name + "' (expected high or low)");
}

void Scenario::validate(const Network& network) const {
    require_size(v_env, network.size(), "scenario: v_env");
    for (Eigen::Index i = 0; i < v_env.size(); ++i) {
        if (!std::isfinite(v_env(i))) fail(ErrorCode::InvalidInput, "scenario: v_env must be finite");
    }
    if (horizon < 1) fail(ErrorCode::InvalidInput, "scenario: horizon must be at least 1");
    if (q0.size() == 0) return;
    require_size(q0, network.size(), "scenario: q0");
    for (int id = 1; id <= network.size(); ++id) {
        const Bus& b = network.bus(id);
        const double q = q0(id - 1);
        if (!(q >= b.q_min && q <= b.q_max)) {
            fail(ErrorCode::InfeasibleState,
                 "scenario: q0 at bus " + std::to_string(id) + " lies outside its capacity bounds");
        }
    }
}

Vec Scenario::initial_q(const Network& network) const {
    return q0.size() == 0 ? Vec::Zero(network.size()) : q0;
}

StepResult step(const SafeController& controller, const Vec& v, const Vec& q) {
    const SteadyStateProblem& p = controller.problem();
    const double h = controller.config().h;
    StepResult r;
    r.decision = controller.control(v, q);
    r.q_next = q + h * r.decision.xi;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        double& x = r.q_next(i);
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
        if (x > p.q_hi(i)) {
            if (x - p.q_hi(i) > slack) {
                fail(ErrorCode::SafetyViolation, "step left the capacity box at bus " +
                                                     std::to_string(p.bus_ids[static_cast<std::size_t>(i)]));
            }
            x = p.q_hi(i);
        } else if (x < p.q_lo(i)) {
            if (p.q_lo(i) - x > slack) {
                fail(ErrorCode::SafetyViolation, "step left the capacity box at bus " +
                                                     std::to_string(p.bus_ids[static_cast<std::size_t>(i)]));
            }
            x = p.q_lo(i);
        }
    }
    r.v_next = p.voltage(r.q_next);
    return r;
}

Vec bus_costs(const SteadyStateProblem& problem, const Vec& v, const Vec& q) {
    require_size(v, problem.size(), "bus_costs: v");
    require_size(q, problem.size(), "bus_costs: q");
    const Vec v_env = problem.v_env();
    return (0.5 * problem.cost.cwiseProduct(q).cwiseProduct(q)) +
           0.5 * q.cwiseProduct(v + v_env - 2.0 * problem.v_nom);
}

double step_cost(const SteadyStateProblem& problem, const Vec& v, const Vec& q, const Vec& v_env) {
    require_size(v, problem.size(), "step_cost: v");
    require_size(q, problem.size(), "step_cost: q");
    require_size(v_env, problem.size(), "step_cost: v_env");
    double s = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        s += 0.5 * problem.cost(i) * q(i) * q(i) + 0.5 * q(i) * (v(i) + v_env(i) - 2.0 * problem.v_nom(i));
    }
    return s;
}

namespace {

bool in_band(const SteadyStateProblem& p, const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < p.v_lo(i) || v(i) > p.v_hi(i)) return false;
    }
    return true;
}

}  // namespace

Episode run_episode(const Network& network, const ControllerConfig& config, const Scenario& scenario,
                    const EpisodeOptions& options) {
    if (!(options.discount > 0.0 && options.discount <= 1.0)) {
        fail(ErrorCode::InvalidInput, "discount must lie in (0, 1]");
    }
    scenario.validate(network);
    const SteadyStateProblem problem = make_problem(network, scenario.v_env);
    const SafeController controller(config, problem);
    const auto& ids = problem.bus_ids;
    const Eigen::Index m = problem.size();
    const int n = network.size();
    const double h = config.h;

    const Vec q_full0 = scenario.initial_q(network);
    Vec q(m);
    for (Eigen::Index a = 0; a < m; ++a) q(a) = q_full0(ids[static_cast<std::size_t>(a)] - 1);
    // Columns of X for the controlled buses give the voltage everywhere.
    Mat X_cols(n, m);
    for (Eigen::Index a = 0; a < m; ++a) X_cols.col(a) = network.X().col(ids[static_cast<std::size_t>(a)] - 1);

    Episode ep;
    Trajectory& tr = ep.trajectory;
    EpisodeMetrics& mt = ep.metrics;
    tr.bus_ids = ids;
    tr.h = h;
    mt.bus_transient_cost = Vec::Zero(m);
    const std::size_t rows = static_cast<std::size_t>(scenario.horizon) + 1;
    if (options.record) {
        tr.v.reserve(rows);
        tr.q.reserve(rows);
        tr.xi.reserve(rows);
        tr.cost.reserve(rows);
        tr.clipped_fraction.reserve(rows);
        tr.clipped.reserve(rows);
    }

    Vec v = problem.voltage(q);
    int last_out = -1;
    double clipped_sum = 0.0;
    ControlDecision decision;
    for (int t = 0; t <= scenario.horizon; ++t) {
        StepResult next;
        if (t < scenario.horizon) {
            next = step(controller, v, q);
            decision = next.decision;
        } else {
            decision = controller.control(v, q);
        }
        const Vec costs = bus_costs(problem, v, q);
        const double cost = costs.sum();
        const double clipped = decision.clipped_fraction();
        clipped_sum += clipped;
        if (!in_band(problem, v)) last_out = t;
        if (options.record) {
            Vec q_full = Vec::Zero(n);
            Vec xi_full = Vec::Zero(n);
            for (Eigen::Index a = 0; a < m; ++a) {
                q_full(ids[static_cast<std::size_t>(a)] - 1) = q(a);
                xi_full(ids[static_cast<std::size_t>(a)] - 1) = decision.xi(a);
            }
            tr.v.push_back(X_cols * q + scenario.v_env);
            tr.q.push_back(std::move(q_full));
            tr.xi.push_back(std::move(xi_full));
            tr.cost.push_back(cost);
            tr.clipped_fraction.push_back(clipped);
            tr.clipped.push_back(decision.clipped);
        }
        if (t < scenario.horizon) {
            // Discount in time units so the sum approximates the integral.
            const double weight = std::pow(options.discount, t * h) * h;
            mt.transient_cost += weight * cost;
            mt.bus_transient_cost += weight * costs;
            q = std::move(next.q_next);
            v = std::move(next.v_next);
        }
    }
    mt.recovery_time = last_out + 1;
    mt.steady_state_objective = objective(problem, q);
    mt.converged = decision.xi.size() == 0 || decision.xi.lpNorm<Eigen::Infinity>() < kConvergenceTolerance;
    mt.final_kkt_residual = m == 0 ? 0.0 : kkt_residual(problem, q);
    mt.mean_clipped_fraction = clipped_sum / static_cast<double>(rows);
    return ep;
}

std::vector<Scenario> generate_scenarios(const Network& network, ScenarioKind kind, double magnitude_lo,
                                         double magnitude_hi, int count, std::uint64_t seed, int horizon) {
    if (!(magnitude_lo > 0.0 && magnitude_lo <= magnitude_hi && magnitude_hi < 0.5)) {
        fail(ErrorCode::InvalidInput, "scenario magnitude range must satisfy 0 < lo <= hi < 0.5");
    }
    if (count < 0) fail(ErrorCode::InvalidInput, "scenario count must be non-negative");
    if (horizon < 1) fail(ErrorCode::InvalidInput, "scenario horizon must be at least 1");
    const double sign = kind == ScenarioKind::HighVoltage ? 1.0 : -1.0;
    Rng rng(seed);
    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Scenario s;
        s.v_env.resize(network.size());
        for (int id = 1; id <= network.size(); ++id) {
            const double delta = magnitude_lo == magnitude_hi ? magnitude_lo : rng.uniform(magnitude_lo, magnitude_hi);
            s.v_env(id - 1) = network.bus(id).v_nom * (1.0 + sign * delta);
        }
        s.horizon = horizon;
        s.seed = seed + static_cast<std::uint64_t>(k);
        out.push_back(std::move(s));
    }
    return out;
}

Scenario parse_scenario(const std::string& text, const Network& network, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::InvalidInput, source + ": not valid JSON: " + e.what());
    }
    Scenario s;
    try {
        const auto v = doc.at("v_env").get<std::vector<double>>();
        s.v_env = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
        if (doc.contains("q0")) {
            const auto q = doc.at("q0").get<std::vector<double>>();
            s.q0 = Eigen::Map<const Vec>(q.data(), static_cast<Eigen::Index>(q.size()));
        }
        s.horizon = doc.value("horizon", kDefaultHorizon);
        s.seed = doc.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidInput, source + ": " + e.what());
    }
    s.validate(network);
    return s;
}

Scenario load_scenario(const std::string& path, const Network& network) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), network, path);
}

std::string scenario_to_json(const Scenario& scenario) {
    nlohmann::json j;
    j["v_env"] = std::vector<double>(scenario.v_env.data(), scenario.v_env.data() + scenario.v_env.size());
    if (scenario.q0.size() > 0) {
        j["q0"] = std::vector<double>(scenario.q0.data(), scenario.q0.data() + scenario.q0.size());
    }
    j["horizon"] = scenario.horizon;
    j["seed"] = scenario.seed;
    return j.dump(1) + "\n";
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
    const Eigen::Index n = trajectory.rows() == 0 ? 0 : trajectory.v.front().size();
    out << "t";
    for (const char* prefix : {"v_", "q_", "xi_"}) {
        for (Eigen::Index i = 1; i <= n; ++i) out << ',' << prefix << i;
    }
    out << ",cost\n";
    for (std::size_t t = 0; t < trajectory.rows(); ++t) {
        out << t;
        for (const std::vector<Vec>* block : {&trajectory.v, &trajectory.q, &trajectory.xi}) {
            const Vec& row = (*block)[t];
            for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt17(row(i));
        }
        out << ',' << fmt17(trajectory.cost[t]) << '\n';
    }
}

}  // namespace tasrl
