#include "tasrl/training.hpp"

#include <limits>
#include <ostream>

#include "tasrl/format.hpp"
#include "tasrl/parallel.hpp"

namespace tasrl {

const char* to_string(TrainMethod m) noexcept { return m == TrainMethod::ActorCritic ? "ac" : "zo"; }

TrainMethod parse_method(const std::string& name) {
    if (name == "ac") return TrainMethod::ActorCritic;
    if (name == "zo") return TrainMethod::ZerothOrder;
    fail(ErrorCode::InvalidInput, "unknown training method '" + name + "' (expected ac or zo)");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) fail(ErrorCode::InvalidInput, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (data_.size() == capacity_) data_.pop_front();
    data_.push_back(t);
}

std::vector<Transition> ReplayBuffer::sample(Rng& rng, std::size_t count) const {
    std::vector<Transition> out;
    if (data_.empty()) return out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(data_[rng.below(data_.size())]);
    return out;
}

namespace {

// d xi / d(u, beta) for one branch at deviation v_dev.
void branch_gradient(const MonotoneBranchParams& params, Branch branch, double v_dev, double* du, double* dbeta) {
    const BranchWeights wb = branch_weights(params, branch);
    const std::size_t d = wb.w.size();
    const double x = branch == Branch::High ? v_dev : -v_dev;
    const double sign = branch == Branch::High ? -1.0 : 1.0;
    std::vector<double> a(d + 1, 0.0);
    for (std::size_t l = 0; l < d; ++l) a[l] = std::max(x + wb.b[l], 0.0);
    for (std::size_t l = 0; l < d; ++l) du[l] = sign * std::exp(params.u[l]) * (a[l] - a[l + 1]);
    // beta_k lowers every bias after it.
    double tail = 0.0;
    for (std::size_t l = d; l-- > 1;) {
        if (a[l] > 0.0) tail += wb.w[l];
        dbeta[l - 1] = -std::exp(params.beta[l - 1]) * tail;
    }
}

}  // namespace

std::vector<double> policy_parameter_gradient(const PolicyParams& params, std::size_t bus_index,
                                              const BusLimits& limits, double alpha, double v, double q) {
    const BusPolicy& bp = params.buses.at(bus_index);
    const auto d = static_cast<std::size_t>(params.units);
    std::vector<double> g(static_cast<std::size_t>(params.bus_parameter_count()), 0.0);
    const CompiledBusPolicy compiled(bp, params.c, params.epsilon);
    if (v > limits.v_hi) {
        const double down = std::max(q - limits.q_lo * (1.0 - params.epsilon), 0.0);
        const double t = std::tanh(compiled.high(v - limits.v_hi));
        const double outer = params.c * alpha * down * (1.0 - t * t);
        branch_gradient(bp.high, Branch::High, v - limits.v_hi, g.data(), g.data() + d);
        for (std::size_t k = 0; k < 2 * d - 1; ++k) g[k] *= outer;
    } else if (v < limits.v_lo) {
        const double up = std::max(limits.q_hi * (1.0 - params.epsilon) - q, 0.0);
        const double t = std::tanh(compiled.low(v - limits.v_lo));
        const double outer = params.c * alpha * up * (1.0 - t * t);
        double* base = g.data() + 2 * d - 1;
        branch_gradient(bp.low, Branch::Low, v - limits.v_lo, base, base + d);
        for (std::size_t k = 2 * d - 1; k < g.size(); ++k) g[k] *= outer;
    }
    return g;
}

std::vector<std::vector<double>> zeroth_order_step(const std::vector<std::vector<double>>& blocks,
                                                   const BlockReward& reward, int directions, double scale,
                                                   double step, std::uint64_t seed) {
    if (directions < 1) fail(ErrorCode::InvalidInput, "zeroth_order_step: need at least one direction");
    if (!(scale > 0.0)) fail(ErrorCode::InvalidInput, "zeroth_order_step: perturbation scale must be positive");
    const auto nd = static_cast<std::size_t>(directions);
    Rng rng(seed);
    std::vector<std::vector<std::vector<double>>> noise(nd, blocks);
    for (auto& dir : noise) {
        for (auto& block : dir) {
            for (double& e : block) e = rng.normal();
        }
    }
    auto shifted = [&](std::size_t dir, double sign) {
        std::vector<std::vector<double>> x = blocks;
        for (std::size_t k = 0; k < x.size(); ++k) {
            for (std::size_t j = 0; j < x[k].size(); ++j) x[k][j] += sign * scale * noise[dir][k][j];
        }
        return x;
    };
    std::vector<Vec> rewards(2 * nd);
    parallel_for(2 * nd, [&](std::size_t slot) {
        const std::size_t dir = slot / 2;
        const int sign = slot % 2 == 0 ? 1 : -1;
        rewards[slot] = reward(dir, sign, shifted(dir, sign));
    });
    std::vector<std::vector<double>> out = blocks;
    for (std::size_t dir = 0; dir < nd; ++dir) {
        const Vec& plus = rewards[2 * dir];
        const Vec& minus = rewards[2 * dir + 1];
        if (plus.size() != static_cast<Eigen::Index>(blocks.size()) || minus.size() != plus.size()) {
            fail(ErrorCode::DimensionMismatch, "zeroth_order_step: reward must have one entry per block");
        }
        if (!plus.allFinite() || !minus.allFinite()) fail(ErrorCode::NonFiniteLoss, "non-finite reward in ZO step");
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const double coeff = step * (plus(static_cast<Eigen::Index>(k)) - minus(static_cast<Eigen::Index>(k))) /
                                 (2.0 * scale * static_cast<double>(nd));
            for (std::size_t j = 0; j < out[k].size(); ++j) out[k][j] += coeff * noise[dir][k][j];
        }
    }
    for (const auto& block : out) {
        for (double x : block) {
            if (!std::isfinite(x)) fail(ErrorCode::NonFiniteLoss, "non-finite parameters after ZO step");
        }
    }
    return out;
}

namespace {

std::vector<std::vector<double>> to_blocks(const PolicyParams& p) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < p.buses.size(); ++i) out.push_back(p.flatten(i));
    return out;
}

PolicyParams from_blocks(PolicyParams p, const std::vector<std::vector<double>>& blocks) {
    for (std::size_t i = 0; i < blocks.size(); ++i) p.assign(i, blocks[i]);
    return p;
}

ControllerConfig with_policy(ControllerConfig config, PolicyParams policy) {
    config.policy = std::move(policy);
    if (config.variant == Variant::SafeGradientFlow) config.variant = Variant::Tasrl;
    return config;
}

struct ZoOutcome {
    PolicyParams params;
    double mean_cost = 0.0;
    double clipped = 0.0;
};

ZoOutcome zo_iteration(const PolicyParams& params, const Network& network, const ControllerConfig& config,
                       const std::vector<Scenario>& batch, double scale, double step, std::uint64_t seed,
                       double discount) {
    if (batch.empty()) fail(ErrorCode::InvalidInput, "zeroth_order_update: empty scenario batch");
    std::vector<double> costs(2 * batch.size(), 0.0);
    std::vector<double> clips(2 * batch.size(), 0.0);
    const EpisodeOptions opts{discount, false};
    const BlockReward reward = [&](std::size_t dir, int sign, const std::vector<std::vector<double>>& blocks) {
        const Episode ep = run_episode(network, with_policy(config, from_blocks(params, blocks)), batch[dir], opts);
        const std::size_t slot = 2 * dir + (sign > 0 ? 0 : 1);
        costs[slot] = ep.metrics.transient_cost;
        clips[slot] = ep.metrics.mean_clipped_fraction;
        if (!std::isfinite(ep.metrics.transient_cost)) fail(ErrorCode::NonFiniteLoss, "non-finite transient cost");
        return Vec(-ep.metrics.bus_transient_cost);
    };
    ZoOutcome out;
    out.params = from_blocks(params, zeroth_order_step(to_blocks(params), reward, static_cast<int>(batch.size()),
                                                       scale, step, seed));
    out.params.validate();
    for (std::size_t k = 0; k < costs.size(); ++k) {
        out.mean_cost += costs[k];
        out.clipped += clips[k];
    }
    out.mean_cost /= static_cast<double>(costs.size());
    out.clipped /= static_cast<double>(clips.size());
    return out;
}

}  // namespace

PolicyParams zeroth_order_update(const PolicyParams& params, const Network& network, const ControllerConfig& config,
                                 const std::vector<Scenario>& batch, double scale, double step, std::uint64_t seed,
                                 double discount) {
    return zo_iteration(params, network, config, batch, scale, step, seed, discount).params;
}

ScenarioSampler make_scenario_sampler(const Network& network, double magnitude_lo, double magnitude_hi, int horizon,
                                      std::uint64_t seed) {
    // Validate the range once up front.
    (void)generate_scenarios(network, ScenarioKind::HighVoltage, magnitude_lo, magnitude_hi, 0, seed, horizon);
    return [&network, magnitude_lo, magnitude_hi, horizon, seed](std::uint64_t index) {
        const ScenarioKind kind = index % 2 == 0 ? ScenarioKind::HighVoltage : ScenarioKind::LowVoltage;
        const std::uint64_t s = seed * 0x9e3779b97f4a7c15ULL + index;
        return generate_scenarios(network, kind, magnitude_lo, magnitude_hi, 1, s, horizon).front();
    };
}

void TrainerConfig::validate() const {
    if (episodes < 0) fail(ErrorCode::InvalidInput, "trainer: episodes must be non-negative");
    if (steps < 1) fail(ErrorCode::InvalidInput, "trainer: steps must be at least 1");
    if (batch < 1) fail(ErrorCode::InvalidInput, "trainer: batch must be at least 1");
    if (actor_lr < 0.0 || !(critic_lr > 0.0)) fail(ErrorCode::InvalidInput, "trainer: step sizes must be positive");
    if (critic_width < 1) fail(ErrorCode::InvalidInput, "trainer: critic width must be at least 1");
    if (!(perturbation > 0.0)) fail(ErrorCode::InvalidInput, "trainer: perturbation scale must be positive");
    if (buffer_capacity == 0) fail(ErrorCode::InvalidInput, "trainer: buffer capacity must be positive");
    if (!(discount > 0.0 && discount <= 1.0)) fail(ErrorCode::InvalidInput, "trainer: discount must lie in (0, 1]");
    if (heldout < 0) fail(ErrorCode::InvalidInput, "trainer: heldout must be non-negative");
}

double TrainerConfig::effective_actor_lr() const noexcept {
    if (actor_lr > 0.0) return actor_lr;
    return method == TrainMethod::ZerothOrder ? 20.0 : 0.05;
}

namespace {


struct LocalBus {
    double cost = 0.0;
    double v_nom = 1.0;
    BusLimits limits;
};

// Rate applied by the closed loop at bus i from local data only.
double local_rate(const CompiledBusPolicy& pi, const LocalBus& b, const ControllerConfig& cfg, double v, double q,
                  bool* clipped) {
    const double g = b.cost * q + v - b.v_nom;
    double raw = 0.0;
    switch (cfg.variant) {
        case Variant::Tasrl: raw = pi(b.limits, cfg.alpha, v, q) - g; break;
        case Variant::SafeGradientFlow: raw = -g; break;
        case Variant::TransientOnly: raw = pi(b.limits, cfg.alpha, v, q); break;
    }
    const double xi = clamp(raw, cfg.alpha * (b.limits.q_lo - q), cfg.alpha * (b.limits.q_hi - q));
    if (clipped) *clipped = xi != raw;
    return xi;
}

bool finite_params(const PolicyParams& p) {
    for (std::size_t i = 0; i < p.buses.size(); ++i) {
        for (double x : p.flatten(i)) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

}  // namespace

TrainResult train(const TrainerConfig& trainer, const ControllerConfig& config, const Network& network,
                  const ScenarioSampler& sampler, const TrainProgress& progress) {
    trainer.validate();
    if (!config.policy) fail(ErrorCode::InvalidInput, "train: an initial policy is required");
    ControllerConfig cfg = with_policy(config, *config.policy);
    cfg.validate();
    const PolicyParams initial = *cfg.policy;
    check_matches(initial, network);

    TrainResult result;
    PolicyParams params = initial;
    const double lr = trainer.effective_actor_lr();
    auto log_row = [&](int j, double cost, double clipped) {
        result.log.push_back({j, cost, clipped});
        if (progress) progress(result.log.back());
    };

    try {
        if (trainer.method == TrainMethod::ZerothOrder) {
            for (int j = 0; j < trainer.episodes; ++j) {
                std::vector<Scenario> batch;
                for (int k = 0; k < trainer.batch; ++k) {
                    Scenario s = sampler(static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(trainer.batch) +
                                         static_cast<std::uint64_t>(k));
                    s.horizon = trainer.steps;
                    batch.push_back(std::move(s));
                }
                const ZoOutcome o = zo_iteration(params, network, cfg, batch, trainer.perturbation, lr,
                                                 trainer.seed * 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(j),
                                                 trainer.discount);
                params = o.params;
                log_row(j, o.mean_cost, o.clipped);
            }
        } else {
            const auto& ids = network.controlled();
            const std::size_t m = ids.size();
            std::vector<LocalBus> local(m);
            for (std::size_t i = 0; i < m; ++i) {
                const Bus& b = network.bus(ids[i]);
                local[i] = {b.eta / b.s_bar, b.v_nom, {b.v_lo, b.v_hi, b.q_min, b.q_max}};
            }
            std::vector<Critic> critics;
            std::vector<ReplayBuffer> buffers;
            for (std::size_t i = 0; i < m; ++i) {
                critics.emplace_back(trainer.critic_width, trainer.seed * 31ULL + i);
                buffers.emplace_back(trainer.buffer_capacity);
            }
            Rng rng(trainer.seed ^ 0xac0ffeeULL);
            const double gamma_step = std::pow(trainer.discount, cfg.h);
            for (int j = 0; j < trainer.episodes; ++j) {
                Scenario s = sampler(static_cast<std::uint64_t>(j));
                s.horizon = trainer.steps;
                // Parameter-space exploration keeps the rollout policy admissible.
                PolicyParams explore = params;
                for (std::size_t i = 0; i < m; ++i) {
                    std::vector<double> flat = explore.flatten(i);
                    for (double& x : flat) x += 0.1 * trainer.perturbation * rng.normal();
                    explore.assign(i, flat);
                }
                const Episode ep = run_episode(network, with_policy(cfg, explore), s, {trainer.discount, true});
                if (!std::isfinite(ep.metrics.transient_cost)) fail(ErrorCode::NonFiniteLoss, "non-finite episode cost");
                const Trajectory& tr = ep.trajectory;
                const SteadyStateProblem problem = make_problem(network, s.v_env);
                for (std::size_t t = 0; t + 1 < tr.rows(); ++t) {
                    Vec v(m), q(m), qn(m), vn(m);
                    for (std::size_t i = 0; i < m; ++i) {
                        const int k = ids[i] - 1;
                        v(static_cast<Eigen::Index>(i)) = tr.v[t](k);
                        q(static_cast<Eigen::Index>(i)) = tr.q[t](k);
                    }
                    const Vec c = bus_costs(problem, v, q);
                    for (std::size_t i = 0; i < m; ++i) {
                        const int k = ids[i] - 1;
                        buffers[i].push({tr.v[t](k), tr.q[t](k), tr.xi[t](k), -c(static_cast<Eigen::Index>(i)),
                                         tr.v[t + 1](k), tr.q[t + 1](k)});
                    }
                }
                // Per-bus updates; bus i reads only D_i.
                for (std::size_t i = 0; i < m; ++i) {
                    for (int u = 0; u < trainer.steps; ++u) {
                        const CompiledBusPolicy pi(params.buses[i], params.c, params.epsilon);
                        const auto mb = buffers[i].sample(rng, static_cast<std::size_t>(trainer.batch));
                        std::vector<double> actor(static_cast<std::size_t>(params.bus_parameter_count()), 0.0);
                        for (const Transition& tr_i : mb) {
                            const double f_next = local_rate(pi, local[i], cfg, tr_i.v_next, tr_i.q_next, nullptr);
                            const double target = tr_i.reward + gamma_step * critics[i](tr_i.v_next, tr_i.q_next, f_next);
                            const double err = critics[i].train_step(tr_i.v, tr_i.q, tr_i.f, target,
                                                                     trainer.critic_lr / static_cast<double>(mb.size()));
                            if (!std::isfinite(err)) fail(ErrorCode::NonFiniteLoss, "non-finite critic loss");
                            if (cfg.variant == Variant::SafeGradientFlow) continue;
                            bool clipped = false;
                            const double f = local_rate(pi, local[i], cfg, tr_i.v, tr_i.q, &clipped);
                            if (clipped) continue;
                            const double dq_df = critics[i].gradient(tr_i.v, tr_i.q, f).df;
                            const auto dpi = policy_parameter_gradient(params, i, local[i].limits, cfg.alpha, tr_i.v,
                                                                       tr_i.q);
                            for (std::size_t k = 0; k < actor.size(); ++k) actor[k] += dq_df * dpi[k];
                        }
                        double norm = 0.0;
                        for (double x : actor) norm += x * x;
                        norm = std::sqrt(norm) / static_cast<double>(std::max<std::size_t>(mb.size(), 1));
                        const double shrink = norm > 1.0 ? 1.0 / norm : 1.0;
                        std::vector<double> flat = params.flatten(i);
                        for (std::size_t k = 0; k < flat.size(); ++k) {
                            flat[k] += lr * shrink * actor[k] / static_cast<double>(std::max<std::size_t>(mb.size(), 1));
                        }
                        PolicyParams next = params;
                        next.assign(i, flat);
                        if (!finite_params(next)) fail(ErrorCode::NonFiniteLoss, "non-finite actor update");
                        params = std::move(next);
                    }
                }
                log_row(j, ep.metrics.transient_cost, ep.metrics.mean_clipped_fraction);
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        result.aborted = true;
        result.message = e.what();
    }

    params.validate();
    // Held-out comparison against the starting policy.
    int improved = 0;
    std::vector<int> better(static_cast<std::size_t>(trainer.heldout), 0);
    parallel_for(better.size(), [&](std::size_t k) {
        Scenario s = sampler(kHeldoutIndexOffset + k);
        s.horizon = trainer.steps;
        const EpisodeOptions opts{trainer.discount, false};
        const double before = run_episode(network, with_policy(cfg, initial), s, opts).metrics.transient_cost;
        const double after = run_episode(network, with_policy(cfg, params), s, opts).metrics.transient_cost;
        better[k] = after < before ? 1 : 0;
    });
    for (int b : better) improved += b;
    result.heldout_improved_fraction =
        trainer.heldout > 0 ? static_cast<double>(improved) / static_cast<double>(trainer.heldout) : 0.0;
    result.checkpoint.params = std::move(params);
    result.checkpoint.meta.method = to_string(trainer.method);
    result.checkpoint.meta.training_ineffective = result.heldout_improved_fraction < kIneffectiveThreshold;
    return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log, std::ostream& out) {
    out << "episode,mean_transient_cost,clipped_fraction\n";
    for (const TrainLogRow& r : log) {
        out << r.episode << ',' << fmt17(r.mean_transient_cost) << ',' << fmt17(r.clipped_fraction) << '\n';
    }
}

}  // namespace tasrl
