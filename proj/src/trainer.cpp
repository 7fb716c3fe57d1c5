#include "domac/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "domac/checkpoint.hpp"
#include "domac/config.hpp"
#include "domac/metrics_log.hpp"

namespace domac {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

VariantFlags variant_flags(Variant v) {
    switch (v) {
        case Variant::DOMAC: return {true, true, false};
        case Variant::MAAC: return {false, false, false};
        case Variant::OMAC: return {true, false, false};
        case Variant::DMAC: return {false, true, false};
        case Variant::UB: return {true, true, true};
    }
    throw ConfigError("unknown variant");
}

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::DOMAC: return "DOMAC";
        case Variant::MAAC: return "MAAC";
        case Variant::OMAC: return "OMAC";
        case Variant::DMAC: return "DMAC";
        case Variant::UB: return "UB";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    const std::string n = lower(name);
    for (Variant v : {Variant::DOMAC, Variant::MAAC, Variant::OMAC, Variant::DMAC, Variant::UB})
        if (lower(to_string(v)) == n) return v;
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected DOMAC, MAAC, OMAC, DMAC or UB)");
}

std::string_view to_string(OpponentModelMode m) {
    switch (m) {
        case OpponentModelMode::Learned: return "none";
        case OpponentModelMode::FrozenRandom: return "random";
        case OpponentModelMode::FrozenTrained: return "trained";
    }
    return "?";
}

OpponentModelMode parse_opponent_model_mode(std::string_view name) {
    const std::string n = lower(name);
    if (n == "none") return OpponentModelMode::Learned;
    if (n == "random") return OpponentModelMode::FrozenRandom;
    if (n == "trained") return OpponentModelMode::FrozenTrained;
    throw ConfigError("unknown opponent-model mode '" + std::string(name) + "' (expected none, random or trained)");
}

std::string_view to_string(QuantileLevels q) { return q == QuantileLevels::Midpoint ? "midpoint" : "endpoint"; }

QuantileLevels parse_quantile_levels(std::string_view name) {
    const std::string n = lower(name);
    if (n == "midpoint") return QuantileLevels::Midpoint;
    if (n == "endpoint") return QuantileLevels::Endpoint;
    throw ConfigError("unknown quantile levels '" + std::string(name) + "' (expected midpoint or endpoint)");
}

std::string_view to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
    const std::string n = lower(name);
    if (n == "tanh") return Activation::Tanh;
    if (n == "relu") return Activation::Relu;
    throw ConfigError("unknown activation '" + std::string(name) + "' (expected tanh or relu)");
}

// ---------------------------------------------------------------------------
// config

void TrainConfig::apply_preset(std::string_view name) {
    const std::string n = lower(name);
    if (n == "pp2v1") {
        env = GridConfig::pp2v1();
        opponent_samples = 0;
    } else if (n == "pp4v2") {
        env = GridConfig::pp4v2();
        opponent_samples = 10;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected pp2v1 or pp4v2)");
    }
    preset = n;
}

void TrainConfig::validate() const {
    env.validate();
    if (preset != "pp2v1" && preset != "pp4v2") throw ConfigError("preset must be pp2v1 or pp4v2");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (episodes_per_update < 1) throw ConfigError("episodes_per_update must be >= 1");
    if (forward_steps < 0) throw ConfigError("forward_steps must be >= 0");
    if (n_envs < 1) throw ConfigError("n_envs must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be > 0");
    if (n_quantiles < 1) throw ConfigError("n_quantiles must be >= 1");
    if (opponent_samples < 0) throw ConfigError("opponent_samples must be >= 0");
    if (enumeration_cap < 1) throw ConfigError("enumeration_cap must be >= 1");
    if (critic_steps < 1) throw ConfigError("critic_steps must be >= 1");
    if (!(lr_actor > 0.0 && lr_opponent > 0.0 && lr_critic > 0.0)) throw ConfigError("learning rates must be > 0");
    if (hidden.empty()) throw ConfigError("network.hidden must not be empty");
    for (int h : hidden)
        if (h < 1) throw ConfigError("network.hidden sizes must be >= 1");
    if (om_dim < 2) throw ConfigError("opponent_model.dim must be >= 2");
    if (eval_every < 1 || eval_episodes < 1) throw ConfigError("evaluation.every and evaluation.episodes must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("logging.checkpoint_every must be >= 0");

    const VariantFlags f = flags();
    if (f.true_opponent_actions && om_dim != kNumActions)
        throw ConfigError("UB feeds true prey actions to the policy, so opponent_model.dim must be " +
                          std::to_string(kNumActions));
    if (om_mode != OpponentModelMode::Learned && !f.opponent_models)
        throw ConfigError("opponent_model.frozen is set but variant " + std::string(to_string(variant)) +
                          " has no opponent models");
    if (om_mode == OpponentModelMode::FrozenTrained && om_checkpoint.empty())
        throw ConfigError("opponent_model.frozen = trained needs opponent_model.checkpoint");
    if (f.opponent_models && !f.true_opponent_actions && opponent_samples == 0) {
        try {
            joint_action_count(std::vector<int>(env.n_preys, om_dim), enumeration_cap);
        } catch (const ConfigError&) {
            throw ConfigError("joint opponent action space exceeds enumeration_cap; set algorithm.opponent_samples");
        }
    }
    try {
        joint_action_count(std::vector<int>(env.n_predators, kNumActions), enumeration_cap);
    } catch (const ConfigError&) {
        throw ConfigError("team joint action space exceeds enumeration_cap; the critic cannot take its argmax");
    }
}

// ---------------------------------------------------------------------------
// agents

std::uint64_t Agent::opponent_model_hash() const {
    std::vector<ParamBlock> all;
    for (const auto& m : models) all.insert(all.end(), m.net().params().begin(), m.net().params().end());
    return parameter_hash(all);
}

std::vector<Agent> make_agents(const TrainConfig& config, bool load_frozen) {
    config.validate();
    const int n = config.env.n_predators;
    const int obs = config.env.observation_size();
    const int p = config.n_opponents();
    std::vector<Agent> agents(n);
    for (int i = 0; i < n; ++i) {
        Agent& a = agents[i];
        const std::string tag = "agent" + std::to_string(i);
        Rng rp = Rng::derive(config.seed, "init-policy", i);
        a.policy = ConditionalPolicy::initialized(obs, std::vector<int>(p, config.om_dim), kNumActions, config.hidden,
                                                  config.activation, tag + ".policy", rp);
        for (int k = 0; k < p; ++k) {
            Rng rm = Rng::derive(config.seed, "init-om", i, k);
            a.models.push_back(OpponentModel::initialized(obs, config.env.n_preys, k, config.om_dim, config.hidden,
                                                          config.activation, tag + ".om" + std::to_string(k), rm));
        }
        Rng rc = Rng::derive(config.seed, "init-critic", i);
        a.critic = CriticNet::initialized(n * obs, std::vector<int>(n, kNumActions), config.critic_quantiles(),
                                          config.quantile_levels, config.hidden, config.activation,
                                          tag + ".critic", rc);
        a.policy_opt = Adam(AdamConfig{config.lr_actor}, a.policy.net().params());
        for (const auto& m : a.models) a.model_opts.emplace_back(AdamConfig{config.lr_opponent}, m.net().params());
        a.critic_opt = Adam(AdamConfig{config.lr_critic}, a.critic.net().params());
    }
    if (load_frozen && config.om_mode == OpponentModelMode::FrozenTrained)
        load_opponent_models(agents, config.om_checkpoint);
    return agents;
}

void load_opponent_models(std::vector<Agent>& agents, const std::filesystem::path& checkpoint) {
    const Trainer source = Trainer::from_checkpoint(checkpoint);
    const auto& theirs = source.agents();
    if (theirs.size() != agents.size())
        throw CheckpointError("opponent-model checkpoint has " + std::to_string(theirs.size()) + " agents, expected " +
                              std::to_string(agents.size()));
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (theirs[i].models.size() != agents[i].models.size())
            throw CheckpointError("opponent-model checkpoint has a different number of opponent models");
        for (std::size_t k = 0; k < agents[i].models.size(); ++k) {
            auto& mine = agents[i].models[k].net().params();
            const auto& stored = theirs[i].models[k].net().params();
            if (mine.size() != stored.size()) throw CheckpointError("opponent-model architecture differs");
            for (std::size_t b = 0; b < mine.size(); ++b) restore_block(mine[b], stored[b]);
        }
    }
}

Decision act(const Agent& agent, const VectorXd& observation, const TrainConfig& config,
             const std::vector<Action>& true_opponent_actions, Rng& rng) {
    const VariantFlags f = config.flags();
    MarginalPolicyResult r;
    Decision d;
    if (!f.opponent_models) {
        r = marginal_policy_exact(agent.policy, {}, observation, config.enumeration_cap);
    } else if (f.true_opponent_actions) {
        if (true_opponent_actions.size() != agent.models.size())
            throw ConfigError("act: expected one true action per opponent");
        JointActions joint(1, static_cast<Eigen::Index>(agent.models.size()));
        for (std::size_t k = 0; k < agent.models.size(); ++k)
            joint(0, static_cast<Eigen::Index>(k)) = static_cast<int>(true_opponent_actions[k]);
        r = marginal_policy_from_joint(agent.policy, agent.models, observation, joint, Aggregation::Sampled);
        d.joint = r.joint_actions;
    } else if (config.opponent_samples == 0) {
        r = marginal_policy_exact(agent.policy, agent.models, observation, config.enumeration_cap);
    } else {
        r = marginal_policy_sampled(agent.policy, agent.models, observation, config.opponent_samples, rng);
        d.joint = r.joint_actions;
    }
    const SampledAction s = sample_action(r, rng);
    d.action = s.action;
    d.log_prob = s.log_prob;
    d.entropy = policy_entropy(r);
    return d;
}

// ---------------------------------------------------------------------------
// rollouts

namespace {

struct Transition {
    std::vector<VectorXd> obs;
    std::vector<VectorXd> next_obs;
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<JointActions> joints;
    double reward = 0.0;
    bool done = false;
};

struct SlotOutput {
    std::vector<Transition> steps;
    std::vector<std::size_t> episode_starts;
    std::vector<double> returns;
    std::int64_t episodes = 0;
};

void rollout_step(const PredatorPrey& env, EnvSlot& slot, const std::vector<Agent>& agents,
                  const TrainConfig& config, SlotOutput& out) {
    if (!slot.state) {
        slot.state = env.reset(slot.env_rng);
        slot.episode_return = 0.0;
        slot.steps_in_episode = 0;
        out.episode_starts.push_back(out.steps.size());
    }
    GridState& state = *slot.state;
    Transition t;
    t.obs = env.observe_all(state);
    const std::vector<Action> prey_actions = env.draw_prey_actions(state, slot.env_rng);

    std::vector<Action> moves;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        Decision d = act(agents[i], t.obs[i], config, prey_actions, slot.act_rng);
        t.actions.push_back(d.action);
        t.log_probs.push_back(d.log_prob);
        t.joints.push_back(std::move(d.joint));
        moves.push_back(static_cast<Action>(d.action));
    }
    StepResult res = env.step(state, moves, prey_actions);
    t.reward = res.reward;
    t.done = res.done;
    t.next_obs = std::move(res.observations);
    out.steps.push_back(std::move(t));

    slot.episode_return += res.reward;
    slot.steps_in_episode += 1;
    if (res.done) {
        out.returns.push_back(slot.episode_return);
        out.episodes += 1;
        slot.state.reset();
        slot.episode_return = 0.0;
        slot.steps_in_episode = 0;
    }
}

void run_slot(const PredatorPrey& env, EnvSlot& slot, const std::vector<Agent>& agents, const TrainConfig& config,
              std::int64_t episodes, SlotOutput& out) {
    if (config.forward_steps > 0) {
        for (int s = 0; s < config.forward_steps; ++s) rollout_step(env, slot, agents, config, out);
    } else {
        while (out.episodes < episodes) rollout_step(env, slot, agents, config, out);
    }
}

TrajectoryBatch assemble(const std::vector<SlotOutput>& outputs, const TrainConfig& config, int n_agents,
                         int obs_dim) {
    std::size_t total = 0;
    for (const auto& o : outputs) total += o.steps.size();
    const auto T = static_cast<Eigen::Index>(total);

    TrajectoryBatch b;
    b.observations.assign(n_agents, RowMatrix(T, obs_dim));
    b.next_observations.assign(n_agents, RowMatrix(T, obs_dim));
    b.joint_observations.resize(T, n_agents * obs_dim);
    b.next_joint_observations.resize(T, n_agents * obs_dim);
    b.actions.resize(T, n_agents);
    b.rewards.resize(T);
    b.done.resize(total);
    b.log_probs.assign(n_agents, VectorXd(T));
    const bool keep_joints = config.flags().opponent_models &&
                             (config.flags().true_opponent_actions || config.opponent_samples > 0);
    b.joint_predictions.assign(n_agents, {});

    Eigen::Index row = 0;
    for (const auto& o : outputs) {
        for (std::size_t s : o.episode_starts) b.episode_starts.push_back(static_cast<std::size_t>(row) + s);
        b.episode_returns.insert(b.episode_returns.end(), o.returns.begin(), o.returns.end());
        b.episodes_completed += o.episodes;
        for (const Transition& t : o.steps) {
            for (int i = 0; i < n_agents; ++i) {
                b.observations[i].row(row) = t.obs[i].transpose();
                b.next_observations[i].row(row) = t.next_obs[i].transpose();
                b.joint_observations.row(row).segment(i * obs_dim, obs_dim) = t.obs[i].transpose();
                b.next_joint_observations.row(row).segment(i * obs_dim, obs_dim) = t.next_obs[i].transpose();
                b.actions(row, i) = t.actions[i];
                b.log_probs[i](row) = t.log_probs[i];
                if (keep_joints) b.joint_predictions[i].push_back(t.joints[i]);
            }
            b.rewards(row) = t.reward;
            b.done[row] = t.done;
            ++row;
        }
    }
    return b;
}

}  // namespace

std::vector<EnvSlot> make_env_slots(const TrainConfig& config) {
    std::vector<EnvSlot> slots;
    for (int e = 0; e < config.n_envs; ++e)
        slots.push_back(EnvSlot{Rng::derive(config.seed, "env", e), Rng::derive(config.seed, "act", e), {}, 0.0, 0});
    return slots;
}

TrajectoryBatch collect(const PredatorPrey& env, std::vector<EnvSlot>& slots, const std::vector<Agent>& agents,
                        const TrainConfig& config) {
    if (slots.empty()) throw ConfigError("collect: no environment slots");
    if (static_cast<int>(agents.size()) != env.config().n_predators)
        throw ConfigError("collect: agent count does not match predator count");
    const auto n_slots = static_cast<std::int64_t>(slots.size());
    std::vector<SlotOutput> outputs(slots.size());
    auto quota = [&](std::int64_t e) {
        return config.episodes_per_update / n_slots + (e < config.episodes_per_update % n_slots ? 1 : 0);
    };

    if (slots.size() == 1) {
        run_slot(env, slots[0], agents, config, quota(0), outputs[0]);
    } else {
        std::vector<std::exception_ptr> errors(slots.size());
        std::vector<std::thread> workers;
        for (std::size_t e = 0; e < slots.size(); ++e) {
            workers.emplace_back([&, e] {
                try {
                    run_slot(env, slots[e], agents, config, quota(static_cast<std::int64_t>(e)), outputs[e]);
                } catch (...) {
                    errors[e] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
    }
    return assemble(outputs, config, env.config().n_predators, env.config().observation_size());
}

// ---------------------------------------------------------------------------
// update

namespace {

LossAndGrad critic_loss_of(const CriticNet& critic, const TrajectoryBatch& batch, const TrainConfig& config,
                           ForwardCache& cache) {
    const RowMatrix target = bellman_target(critic, batch.rewards, batch.done, batch.next_joint_observations,
                                            config.gamma, config.enumeration_cap);
    cache = critic.forward_cache(batch.joint_observations, batch.actions);
    return config.flags().distributional ? quantile_huber_loss(cache.output, target, config.kappa, critic.levels())
                                         : squared_td_loss(cache.output, target);
}

}  // namespace

std::vector<double> critic_losses(const std::vector<Agent>& agents, const TrajectoryBatch& batch,
                                  const TrainConfig& config) {
    if (batch.size() == 0) throw ConfigError("critic_losses: empty batch");
    std::vector<double> out;
    ForwardCache cache;
    for (const Agent& a : agents) out.push_back(critic_loss_of(a.critic, batch, config, cache).value);
    return out;
}

UpdateReport update(std::vector<Agent>& agents, const TrajectoryBatch& batch, const TrainConfig& config) {
    if (batch.size() == 0) throw ConfigError("update: empty batch");
    const VariantFlags f = config.flags();
    const bool train_models = f.opponent_models && config.om_mode == OpponentModelMode::Learned;

    UpdateReport report;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        Agent& agent = agents[i];
        double critic_loss = 0.0;
        for (int s = 0; s < config.critic_steps; ++s) {
            ForwardCache cache;
            const LossAndGrad loss = critic_loss_of(agent.critic, batch, config, cache);
            agent.critic.net().backward(cache, loss.grad);
            agent.critic_opt.step(agent.critic.net().params());
            if (s == 0) critic_loss = loss.value;
        }

        ActorBatch ab;
        ab.observations = batch.observations[i];
        ab.actions.resize(static_cast<std::size_t>(batch.size()));
        for (Eigen::Index t = 0; t < batch.size(); ++t) ab.actions[t] = batch.actions(t, static_cast<Eigen::Index>(i));
        ab.critic_values = agent.critic.forward(batch.joint_observations, batch.actions).rowwise().mean();
        if (!batch.joint_predictions[i].empty()) ab.joint_predictions = batch.joint_predictions[i];

        const ActorLossReport actor =
            actor_loss(agent.policy, agent.models, ab, config.alpha, train_models, config.enumeration_cap);
        agent.policy_opt.step(agent.policy.net().params());
        if (train_models)
            for (std::size_t k = 0; k < agent.models.size(); ++k)
                agent.model_opts[k].step(agent.models[k].net().params());

        report.agent_critic_loss.push_back(critic_loss);
        report.agent_actor_loss.push_back(actor.loss);
        report.entropy += actor.entropy;
        report.policy_grad_norm += actor.policy_grad_norm;
        report.opponent_grad_norm += actor.opponent_grad_norm;
    }
    const double n = static_cast<double>(agents.size());
    for (double l : report.agent_critic_loss) report.critic_loss += l / n;
    for (double l : report.agent_actor_loss) report.actor_loss += l / n;
    report.entropy /= n;
    report.policy_grad_norm /= n;
    report.opponent_grad_norm /= n;
    return report;
}

// ---------------------------------------------------------------------------
// evaluation

EvalRecord evaluate(const std::vector<Agent>& agents, const TrainConfig& config, int n_episodes, std::uint64_t seed,
                    TrajectoryDump* dump) {
    if (n_episodes < 1) throw ConfigError("evaluate: n_episodes must be >= 1");
    const PredatorPrey env(config.env);
    Rng env_rng = Rng::derive(seed, "eval-env");
    Rng act_rng = Rng::derive(seed, "eval-act");
    const bool diagnose = config.flags().opponent_models;

    EvalRecord rec;
    EvalTrace trace;
    double entropy_sum = 0.0;
    std::int64_t decisions = 0;
    for (int ep = 0; ep < n_episodes; ++ep) {
        GridState state = env.reset(env_rng);
        double ret = 0.0;
        bool done = false;
        while (!done) {
            const auto obs = env.observe_all(state);
            const auto prey_actions = env.draw_prey_actions(state, env_rng);
            if (diagnose) {
                trace.states.push_back(state);
                trace.observations.push_back(obs);
                trace.prey_actions.push_back(prey_actions);
            }
            std::vector<Action> moves;
            for (std::size_t i = 0; i < agents.size(); ++i) {
                const Decision d = act(agents[i], obs[i], config, prey_actions, act_rng);
                moves.push_back(static_cast<Action>(d.action));
                entropy_sum += d.entropy;
                ++decisions;
            }
            const GridState before = state;
            const StepResult res = env.step(state, moves, prey_actions);
            if (dump) dump->record(ep, before, moves, prey_actions, res.reward, res.done);
            ret += res.reward;
            done = res.done;
        }
        rec.returns.push_back(ret);
    }
    const double n = static_cast<double>(n_episodes);
    for (double r : rec.returns) rec.mean_return += r / n;
    for (double r : rec.returns) rec.std_return += (r - rec.mean_return) * (r - rec.mean_return) / n;
    rec.std_return = std::sqrt(rec.std_return);
    rec.policy_entropy = entropy_sum / static_cast<double>(decisions);
    if (diagnose) {
        std::vector<std::vector<OpponentModel>> models;
        for (const auto& a : agents) models.push_back(a.models);
        rec.diagnostics = collect_diagnostics(models, trace, env);
        rec.average = average_diagnostics(rec.diagnostics);
    }
    return rec;
}

// ---------------------------------------------------------------------------
// trainer

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)), env_(config_.env), agents_(make_agents(config_)), slots_(make_env_slots(config_)) {}

Trainer::Trainer(TrainConfig config, Restoring)
    : config_(std::move(config)),
      env_(config_.env),
      agents_(make_agents(config_, false)),
      slots_(make_env_slots(config_)) {}

void Trainer::set_episode_budget(std::int64_t episodes) {
    if (episodes < 1) throw ConfigError("episode budget must be >= 1");
    config_.episodes = episodes;
}

UpdateReport Trainer::iterate() {
    const TrajectoryBatch batch = collect(env_, slots_, agents_, config_);
    UpdateReport report = update(agents_, batch, config_);
    episode_ += batch.episodes_completed;
    update_step_ += 1;
    return report;
}

EvalRecord Trainer::evaluate_now() const {
    const std::uint64_t seed = Rng::derive(config_.seed, "eval", static_cast<std::uint64_t>(eval_index_)).next_u64();
    return evaluate(agents_, config_, config_.eval_episodes, seed);
}

void Trainer::run(const std::filesystem::path& out_dir, std::ostream* log) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "checkpoints");
    {
        std::ofstream snap(out_dir / "config.yaml");
        snap << serialize_config(config_);
        if (!snap) throw std::runtime_error("cannot write " + (out_dir / "config.yaml").string());
    }
    const bool fresh = eval_index_ == 0;
    MetricsLog metrics = fresh ? MetricsLog::create(out_dir / "metrics.csv")
                               : MetricsLog::resume(out_dir / "metrics.csv", update_step_);
    const auto start = std::chrono::steady_clock::now();
    EvalRecord last_eval;

    auto evaluate_and_log = [&](const UpdateReport* report) {
        last_eval = evaluate_now();
        eval_index_ += 1;
        MetricsRow row;
        if (config_.record_wall_time)
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row.episode = episode_;
        row.update_step = update_step_;
        row.variant = std::string(to_string(config_.variant));
        row.seed = config_.seed;
        row.eval_return_mean = last_eval.mean_return;
        row.eval_return_std = last_eval.std_return;
        if (report) {
            row.critic_loss = report->critic_loss;
            row.actor_loss = report->actor_loss;
        }
        row.policy_entropy = last_eval.policy_entropy;
        if (config_.flags().opponent_models) {
            row.om_kld = last_eval.average.kld;
            row.om_entropy = last_eval.average.entropy;
            row.om_accuracy = last_eval.average.accuracy;
        }
        metrics.write(row);
        if (log)
            *log << "episode " << episode_ << " update " << update_step_ << " eval return "
                 << format_metric(last_eval.mean_return) << " +- " << format_metric(last_eval.std_return) << '\n';
    };
    auto checkpoint = [&] {
        const fs::path path = out_dir / "checkpoints" / ("ckpt_" + std::to_string(update_step_) + ".bin");
        save_checkpoint(path);
        fs::copy_file(path, out_dir / "checkpoints" / "latest.bin", fs::copy_options::overwrite_existing);
    };

    if (fresh) evaluate_and_log(nullptr);
    bool evaluated_last = true;
    bool saved_last = false;
    while (episode_ < config_.episodes) {
        const UpdateReport report = iterate();
        const bool last = episode_ >= config_.episodes;
        evaluated_last = update_step_ % config_.eval_every == 0 || last;
        if (evaluated_last) evaluate_and_log(&report);
        saved_last = (config_.checkpoint_every > 0 && update_step_ % config_.checkpoint_every == 0) || last;
        if (saved_last) checkpoint();
    }
    if (!saved_last) checkpoint();

    nlohmann::ordered_json summary;
    summary["variant"] = to_string(config_.variant);
    summary["seed"] = config_.seed;
    summary["episodes"] = episode_;
    summary["update_steps"] = update_step_;
    summary["evaluations"] = eval_index_;
    if (evaluated_last && !last_eval.returns.empty()) {
        summary["final_eval_return_mean"] = last_eval.mean_return;
        summary["final_eval_return_std"] = last_eval.std_return;
    }
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

void write_blocks(ByteWriter& w, const std::vector<ParamBlock>& blocks) {
    w.u32(static_cast<std::uint32_t>(blocks.size()));
    for (const auto& b : blocks) w.block(b);
}

void read_blocks(ByteReader& r, std::vector<ParamBlock>& into) {
    if (r.u32() != into.size()) throw CheckpointError("checkpoint block count does not match the configuration");
    for (auto& b : into) restore_block(b, r.block());
}

void write_adam(ByteWriter& w, const Adam& opt) {
    w.u32(static_cast<std::uint32_t>(opt.states().size()));
    for (const auto& s : opt.states()) w.adam(s);
}

void read_adam(ByteReader& r, Adam& opt) {
    auto& states = opt.states();
    if (r.u32() != states.size()) throw CheckpointError("checkpoint optimiser state count mismatch");
    for (auto& s : states) {
        AdamState loaded = r.adam();
        if (loaded.m.size() != s.m.size() || loaded.v.size() != s.v.size() || loaded.t < 0)
            throw CheckpointError("checkpoint optimiser state shape mismatch");
        s = std::move(loaded);
    }
}

void write_cells(ByteWriter& w, const std::vector<Cell>& cells) {
    w.u32(static_cast<std::uint32_t>(cells.size()));
    for (const Cell& c : cells) {
        w.u32(static_cast<std::uint32_t>(c.row));
        w.u32(static_cast<std::uint32_t>(c.col));
    }
}

std::vector<Cell> read_cells(ByteReader& r) {
    std::vector<Cell> cells(r.u32());
    for (Cell& c : cells) {
        c.row = static_cast<int>(r.u32());
        c.col = static_cast<int>(r.u32());
    }
    return cells;
}

}  // namespace

std::string Trainer::serialize() const {
    ByteWriter w;
    w.str(serialize_config(config_));
    w.str(to_string(config_.variant));
    w.i64(episode_);
    w.i64(update_step_);
    w.i64(eval_index_);

    w.u32(static_cast<std::uint32_t>(agents_.size()));
    for (const Agent& a : agents_) {
        write_blocks(w, a.policy.net().params());
        w.u32(static_cast<std::uint32_t>(a.models.size()));
        for (const auto& m : a.models) write_blocks(w, m.net().params());
        write_blocks(w, a.critic.net().params());
        write_adam(w, a.policy_opt);
        for (const auto& opt : a.model_opts) write_adam(w, opt);
        write_adam(w, a.critic_opt);
    }

    w.u32(static_cast<std::uint32_t>(slots_.size()));
    for (const EnvSlot& s : slots_) {
        w.str(s.env_rng.state());
        w.str(s.act_rng.state());
        w.u8(s.state ? 1 : 0);
        if (s.state) {
            write_cells(w, s.state->predators);
            write_cells(w, s.state->preys);
            w.u32(static_cast<std::uint32_t>(s.state->prey_alive.size()));
            for (bool alive : s.state->prey_alive) w.u8(alive ? 1 : 0);
            w.i64(s.state->step_count);
        }
        w.f64(s.episode_return);
        w.u64(s.steps_in_episode);
    }
    return w.bytes();
}

Trainer Trainer::deserialize(const std::string& payload) {
    ByteReader r(payload);
    TrainConfig config = parse_config_text(r.str(), "<checkpoint config>");
    if (r.str() != to_string(config.variant)) throw CheckpointError("checkpoint variant does not match its config");
    Trainer t(std::move(config), Restoring{});
    t.episode_ = r.i64();
    t.update_step_ = r.i64();
    t.eval_index_ = r.i64();

    if (r.u32() != t.agents_.size()) throw CheckpointError("checkpoint agent count does not match the configuration");
    for (Agent& a : t.agents_) {
        read_blocks(r, a.policy.net().params());
        if (r.u32() != a.models.size()) throw CheckpointError("checkpoint opponent-model count mismatch");
        for (auto& m : a.models) read_blocks(r, m.net().params());
        read_blocks(r, a.critic.net().params());
        read_adam(r, a.policy_opt);
        for (auto& opt : a.model_opts) read_adam(r, opt);
        read_adam(r, a.critic_opt);
    }

    if (r.u32() != t.slots_.size()) throw CheckpointError("checkpoint environment count mismatch");
    for (EnvSlot& s : t.slots_) {
        try {
            s.env_rng.set_state(r.str());
            s.act_rng.set_state(r.str());
        } catch (const std::exception&) {
            throw CheckpointError("checkpoint random-stream state is malformed");
        }
        if (r.u8()) {
            GridState g;
            g.predators = read_cells(r);
            g.preys = read_cells(r);
            const std::uint32_t n = r.u32();
            for (std::uint32_t k = 0; k < n; ++k) g.prey_alive.push_back(r.u8() != 0);
            g.step_count = static_cast<int>(r.i64());
            s.state = std::move(g);
        }
        s.episode_return = r.f64();
        s.steps_in_episode = r.u64();
    }
    if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
    return t;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const { write_checkpoint_file(path, serialize()); }

Trainer Trainer::from_checkpoint(const std::filesystem::path& path) {
    return deserialize(read_checkpoint_file(path));
}

}  // namespace domac
