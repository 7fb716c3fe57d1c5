#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "domac/cdc.hpp"
#include "domac/env.hpp"
#include "domac/metrics.hpp"
#include "domac/oma.hpp"
#include "domac/oppmodel.hpp"

namespace domac {

enum class Variant { DOMAC, MAAC, OMAC, DMAC, UB };

struct VariantFlags {
    bool opponent_models = false;
    bool distributional = false;
    bool true_opponent_actions = false;
};

VariantFlags variant_flags(Variant v);
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

/// How the opponent models are treated during training.
enum class OpponentModelMode {
    Learned,
    /// randomly initialised and never updated
    FrozenRandom,
    /// loaded from another run's checkpoint and never updated
    FrozenTrained,
};

std::string_view to_string(OpponentModelMode m);
OpponentModelMode parse_opponent_model_mode(std::string_view name);

std::string_view to_string(QuantileLevels q);
QuantileLevels parse_quantile_levels(std::string_view name);

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct TrainConfig {
    Variant variant = Variant::DOMAC;
    /// pp2v1 or pp4v2; selects the grid defaults and the opponent sample size
    std::string preset = "pp2v1";
    GridConfig env = GridConfig::pp2v1();
    std::uint64_t seed = 0;
    std::int64_t episodes = 15000;

    int episodes_per_update = 10;
    /// > 0 switches to fixed windows of this many steps per environment
    int forward_steps = 0;
    int n_envs = 1;

    double gamma = 0.95;
    double alpha = 0.01;
    double kappa = 1.0;
    int n_quantiles = 5;
    QuantileLevels quantile_levels = QuantileLevels::Midpoint;
    /// joint opponent samples per decision; 0 enumerates every joint action
    int opponent_samples = 0;
    std::int64_t enumeration_cap = kDefaultEnumerationCap;
    int critic_steps = 1;

    double lr_actor = 2.5e-4;
    double lr_opponent = 2.5e-4;
    double lr_critic = 1e-4;

    std::vector<int> hidden{64, 64, 64};
    Activation activation = Activation::Tanh;

    int om_dim = kNumActions;
    OpponentModelMode om_mode = OpponentModelMode::Learned;
    std::string om_checkpoint;

    /// in update steps
    int eval_every = 100;
    int eval_episodes = 100;
    int checkpoint_every = 100;
    bool record_wall_time = false;

    /// Applies a named preset's grid and sample-size defaults.
    void apply_preset(std::string_view name);
    void validate() const;

    VariantFlags flags() const { return variant_flags(variant); }
    /// K for the critic; scalar-critic variants always use 1.
    int critic_quantiles() const { return flags().distributional ? n_quantiles : 1; }
    int n_opponents() const { return flags().opponent_models ? env.n_preys : 0; }

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// One controlled predator: its actor, its opponent models and its critic,
/// each with its own optimiser.
struct Agent {
    ConditionalPolicy policy;
    std::vector<OpponentModel> models;
    CriticNet critic;
    Adam policy_opt;
    std::vector<Adam> model_opts;
    Adam critic_opt;

    std::uint64_t policy_hash() const { return parameter_hash(policy.net().params()); }
    std::uint64_t opponent_model_hash() const;
    std::uint64_t critic_hash() const { return parameter_hash(critic.net().params()); }
};

/// Fresh agents on streams derived from config.seed. With load_frozen set, a
/// FrozenTrained config pulls its opponent models from config.om_checkpoint.
std::vector<Agent> make_agents(const TrainConfig& config, bool load_frozen = true);

/// Replaces every agent's opponent models with those stored in a checkpoint.
void load_opponent_models(std::vector<Agent>& agents, const std::filesystem::path& checkpoint);

struct Decision {
    int action = 0;
    double log_prob = 0.0;
    /// joint predictions fed to the policy; empty when they were enumerated
    JointActions joint;
    double entropy = 0.0;
};

/// Samples an action from the agent's marginal policy. `true_opponent_actions`
/// is only read by the UB variant.
Decision act(const Agent& agent, const VectorXd& observation, const TrainConfig& config,
             const std::vector<Action>& true_opponent_actions, Rng& rng);

/// Transitions of one update window. Holds predator data only.
struct TrajectoryBatch {
    std::vector<RowMatrix> observations;       // per agent [T x obs]
    std::vector<RowMatrix> next_observations;  // per agent [T x obs]
    RowMatrix joint_observations;              // [T x n*obs]
    RowMatrix next_joint_observations;
    JointActions actions;                      // [T x n]
    VectorXd rewards;
    std::vector<bool> done;
    std::vector<VectorXd> log_probs;           // per agent
    /// per agent, per step; empty when no sampled predictions were made
    std::vector<std::vector<JointActions>> joint_predictions;
    std::vector<std::size_t> episode_starts;
    std::vector<double> episode_returns;       // completed episodes only
    std::int64_t episodes_completed = 0;

    Eigen::Index size() const { return rewards.size(); }
};

/// A rollout slot: one environment with its own random streams and, in
/// fixed-window mode, the episode it is in the middle of.
struct EnvSlot {
    Rng env_rng;
    Rng act_rng;
    std::optional<GridState> state;
    double episode_return = 0.0;
    std::size_t steps_in_episode = 0;

    friend bool operator==(const EnvSlot&, const EnvSlot&) = default;
};

std::vector<EnvSlot> make_env_slots(const TrainConfig& config);

/// One update window under the current parameters. With several slots the
/// rollouts run on separate threads and are concatenated in slot order.
TrajectoryBatch collect(const PredatorPrey& env, std::vector<EnvSlot>& slots, const std::vector<Agent>& agents,
                        const TrainConfig& config);

struct UpdateReport {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double entropy = 0.0;
    double policy_grad_norm = 0.0;
    double opponent_grad_norm = 0.0;
    std::vector<double> agent_critic_loss;
    std::vector<double> agent_actor_loss;
};

/// Per agent: critic step(s) on the whole batch, then the actor and opponent
/// models together against the refreshed critic.
UpdateReport update(std::vector<Agent>& agents, const TrajectoryBatch& batch, const TrainConfig& config);

/// Critic loss of every agent on a batch, without touching parameters.
std::vector<double> critic_losses(const std::vector<Agent>& agents, const TrajectoryBatch& batch,
                                  const TrainConfig& config);

struct EvalRecord {
    double mean_return = 0.0;
    double std_return = 0.0;
    std::vector<double> returns;
    double policy_entropy = 0.0;
    std::vector<OpponentDiagnostics> diagnostics;
    OpponentDiagnostics average;
};

/// Rolls out n_episodes with sampled actions on streams derived from `seed`.
/// Parameters are only read.
EvalRecord evaluate(const std::vector<Agent>& agents, const TrainConfig& config, int n_episodes,
                    std::uint64_t seed, TrajectoryDump* dump = nullptr);

/// The whole training state: config, agents with optimisers, rollout slots and counters.
class Trainer {
public:
    explicit Trainer(TrainConfig config);

    static Trainer from_checkpoint(const std::filesystem::path& path);
    void save_checkpoint(const std::filesystem::path& path) const;

    std::string serialize() const;
    static Trainer deserialize(const std::string& payload);

    /// Trains into out_dir until the episode budget is spent. Resumed trainers
    /// continue the metrics file from their checkpoint.
    void run(const std::filesystem::path& out_dir, std::ostream* log = nullptr);

    /// One collect + update.
    UpdateReport iterate();

    EvalRecord evaluate_now() const;

    /// Raises or lowers the episode budget, e.g. to extend a resumed run.
    void set_episode_budget(std::int64_t episodes);

    const TrainConfig& config() const { return config_; }
    std::vector<Agent>& agents() { return agents_; }
    const std::vector<Agent>& agents() const { return agents_; }
    const std::vector<EnvSlot>& slots() const { return slots_; }
    std::int64_t episode() const { return episode_; }
    std::int64_t update_step() const { return update_step_; }
    std::int64_t eval_index() const { return eval_index_; }

private:
    struct Restoring {};
    Trainer(TrainConfig config, Restoring);

    TrainConfig config_;
    PredatorPrey env_;
    std::vector<Agent> agents_;
    std::vector<EnvSlot> slots_;
    std::int64_t episode_ = 0;
    std::int64_t update_step_ = 0;
    std::int64_t eval_index_ = 0;
};

}  // namespace domac
