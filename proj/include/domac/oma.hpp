#pragma once

#include <span>
#include <string>
#include <vector>

#include "domac/diffcore.hpp"
#include "domac/oppmodel.hpp"

namespace domac {

/// pi(a | predicted opponent actions, o). Network input layout: the observation,
/// then one one-hot slot of width d_k per opponent k in opponent-index order.
/// With no opponents the policy conditions on the observation alone.
class ConditionalPolicy {
public:
    ConditionalPolicy() = default;
    ConditionalPolicy(int obs_dim, std::vector<int> opponent_dims, int n_actions, std::vector<int> hidden,
                      Activation activation, const std::string& name);

    static ConditionalPolicy initialized(int obs_dim, std::vector<int> opponent_dims, int n_actions,
                                         std::vector<int> hidden, Activation activation, const std::string& name,
                                         Rng& rng);

    int obs_dim() const { return obs_dim_; }
    int n_actions() const { return net_.spec().output_dim; }
    int n_opponents() const { return static_cast<int>(opponent_dims_.size()); }
    const std::vector<int>& opponent_dims() const { return opponent_dims_; }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    /// One row per joint action, all sharing `observation`.
    RowMatrix network_input(const Eigen::Ref<const VectorXd>& observation, const JointActions& joint) const;

    /// Row s holds pi(. | joint.row(s), observation).
    RowMatrix conditionals(const Eigen::Ref<const VectorXd>& observation, const JointActions& joint) const;

private:
    int obs_dim_ = 0;
    std::vector<int> opponent_dims_;
    Mlp net_;
};

enum class Aggregation { Exact, Sampled };

struct MarginalPolicyResult {
    VectorXd distribution;
    /// distinct joint predictions that entered the mixture
    JointActions joint_actions;
    RowMatrix conditionals;
    /// unnormalised weights prod_k mu_k(a_k | o)
    VectorXd weights;
    Aggregation mode = Aggregation::Exact;
};

/// Mixture over the given joint predictions: rho(a) = sum_s pi(a|s,o) w_s / sum_s w_s.
/// Repeated joint actions enter once, so an exhaustive list reproduces the
/// exact marginal and the estimate converges to it as the sample grows.
MarginalPolicyResult marginal_policy_from_joint(const ConditionalPolicy& policy,
                                                std::span<const OpponentModel> models,
                                                const Eigen::Ref<const VectorXd>& observation,
                                                const JointActions& joint, Aggregation mode);

MarginalPolicyResult marginal_policy_exact(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                                           const Eigen::Ref<const VectorXd>& observation,
                                           std::int64_t cap = kDefaultEnumerationCap);

MarginalPolicyResult marginal_policy_sampled(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                                             const Eigen::Ref<const VectorXd>& observation, int l, Rng& rng);

struct SampledAction {
    int action = 0;
    double log_prob = 0.0;
};

SampledAction sample_action(const MarginalPolicyResult& result, Rng& rng);

double entropy(const Eigen::Ref<const VectorXd>& distribution);
inline double policy_entropy(const MarginalPolicyResult& result) { return entropy(result.distribution); }

/// Transitions of one agent for the actor update.
struct ActorBatch {
    RowMatrix observations;
    std::vector<int> actions;
    /// Qhat_t, the mean of the critic quantiles at (o_t, a_t); treated as constant.
    VectorXd critic_values;
    /// Joint predictions used at acting time, one table per transition. Empty
    /// means exact enumeration over the opponent models' output spaces.
    std::vector<JointActions> joint_predictions;

    Eigen::Index size() const { return observations.rows(); }
};

struct ActorLossReport {
    double loss = 0.0;
    /// mean entropy of the marginal policy over the batch
    double entropy = 0.0;
    double policy_grad_norm = 0.0;
    double opponent_grad_norm = 0.0;
};

/// Minimises L = -mean_t ln rho(a_t|o_t) * c_t with the stop-gradient coefficient
/// c_t = Qhat_t - alpha ln rho(a_t|o_t) - alpha. One backward pass accumulates the
/// gradients for the policy and (when opponent_grads is set) every opponent model.
ActorLossReport actor_loss(ConditionalPolicy& policy, std::span<OpponentModel> models, const ActorBatch& batch,
                           double alpha, bool opponent_grads = true, std::int64_t cap = kDefaultEnumerationCap);

/// c_t for every transition under the current parameters.
VectorXd actor_coefficients(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                            const ActorBatch& batch, double alpha, std::int64_t cap = kDefaultEnumerationCap);

/// -mean_t ln rho(a_t|o_t) * coefficients_t, no gradients. The finite-difference
/// reference for actor_loss when the coefficients are held fixed.
double surrogate_value(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                       const ActorBatch& batch, const VectorXd& coefficients,
                       std::int64_t cap = kDefaultEnumerationCap);

}  // namespace domac
