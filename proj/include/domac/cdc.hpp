#pragma once

#include <string>
#include <vector>

#include "domac/diffcore.hpp"
#include "domac/oppmodel.hpp"

namespace domac {

/// Midpoint: (2j-1)/(2K). Endpoint: j/K.
enum class QuantileLevels { Midpoint, Endpoint };

VectorXd quantile_levels(int k, QuantileLevels kind);

/// Quantile critic over the team's joint observation and joint action. Input
/// layout: the concatenated observations, then one one-hot slot per team member
/// in agent order. Output: K quantile values.
class CriticNet {
public:
    CriticNet() = default;
    CriticNet(int joint_obs_dim, std::vector<int> action_dims, int n_quantiles, QuantileLevels levels,
              std::vector<int> hidden, Activation activation, const std::string& name);

    static CriticNet initialized(int joint_obs_dim, std::vector<int> action_dims, int n_quantiles,
                                 QuantileLevels levels, std::vector<int> hidden, Activation activation,
                                 const std::string& name, Rng& rng);

    int joint_obs_dim() const { return joint_obs_dim_; }
    int n_quantiles() const { return net_.spec().output_dim; }
    const std::vector<int>& action_dims() const { return action_dims_; }
    const VectorXd& levels() const { return levels_; }
    QuantileLevels level_kind() const { return level_kind_; }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    RowMatrix network_input(const Eigen::Ref<const RowMatrix>& joint_obs, const JointActions& joint_actions) const;

    ForwardCache forward_cache(const Eigen::Ref<const RowMatrix>& joint_obs, const JointActions& joint_actions) const {
        return net_.forward(network_input(joint_obs, joint_actions));
    }
    /// [batch x K]
    RowMatrix forward(const Eigen::Ref<const RowMatrix>& joint_obs, const JointActions& joint_actions) const {
        return forward_cache(joint_obs, joint_actions).output;
    }

private:
    int joint_obs_dim_ = 0;
    std::vector<int> action_dims_;
    QuantileLevels level_kind_ = QuantileLevels::Midpoint;
    VectorXd levels_;
    Mlp net_;
};

/// Row b: the joint action maximising the mean quantile at joint_obs.row(b).
/// Ties go to the lowest enumeration index.
JointActions greedy_joint_action(const CriticNet& net, const Eigen::Ref<const RowMatrix>& joint_obs,
                                 std::int64_t cap = kDefaultEnumerationCap);

/// Row b: r_b + gamma * G(o'_b, a*_b), or r_b in every slot when done_b.
/// Plain values; nothing here is differentiated.
RowMatrix bellman_target(const CriticNet& net, const VectorXd& rewards, const std::vector<bool>& done,
                         const Eigen::Ref<const RowMatrix>& next_joint_obs, double gamma,
                         std::int64_t cap = kDefaultEnumerationCap);

struct LossAndGrad {
    double value = 0.0;
    /// dL/d(predicted), co-shaped with the prediction
    RowMatrix grad;
};

/// Huber loss L_kappa(u).
double huber(double u, double kappa);

/// |omega - 1[u <= 0]| * L_kappa(u).
double quantile_huber(double u, double omega, double kappa);

/// Mean over rows of (1/K^2) sum_{j,j'} rho_{omega_j}(target_{j'} - predicted_j).
LossAndGrad quantile_huber_loss(const Eigen::Ref<const RowMatrix>& predicted,
                                const Eigen::Ref<const RowMatrix>& target, double kappa, const VectorXd& levels);

/// Mean over rows of (Q - y)^2 for single-column inputs.
LossAndGrad squared_td_loss(const Eigen::Ref<const RowMatrix>& predicted, const Eigen::Ref<const RowMatrix>& target);

/// (Q(o,a) - [r + gamma (1-done) max_a' Q(o',a')])^2 averaged over the batch,
/// with gradients accumulated into the critic. Only for K = 1.
double scalar_critic_loss(CriticNet& net, const Eigen::Ref<const RowMatrix>& joint_obs,
                          const JointActions& joint_actions, const VectorXd& rewards, const std::vector<bool>& done,
                          const Eigen::Ref<const RowMatrix>& next_joint_obs, double gamma,
                          std::int64_t cap = kDefaultEnumerationCap);

}  // namespace domac
