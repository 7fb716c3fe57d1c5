#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "domac/diffcore.hpp"

namespace domac {

/// One joint opponent action per row, one column per opponent.
using JointActions = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::int64_t kDefaultEnumerationCap = 10000;

/// Imaginary model of one opponent held by one controlled agent. Input is the
/// agent's own observation followed by a one-hot opponent id; output is a
/// distribution over `output_dim` predicted opponent actions.
class OpponentModel {
public:
    OpponentModel() = default;
    OpponentModel(int obs_dim, int n_opponents, int opponent_id, int output_dim, std::vector<int> hidden,
                  Activation activation, const std::string& name);

    static OpponentModel initialized(int obs_dim, int n_opponents, int opponent_id, int output_dim,
                                     std::vector<int> hidden, Activation activation, const std::string& name,
                                     Rng& rng);

    int obs_dim() const { return obs_dim_; }
    int output_dim() const { return net_.spec().output_dim; }
    int opponent_id() const { return opponent_id_; }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    /// [batch x obs_dim] -> [batch x (obs_dim + n_opponents)]
    RowMatrix network_input(const Eigen::Ref<const RowMatrix>& observations) const;

    VectorXd predict(const Eigen::Ref<const VectorXd>& observation) const;
    /// Row-wise distributions for a batch of observations.
    RowMatrix predict_batch(const Eigen::Ref<const RowMatrix>& observations) const;

private:
    int obs_dim_ = 0;
    int n_opponents_ = 0;
    int opponent_id_ = 0;
    Mlp net_;
};

struct JointPredictionSample {
    std::vector<int> actions;
    /// product over opponents of the predicted probability of actions[k]
    double weight = 1.0;
    std::vector<double> log_probs;
};

/// Every joint action over the given per-opponent action counts, in
/// lexicographic order (opponent 0 most significant). Zero opponents yields a
/// single empty joint action.
JointActions enumerate_joint_actions(std::span<const int> dims, std::int64_t cap = kDefaultEnumerationCap);

/// Number of joint actions, or throws ConfigError when it exceeds cap.
std::int64_t joint_action_count(std::span<const int> dims, std::int64_t cap = kDefaultEnumerationCap);

std::vector<JointPredictionSample> sample_joint(std::span<const OpponentModel> models,
                                                const Eigen::Ref<const VectorXd>& observation, int l, Rng& rng);

std::vector<JointPredictionSample> enumerate_joint(std::span<const OpponentModel> models,
                                                   const Eigen::Ref<const VectorXd>& observation,
                                                   std::int64_t cap = kDefaultEnumerationCap);

/// Joint action table of a sample list (rows in sample order).
JointActions joint_actions_of(const std::vector<JointPredictionSample>& samples, int n_opponents);

}  // namespace domac
