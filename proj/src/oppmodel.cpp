#include "domac/oppmodel.hpp"

#include <cmath>

namespace domac {

OpponentModel::OpponentModel(int obs_dim, int n_opponents, int opponent_id, int output_dim, std::vector<int> hidden,
                             Activation activation, const std::string& name)
    : obs_dim_(obs_dim),
      n_opponents_(n_opponents),
      opponent_id_(opponent_id),
      net_(MlpSpec{obs_dim + n_opponents, std::move(hidden), output_dim, activation}, name) {
    if (output_dim < 2) throw ConfigError("opponent model output dimension must be >= 2");
    if (opponent_id < 0 || opponent_id >= n_opponents) throw ConfigError("opponent id out of range");
}

OpponentModel OpponentModel::initialized(int obs_dim, int n_opponents, int opponent_id, int output_dim,
                                         std::vector<int> hidden, Activation activation, const std::string& name,
                                         Rng& rng) {
    OpponentModel m(obs_dim, n_opponents, opponent_id, output_dim, std::move(hidden), activation, name);
    init_mlp_params(m.net_.spec(), m.net_.params(), rng);
    return m;
}

RowMatrix OpponentModel::network_input(const Eigen::Ref<const RowMatrix>& observations) const {
    if (observations.cols() != obs_dim_)
        throw ConfigError("opponent model: observation has " + std::to_string(observations.cols()) +
                          " entries, expected " + std::to_string(obs_dim_));
    RowMatrix input = RowMatrix::Zero(observations.rows(), obs_dim_ + n_opponents_);
    input.leftCols(obs_dim_) = observations;
    input.col(obs_dim_ + opponent_id_).setOnes();
    return input;
}

VectorXd OpponentModel::predict(const Eigen::Ref<const VectorXd>& observation) const {
    RowMatrix row = observation.transpose();
    return predict_batch(row).row(0).transpose();
}

RowMatrix OpponentModel::predict_batch(const Eigen::Ref<const RowMatrix>& observations) const {
    return softmax_rows(net_.forward(network_input(observations)).output);
}

std::int64_t joint_action_count(std::span<const int> dims, std::int64_t cap) {
    std::int64_t n = 1;
    for (int d : dims) {
        n *= d;
        if (n > cap)
            throw ConfigError("joint action space exceeds the enumeration cap of " + std::to_string(cap) +
                              "; use sampled marginalisation (sample_joint) instead");
    }
    return n;
}

JointActions enumerate_joint_actions(std::span<const int> dims, std::int64_t cap) {
    const std::int64_t n = joint_action_count(dims, cap);
    const int p = static_cast<int>(dims.size());
    JointActions table(n, p);
    for (std::int64_t idx = 0; idx < n; ++idx) {
        std::int64_t rest = idx;
        for (int k = p - 1; k >= 0; --k) {
            table(idx, k) = static_cast<int>(rest % dims[k]);
            rest /= dims[k];
        }
    }
    return table;
}

namespace {

std::vector<VectorXd> predict_all(std::span<const OpponentModel> models, const Eigen::Ref<const VectorXd>& obs) {
    std::vector<VectorXd> dists;
    dists.reserve(models.size());
    for (const auto& m : models) dists.push_back(m.predict(obs));
    return dists;
}

JointPredictionSample make_sample(const std::vector<VectorXd>& dists, std::vector<int> actions) {
    JointPredictionSample s;
    s.actions = std::move(actions);
    s.weight = 1.0;
    for (std::size_t k = 0; k < dists.size(); ++k) {
        const double p = dists[k](s.actions[k]);
        s.weight *= p;
        s.log_probs.push_back(std::log(p));
    }
    return s;
}

}  // namespace

std::vector<JointPredictionSample> sample_joint(std::span<const OpponentModel> models,
                                                const Eigen::Ref<const VectorXd>& observation, int l, Rng& rng) {
    if (l < 1) throw ConfigError("sample_joint: l must be >= 1");
    const auto dists = predict_all(models, observation);
    std::vector<JointPredictionSample> samples;
    samples.reserve(l);
    for (int s = 0; s < l; ++s) {
        std::vector<int> actions;
        actions.reserve(dists.size());
        for (const auto& d : dists) actions.push_back(rng.categorical(d));
        samples.push_back(make_sample(dists, std::move(actions)));
    }
    return samples;
}

std::vector<JointPredictionSample> enumerate_joint(std::span<const OpponentModel> models,
                                                   const Eigen::Ref<const VectorXd>& observation, std::int64_t cap) {
    std::vector<int> dims;
    for (const auto& m : models) dims.push_back(m.output_dim());
    const JointActions table = enumerate_joint_actions(dims, cap);
    const auto dists = predict_all(models, observation);
    std::vector<JointPredictionSample> samples;
    samples.reserve(table.rows());
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        std::vector<int> actions(table.row(r).data(), table.row(r).data() + table.cols());
        samples.push_back(make_sample(dists, std::move(actions)));
    }
    return samples;
}

JointActions joint_actions_of(const std::vector<JointPredictionSample>& samples, int n_opponents) {
    JointActions table(static_cast<Eigen::Index>(samples.size()), n_opponents);
    for (std::size_t s = 0; s < samples.size(); ++s)
        for (int k = 0; k < n_opponents; ++k) table(static_cast<Eigen::Index>(s), k) = samples[s].actions[k];
    return table;
}

}  // namespace domac
