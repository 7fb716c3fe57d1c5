#include "domac/cdc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace domac {

VectorXd quantile_levels(int k, QuantileLevels kind) {
    if (k < 1) throw ConfigError("quantile count must be >= 1");
    VectorXd w(k);
    for (int j = 1; j <= k; ++j)
        w(j - 1) = kind == QuantileLevels::Midpoint ? (2.0 * j - 1.0) / (2.0 * k) : static_cast<double>(j) / k;
    return w;
}

CriticNet::CriticNet(int joint_obs_dim, std::vector<int> action_dims, int n_quantiles, QuantileLevels levels,
                     std::vector<int> hidden, Activation activation, const std::string& name)
    : joint_obs_dim_(joint_obs_dim),
      action_dims_(std::move(action_dims)),
      level_kind_(levels),
      levels_(quantile_levels(n_quantiles, levels)) {
    if (action_dims_.empty()) throw ConfigError("critic: team has no members");
    const int slots = std::accumulate(action_dims_.begin(), action_dims_.end(), 0);
    net_ = Mlp(MlpSpec{joint_obs_dim_ + slots, std::move(hidden), n_quantiles, activation}, name);
}

CriticNet CriticNet::initialized(int joint_obs_dim, std::vector<int> action_dims, int n_quantiles,
                                 QuantileLevels levels, std::vector<int> hidden, Activation activation,
                                 const std::string& name, Rng& rng) {
    CriticNet c(joint_obs_dim, std::move(action_dims), n_quantiles, levels, std::move(hidden), activation, name);
    init_mlp_params(c.net_.spec(), c.net_.params(), rng);
    return c;
}

RowMatrix CriticNet::network_input(const Eigen::Ref<const RowMatrix>& joint_obs,
                                   const JointActions& joint_actions) const {
    if (joint_obs.cols() != joint_obs_dim_) throw ConfigError("critic: joint observation width mismatch");
    if (joint_actions.cols() != static_cast<Eigen::Index>(action_dims_.size()))
        throw ConfigError("critic: joint action width mismatch");
    if (joint_actions.rows() != joint_obs.rows()) throw ConfigError("critic: batch size mismatch");
    RowMatrix input = RowMatrix::Zero(joint_obs.rows(), net_.spec().input_dim);
    input.leftCols(joint_obs_dim_) = joint_obs;
    for (Eigen::Index b = 0; b < joint_obs.rows(); ++b) {
        Eigen::Index offset = joint_obs_dim_;
        for (std::size_t i = 0; i < action_dims_.size(); ++i) {
            const int a = joint_actions(b, static_cast<Eigen::Index>(i));
            if (a < 0 || a >= action_dims_[i]) throw ConfigError("critic: action out of range");
            input(b, offset + a) = 1.0;
            offset += action_dims_[i];
        }
    }
    return input;
}

JointActions greedy_joint_action(const CriticNet& net, const Eigen::Ref<const RowMatrix>& joint_obs,
                                 std::int64_t cap) {
    const JointActions all = enumerate_joint_actions(net.action_dims(), cap);
    const Eigen::Index n_joint = all.rows();
    const Eigen::Index batch = joint_obs.rows();
    const Eigen::Index chunk = std::max<Eigen::Index>(1, 65536 / n_joint);

    JointActions best(batch, all.cols());
    for (Eigen::Index start = 0; start < batch; start += chunk) {
        const Eigen::Index rows = std::min(chunk, batch - start);
        RowMatrix obs(rows * n_joint, joint_obs.cols());
        JointActions acts(rows * n_joint, all.cols());
        for (Eigen::Index b = 0; b < rows; ++b) {
            obs.middleRows(b * n_joint, n_joint) = joint_obs.row(start + b).replicate(n_joint, 1);
            acts.middleRows(b * n_joint, n_joint) = all;
        }
        const VectorXd means = net.forward(obs, acts).rowwise().mean();
        for (Eigen::Index b = 0; b < rows; ++b) {
            Eigen::Index arg = 0;
            // first maximum wins
            means.segment(b * n_joint, n_joint).maxCoeff(&arg);
            best.row(start + b) = all.row(arg);
        }
    }
    return best;
}

RowMatrix bellman_target(const CriticNet& net, const VectorXd& rewards, const std::vector<bool>& done,
                         const Eigen::Ref<const RowMatrix>& next_joint_obs, double gamma, std::int64_t cap) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("bellman_target: gamma must lie in [0, 1)");
    const Eigen::Index batch = rewards.size();
    if (static_cast<Eigen::Index>(done.size()) != batch || next_joint_obs.rows() != batch)
        throw ConfigError("bellman_target: batch size mismatch");
    const int k = net.n_quantiles();
    RowMatrix target = rewards.replicate(1, k);
    if (gamma == 0.0) return target;

    std::vector<Eigen::Index> live;
    for (Eigen::Index b = 0; b < batch; ++b)
        if (!done[b]) live.push_back(b);
    if (live.empty()) return target;

    RowMatrix obs(static_cast<Eigen::Index>(live.size()), next_joint_obs.cols());
    for (std::size_t i = 0; i < live.size(); ++i) obs.row(static_cast<Eigen::Index>(i)) = next_joint_obs.row(live[i]);
    const RowMatrix next = net.forward(obs, greedy_joint_action(net, obs, cap));
    for (std::size_t i = 0; i < live.size(); ++i) target.row(live[i]) += gamma * next.row(static_cast<Eigen::Index>(i));
    return target;
}

double huber(double u, double kappa) {
    const double a = std::abs(u);
    return a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
}

double quantile_huber(double u, double omega, double kappa) {
    return std::abs(omega - (u <= 0.0 ? 1.0 : 0.0)) * huber(u, kappa);
}

LossAndGrad quantile_huber_loss(const Eigen::Ref<const RowMatrix>& predicted,
                                const Eigen::Ref<const RowMatrix>& target, double kappa, const VectorXd& levels) {
    if (!(kappa > 0.0)) throw ConfigError("quantile_huber_loss: kappa must be positive");
    if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
        throw ConfigError("quantile_huber_loss: prediction and target shapes differ");
    if (predicted.cols() != levels.size()) throw ConfigError("quantile_huber_loss: level count mismatch");
    const Eigen::Index batch = predicted.rows();
    if (batch == 0) throw ConfigError("quantile_huber_loss: empty batch");
    const Eigen::Index k = predicted.cols();
    const double scale = 1.0 / (static_cast<double>(k * k) * static_cast<double>(batch));

    LossAndGrad out;
    out.grad = RowMatrix::Zero(batch, k);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double g = predicted(b, j);
            for (Eigen::Index jt = 0; jt < k; ++jt) {
                const double u = target(b, jt) - g;
                const double w = std::abs(levels(j) - (u <= 0.0 ? 1.0 : 0.0));
                out.value += w * huber(u, kappa);
                const double dhuber = std::abs(u) <= kappa ? u : (u > 0.0 ? kappa : -kappa);
                out.grad(b, j) -= w * dhuber;
            }
        }
    }
    out.value *= scale;
    out.grad *= scale;
    if (!std::isfinite(out.value)) throw NumericError("quantile_huber_loss: non-finite loss");
    return out;
}

LossAndGrad squared_td_loss(const Eigen::Ref<const RowMatrix>& predicted, const Eigen::Ref<const RowMatrix>& target) {
    if (predicted.cols() != 1 || target.cols() != 1) throw ConfigError("squared_td_loss: expects a single value column");
    if (predicted.rows() != target.rows()) throw ConfigError("squared_td_loss: batch size mismatch");
    if (predicted.rows() == 0) throw ConfigError("squared_td_loss: empty batch");
    const double n = static_cast<double>(predicted.rows());
    const RowMatrix diff = predicted - target;
    LossAndGrad out;
    out.value = diff.squaredNorm() / n;
    out.grad = 2.0 * diff / n;
    if (!std::isfinite(out.value)) throw NumericError("squared_td_loss: non-finite loss");
    return out;
}

double scalar_critic_loss(CriticNet& net, const Eigen::Ref<const RowMatrix>& joint_obs,
                          const JointActions& joint_actions, const VectorXd& rewards, const std::vector<bool>& done,
                          const Eigen::Ref<const RowMatrix>& next_joint_obs, double gamma, std::int64_t cap) {
    if (net.n_quantiles() != 1) throw ConfigError("scalar_critic_loss requires a critic with K = 1");
    const RowMatrix target = bellman_target(net, rewards, done, next_joint_obs, gamma, cap);
    const ForwardCache cache = net.forward_cache(joint_obs, joint_actions);
    const LossAndGrad loss = squared_td_loss(cache.output, target);
    net.net().backward(cache, loss.grad);
    return loss.value;
}

}  // namespace domac
