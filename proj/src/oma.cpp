#include "domac/oma.hpp"

#include <cmath>
#include <map>
#include <numeric>

namespace domac {

ConditionalPolicy::ConditionalPolicy(int obs_dim, std::vector<int> opponent_dims, int n_actions,
                                     std::vector<int> hidden, Activation activation, const std::string& name)
    : obs_dim_(obs_dim), opponent_dims_(std::move(opponent_dims)) {
    const int slots = std::accumulate(opponent_dims_.begin(), opponent_dims_.end(), 0);
    net_ = Mlp(MlpSpec{obs_dim_ + slots, std::move(hidden), n_actions, activation}, name);
}

ConditionalPolicy ConditionalPolicy::initialized(int obs_dim, std::vector<int> opponent_dims, int n_actions,
                                                 std::vector<int> hidden, Activation activation,
                                                 const std::string& name, Rng& rng) {
    ConditionalPolicy p(obs_dim, std::move(opponent_dims), n_actions, std::move(hidden), activation, name);
    init_mlp_params(p.net_.spec(), p.net_.params(), rng);
    return p;
}

namespace {

void write_policy_row(RowMatrix& input, Eigen::Index row, const Eigen::Ref<const VectorXd>& observation,
                      const JointActions& joint, Eigen::Index joint_row, const std::vector<int>& dims) {
    const Eigen::Index d = observation.size();
    input.row(row).head(d) = observation.transpose();
    Eigen::Index offset = d;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const int a = joint(joint_row, static_cast<Eigen::Index>(k));
        if (a < 0 || a >= dims[k]) throw ConfigError("policy input: predicted action out of range");
        input(row, offset + a) = 1.0;
        offset += dims[k];
    }
}

JointActions distinct_rows(const JointActions& joint) {
    std::map<std::vector<int>, int> seen;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < joint.rows(); ++r) {
        std::vector<int> key(joint.row(r).data(), joint.row(r).data() + joint.cols());
        if (seen.emplace(std::move(key), 0).second) keep.push_back(r);
    }
    if (static_cast<Eigen::Index>(keep.size()) == joint.rows()) return joint;
    JointActions out(static_cast<Eigen::Index>(keep.size()), joint.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = joint.row(keep[i]);
    return out;
}

}  // namespace

RowMatrix ConditionalPolicy::network_input(const Eigen::Ref<const VectorXd>& observation,
                                           const JointActions& joint) const {
    if (observation.size() != obs_dim_) throw ConfigError("policy: observation size mismatch");
    if (joint.cols() != n_opponents()) throw ConfigError("policy: joint action width mismatch");
    RowMatrix input = RowMatrix::Zero(joint.rows(), net_.spec().input_dim);
    for (Eigen::Index s = 0; s < joint.rows(); ++s) write_policy_row(input, s, observation, joint, s, opponent_dims_);
    return input;
}

RowMatrix ConditionalPolicy::conditionals(const Eigen::Ref<const VectorXd>& observation,
                                          const JointActions& joint) const {
    return softmax_rows(net_.forward(network_input(observation, joint)).output);
}

MarginalPolicyResult marginal_policy_from_joint(const ConditionalPolicy& policy,
                                                std::span<const OpponentModel> models,
                                                const Eigen::Ref<const VectorXd>& observation,
                                                const JointActions& joint, Aggregation mode) {
    if (static_cast<int>(models.size()) != policy.n_opponents())
        throw ConfigError("marginal policy: opponent model count does not match policy");
    if (joint.rows() < 1) throw ConfigError("marginal policy: no joint predictions");

    MarginalPolicyResult result;
    result.mode = mode;
    result.joint_actions = distinct_rows(joint);
    const Eigen::Index n = result.joint_actions.rows();

    result.weights = VectorXd::Ones(n);
    for (std::size_t k = 0; k < models.size(); ++k) {
        const VectorXd mu = models[k].predict(observation);
        for (Eigen::Index s = 0; s < n; ++s) result.weights(s) *= mu(result.joint_actions(s, static_cast<Eigen::Index>(k)));
    }
    result.conditionals = policy.conditionals(observation, result.joint_actions);
    result.distribution = (result.conditionals.transpose() * result.weights) / result.weights.sum();
    return result;
}

MarginalPolicyResult marginal_policy_exact(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                                           const Eigen::Ref<const VectorXd>& observation, std::int64_t cap) {
    std::vector<int> dims;
    for (const auto& m : models) dims.push_back(m.output_dim());
    return marginal_policy_from_joint(policy, models, observation, enumerate_joint_actions(dims, cap),
                                      Aggregation::Exact);
}

MarginalPolicyResult marginal_policy_sampled(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                                             const Eigen::Ref<const VectorXd>& observation, int l, Rng& rng) {
    const auto samples = sample_joint(models, observation, l, rng);
    return marginal_policy_from_joint(policy, models, observation,
                                      joint_actions_of(samples, static_cast<int>(models.size())),
                                      Aggregation::Sampled);
}

SampledAction sample_action(const MarginalPolicyResult& result, Rng& rng) {
    const int a = rng.categorical(result.distribution);
    return {a, std::log(result.distribution(a))};
}

double entropy(const Eigen::Ref<const VectorXd>& distribution) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < distribution.size(); ++i) {
        const double p = distribution(i);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// ---------------------------------------------------------------------------
// batched actor pass

namespace {

struct ActorPass {
    std::vector<ForwardCache> opponent_caches;
    std::vector<RowMatrix> opponent_probs;  // per model: T x d_k
    ForwardCache policy_cache;
    RowMatrix policy_probs;                 // R x A
    std::vector<Eigen::Index> offsets;      // T + 1 row offsets into policy rows
    std::vector<JointActions> joints;       // one shared table (exact) or one per transition
    VectorXd weights;                       // R
    VectorXd weight_sums;                   // T
    RowMatrix marginals;                    // T x A

    const JointActions& joint(Eigen::Index t) const { return joints.size() == 1 ? joints[0] : joints[t]; }
};

ActorPass forward_pass(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                       const ActorBatch& batch, std::int64_t cap) {
    const Eigen::Index T = batch.size();
    if (T == 0) throw ConfigError("actor batch is empty");
    if (static_cast<Eigen::Index>(batch.actions.size()) != T) throw ConfigError("actor batch: action count mismatch");
    if (static_cast<int>(models.size()) != policy.n_opponents())
        throw ConfigError("actor batch: opponent model count does not match policy");

    ActorPass pass;
    if (batch.joint_predictions.empty()) {
        pass.joints.push_back(enumerate_joint_actions(policy.opponent_dims(), cap));
    } else {
        if (static_cast<Eigen::Index>(batch.joint_predictions.size()) != T)
            throw ConfigError("actor batch: joint prediction count mismatch");
        pass.joints.reserve(T);
        for (const auto& j : batch.joint_predictions) pass.joints.push_back(distinct_rows(j));
    }

    for (const auto& m : models) {
        pass.opponent_caches.push_back(m.net().forward(m.network_input(batch.observations)));
        pass.opponent_probs.push_back(softmax_rows(pass.opponent_caches.back().output));
    }

    pass.offsets.resize(T + 1, 0);
    for (Eigen::Index t = 0; t < T; ++t) pass.offsets[t + 1] = pass.offsets[t] + pass.joint(t).rows();
    const Eigen::Index R = pass.offsets[T];

    RowMatrix input = RowMatrix::Zero(R, policy.net().spec().input_dim);
    pass.weights = VectorXd::Ones(R);
    for (Eigen::Index t = 0; t < T; ++t) {
        const JointActions& j = pass.joint(t);
        const VectorXd obs = batch.observations.row(t).transpose();
        for (Eigen::Index s = 0; s < j.rows(); ++s) {
            const Eigen::Index r = pass.offsets[t] + s;
            write_policy_row(input, r, obs, j, s, policy.opponent_dims());
            for (std::size_t k = 0; k < models.size(); ++k)
                pass.weights(r) *= pass.opponent_probs[k](t, j(s, static_cast<Eigen::Index>(k)));
        }
    }
    pass.policy_cache = policy.net().forward(input);
    pass.policy_probs = softmax_rows(pass.policy_cache.output);

    pass.weight_sums.resize(T);
    pass.marginals = RowMatrix::Zero(T, policy.n_actions());
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Index begin = pass.offsets[t];
        const Eigen::Index n = pass.offsets[t + 1] - begin;
        const auto w = pass.weights.segment(begin, n);
        pass.weight_sums(t) = w.sum();
        pass.marginals.row(t) = (w.transpose() * pass.policy_probs.middleRows(begin, n)) / pass.weight_sums(t);
    }
    return pass;
}

VectorXd taken_log_probs(const ActorPass& pass, const ActorBatch& batch) {
    VectorXd lp(batch.size());
    for (Eigen::Index t = 0; t < batch.size(); ++t) {
        const int a = batch.actions[t];
        if (a < 0 || a >= pass.marginals.cols()) throw ConfigError("actor batch: action out of range");
        lp(t) = std::log(pass.marginals(t, a));
    }
    return lp;
}

}  // namespace

VectorXd actor_coefficients(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                            const ActorBatch& batch, double alpha, std::int64_t cap) {
    const ActorPass pass = forward_pass(policy, models, batch, cap);
    if (batch.critic_values.size() != batch.size()) throw ConfigError("actor batch: critic value count mismatch");
    return (batch.critic_values.array() - alpha * taken_log_probs(pass, batch).array() - alpha).matrix();
}

double surrogate_value(const ConditionalPolicy& policy, std::span<const OpponentModel> models,
                       const ActorBatch& batch, const VectorXd& coefficients, std::int64_t cap) {
    const ActorPass pass = forward_pass(policy, models, batch, cap);
    return -(taken_log_probs(pass, batch).array() * coefficients.array()).mean();
}

ActorLossReport actor_loss(ConditionalPolicy& policy, std::span<OpponentModel> models, const ActorBatch& batch,
                           double alpha, bool opponent_grads, std::int64_t cap) {
    const ActorPass pass = forward_pass(policy, models, batch, cap);
    const Eigen::Index T = batch.size();
    if (batch.critic_values.size() != T) throw ConfigError("actor batch: critic value count mismatch");

    const VectorXd log_rho = taken_log_probs(pass, batch);
    const VectorXd coeff = (batch.critic_values.array() - alpha * log_rho.array() - alpha).matrix();

    ActorLossReport report;
    report.loss = -(log_rho.array() * coeff.array()).mean();
    if (!std::isfinite(report.loss)) throw NumericError("actor_loss: non-finite surrogate loss");
    for (Eigen::Index t = 0; t < T; ++t) report.entropy += entropy(pass.marginals.row(t).transpose());
    report.entropy /= static_cast<double>(T);

    // dL/d rho_t(a_t)
    const VectorXd g_rho = (-coeff.array() / log_rho.array().exp() / static_cast<double>(T)).matrix();

    RowMatrix g_policy = RowMatrix::Zero(pass.policy_probs.rows(), pass.policy_probs.cols());
    std::vector<RowMatrix> g_log_mu;
    for (const auto& p : pass.opponent_probs) g_log_mu.push_back(RowMatrix::Zero(p.rows(), p.cols()));

    for (Eigen::Index t = 0; t < T; ++t) {
        const int a = batch.actions[t];
        const JointActions& j = pass.joint(t);
        const double rho_a = pass.marginals(t, a);
        const double scale = g_rho(t) / pass.weight_sums(t);
        for (Eigen::Index s = 0; s < j.rows(); ++s) {
            const Eigen::Index r = pass.offsets[t] + s;
            const double w = pass.weights(r);
            g_policy(r, a) = scale * w;
            // d rho / d log w_s = w_s (pi_s(a) - rho(a)) / W
            const double g_log_w = scale * w * (pass.policy_probs(r, a) - rho_a);
            for (std::size_t k = 0; k < g_log_mu.size(); ++k) g_log_mu[k](t, j(s, static_cast<Eigen::Index>(k))) += g_log_w;
        }
    }

    policy.net().backward(pass.policy_cache, softmax_rows_backward(pass.policy_probs, g_policy));
    report.policy_grad_norm = grad_norm(policy.net().params());
    if (opponent_grads) {
        double sq = 0.0;
        for (std::size_t k = 0; k < models.size(); ++k) {
            // log-softmax backward: dz = g - mu * rowsum(g)
            const RowMatrix& mu = pass.opponent_probs[k];
            const VectorXd row_sums = g_log_mu[k].rowwise().sum();
            RowMatrix dz = g_log_mu[k] - (mu.array().colwise() * row_sums.array()).matrix();
            models[k].net().backward(pass.opponent_caches[k], dz);
            sq += std::pow(grad_norm(models[k].net().params()), 2);
        }
        report.opponent_grad_norm = std::sqrt(sq);
    }
    return report;
}

}  // namespace domac
