#include "domac/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "domac/cdc.hpp"
#include "domac/env.hpp"
#include "domac/oma.hpp"

namespace domac {

namespace {

std::vector<int> random_hidden(Rng& rng) {
    std::vector<int> h(1 + rng.uniform_int(2));
    for (int& d : h) d = 3 + rng.uniform_int(4);
    return h;
}

RowMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

JointActions random_joint(Rng& rng, Eigen::Index rows, const std::vector<int>& dims) {
    JointActions j(rows, static_cast<Eigen::Index>(dims.size()));
    for (Eigen::Index r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < dims.size(); ++k) j(r, static_cast<Eigen::Index>(k)) = rng.uniform_int(dims[k]);
    return j;
}

// Init-scale weights leave some opponent-model gradients near 1e-9, where differences
// lose most of their digits to roundoff. Wider draws keep every
// coordinate measurable.
void widen(std::vector<ParamBlock>& blocks, Rng& rng) {
    for (auto& b : blocks)
        for (Eigen::Index i = 0; i < b.size(); ++i) b.values(i) = 2.0 * rng.uniform() - 1.0;
}

// Near-zero coordinates (~1e-8) leave h = 1e-5 central differences ~1e-4 off from
// roundoff alone, so smooth losses use Richardson steps, which allow a larger h.
// Kinked losses either keep every point a margin away from their kinks (and use a step
// that cannot cross it) or fall back to plain small steps.
struct Fd {
    bool richardson;
    double h;
};
constexpr Fd kSmooth{true, 2e-3};
constexpr Fd kKinkMargin{true, 1e-3};
constexpr Fd kKinked{false, 1e-5};

double worst_block_error(std::vector<ParamBlock>& blocks, const std::function<double()>& loss, Fd fd) {
    double worst = 0.0;
    for (auto& b : blocks) {
        const VectorXd numeric = fd.richardson ? richardson_difference(loss, b, fd.h) : central_difference(loss, b, fd.h);
        worst = std::max(worst, max_relative_error(b.grads, numeric));
    }
    return worst;
}

// distance from the nearest kink of the quantile Huber loss, over every residual pair
double kink_distance(const RowMatrix& pred, const RowMatrix& target, double kappa) {
    double d = 1e300;
    for (Eigen::Index b = 0; b < pred.rows(); ++b)
        for (Eigen::Index j = 0; j < pred.cols(); ++j)
            for (Eigen::Index jt = 0; jt < target.cols(); ++jt) {
                const double u = std::abs(target(b, jt) - pred(b, j));
                d = std::min({d, u, std::abs(u - kappa)});
            }
    return d;
}

}  // namespace

double mlp_gradient_error(Rng& rng) {
    const int in = 1 + rng.uniform_int(5);
    const MlpSpec spec{in, random_hidden(rng), 1, rng.uniform() < 0.5 ? Activation::Tanh : Activation::Relu};
    Mlp net = Mlp::initialized(spec, "net", rng);
    widen(net.params(), rng);
    const RowMatrix x = random_matrix(rng, 1 + rng.uniform_int(4), in);
    const ForwardCache cache = net.forward(x);
    net.backward(cache, RowMatrix::Ones(x.rows(), 1));
    return worst_block_error(net.params(), [&] { return net.forward(x).output.sum(); },
                             spec.hidden_activation == Activation::Relu ? kKinked : kSmooth);
}

double actor_gradient_error(Rng& rng) {
    const int obs = 2 + rng.uniform_int(4);
    const int p = 1 + rng.uniform_int(2);
    std::vector<int> dims(p);
    for (int& d : dims) d = 2 + rng.uniform_int(3);
    const int n_actions = 2 + rng.uniform_int(4);

    ConditionalPolicy policy =
        ConditionalPolicy::initialized(obs, dims, n_actions, random_hidden(rng), Activation::Tanh, "pi", rng);
    std::vector<OpponentModel> models;
    for (int k = 0; k < p; ++k)
        models.push_back(OpponentModel::initialized(obs, p, k, dims[k], random_hidden(rng), Activation::Tanh,
                                                    "mu" + std::to_string(k), rng));
    widen(policy.net().params(), rng);
    for (auto& m : models) widen(m.net().params(), rng);

    ActorBatch batch;
    const int T = 1 + rng.uniform_int(3);
    batch.observations = random_matrix(rng, T, obs);
    for (int t = 0; t < T; ++t) batch.actions.push_back(rng.uniform_int(n_actions));
    batch.critic_values = random_matrix(rng, T, 1, 2.0).col(0);
    if (rng.uniform() < 0.5) {
        // Under the normalised mixture, a predicted action that never appears in the
        // sample only enters through the normaliser and cancels, so its logit has an
        // exactly zero gradient. Each table therefore covers every action of every
        // opponent, in shuffled order, plus a few random rows.
        const int cover = *std::max_element(dims.begin(), dims.end());
        for (int t = 0; t < T; ++t) {
            JointActions j = random_joint(rng, cover + rng.uniform_int(3), dims);
            for (int k = 0; k < p; ++k) {
                std::vector<int> order(dims[k]);
                for (int a = 0; a < dims[k]; ++a) order[a] = a;
                for (int a = dims[k] - 1; a > 0; --a) std::swap(order[a], order[rng.uniform_int(a + 1)]);
                for (int a = 0; a < dims[k]; ++a) j(a, k) = order[a];
            }
            batch.joint_predictions.push_back(j);
        }
    }
    const double alpha = 0.05 * rng.uniform();

    const VectorXd coeff = actor_coefficients(policy, models, batch, alpha);
    actor_loss(policy, models, batch, alpha, true);
    auto loss = [&] { return surrogate_value(policy, models, batch, coeff); };

    double worst = worst_block_error(policy.net().params(), loss, kSmooth);
    for (auto& m : models) worst = std::max(worst, worst_block_error(m.net().params(), loss, kSmooth));
    return worst;
}

double quantile_critic_gradient_error(Rng& rng) {
    const int obs = 2 + rng.uniform_int(5);
    const std::vector<int> dims{2 + rng.uniform_int(3), 2 + rng.uniform_int(3)};
    const int k = 1 + rng.uniform_int(5);
    CriticNet critic = CriticNet::initialized(obs, dims, k, QuantileLevels::Midpoint, random_hidden(rng),
                                              Activation::Tanh, "critic", rng);
    widen(critic.net().params(), rng);
    const int B = 1 + rng.uniform_int(4);
    const RowMatrix x = random_matrix(rng, B, obs);
    const JointActions a = random_joint(rng, B, dims);
    const double kappa = 0.5 + rng.uniform();
    const ForwardCache cache = critic.forward_cache(x, a);

    // With every residual of a quantile on the linear branch, the level weights can
    // balance and leave that output flat up to roundoff. Such ties are redrawn, as are
    // residuals within 2e-2 of a kink.
    RowMatrix target;
    LossAndGrad qh;
    do {
        target = random_matrix(rng, B, k, 2.0);
        qh = quantile_huber_loss(cache.output, target, kappa, critic.levels());
    } while ((qh.grad.array().abs() < 1e-9).any() || (qh.grad.colwise().sum().array().abs() < 1e-9).any() ||
             kink_distance(cache.output, target, kappa) < 2e-2);
    critic.net().backward(cache, qh.grad);
    return worst_block_error(
        critic.net().params(),
        [&] { return quantile_huber_loss(critic.forward(x, a), target, kappa, critic.levels()).value; }, kKinkMargin);
}

double scalar_critic_gradient_error(Rng& rng) {
    const int obs = 2 + rng.uniform_int(5);
    const std::vector<int> dims{2 + rng.uniform_int(2), 2 + rng.uniform_int(2)};
    CriticNet critic = CriticNet::initialized(obs, dims, 1, QuantileLevels::Midpoint, random_hidden(rng),
                                              Activation::Tanh, "critic", rng);
    widen(critic.net().params(), rng);
    const int B = 1 + rng.uniform_int(4);
    const RowMatrix x = random_matrix(rng, B, obs);
    const RowMatrix next = random_matrix(rng, B, obs);
    const JointActions a = random_joint(rng, B, dims);
    const VectorXd r = random_matrix(rng, B, 1).col(0);
    std::vector<bool> done(B);
    for (int b = 0; b < B; ++b) done[b] = rng.uniform() < 0.3;
    const double gamma = 0.9;

    // the target is a constant of the loss
    const RowMatrix target = bellman_target(critic, r, done, next, gamma);
    scalar_critic_loss(critic, x, a, r, done, next, gamma);
    return worst_block_error(critic.net().params(),
                             [&] { return squared_td_loss(critic.forward(x, a), target).value; }, kSmooth);
}

std::vector<CheckResult> run_selftest_checks() {
    std::vector<CheckResult> out;
    auto grad_check = [&](const std::string& name, double (*fn)(Rng&), int draws) {
        Rng rng = Rng::derive(2024, name);
        double worst = 0.0;
        for (int d = 0; d < draws; ++d) worst = std::max(worst, fn(rng));
        std::ostringstream s;
        s << "max relative error " << worst << " over " << draws << " draws";
        out.push_back({name, worst < 1e-4, s.str()});
    };
    grad_check("mlp gradient", mlp_gradient_error, 20);
    grad_check("actor surrogate gradient", actor_gradient_error, 20);
    grad_check("quantile huber gradient", quantile_critic_gradient_error, 20);
    grad_check("scalar td gradient", scalar_critic_gradient_error, 20);

    {
        Rng rng(7);
        const VectorXd p = softmax(random_matrix(rng, 1, 6, 5.0).row(0).transpose());
        const VectorXd q = softmax(VectorXd::Zero(6));
        const bool ok = std::abs(p.sum() - 1.0) < 1e-12 && std::abs(q(0) - 1.0 / 6.0) < 1e-12;
        out.push_back({"softmax normalisation", ok, ""});
    }
    {
        Rng rng(11);
        const int obs = 4;
        std::vector<int> dims{3, 4};
        ConditionalPolicy pi = ConditionalPolicy::initialized(obs, dims, 5, {8}, Activation::Tanh, "pi", rng);
        std::vector<OpponentModel> models;
        for (int k = 0; k < 2; ++k)
            models.push_back(OpponentModel::initialized(obs, 2, k, dims[k], {8}, Activation::Tanh, "mu", rng));
        const VectorXd o = random_matrix(rng, 1, obs).row(0).transpose();
        const auto exact = marginal_policy_exact(pi, models, o);
        const auto hook = marginal_policy_from_joint(pi, models, o, enumerate_joint_actions(dims), Aggregation::Sampled);
        out.push_back({"exhaustive sampling equals exact marginal", exact.distribution == hook.distribution, ""});
    }
    {
        const PredatorPrey env(GridConfig::pp2v1());
        auto reward_of = [&](std::vector<Cell> preds, Cell prey) {
            GridState s{std::move(preds), {prey}, {true}, 0};
            return env.step(s, {Action::NoOp, Action::NoOp}, {Action::NoOp}).reward;
        };
        const bool ok = reward_of({{0, 0}, {4, 4}}, {2, 2}) == kStepCost &&
                        reward_of({{2, 1}, {4, 4}}, {2, 2}) == kStepCost + kSoloCatchPenalty &&
                        reward_of({{2, 1}, {2, 3}}, {2, 2}) == kStepCost + kTeamCatchReward;
        out.push_back({"reward rules", ok, ""});
    }
    return out;
}

}  // namespace domac
