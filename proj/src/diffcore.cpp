#include "domac/diffcore.hpp"

#include <cmath>
#include <cstring>

namespace domac {

ParamBlock::ParamBlock(std::string block_name, std::vector<int> block_shape)
    : name(std::move(block_name)), shape(std::move(block_shape)) {
    if (shape.empty() || shape.size() > 2) throw ConfigError("ParamBlock " + name + ": rank must be 1 or 2");
    Eigen::Index n = 1;
    for (int d : shape) {
        if (d <= 0) throw ConfigError("ParamBlock " + name + ": dimensions must be positive");
        n *= d;
    }
    values = VectorXd::Zero(n);
    grads = VectorXd::Zero(n);
}

void MlpSpec::validate() const {
    if (input_dim < 1 || output_dim < 1) throw ConfigError("MlpSpec: input/output dims must be >= 1");
    if (hidden_dims.empty()) throw ConfigError("MlpSpec: at least one hidden layer is required");
    for (int h : hidden_dims)
        if (h < 1) throw ConfigError("MlpSpec: hidden dims must be >= 1");
}

std::vector<ParamBlock> make_mlp_params(const MlpSpec& spec, const std::string& prefix) {
    spec.validate();
    std::vector<ParamBlock> params;
    params.reserve(2 * spec.layer_count());
    for (int l = 0; l < spec.layer_count(); ++l) {
        params.emplace_back(prefix + "/W" + std::to_string(l),
                            std::vector<int>{spec.layer_input(l), spec.layer_output(l)});
        params.emplace_back(prefix + "/b" + std::to_string(l), std::vector<int>{spec.layer_output(l)});
    }
    return params;
}

void init_mlp_params(const MlpSpec& spec, std::span<ParamBlock> params, Rng& rng) {
    for (int l = 0; l < spec.layer_count(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_input(l)));
        for (double& w : params[2 * l].values) w = (2.0 * rng.uniform() - 1.0) * bound;
        params[2 * l + 1].values.setZero();
    }
}

namespace {

void check_layout(const MlpSpec& spec, std::span<const ParamBlock> params) {
    if (params.size() != static_cast<std::size_t>(2 * spec.layer_count()))
        throw ConfigError("mlp: parameter count does not match spec");
    for (int l = 0; l < spec.layer_count(); ++l) {
        const ParamBlock& w = params[2 * l];
        const ParamBlock& b = params[2 * l + 1];
        if (w.rows() != spec.layer_input(l) || w.cols() != spec.layer_output(l) ||
            b.size() != spec.layer_output(l))
            throw ConfigError("mlp: parameter shape mismatch at layer " + std::to_string(l));
    }
}

}  // namespace

ForwardCache mlp_forward(const MlpSpec& spec, std::span<const ParamBlock> params,
                         const Eigen::Ref<const RowMatrix>& input) {
    check_layout(spec, params);
    if (input.cols() != spec.input_dim)
        throw ConfigError("mlp_forward: input has " + std::to_string(input.cols()) + " columns, expected " +
                          std::to_string(spec.input_dim));
    if (!input.allFinite()) throw NumericError("mlp_forward: non-finite input");

    ForwardCache cache;
    cache.layer_inputs.reserve(spec.layer_count());
    cache.layer_inputs.emplace_back(input);
    for (int l = 0; l < spec.layer_count(); ++l) {
        RowMatrix z = cache.layer_inputs.back() * params[2 * l].matrix();
        z.rowwise() += params[2 * l + 1].matrix().row(0);
        if (l + 1 == spec.layer_count()) {
            cache.output = std::move(z);
        } else if (spec.hidden_activation == Activation::Tanh) {
            cache.layer_inputs.emplace_back(z.array().tanh().matrix());
        } else {
            cache.layer_inputs.emplace_back(z.cwiseMax(0.0));
        }
    }
    if (!cache.output.allFinite()) throw NumericError("mlp_forward: non-finite output");
    return cache;
}

RowMatrix mlp_backward(const MlpSpec& spec, std::span<ParamBlock> params, const ForwardCache& cache,
                       const Eigen::Ref<const RowMatrix>& output_grad) {
    check_layout(spec, params);
    if (cache.layer_inputs.size() != static_cast<std::size_t>(spec.layer_count()))
        throw ConfigError("mlp_backward: cache does not match spec");
    if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols())
        throw ConfigError("mlp_backward: output gradient shape mismatch");

    RowMatrix delta = output_grad;
    for (int l = spec.layer_count() - 1; l >= 0; --l) {
        const RowMatrix& x = cache.layer_inputs[l];
        params[2 * l].grad_matrix().noalias() += x.transpose() * delta;
        params[2 * l + 1].grad_matrix().row(0) += delta.colwise().sum();
        RowMatrix upstream = delta * params[2 * l].matrix().transpose();
        if (l > 0) {
            // x is the activation of layer l-1.
            if (spec.hidden_activation == Activation::Tanh)
                upstream.array() *= 1.0 - x.array().square();
            else
                upstream.array() *= (x.array() > 0.0).cast<double>();
        }
        delta = std::move(upstream);
    }
    return delta;
}

Mlp::Mlp(MlpSpec spec, const std::string& name) : spec_(std::move(spec)), params_(make_mlp_params(spec_, name)) {}

Mlp Mlp::initialized(MlpSpec spec, const std::string& name, Rng& rng) {
    Mlp net(std::move(spec), name);
    init_mlp_params(net.spec_, net.params_, rng);
    return net;
}

void Mlp::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Mlp::zero_output_layer() {
    params_[params_.size() - 2].values.setZero();
    params_[params_.size() - 1].values.setZero();
}

AdamState AdamState::zeros_like(const ParamBlock& block) {
    return {VectorXd::Zero(block.size()), VectorXd::Zero(block.size()), 0};
}

void adam_step(ParamBlock& block, AdamState& state, const AdamConfig& config) {
    if (state.m.size() != block.size() || state.v.size() != block.size())
        throw ConfigError("adam_step: state not co-shaped with " + block.name);
    if (!block.grads.allFinite()) throw NumericError("adam_step: non-finite gradient in " + block.name);
    state.t += 1;
    const double t = static_cast<double>(state.t);
    state.m = config.beta1 * state.m + (1.0 - config.beta1) * block.grads;
    state.v = config.beta2 * state.v + (1.0 - config.beta2) * block.grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    block.values.array() -=
        config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
    block.zero_grad();
}

Adam::Adam(AdamConfig config, std::span<const ParamBlock> blocks) : config_(config) {
    states_.reserve(blocks.size());
    for (const auto& b : blocks) states_.push_back(AdamState::zeros_like(b));
}

void Adam::step(std::span<ParamBlock> blocks) {
    if (blocks.size() != states_.size()) throw ConfigError("Adam::step: block count changed");
    for (const auto& b : blocks)
        if (!b.grads.allFinite()) throw NumericError("Adam::step: non-finite gradient in " + b.name);
    for (std::size_t i = 0; i < blocks.size(); ++i) adam_step(blocks[i], states_[i], config_);
}

VectorXd central_difference(const std::function<double()>& loss, ParamBlock& block, double h) {
    if (!(h > 0.0)) throw ConfigError("central_difference: h must be positive");
    VectorXd numeric(block.size());
    for (Eigen::Index i = 0; i < block.size(); ++i) {
        const double saved = block.values(i);
        block.values(i) = saved + h;
        const double up = loss();
        block.values(i) = saved - h;
        const double down = loss();
        block.values(i) = saved;
        numeric(i) = (up - down) / (2.0 * h);
    }
    return numeric;
}

VectorXd richardson_difference(const std::function<double()>& loss, ParamBlock& block, double h) {
    return (4.0 * central_difference(loss, block, h / 2.0) - central_difference(loss, block, h)) / 3.0;
}

double max_relative_error(const VectorXd& analytic, const VectorXd& numeric) {
    if (analytic.size() != numeric.size()) throw ConfigError("max_relative_error: size mismatch");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double err = std::abs(analytic(i) - numeric(i)) / std::max(1e-8, std::abs(numeric(i)));
        worst = std::max(worst, err);
    }
    return worst;
}

double finite_diff_check(const std::function<double()>& loss, ParamBlock& block, const VectorXd& analytic,
                         double h) {
    return max_relative_error(analytic, central_difference(loss, block, h));
}

double grad_norm(std::span<const ParamBlock> blocks) {
    double sq = 0.0;
    for (const auto& b : blocks) sq += b.grads.squaredNorm();
    return std::sqrt(sq);
}

bool all_finite(std::span<const ParamBlock> blocks) {
    for (const auto& b : blocks)
        if (!b.values.allFinite() || !b.grads.allFinite()) return false;
    return true;
}

std::uint64_t parameter_hash(std::span<const ParamBlock> blocks) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& b : blocks) {
        for (double v : b.values) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char c : bytes) {
                h ^= c;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

}  // namespace domac
