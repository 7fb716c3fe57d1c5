#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "domac/errors.hpp"
#include "domac/rng.hpp"

namespace domac {

/// Batches are stored one sample per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::VectorXd;

/// Named trainable tensor with a co-shaped gradient buffer. Values are stored
/// flat in row-major order; matrix() views a rank-2 block as [rows x cols] and a
/// rank-1 block as a single row.
struct ParamBlock {
    std::string name;
    std::vector<int> shape;
    VectorXd values;
    VectorXd grads;

    ParamBlock() = default;
    ParamBlock(std::string name, std::vector<int> shape);

    Eigen::Index size() const { return values.size(); }
    Eigen::Index rows() const { return shape.size() == 2 ? shape[0] : 1; }
    Eigen::Index cols() const { return shape.size() == 2 ? shape[1] : shape[0]; }

    Eigen::Map<RowMatrix> matrix() { return {values.data(), rows(), cols()}; }
    Eigen::Map<const RowMatrix> matrix() const { return {values.data(), rows(), cols()}; }
    Eigen::Map<RowMatrix> grad_matrix() { return {grads.data(), rows(), cols()}; }

    void zero_grad() { grads.setZero(); }
};

enum class Activation { Tanh, Relu };

struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden_dims{64, 64, 64};
    int output_dim = 1;
    Activation hidden_activation = Activation::Tanh;

    void validate() const;
    int layer_count() const { return static_cast<int>(hidden_dims.size()) + 1; }
    int layer_input(int layer) const { return layer == 0 ? input_dim : hidden_dims[layer - 1]; }
    int layer_output(int layer) const {
        return layer + 1 == layer_count() ? output_dim : hidden_dims[layer];
    }

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Everything the backward pass needs: the input of every layer (the network
/// input first, then each hidden activation) and the final linear output.
struct ForwardCache {
    std::vector<RowMatrix> layer_inputs;
    RowMatrix output;

    Eigen::Index batch() const { return output.rows(); }
};

/// Blocks laid out as [W0, b0, W1, b1, ...]; W is [in x out], so a layer maps X -> X W + b.
std::vector<ParamBlock> make_mlp_params(const MlpSpec& spec, const std::string& prefix);

/// Scaled-uniform init: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0.
void init_mlp_params(const MlpSpec& spec, std::span<ParamBlock> params, Rng& rng);

ForwardCache mlp_forward(const MlpSpec& spec, std::span<const ParamBlock> params,
                         const Eigen::Ref<const RowMatrix>& input);

/// Accumulates parameter gradients into params[*].grads and returns dL/d(input).
RowMatrix mlp_backward(const MlpSpec& spec, std::span<ParamBlock> params, const ForwardCache& cache,
                       const Eigen::Ref<const RowMatrix>& output_grad);

/// An MLP together with its parameters.
class Mlp {
public:
    Mlp() = default;
    Mlp(MlpSpec spec, const std::string& name);

    static Mlp initialized(MlpSpec spec, const std::string& name, Rng& rng);

    const MlpSpec& spec() const { return spec_; }
    std::vector<ParamBlock>& params() { return params_; }
    const std::vector<ParamBlock>& params() const { return params_; }

    ForwardCache forward(const Eigen::Ref<const RowMatrix>& input) const {
        return mlp_forward(spec_, params_, input);
    }
    RowMatrix backward(const ForwardCache& cache, const Eigen::Ref<const RowMatrix>& output_grad) {
        return mlp_backward(spec_, params_, cache, output_grad);
    }

    void zero_grad();
    /// Zeroes the last weight matrix and bias, making the output identically zero.
    void zero_output_layer();

private:
    MlpSpec spec_;
    std::vector<ParamBlock> params_;
};

// ---------------------------------------------------------------------------
// softmax

template <typename Derived>
RowMatrix softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    if (logits.cols() == 0) throw ConfigError("softmax: empty logits");
    // evaluated once, so lazy expressions are not recomputed per access
    const RowMatrix z = logits;
    if (!z.allFinite()) throw NumericError("softmax: non-finite logits");
    RowMatrix out = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
    out.array().colwise() /= out.rowwise().sum().array();
    return out;
}

/// Same arithmetic as one row of softmax_rows, so both agree bit for bit.
template <typename Derived>
VectorXd softmax(const Eigen::MatrixBase<Derived>& logits) {
    if (logits.size() == 0) throw ConfigError("softmax: empty logits");
    const RowMatrix row = logits.derived().reshaped().transpose();
    return softmax_rows(row).row(0).transpose();
}

/// Backward of a row-wise softmax: given p = softmax(z) and g = dL/dp, returns dL/dz.
template <typename DerivedP, typename DerivedG>
RowMatrix softmax_rows_backward(const Eigen::MatrixBase<DerivedP>& probs,
                                const Eigen::MatrixBase<DerivedG>& grad) {
    const Eigen::VectorXd inner = probs.cwiseProduct(grad).rowwise().sum();
    return probs.cwiseProduct(grad - inner.replicate(1, grad.cols()));
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    VectorXd m;
    VectorXd v;
    std::int64_t t = 0;

    static AdamState zeros_like(const ParamBlock& block);
};

/// One bias-corrected Adam update; zeroes block.grads afterwards.
void adam_step(ParamBlock& block, AdamState& state, const AdamConfig& config);

/// Adam over a fixed list of parameter blocks. A step is all-or-nothing: if any
/// gradient is non-finite nothing is modified and NumericError is thrown.
class Adam {
public:
    Adam() = default;
    Adam(AdamConfig config, std::span<const ParamBlock> blocks);

    void step(std::span<ParamBlock> blocks);

    const AdamConfig& config() const { return config_; }
    std::vector<AdamState>& states() { return states_; }
    const std::vector<AdamState>& states() const { return states_; }

private:
    AdamConfig config_;
    std::vector<AdamState> states_;
};

// ---------------------------------------------------------------------------
// gradient checking and bookkeeping

/// Central differences of loss() with respect to every coordinate of block.values.
VectorXd central_difference(const std::function<double()>& loss, ParamBlock& block, double h);

/// Richardson extrapolation of central differences at h and h/2, (4 D(h/2) - D(h)) / 3.
/// Truncation error O(h^4), so h can stay large enough to keep roundoff small.
/// Only valid where loss() is smooth within h.
VectorXd richardson_difference(const std::function<double()>& loss, ParamBlock& block, double h);

/// max_i |analytic_i - numeric_i| / max(1e-8, |numeric_i|).
double max_relative_error(const VectorXd& analytic, const VectorXd& numeric);

/// Compares `analytic` with central differences of loss() over block; returns the
/// max relative error. loss() must read block.values and be deterministic.
double finite_diff_check(const std::function<double()>& loss, ParamBlock& block,
                         const VectorXd& analytic, double h = 1e-5);

double grad_norm(std::span<const ParamBlock> blocks);
bool all_finite(std::span<const ParamBlock> blocks);

/// FNV-1a over the raw bytes of every value, in block order.
std::uint64_t parameter_hash(std::span<const ParamBlock> blocks);

}  // namespace domac
