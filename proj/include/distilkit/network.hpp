#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "distilkit/matrix.hpp"
#include "distilkit/random.hpp"

namespace distilkit {

enum class Activation { Tanh, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct Layer {
    Matrix weights;  // out_dim x in_dim
    std::vector<double> bias;
    Activation activation = Activation::Identity;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Dense feed-forward classifier. Hidden layers use tanh, the last layer is
/// linear and produces logits; softmax is applied by the caller.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    /// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)),
    /// zero biases. `dims` is {input, hidden..., output}.
    static Network glorot(std::span<const std::size_t> dims, Rng& rng);

    std::size_t input_dim() const noexcept;
    std::size_t output_dim() const noexcept;
    std::size_t num_parameters() const noexcept;
    bool all_finite() const noexcept;

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& mutable_layers() noexcept { return layers_; }

    friend bool operator==(const Network&, const Network&) = default;

private:
    void validate() const;

    std::vector<Layer> layers_;
};

struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> post_activations;
};

struct ForwardResult {
    Matrix logits;
    ForwardTrace trace;
};

struct LayerGradient {
    Matrix weights;
    std::vector<double> bias;
};

struct Gradients {
    std::vector<LayerGradient> layers;

    static Gradients zeros_like(const Network& net);
    bool all_finite() const noexcept;
    void scale(double factor);
};

/// Loss value together with its gradient with respect to the logits.
struct LossResult {
    double loss = 0.0;
    Matrix grad;
};

ForwardResult forward(const Network& net, const Matrix& inputs);

/// Forward pass without keeping the trace.
Matrix logits_of(const Network& net, const Matrix& inputs);

/// Row-wise softmax of logits / temperature, stabilised by max subtraction.
Matrix softmax(const Matrix& logits, double temperature = 1.0);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);
std::vector<std::size_t> argmax_rows(const Matrix& m);

/// Parameter gradients given dLoss/dLogits for the traced batch. The upstream
/// gradient already carries any 1/N factor, so contributions are summed.
Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& dloss_dlogits);

/// theta <- theta - lr * grad. Throws DivergenceError(epoch 0) on non-finite
/// gradient entries without touching the network.
void sgd_step(Network& net, const Gradients& grads, double lr);

using LogitLoss = std::function<LossResult(const Matrix& logits)>;

/// Worst relative error between the analytic gradient and the central
/// difference (L(theta+h) - L(theta-h)) / 2h over every parameter, with
/// denominator max(|a|, |b|, 1e-8).
double grad_check(const Network& net, const Matrix& inputs, const LogitLoss& loss, double step);

/// As above but compares against caller-supplied analytic gradients.
double grad_check(const Network& net, const Matrix& inputs, const LogitLoss& loss, double step,
                  const Gradients& analytic);

}  // namespace distilkit
