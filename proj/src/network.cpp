#include "distilkit/network.hpp"

#include <algorithm>
#include <cmath>

#include "distilkit/errors.hpp"

namespace distilkit {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    throw InvalidParameter("unknown activation '" + name + "'");
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

void Network::validate() const {
    if (layers_.empty()) throw DimensionError("network needs at least one layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const Layer& layer = layers_[k];
        if (layer.bias.size() != layer.out_dim()) {
            throw DimensionError("layer " + std::to_string(k) + ": bias length " +
                                 std::to_string(layer.bias.size()) + " != out_dim " +
                                 std::to_string(layer.out_dim()));
        }
        if (k + 1 < layers_.size() && layers_[k + 1].in_dim() != layer.out_dim()) {
            throw DimensionError("layer " + std::to_string(k + 1) + " in_dim does not chain");
        }
    }
}

Network Network::glorot(std::span<const std::size_t> dims, Rng& rng) {
    if (dims.size() < 2) throw DimensionError("need at least input and output dims");
    std::vector<Layer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        const std::size_t fan_in = dims[k];
        const std::size_t fan_out = dims[k + 1];
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Layer layer;
        layer.weights = Matrix(fan_out, fan_in);
        for (double& w : layer.weights.data()) w = rng.uniform(-s, s);
        layer.bias.assign(fan_out, 0.0);
        layer.activation = (k + 2 == dims.size()) ? Activation::Identity : Activation::Tanh;
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
}

std::size_t Network::input_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t Network::output_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t Network::num_parameters() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
        g.layers.push_back({Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)});
    }
    return g;
}

bool Network::all_finite() const noexcept {
    for (const auto& l : layers_) {
        if (!l.weights.all_finite()) return false;
        for (double b : l.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

bool Gradients::all_finite() const noexcept {
    for (const auto& l : layers) {
        if (!l.weights.all_finite()) return false;
        for (double b : l.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

void Gradients::scale(double factor) {
    for (auto& l : layers) {
        for (double& w : l.weights.data()) w *= factor;
        for (double& b : l.bias) b *= factor;
    }
}

namespace {

Matrix affine(const Layer& layer, const Matrix& in) {
    Matrix out(in.rows(), layer.out_dim());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        const auto x = in.row(r);
        auto y = out.row(r);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            const auto w = layer.weights.row(o);
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
    }
    return out;
}

Matrix activate(Activation a, const Matrix& pre) {
    if (a == Activation::Identity) return pre;
    Matrix post = pre;
    for (double& v : post.data()) v = std::tanh(v);
    return post;
}

void check_input(const Network& net, const Matrix& inputs) {
    if (inputs.cols() != net.input_dim()) {
        throw DimensionError("input has " + std::to_string(inputs.cols()) +
                             " columns, network expects " + std::to_string(net.input_dim()));
    }
}

}  // namespace

ForwardResult forward(const Network& net, const Matrix& inputs) {
    check_input(net, inputs);
    ForwardResult result;
    result.trace.input = inputs;
    const Matrix* current = &result.trace.input;
    for (const Layer& layer : net.layers()) {
        result.trace.pre_activations.push_back(affine(layer, *current));
        result.trace.post_activations.push_back(
            activate(layer.activation, result.trace.pre_activations.back()));
        current = &result.trace.post_activations.back();
    }
    result.logits = *current;
    return result;
}

Matrix logits_of(const Network& net, const Matrix& inputs) {
    check_input(net, inputs);
    Matrix current = inputs;
    for (const Layer& layer : net.layers()) current = activate(layer.activation, affine(layer, current));
    return current;
}

Matrix softmax(const Matrix& logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InvalidParameter("temperature must be a positive finite number");
    }
    Matrix probs(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto z = logits.row(r);
        auto p = probs.row(r);
        if (z.empty()) continue;
        const double top = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (std::size_t c = 0; c < z.size(); ++c) {
            p[c] = std::exp((z[c] - top) / temperature);
            total += p[c];
        }
        for (double& v : p) v /= total;
    }
    return probs;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
    std::vector<std::size_t> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = argmax(m.row(r));
    return out;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& dloss_dlogits) {
    const auto& layers = net.layers();
    if (trace.pre_activations.size() != layers.size() ||
        trace.post_activations.size() != layers.size()) {
        throw DimensionError("trace does not belong to this network");
    }
    const std::size_t batch = trace.input.rows();
    if (dloss_dlogits.rows() != batch || dloss_dlogits.cols() != net.output_dim()) {
        throw DimensionError("upstream gradient " + shape_string(dloss_dlogits) +
                             " does not match trace batch " + std::to_string(batch) + "x" +
                             std::to_string(net.output_dim()));
    }

    Gradients grads = Gradients::zeros_like(net);
    Matrix delta = dloss_dlogits;  // dLoss / d(post-activation) of the current layer
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Layer& layer = layers[k];
        const Matrix& post = trace.post_activations[k];
        if (post.rows() != batch || post.cols() != layer.out_dim()) {
            throw DimensionError("trace layer " + std::to_string(k) + " has wrong shape");
        }
        if (layer.activation == Activation::Tanh) {
            for (std::size_t i = 0; i < delta.size(); ++i) {
                const double y = post.data()[i];
                delta.data()[i] *= 1.0 - y * y;
            }
        }
        const Matrix& in = (k == 0) ? trace.input : trace.post_activations[k - 1];
        LayerGradient& g = grads.layers[k];
        for (std::size_t r = 0; r < batch; ++r) {
            const auto x = in.row(r);
            const auto d = delta.row(r);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                g.bias[o] += d[o];
                auto gw = g.weights.row(o);
                for (std::size_t i = 0; i < x.size(); ++i) gw[i] += d[o] * x[i];
            }
        }
        if (k == 0) break;
        Matrix next(batch, layer.in_dim());
        for (std::size_t r = 0; r < batch; ++r) {
            const auto d = delta.row(r);
            auto out = next.row(r);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                const auto w = layer.weights.row(o);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[o] * w[i];
            }
        }
        delta = std::move(next);
    }
    return grads;
}

void sgd_step(Network& net, const Gradients& grads, double lr) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidParameter("learning rate must be positive");
    auto& layers = net.mutable_layers();
    if (grads.layers.size() != layers.size()) throw DimensionError("gradient layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (grads.layers[k].weights.rows() != layers[k].weights.rows() ||
            grads.layers[k].weights.cols() != layers[k].weights.cols() ||
            grads.layers[k].bias.size() != layers[k].bias.size()) {
            throw DimensionError("gradient shape mismatch at layer " + std::to_string(k));
        }
    }
    if (!grads.all_finite()) throw DivergenceError("non-finite gradient", 0);

    for (std::size_t k = 0; k < layers.size(); ++k) {
        auto w = layers[k].weights.data();
        const auto gw = grads.layers[k].weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
        auto& b = layers[k].bias;
        const auto& gb = grads.layers[k].bias;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
    }
}

double grad_check(const Network& net, const Matrix& inputs, const LogitLoss& loss, double step) {
    const ForwardResult fwd = forward(net, inputs);
    const LossResult base = loss(fwd.logits);
    return grad_check(net, inputs, loss, step, backward(net, fwd.trace, base.grad));
}

double grad_check(const Network& net, const Matrix& inputs, const LogitLoss& loss, double step,
                  const Gradients& analytic) {
    if (!(step > 0.0)) throw InvalidParameter("finite-difference step must be positive");
    Network probe = net;
    double worst = 0.0;

    auto compare = [&](double& param, double analytic_value) {
        const double saved = param;
        param = saved + step;
        const double plus = loss(logits_of(probe, inputs)).loss;
        param = saved - step;
        const double minus = loss(logits_of(probe, inputs)).loss;
        param = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double denom = std::max({std::abs(analytic_value), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic_value - numeric) / denom);
    };

    auto& layers = probe.mutable_layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        auto w = layers[k].weights.data();
        const auto gw = analytic.layers.at(k).weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) compare(w[i], gw[i]);
        for (std::size_t i = 0; i < layers[k].bias.size(); ++i)
            compare(layers[k].bias[i], analytic.layers[k].bias.at(i));
    }
    return worst;
}

}  // namespace distilkit
