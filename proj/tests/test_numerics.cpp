#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "distilkit/checkpoint.hpp"
#include "distilkit/errors.hpp"
#include "distilkit/losses.hpp"
#include "distilkit/network.hpp"

using namespace distilkit;

namespace {

Network single_linear(Matrix w, std::vector<double> b) {
    return Network({Layer{std::move(w), std::move(b), Activation::Identity}});
}

// Independent straight-line forward pass: no Matrix helpers, plain loops.
std::vector<std::vector<double>> naive_forward(const Network& net, const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out;
    for (const auto& x : rows) {
        std::vector<double> a = x;
        for (const Layer& layer : net.layers()) {
            std::vector<double> z(layer.out_dim());
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                double s = layer.bias[o];
                for (std::size_t i = 0; i < layer.in_dim(); ++i) s += layer.weights(o, i) * a[i];
                z[o] = layer.activation == Activation::Tanh ? std::tanh(s) : s;
            }
            a = z;
        }
        out.push_back(a);
    }
    return out;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng rng, double sd = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal(0.0, sd);
    return m;
}

}  // namespace

TEST(Matrix, RejectsMismatchedStorage) {
    EXPECT_THROW(Matrix(2, 3, std::vector<double>(5)), DimensionError);
    Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    EXPECT_EQ(m(1, 0), 4.0);
    EXPECT_EQ(m.row(1).size(), 3u);
}

TEST(Forward, ZeroNetGivesZeroLogits) {
    const Network net = single_linear(Matrix(3, 2), {0, 0, 0});
    const Matrix logits = forward(net, Matrix(4, 2, std::vector<double>{1, 2, -3, 4, 5, 6, 0.5, -9})).logits;
    for (double v : logits.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityLayerPassesInputThrough) {
    const Network net = single_linear(Matrix{{1, 0}, {0, 1}}, {0, 0});
    const Matrix logits = forward(net, Matrix{{1, 2}}).logits;
    EXPECT_EQ(logits(0, 0), 1.0);
    EXPECT_EQ(logits(0, 1), 2.0);
}

TEST(Forward, MatchesNaiveReimplementation) {
    Rng rng(42);
    const std::size_t dims[] = {3, 5, 2};
    const Network net = Network::glorot(dims, rng);
    const Matrix x = random_matrix(4, 3, Rng(42).stream("input"));
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < x.rows(); ++r) rows.emplace_back(x.row(r).begin(), x.row(r).end());

    const auto expected = naive_forward(net, rows);
    const Matrix logits = forward(net, x).logits;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(logits(r, c), expected[r][c], 1e-14);
}

TEST(Forward, DimensionMismatchThrows) {
    const Network net = single_linear(Matrix(2, 3), {0, 0});
    EXPECT_THROW(forward(net, Matrix(1, 2)), DimensionError);
}

TEST(Forward, IsBitDeterministic) {
    Rng rng(7);
    const std::size_t dims[] = {4, 8, 8, 3};
    const Network net = Network::glorot(dims, rng);
    const Matrix x = random_matrix(16, 4, Rng(8));
    EXPECT_EQ(forward(net, x).logits, forward(net, x).logits);
}

TEST(Glorot, WeightsWithinBoundAndBiasesZero) {
    Rng rng(3);
    const std::size_t dims[] = {8, 32, 4};
    const Network net = Network::glorot(dims, rng);
    for (const Layer& layer : net.layers()) {
        const double s = std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
        for (double w : layer.weights.values()) EXPECT_LE(std::abs(w), s);
        for (double b : layer.bias) EXPECT_EQ(b, 0.0);
    }
    EXPECT_EQ(net.layers().front().activation, Activation::Tanh);
    EXPECT_EQ(net.layers().back().activation, Activation::Identity);
    EXPECT_EQ(net.num_parameters(), 8u * 32 + 32 + 32 * 4 + 4);
}

TEST(Network, RejectsLayersThatDoNotChain) {
    std::vector<Layer> layers{{Matrix(4, 3), std::vector<double>(4), Activation::Tanh},
                              {Matrix(2, 5), std::vector<double>(2), Activation::Identity}};
    EXPECT_THROW(Network(std::move(layers)), DimensionError);
}

TEST(Softmax, UniformForEqualLogits) {
    const Matrix p = softmax(Matrix{{0, 0, 0}});
    for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-16);
}

TEST(Softmax, TemperatureDividesLogits) {
    const Matrix p = softmax(Matrix{{2, 0}}, 2.0);
    EXPECT_NEAR(p(0, 0), 0.7310585786300049, 1e-15);
    EXPECT_NEAR(p(0, 1), 0.2689414213699951, 1e-15);
}

TEST(Softmax, LargeLogitsStayFinite) {
    const Matrix p = softmax(Matrix{{1000, 0}, {-1e6, 1e6}, {1e6, 1e6}});
    EXPECT_EQ(p(0, 0), 1.0);
    EXPECT_EQ(p(0, 1), 0.0);
    EXPECT_TRUE(p.all_finite());
    EXPECT_EQ(p(2, 0), 0.5);
}

TEST(Softmax, RejectsNonPositiveTemperature) {
    EXPECT_THROW(softmax(Matrix{{1, 2}}, 0.0), InvalidParameter);
    EXPECT_THROW(softmax(Matrix{{1, 2}}, -1.0), InvalidParameter);
}

TEST(Softmax, RowsSumToOneForExtremeLogits) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double scale = std::pow(10.0, rng.uniform(-3.0, 6.0));
        const Matrix logits = random_matrix(3, 2 + trial % 6, rng.stream("logits", trial), scale);
        const Matrix p = softmax(logits);
        ASSERT_TRUE(p.all_finite());
        for (std::size_t r = 0; r < p.rows(); ++r) {
            double total = 0.0;
            for (double v : p.row(r)) total += v;
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Softmax, HigherTemperatureNarrowsTheSpread) {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix logits = random_matrix(1, 4, rng.stream("t", trial), 3.0);
        double previous = std::numeric_limits<double>::infinity();
        for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            const Matrix p = softmax(logits, t);
            const auto [lo, hi] = std::minmax_element(p.row(0).begin(), p.row(0).end());
            EXPECT_LT(*hi - *lo, previous);
            previous = *hi - *lo;
        }
    }
}

TEST(Argmax, TiesGoToLowestIndex) {
    const double v[] = {0.5, 0.5, 0.0};
    EXPECT_EQ(argmax(v), 0u);
    const double w[] = {0.1, 0.3, 0.3, 0.3};
    EXPECT_EQ(argmax(w), 1u);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(5);
    const std::size_t dims[] = {3, 4, 2};
    const Network net = Network::glorot(dims, rng);
    const ForwardResult fwd = forward(net, random_matrix(5, 3, Rng(6)));
    const Gradients g = backward(net, fwd.trace, Matrix(5, 2));
    for (const auto& layer : g.layers) {
        for (double v : layer.weights.values()) EXPECT_EQ(v, 0.0);
        for (double v : layer.bias) EXPECT_EQ(v, 0.0);
    }
}

TEST(Backward, SumOfLogitsOnLinearLayer) {
    const Network net = single_linear(Matrix{{0.3, -0.2}, {0.1, 0.4}}, {0.0, 0.0});
    const Matrix x{{1, 2}, {3, -1}, {0.5, 0.5}};
    const ForwardResult fwd = forward(net, x);
    // Mean over the batch of the summed logits: upstream is 1/N everywhere.
    const Gradients g = backward(net, fwd.trace, Matrix(3, 2, 1.0 / 3.0));
    for (std::size_t o = 0; o < 2; ++o) {
        EXPECT_NEAR(g.layers[0].weights(o, 0), (1 + 3 + 0.5) / 3.0, 1e-15);
        EXPECT_NEAR(g.layers[0].weights(o, 1), (2 - 1 + 0.5) / 3.0, 1e-15);
        EXPECT_NEAR(g.layers[0].bias[o], 1.0, 1e-15);
    }
}

TEST(Backward, RejectsTraceShapeMismatch) {
    const Network net = single_linear(Matrix{{1, 0}, {0, 1}}, {0, 0});
    const ForwardResult fwd = forward(net, Matrix{{1, 2}});
    EXPECT_THROW(backward(net, fwd.trace, Matrix(2, 2)), DimensionError);
}

TEST(Sgd, ZeroGradientLeavesParametersUnchanged) {
    Rng rng(9);
    const std::size_t dims[] = {2, 3, 2};
    Network net = Network::glorot(dims, rng);
    const Network before = net;
    sgd_step(net, Gradients::zeros_like(net), 0.5);
    EXPECT_EQ(net, before);
}

TEST(Sgd, UnitStepWithGradientEqualToThetaZeroesIt) {
    Network net = single_linear(Matrix{{0.25, -3.0}}, {1.5});
    Gradients g{{LayerGradient{Matrix{{0.25, -3.0}}, {1.5}}}};
    sgd_step(net, g, 1.0);
    for (double w : net.layers()[0].weights.values()) EXPECT_EQ(w, 0.0);
    EXPECT_EQ(net.layers()[0].bias[0], 0.0);
}

TEST(Sgd, ScalarArithmetic) {
    Network net = single_linear(Matrix{{1.0}}, {0.0});
    Gradients g{{LayerGradient{Matrix{{0.5}}, {0.0}}}};
    sgd_step(net, g, 0.1);
    EXPECT_DOUBLE_EQ(net.layers()[0].weights(0, 0), 0.95);
}

TEST(Sgd, NonFiniteGradientThrowsWithoutUpdating) {
    Network net = single_linear(Matrix{{1.0, 2.0}}, {0.0});
    const Network before = net;
    Gradients g{{LayerGradient{Matrix{{0.1, std::nan("")}}, {0.0}}}};
    EXPECT_THROW(sgd_step(net, g, 0.1), DivergenceError);
    EXPECT_EQ(net, before);
}

TEST(GradCheck, QuadraticLossOnLinearNetIsExact) {
    const Network net = single_linear(Matrix{{0.3, -0.7}, {1.1, 0.2}}, {0.05, -0.1});
    const Matrix x{{1, 2}, {-0.5, 0.25}, {2, -1}};
    const LogitLoss quadratic = [](const Matrix& z) {
        LossResult r;
        r.grad = Matrix(z.rows(), z.cols());
        const double n = static_cast<double>(z.rows());
        for (std::size_t k = 0; k < z.values().size(); ++k) {
            r.loss += 0.5 * z.values()[k] * z.values()[k] / n;
            r.grad.data()[k] = z.values()[k] / n;
        }
        return r;
    };
    EXPECT_LE(grad_check(net, x, quadratic, 1e-5), 1e-8);
}

TEST(GradCheck, ConditionalLossOnTwoLayerNet) {
    Rng rng(31);
    const std::size_t dims[] = {5, 12, 3};
    const Network net = Network::glorot(dims, rng);
    const Matrix x = random_matrix(8, 5, rng.stream("x"));
    const Matrix teacher = softmax(random_matrix(8, 3, rng.stream("teacher")));
    const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2, 0, 1};
    const auto targets = conditional_targets(teacher, labels);
    const LogitLoss loss = [&](const Matrix& z) { return conditional_loss(targets, z); };
    EXPECT_LE(grad_check(net, x, loss, 1e-5), 1e-6);
}

TEST(GradCheck, DoubledGradientGivesHalfRelativeError) {
    Rng rng(32);
    const std::size_t dims[] = {4, 6, 3};
    const Network net = Network::glorot(dims, rng);
    const Matrix x = random_matrix(6, 4, rng.stream("x"));
    const std::vector<std::size_t> labels{0, 1, 2, 2, 1, 0};
    const LogitLoss loss = [&](const Matrix& z) { return hard_ce_loss(labels, z); };
    const ForwardResult fwd = forward(net, x);
    Gradients g = backward(net, fwd.trace, loss(fwd.logits).grad);
    g.scale(2.0);
    EXPECT_NEAR(grad_check(net, x, loss, 1e-5, g), 0.5, 1e-4);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Rng rng(77);
    const std::size_t dims[] = {8, 32, 32, 4};
    Network net = Network::glorot(dims, rng);
    net.mutable_layers()[1].bias[3] = 1.0 / 3.0;
    net.mutable_layers()[2].weights(0, 0) = -2.5e-300;
    const Network back = network_from_json(network_to_json(net));
    EXPECT_EQ(back, net);
    EXPECT_EQ(network_to_json(back), network_to_json(net));
}
