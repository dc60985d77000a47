#include "distilkit/gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

#include "distilkit/losses.hpp"
#include "distilkit/network.hpp"

namespace distilkit {

namespace {

struct Probe {
    Network net;
    Matrix inputs;
    LabeledBatch batch;
};

constexpr std::size_t kProbeBatch = 8;

Probe make_probe(std::uint64_t seed, std::size_t index) {
    Rng rng = Rng(seed).stream("gradcheck-net", index);
    const std::size_t layers = 2 + index % 2;
    std::vector<std::size_t> dims;
    dims.push_back(2 + rng.below(7));
    for (std::size_t k = 0; k + 1 < layers; ++k) dims.push_back(4 + rng.below(29));
    const std::size_t classes = 2 + rng.below(4);
    dims.push_back(classes);

    Probe probe;
    probe.net = Network::glorot(dims, rng);
    probe.inputs = Matrix(kProbeBatch, dims.front());
    for (double& v : probe.inputs.data()) v = rng.normal();

    Matrix teacher_logits(kProbeBatch, classes);
    for (double& v : teacher_logits.data()) v = rng.normal();
    probe.batch.teacher_posteriors = softmax(teacher_logits);
    for (std::size_t i = 0; i < kProbeBatch; ++i) probe.batch.labels.push_back(rng.below(classes));
    return probe;
}

using BatchLoss = std::function<LossResult(const LabeledBatch&)>;

}  // namespace

bool GradcheckReport::passed(double tolerance) const {
    return std::all_of(losses.begin(), losses.end(), [&](const LossCheck& c) { return c.passed(tolerance); });
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
    const InterpolationWeight weight(options.lambda);
    const std::vector<std::pair<std::string, BatchLoss>> losses = {
        {"kl", [](const LabeledBatch& b) { return kl_loss(b); }},
        {"soft_ts", [](const LabeledBatch& b) { return soft_ts_loss(b); }},
        {"hard_ce", [](const LabeledBatch& b) { return hard_ce_loss(b); }},
        {"interpolated", [weight](const LabeledBatch& b) { return interpolated_loss(b, weight); }},
        {"conditional",
         [](const LabeledBatch& b) {
             return conditional_loss(conditional_targets(b.teacher_posteriors, b.labels), b.student_logits);
         }},
    };

    GradcheckReport report;
    for (const auto& [name, _] : losses) report.losses.push_back({name, 0.0, 0, {}});

    for (std::size_t n = 0; n < options.nets; ++n) {
        const Probe probe = make_probe(options.seed, n);
        for (std::size_t k = 0; k < losses.size(); ++k) {
            const BatchLoss& batch_loss = losses[k].second;
            const LogitLoss loss = [&](const Matrix& logits) {
                LabeledBatch b = probe.batch;
                b.student_logits = logits;
                return batch_loss(b);
            };
            const ForwardResult fwd = forward(probe.net, probe.inputs);
            Gradients analytic = backward(probe.net, fwd.trace, loss(fwd.logits).grad);
            if (options.gradient_scale != 1.0) analytic.scale(options.gradient_scale);
            const double err = grad_check(probe.net, probe.inputs, loss, options.step, analytic);

            LossCheck& check = report.losses[k];
            check.per_net.push_back(err);
            if (err > check.worst_error || n == 0) {
                check.worst_error = err;
                check.worst_net = n;
            }
        }
    }
    return report;
}

std::string format_gradcheck(const GradcheckReport& report, double tolerance) {
    std::string out;
    char line[160];
    for (const auto& c : report.losses) {
        std::snprintf(line, sizeof(line), "%-13s worst relative error %.3e (net %zu)  %s\n", c.loss.c_str(),
                      c.worst_error, c.worst_net, c.passed(tolerance) ? "ok" : "FAIL");
        out += line;
    }
    std::snprintf(line, sizeof(line), "tolerance %.0e: %s\n", tolerance, report.passed(tolerance) ? "pass" : "fail");
    out += line;
    return out;
}

}  // namespace distilkit
