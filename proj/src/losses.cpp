#include "distilkit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "distilkit/errors.hpp"

namespace distilkit {

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
    double total = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw InvalidParameter("probability entry outside [0, 1]");
        }
        total += p;
    }
    if (probs_.empty() || std::abs(total - 1.0) > 1e-12) {
        throw InvalidParameter("probabilities do not sum to 1");
    }
}

InterpolationWeight::InterpolationWeight(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParameter("lambda must lie in [0, 1]");
}

ConditionalTarget ConditionalTarget::soft(ProbVector teacher_posteriors) {
    return ConditionalTarget(std::move(teacher_posteriors));
}

ConditionalTarget ConditionalTarget::hard(std::size_t label, std::size_t num_classes) {
    if (label >= num_classes) throw InvalidParameter("label out of range");
    return ConditionalTarget(Hard{label, num_classes});
}

std::size_t ConditionalTarget::num_classes() const noexcept {
    if (const auto* p = std::get_if<ProbVector>(&value_)) return p->size();
    return std::get<Hard>(value_).num_classes;
}

std::optional<std::size_t> ConditionalTarget::hard_label() const noexcept {
    if (const auto* h = std::get_if<Hard>(&value_)) return h->label;
    return std::nullopt;
}

void ConditionalTarget::write_to(std::span<double> out) const {
    if (out.size() != num_classes()) throw DimensionError("target width mismatch");
    if (const auto* p = std::get_if<ProbVector>(&value_)) {
        std::copy(p->values().begin(), p->values().end(), out.begin());
    } else {
        std::fill(out.begin(), out.end(), 0.0);
        out[std::get<Hard>(value_).label] = 1.0;
    }
}

std::vector<double> ConditionalTarget::dense() const {
    std::vector<double> out(num_classes());
    write_to(out);
    return out;
}

void LabeledBatch::validate() const {
    const std::size_t n = labels.size();
    if (teacher_posteriors.rows() != n || student_logits.rows() != n) {
        throw DimensionError("batch parts disagree on size: teacher " +
                             std::to_string(teacher_posteriors.rows()) + ", labels " +
                             std::to_string(n) + ", student " + std::to_string(student_logits.rows()));
    }
    if (teacher_posteriors.cols() != student_logits.cols()) {
        throw DimensionError("teacher and student class counts differ");
    }
    for (std::size_t c : labels)
        if (c >= student_logits.cols()) throw InvalidParameter("label out of range");
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) throw DimensionError("KL operands differ in length");
    double kl = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (p[c] == 0.0) continue;
        kl += p[c] * (std::log(p[c]) - std::log(std::max(q[c], kLogFloor)));
    }
    return kl;
}

double entropy(const ProbVector& p) {
    double h = 0.0;
    for (double v : p.values())
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
    Matrix out(labels.size(), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) throw InvalidParameter("label out of range");
        out(i, labels[i]) = 1.0;
    }
    return out;
}

LossResult cross_entropy_to_targets(const Matrix& targets, const Matrix& student_logits,
                                    double temperature) {
    if (targets.rows() != student_logits.rows() || targets.cols() != student_logits.cols()) {
        throw DimensionError("targets " + shape_string(targets) + " vs logits " +
                             shape_string(student_logits));
    }
    const std::size_t n = targets.rows();
    if (n == 0) throw DimensionError("empty batch");

    const Matrix probs = softmax(student_logits, temperature);
    const double scale = 1.0 / (static_cast<double>(n) * temperature);
    LossResult result;
    result.grad = Matrix(n, targets.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = targets.row(i);
        const auto q = probs.row(i);
        auto g = result.grad.row(i);
        double row_loss = 0.0;
        for (std::size_t c = 0; c < y.size(); ++c) {
            row_loss -= y[c] * std::log(std::max(q[c], kLogFloor));
            g[c] = (q[c] - y[c]) * scale;
        }
        total += row_loss;
    }
    result.loss = total / static_cast<double>(n);
    return result;
}

LossResult soft_ts_loss(const LabeledBatch& batch, double temperature) {
    batch.validate();
    return cross_entropy_to_targets(batch.teacher_posteriors, batch.student_logits, temperature);
}

LossResult kl_loss(const LabeledBatch& batch, double temperature) {
    LossResult result = soft_ts_loss(batch, temperature);
    double teacher_entropy = 0.0;
    for (std::size_t i = 0; i < batch.labels.size(); ++i) {
        for (double p : batch.teacher_posteriors.row(i))
            if (p > 0.0) teacher_entropy -= p * std::log(p);
    }
    result.loss -= teacher_entropy / static_cast<double>(batch.labels.size());
    return result;
}

LossResult hard_ce_loss(const LabeledBatch& batch) {
    batch.validate();
    return hard_ce_loss(batch.labels, batch.student_logits);
}

LossResult hard_ce_loss(std::span<const std::size_t> labels, const Matrix& student_logits) {
    if (labels.size() != student_logits.rows()) throw DimensionError("label count mismatch");
    return cross_entropy_to_targets(one_hot(labels, student_logits.cols()), student_logits, 1.0);
}

LossResult interpolated_loss(const LabeledBatch& batch, InterpolationWeight weight,
                             double temperature) {
    batch.validate();
    const double lambda = weight.value();
    Matrix mixed = one_hot(batch.labels, batch.student_logits.cols());
    const auto teacher = batch.teacher_posteriors.data();
    auto target = mixed.data();
    for (std::size_t k = 0; k < target.size(); ++k) {
        target[k] = (1.0 - lambda) * target[k] + lambda * teacher[k];
    }
    return cross_entropy_to_targets(mixed, batch.student_logits, temperature);
}

std::vector<ConditionalTarget> conditional_targets(const Matrix& teacher_posteriors,
                                                   std::span<const std::size_t> labels) {
    return conditional_targets(teacher_posteriors, labels, teacher_posteriors);
}

std::vector<ConditionalTarget> conditional_targets(const Matrix& judge_posteriors,
                                                   std::span<const std::size_t> labels,
                                                   const Matrix& soft_posteriors) {
    if (judge_posteriors.rows() != labels.size() || soft_posteriors.rows() != labels.size() ||
        judge_posteriors.cols() != soft_posteriors.cols()) {
        throw DimensionError("teacher posteriors and labels differ in batch size");
    }
    const std::size_t classes = judge_posteriors.cols();
    std::vector<ConditionalTarget> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) {
            throw InvalidParameter("label " + std::to_string(labels[i]) + " out of range for " +
                                   std::to_string(classes) + " classes");
        }
        if (argmax(judge_posteriors.row(i)) == labels[i]) {
            out.push_back(ConditionalTarget::soft(ProbVector(soft_posteriors.row(i))));
        } else {
            out.push_back(ConditionalTarget::hard(labels[i], classes));
        }
    }
    return out;
}

LossResult conditional_loss(std::span<const ConditionalTarget> targets, const Matrix& student_logits,
                            double temperature) {
    if (targets.size() != student_logits.rows()) throw DimensionError("target count mismatch");
    Matrix dense(targets.size(), student_logits.cols());
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i].write_to(dense.row(i));
    return cross_entropy_to_targets(dense, student_logits, temperature);
}

double teacher_accuracy(const Matrix& teacher_posteriors, std::span<const std::size_t> labels) {
    if (labels.empty()) throw InvalidParameter("accuracy of an empty batch is undefined");
    if (teacher_posteriors.rows() != labels.size()) throw DimensionError("batch size mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax(teacher_posteriors.row(i)) == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace distilkit
