#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "distilkit/matrix.hpp"
#include "distilkit/network.hpp"

namespace distilkit {

/// A categorical distribution: entries in [0, 1], summing to 1 within 1e-12.
class ProbVector {
public:
    explicit ProbVector(std::vector<double> probs);
    explicit ProbVector(std::span<const double> probs)
        : ProbVector(std::vector<double>(probs.begin(), probs.end())) {}

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t c) const { return probs_[c]; }
    std::span<const double> values() const noexcept { return probs_; }

    friend bool operator==(const ProbVector&, const ProbVector&) = default;

private:
    std::vector<double> probs_;
};

/// Weight on the teacher posteriors in the interpolated target, 0 <= lambda <= 1.
class InterpolationWeight {
public:
    explicit InterpolationWeight(double lambda);
    double value() const noexcept { return lambda_; }

private:
    double lambda_;
};

/// Per-sample training target chosen by the teacher-correctness test: the
/// teacher posteriors when the teacher's argmax matches the label, the
/// one-hot label otherwise.
class ConditionalTarget {
public:
    static ConditionalTarget soft(ProbVector teacher_posteriors);
    static ConditionalTarget hard(std::size_t label, std::size_t num_classes);

    bool teacher_correct() const noexcept { return std::holds_alternative<ProbVector>(value_); }
    bool is_soft() const noexcept { return teacher_correct(); }
    std::size_t num_classes() const noexcept;

    /// Teacher posteriors for the soft branch, nullptr otherwise.
    const ProbVector* soft_posteriors() const noexcept { return std::get_if<ProbVector>(&value_); }
    std::optional<std::size_t> hard_label() const noexcept;

    /// Dense target vector y_i.
    void write_to(std::span<double> out) const;
    std::vector<double> dense() const;

private:
    struct Hard {
        std::size_t label;
        std::size_t num_classes;
    };

    explicit ConditionalTarget(std::variant<ProbVector, Hard> v) : value_(std::move(v)) {}

    std::variant<ProbVector, Hard> value_;
};

struct LabeledBatch {
    Matrix teacher_posteriors;       // N x D_C, rows are distributions
    std::vector<std::size_t> labels;  // N ground-truth classes
    Matrix student_logits;           // N x D_C

    void validate() const;
};

inline constexpr double kLogFloor = 1e-30;

double kl_divergence(const ProbVector& p, const ProbVector& q);
double entropy(const ProbVector& p);

/// Mean cross-entropy against arbitrary target rows; the shared kernel of every
/// loss below. Student probabilities are softmax(logits / temperature) and the
/// gradient is (probs - targets) / (N * temperature) per row.
LossResult cross_entropy_to_targets(const Matrix& targets, const Matrix& student_logits,
                                    double temperature = 1.0);

/// Mean KL(teacher || student) over the batch. Differs from soft_ts_loss only
/// by the teacher entropy, so the gradient is the same.
LossResult kl_loss(const LabeledBatch& batch, double temperature = 1.0);

LossResult soft_ts_loss(const LabeledBatch& batch, double temperature = 1.0);
LossResult hard_ce_loss(const LabeledBatch& batch);
LossResult hard_ce_loss(std::span<const std::size_t> labels, const Matrix& student_logits);
LossResult interpolated_loss(const LabeledBatch& batch, InterpolationWeight weight,
                             double temperature = 1.0);

/// Soft target when argmax(teacher) == label (lowest index wins ties), hard otherwise.
std::vector<ConditionalTarget> conditional_targets(const Matrix& teacher_posteriors,
                                                   std::span<const std::size_t> labels);

/// Judges correctness on `judge_posteriors` but takes soft targets from
/// `soft_posteriors`; used when a temperature flattens the soft targets.
std::vector<ConditionalTarget> conditional_targets(const Matrix& judge_posteriors,
                                                   std::span<const std::size_t> labels,
                                                   const Matrix& soft_posteriors);

LossResult conditional_loss(std::span<const ConditionalTarget> targets, const Matrix& student_logits,
                            double temperature = 1.0);

/// Fraction of rows whose argmax equals the label.
double teacher_accuracy(const Matrix& teacher_posteriors, std::span<const std::size_t> labels);

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

}  // namespace distilkit
