#include "distilkit/adaptation.hpp"

#include <cmath>
#include <numeric>

#include "distilkit/errors.hpp"
#include "distilkit/losses.hpp"

namespace distilkit {

std::string to_string(AdaptMode mode) {
    switch (mode) {
        case AdaptMode::SoftOnly: return "soft_only";
        case AdaptMode::Interpolated: return "interpolated";
        case AdaptMode::Conditional: return "conditional";
        case AdaptMode::HardOnly: return "hard_only";
        case AdaptMode::WrongOnly: return "wrong_only";
    }
    return "conditional";
}

AdaptMode adapt_mode_from_string(const std::string& name) {
    if (name == "soft_only") return AdaptMode::SoftOnly;
    if (name == "interpolated") return AdaptMode::Interpolated;
    if (name == "conditional") return AdaptMode::Conditional;
    if (name == "hard_only") return AdaptMode::HardOnly;
    if (name == "wrong_only") return AdaptMode::WrongOnly;
    throw InvalidParameter("unknown adaptation mode '" + name + "'");
}

void AdaptationSchedule::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidParameter("lr must be positive");
    if (batch_size == 0) throw InvalidParameter("batch_size must be positive");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InvalidParameter("temperature must be positive");
    }
    if (mode == AdaptMode::Interpolated) static_cast<void>(InterpolationWeight(lambda));
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng(seed).stream("shuffle", epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

Network init_student_from_teacher(const Network& teacher) { return teacher; }

namespace {

struct PhaseSpec {
    Phase phase;
    AdaptMode mode;
    std::size_t epochs;
};

class AdaptationRun {
public:
    AdaptationRun(const Network& teacher, const ParallelDataset& data, const AdaptationSchedule& schedule,
                  const BatchObserver& observer, std::size_t first_epoch)
        : teacher_(teacher), data_(data), schedule_(schedule), observer_(observer), next_epoch_(first_epoch) {}

    void run(const PhaseSpec& spec, Network& student, AdaptationReport& report) {
        for (std::size_t e = 0; e < spec.epochs; ++e) {
            report.epochs.push_back(run_epoch(spec, next_epoch_++, student));
        }
    }

private:
    EpochStats run_epoch(const PhaseSpec& spec, std::size_t epoch, Network& student) {
        const std::size_t n = data_.size();
        const auto order = epoch_order(schedule_.seed, epoch, n);
        EpochStats stats;
        stats.epoch = epoch;
        stats.phase = spec.phase;

        double loss_sum = 0.0;
        double correct_sum = 0.0;
        double soft_sum = 0.0;
        for (std::size_t start = 0; start < n; start += schedule_.batch_size) {
            const std::size_t stop = std::min(n, start + schedule_.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            const BatchEvent event = run_batch(spec, epoch, idx, student);
            const double bs = static_cast<double>(idx.size());
            loss_sum += event.loss * bs;
            correct_sum += event.teacher_accuracy * bs;
            soft_sum += event.soft_fraction * bs;
            if (observer_) observer_(event);
        }
        stats.samples = n;
        if (n > 0) {
            stats.loss = loss_sum / static_cast<double>(n);
            stats.teacher_accuracy = correct_sum / static_cast<double>(n);
            stats.soft_fraction = soft_sum / static_cast<double>(n);
        }
        return stats;
    }

    BatchEvent run_batch(const PhaseSpec& spec, std::size_t epoch, std::span<const std::size_t> idx,
                         Network& student) {
        const double temperature = schedule_.temperature;
        LabeledBatch batch;
        batch.labels.reserve(idx.size());
        for (std::size_t i : idx) batch.labels.push_back(data_.labels[i]);

        // The teacher is frozen, so recomputing its posteriors per batch is exact.
        const Matrix teacher_logits = logits_of(teacher_, data_.source.gather_rows(idx));
        const Matrix judge = softmax(teacher_logits, 1.0);
        batch.teacher_posteriors = temperature == 1.0 ? judge : softmax(teacher_logits, temperature);

        ForwardResult fwd = forward(student, data_.target.gather_rows(idx));
        batch.student_logits = std::move(fwd.logits);

        BatchEvent event{epoch, spec.phase, idx.size(), 0.0, teacher_accuracy(judge, batch.labels), 0.0};
        LossResult result;
        switch (spec.mode) {
            case AdaptMode::SoftOnly:
                result = soft_ts_loss(batch, temperature);
                event.soft_fraction = 1.0;
                break;
            case AdaptMode::HardOnly:
            case AdaptMode::WrongOnly:
                result = hard_ce_loss(batch);
                event.soft_fraction = 0.0;
                break;
            case AdaptMode::Interpolated:
                result = interpolated_loss(batch, InterpolationWeight(schedule_.lambda), temperature);
                event.soft_fraction = schedule_.lambda;
                break;
            case AdaptMode::Conditional: {
                const auto targets = conditional_targets(judge, batch.labels, batch.teacher_posteriors);
                std::size_t soft = 0;
                for (const auto& t : targets) soft += t.is_soft() ? 1 : 0;
                event.soft_fraction = static_cast<double>(soft) / static_cast<double>(targets.size());
                result = conditional_loss(targets, batch.student_logits, temperature);
                break;
            }
        }
        event.loss = result.loss;
        if (!std::isfinite(result.loss)) throw DivergenceError("non-finite training loss", epoch);

        const Gradients grads = backward(student, fwd.trace, result.grad);
        if (!grads.all_finite()) throw DivergenceError("non-finite gradient", epoch);
        sgd_step(student, grads, schedule_.lr);
        if (!student.all_finite()) throw DivergenceError("non-finite parameters", epoch);
        return event;
    }

    const Network& teacher_;
    const ParallelDataset& data_;
    const AdaptationSchedule& schedule_;
    const BatchObserver& observer_;
    std::size_t next_epoch_;
};

void check_compatible(const Network& teacher, const ParallelDataset& data) {
    if (data.size() == 0) throw InvalidParameter("adaptation data is empty");
    data.validate();
    if (teacher.output_dim() != data.num_classes) {
        throw DimensionError("teacher has " + std::to_string(teacher.output_dim()) + " outputs, data has " +
                             std::to_string(data.num_classes) + " classes");
    }
    if (data.source.cols() != teacher.input_dim() || data.target.cols() != teacher.input_dim()) {
        throw DimensionError("feature dimension does not match the teacher input");
    }
}

// Samples the frozen teacher gets wrong; fixed for the whole run.
ParallelDataset mistakes_only(const Network& teacher, const ParallelDataset& data) {
    const auto predicted = argmax_rows(softmax(logits_of(teacher, data.source), 1.0));
    std::vector<std::size_t> wrong;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (predicted[i] != data.labels[i]) wrong.push_back(i);
    ParallelDataset subset{data.source.gather_rows(wrong), data.target.gather_rows(wrong), {}, data.num_classes};
    for (std::size_t i : wrong) subset.labels.push_back(data.labels[i]);
    return subset;
}

AdaptationReport adapt(const Network& teacher, const ParallelDataset& data, const AdaptationSchedule& schedule,
                       const BatchObserver& observer) {
    const Matrix judge = softmax(logits_of(teacher, data.source), 1.0);
    AdaptationReport report;
    report.teacher_train_accuracy = teacher_accuracy(judge, data.labels);
    report.student = init_student_from_teacher(teacher);

    if (schedule.warmup_epochs > 0) {
        AdaptationRun warmup(teacher, data, schedule, observer, 0);
        warmup.run({Phase::Warmup, AdaptMode::SoftOnly, schedule.warmup_epochs}, report.student, report);
    }
    const ParallelDataset subset =
        schedule.mode == AdaptMode::WrongOnly ? mistakes_only(teacher, data) : ParallelDataset{};
    const ParallelDataset& main_data = schedule.mode == AdaptMode::WrongOnly ? subset : data;
    // The shuffle stream's epoch index keeps running across phases.
    AdaptationRun main(teacher, main_data, schedule, observer, schedule.warmup_epochs);
    main.run({Phase::Main, schedule.mode, schedule.conditional_epochs}, report.student, report);
    return report;
}

}  // namespace

AdaptationReport domain_adapt(const Network& teacher, const ParallelDataset& data,
                              const AdaptationSchedule& schedule, const BatchObserver& observer) {
    schedule.validate();
    check_compatible(teacher, data);
    return adapt(teacher, data, schedule, observer);
}

AdaptationReport speaker_adapt(const Network& teacher, const Dataset& data, const AdaptationSchedule& schedule,
                               const BatchObserver& observer) {
    schedule.validate();
    if (schedule.warmup_epochs != 0) {
        throw InvalidParameter("speaker adaptation has no warmup phase; set warmup_epochs to 0");
    }
    const ParallelDataset pairs = self_parallel(data);
    check_compatible(teacher, pairs);
    return adapt(teacher, pairs, schedule, observer);
}

ParallelDataset augment_with_source_pairs(const ParallelDataset& data) {
    data.validate();
    const std::size_t n = data.size();
    const std::size_t dt = data.source.cols();
    if (n > 0 && dt != data.target.cols()) {
        throw DimensionError("source pairs need equal teacher and student feature dims");
    }
    ParallelDataset out{Matrix(2 * n, dt), Matrix(2 * n, dt), data.labels, data.num_classes};
    out.labels.insert(out.labels.end(), data.labels.begin(), data.labels.end());
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(data.source.row(i).begin(), dt, out.source.row(i).begin());
        std::copy_n(data.source.row(i).begin(), dt, out.source.row(n + i).begin());
        std::copy_n(data.target.row(i).begin(), dt, out.target.row(i).begin());
        std::copy_n(data.source.row(i).begin(), dt, out.target.row(n + i).begin());
    }
    return out;
}

std::vector<std::size_t> generate_pseudo_labels(const Network& teacher, const Matrix& features) {
    return argmax_rows(softmax(logits_of(teacher, features), 1.0));
}

double evaluate(const Network& net, const Matrix& features, std::span<const std::size_t> labels) {
    if (labels.empty()) throw InvalidParameter("cannot evaluate on an empty set");
    if (features.rows() != labels.size()) throw DimensionError("features and labels differ in count");
    return teacher_accuracy(softmax(logits_of(net, features), 1.0), labels);
}

std::vector<double> train_classifier(Network& net, const Dataset& data, const TrainOptions& options) {
    data.validate();
    if (data.size() == 0) throw InvalidParameter("training data is empty");
    if (options.batch_size == 0) throw InvalidParameter("batch_size must be positive");
    std::vector<double> history;
    const std::size_t n = data.size();
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const auto order = epoch_order(options.seed, epoch, n);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += options.batch_size) {
            const std::size_t stop = std::min(n, start + options.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            std::vector<std::size_t> labels;
            for (std::size_t i : idx) labels.push_back(data.labels[i]);
            const ForwardResult fwd = forward(net, data.features.gather_rows(idx));
            const LossResult result = hard_ce_loss(labels, fwd.logits);
            if (!std::isfinite(result.loss)) throw DivergenceError("non-finite training loss", epoch);
            const Gradients grads = backward(net, fwd.trace, result.grad);
            if (!grads.all_finite()) throw DivergenceError("non-finite gradient", epoch);
            sgd_step(net, grads, options.lr);
            if (!net.all_finite()) throw DivergenceError("non-finite parameters", epoch);
            loss_sum += result.loss * static_cast<double>(idx.size());
        }
        history.push_back(loss_sum / static_cast<double>(n));
    }
    return history;
}

}  // namespace distilkit
