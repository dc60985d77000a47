#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "distilkit/network.hpp"
#include "distilkit/synthdata.hpp"

namespace distilkit {

enum class AdaptMode { SoftOnly, Interpolated, Conditional, HardOnly, WrongOnly };

std::string to_string(AdaptMode mode);
AdaptMode adapt_mode_from_string(const std::string& name);

struct AdaptationSchedule {
    std::size_t warmup_epochs = 0;       // soft T/S epochs before the main phase (domain only)
    std::size_t conditional_epochs = 20;  // main-phase epochs, trained with `mode`
    double lr = 0.05;
    std::size_t batch_size = 32;
    AdaptMode mode = AdaptMode::Conditional;
    double lambda = 0.5;       // interpolated mode only
    double temperature = 1.0;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class Phase { Warmup, Main };

struct EpochStats {
    std::size_t epoch = 0;
    Phase phase = Phase::Main;
    double loss = 0.0;              // sample-weighted mean of minibatch losses
    double teacher_accuracy = 0.0;  // over the samples visited this epoch
    double soft_fraction = 0.0;     // mean weight of teacher posteriors in the targets
    std::size_t samples = 0;

    friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct SplitAccuracy {
    std::string split;
    double accuracy = 0.0;

    friend bool operator==(const SplitAccuracy&, const SplitAccuracy&) = default;
};

struct AdaptationReport {
    std::vector<EpochStats> epochs;
    Network student;
    double teacher_train_accuracy = 0.0;  // teacher on the training inputs it sees, vs labels
    std::vector<SplitAccuracy> evaluations;

    double final_loss() const noexcept { return epochs.empty() ? 0.0 : epochs.back().loss; }
    double final_soft_fraction() const noexcept { return epochs.empty() ? 0.0 : epochs.back().soft_fraction; }

    friend bool operator==(const AdaptationReport&, const AdaptationReport&) = default;
};

/// Per-minibatch event, for callers that want to watch target selection.
struct BatchEvent {
    std::size_t epoch;
    Phase phase;
    std::size_t batch_size;
    double loss;
    double teacher_accuracy;
    double soft_fraction;
};

using BatchObserver = std::function<void(const BatchEvent&)>;

Network init_student_from_teacher(const Network& teacher);

/// Domain adaptation on parallel data: warmup_epochs of soft T/S (teacher sees
/// `source`, student sees `target`), then conditional_epochs with `mode`.
AdaptationReport domain_adapt(const Network& teacher, const ParallelDataset& data,
                              const AdaptationSchedule& schedule, const BatchObserver& observer = {});

/// Speaker adaptation: both networks see the same features, no warmup.
AdaptationReport speaker_adapt(const Network& teacher, const Dataset& data,
                               const AdaptationSchedule& schedule, const BatchObserver& observer = {});

/// Appends (x_T, x_T, label) for every sample; size doubles.
ParallelDataset augment_with_source_pairs(const ParallelDataset& data);

/// Teacher argmax per row at temperature 1, lowest index on ties.
std::vector<std::size_t> generate_pseudo_labels(const Network& teacher, const Matrix& features);

double evaluate(const Network& net, const Matrix& features, std::span<const std::size_t> labels);

struct TrainOptions {
    std::size_t epochs = 100;
    double lr = 0.1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

/// Plain hard-label cross-entropy SGD; used to train teachers. Returns the
/// per-epoch mean loss.
std::vector<double> train_classifier(Network& net, const Dataset& data, const TrainOptions& options);

/// Deterministic permutation of [0, n) for the given epoch.
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n);

}  // namespace distilkit
