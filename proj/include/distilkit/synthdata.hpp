#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "distilkit/matrix.hpp"

namespace distilkit {

/// Features with one class label per row.
struct Dataset {
    Matrix features;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Index-aligned pairs: row i of `source` (teacher input) and row i of
/// `target` (student input) share label i.
struct ParallelDataset {
    Matrix source;
    Matrix target;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    void validate() const;

    friend bool operator==(const ParallelDataset&, const ParallelDataset&) = default;
};

/// Same features on both sides; the speaker-adaptation layout.
ParallelDataset self_parallel(const Dataset& data);

struct DatasetSpec {
    std::size_t num_classes = 4;
    std::size_t feature_dim = 8;
    std::size_t samples_per_class = 500;
    double class_separation = 6.0;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class CorruptionKind { AdditiveGaussian, AffineShift, FeatureDropout };

std::string to_string(CorruptionKind kind);
CorruptionKind corruption_from_string(const std::string& name);

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::AdditiveGaussian;
    double severity = 0.0;
    std::uint64_t seed = 0;
};

struct SpeakerSpec {
    std::size_t speaker_id = 0;
    std::vector<double> scale;   // per-feature multiplier
    std::vector<double> offset;  // added after scaling
    std::size_t n_adapt = 200;
    std::size_t n_test = 400;
    std::uint64_t seed = 0;
};

/// Class means for a spec: pairwise distance >= class_separation, fixed by seed.
Matrix class_means(const DatasetSpec& spec);

/// Unit-variance isotropic Gaussian clusters, balanced; row i has label i % C.
Dataset make_clean(const DatasetSpec& spec);

/// Fresh draws from the clusters of `spec` using an independent stream
/// (`purpose`, `count` samples in total, labels cycling through the classes).
Dataset sample_clusters(const DatasetSpec& spec, std::size_t count, const std::string& purpose);

/// x_T = original features, x_S = corrupted copy; labels and order preserved.
ParallelDataset corrupt(const Dataset& clean, const CorruptionSpec& spec);

struct SpeakerData {
    SpeakerSpec spec;
    Dataset adapt;
    Dataset test;
};

/// Applies the speaker's affine transform to fresh draws from the base clusters.
SpeakerData make_speaker(const DatasetSpec& base, const SpeakerSpec& speaker);

/// Random speaker: per-feature scale in [scale_lo, scale_hi], offset of the given norm.
SpeakerSpec random_speaker(std::size_t id, std::size_t feature_dim, double scale_lo, double scale_hi,
                           double offset_norm, std::size_t n_adapt, std::size_t n_test,
                           std::uint64_t seed);

struct DomainScenario {
    DatasetSpec spec;
    CorruptionSpec corruption;
    Dataset teacher_train;      // clean training set
    ParallelDataset parallel;   // clean/noisy pairs of the training set
    Dataset clean_test;
    Dataset noisy_test;
};

struct SpeakerScenario {
    DatasetSpec spec;
    Dataset teacher_train;
    Dataset clean_test;
    std::vector<SpeakerData> speakers;
};

struct BenchmarkSuite {
    DomainScenario domain;
    SpeakerScenario speaker;
};

// Canonical scenario constants.
inline constexpr std::size_t kBenchClasses = 4;
inline constexpr std::size_t kBenchDim = 8;
inline constexpr double kBenchSeparation = 6.0;
inline constexpr double kDomainNoiseSeverity = 3.0;
inline constexpr std::size_t kBenchTrainPerClass = 500;
inline constexpr std::size_t kBenchTestPerClass = 200;
inline constexpr std::size_t kSpeakers = 5;
inline constexpr double kSpeakerScaleLo = 0.8;
inline constexpr double kSpeakerScaleHi = 1.25;
inline constexpr double kSpeakerOffsetNorm = 2.0;
inline constexpr std::size_t kSpeakerAdapt = 200;
inline constexpr std::size_t kSpeakerTest = 400;

DomainScenario domain_scenario(std::uint64_t seed);
SpeakerScenario speaker_scenario(std::uint64_t seed);
BenchmarkSuite benchmark_suite(std::uint64_t seed);

}  // namespace distilkit
