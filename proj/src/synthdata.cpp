#include "distilkit/synthdata.hpp"

#include <cmath>

#include "distilkit/errors.hpp"
#include "distilkit/random.hpp"

namespace distilkit {

void Dataset::validate() const {
    if (features.rows() != labels.size()) throw DimensionError("features and labels differ in count");
    for (std::size_t c : labels)
        if (c >= num_classes) throw InvalidParameter("label out of range");
}

void ParallelDataset::validate() const {
    if (source.rows() != labels.size() || target.rows() != labels.size()) {
        throw DimensionError("parallel streams are not index-aligned");
    }
    for (std::size_t c : labels)
        if (c >= num_classes) throw InvalidParameter("label out of range");
}

ParallelDataset self_parallel(const Dataset& data) {
    return {data.features, data.features, data.labels, data.num_classes};
}

void DatasetSpec::validate() const {
    if (num_classes < 2) throw InvalidParameter("need at least two classes");
    if (feature_dim == 0) throw InvalidParameter("feature_dim must be positive");
    if (!(class_separation > 0.0)) throw InvalidParameter("class_separation must be positive");
}

std::string to_string(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::AdditiveGaussian: return "additive_gaussian";
        case CorruptionKind::AffineShift: return "affine_shift";
        case CorruptionKind::FeatureDropout: return "feature_dropout";
    }
    return "additive_gaussian";
}

CorruptionKind corruption_from_string(const std::string& name) {
    if (name == "additive_gaussian") return CorruptionKind::AdditiveGaussian;
    if (name == "affine_shift") return CorruptionKind::AffineShift;
    if (name == "feature_dropout") return CorruptionKind::FeatureDropout;
    throw InvalidParameter("unknown corruption kind '" + name + "'");
}

Matrix class_means(const DatasetSpec& spec) {
    spec.validate();
    const std::size_t k = spec.num_classes;
    const std::size_t d = spec.feature_dim;
    Rng rng = Rng(spec.seed).stream("class-means");
    Matrix means(k, d);

    if (k <= d) {
        // Random orthonormal frame scaled so every pair sits exactly at the separation.
        for (std::size_t c = 0; c < k; ++c) {
            auto v = means.row(c);
            for (;;) {
                for (double& x : v) x = rng.normal();
                for (std::size_t p = 0; p < c; ++p) {
                    const auto u = means.row(p);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < d; ++j) dot += u[j] * v[j];
                    for (std::size_t j = 0; j < d; ++j) v[j] -= dot * u[j];
                }
                double norm = 0.0;
                for (double x : v) norm += x * x;
                norm = std::sqrt(norm);
                if (norm > 1e-6) {
                    for (double& x : v) x /= norm;
                    break;
                }
            }
        }
        const double radius = spec.class_separation / std::sqrt(2.0);
        for (double& x : means.data()) x *= radius;
        return means;
    }

    // More classes than dimensions: rejection-sample centres in a cube.
    const double half_width = spec.class_separation * std::pow(static_cast<double>(k), 1.0 / d);
    for (std::size_t c = 0; c < k; ++c) {
        for (;;) {
            auto v = means.row(c);
            for (double& x : v) x = rng.uniform(-half_width, half_width);
            bool ok = true;
            for (std::size_t p = 0; p < c && ok; ++p) {
                double dist2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = v[j] - means(p, j);
                    dist2 += diff * diff;
                }
                ok = dist2 >= spec.class_separation * spec.class_separation;
            }
            if (ok) break;
        }
    }
    return means;
}

Dataset sample_clusters(const DatasetSpec& spec, std::size_t count, const std::string& purpose) {
    const Matrix means = class_means(spec);
    Rng rng = Rng(spec.seed).stream(purpose);
    Dataset out{Matrix(count, spec.feature_dim), std::vector<std::size_t>(count), spec.num_classes};
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t c = i % spec.num_classes;
        out.labels[i] = c;
        auto x = out.features.row(i);
        for (std::size_t j = 0; j < spec.feature_dim; ++j) x[j] = means(c, j) + rng.normal();
    }
    return out;
}

Dataset make_clean(const DatasetSpec& spec) {
    return sample_clusters(spec, spec.num_classes * spec.samples_per_class, "clean");
}

ParallelDataset corrupt(const Dataset& clean, const CorruptionSpec& spec) {
    if (!(spec.severity >= 0.0)) throw InvalidParameter("severity must be non-negative");
    clean.validate();
    ParallelDataset out{clean.features, clean.features, clean.labels, clean.num_classes};
    if (spec.severity == 0.0) return out;

    Rng rng = Rng(spec.seed).stream("corrupt", static_cast<std::uint64_t>(spec.kind));
    const std::size_t d = clean.features.cols();
    switch (spec.kind) {
        case CorruptionKind::AdditiveGaussian:
            for (double& x : out.target.data()) x += spec.severity * rng.normal();
            break;
        case CorruptionKind::AffineShift: {
            // One fixed channel distortion for the whole set.
            std::vector<double> gain(d), bias(d);
            for (std::size_t j = 0; j < d; ++j) {
                gain[j] = 1.0 + spec.severity * rng.uniform(-0.5, 0.5);
                bias[j] = spec.severity * rng.normal();
            }
            for (std::size_t i = 0; i < out.target.rows(); ++i) {
                auto x = out.target.row(i);
                for (std::size_t j = 0; j < d; ++j) x[j] = gain[j] * x[j] + bias[j];
            }
            break;
        }
        case CorruptionKind::FeatureDropout: {
            const double p = std::min(spec.severity, 1.0);
            for (double& x : out.target.data())
                if (rng.uniform() < p) x = 0.0;
            break;
        }
    }
    return out;
}

SpeakerSpec random_speaker(std::size_t id, std::size_t feature_dim, double scale_lo, double scale_hi,
                           double offset_norm, std::size_t n_adapt, std::size_t n_test,
                           std::uint64_t seed) {
    Rng rng = Rng(seed).stream("speaker", id);
    SpeakerSpec spk;
    spk.speaker_id = id;
    spk.n_adapt = n_adapt;
    spk.n_test = n_test;
    spk.seed = rng.next_u64();
    spk.scale.resize(feature_dim);
    for (double& s : spk.scale) s = rng.uniform(scale_lo, scale_hi);
    spk.offset.resize(feature_dim);
    double norm = 0.0;
    for (double& o : spk.offset) {
        o = rng.normal();
        norm += o * o;
    }
    norm = std::sqrt(norm);
    for (double& o : spk.offset) o *= offset_norm / norm;
    return spk;
}

SpeakerData make_speaker(const DatasetSpec& base, const SpeakerSpec& speaker) {
    base.validate();
    if (speaker.n_adapt == 0 || speaker.n_test == 0) throw InvalidParameter("speaker sets must be non-empty");
    if (speaker.scale.size() != base.feature_dim || speaker.offset.size() != base.feature_dim) {
        throw DimensionError("speaker transform does not match feature_dim");
    }
    // Cluster means come from the base seed; only the draws use the speaker's streams.
    const Matrix means = class_means(base);
    auto sample = [&](std::size_t count, const char* purpose) {
        Rng rng = Rng(speaker.seed).stream(purpose);
        Dataset out{Matrix(count, base.feature_dim), std::vector<std::size_t>(count), base.num_classes};
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t c = i % base.num_classes;
            out.labels[i] = c;
            auto x = out.features.row(i);
            for (std::size_t j = 0; j < base.feature_dim; ++j) {
                x[j] = speaker.scale[j] * (means(c, j) + rng.normal()) + speaker.offset[j];
            }
        }
        return out;
    };
    return {speaker, sample(speaker.n_adapt, "speaker-adapt"), sample(speaker.n_test, "speaker-test")};
}

namespace {

DatasetSpec bench_spec(std::uint64_t seed) {
    return {kBenchClasses, kBenchDim, kBenchTrainPerClass, kBenchSeparation, seed};
}

}  // namespace

DomainScenario domain_scenario(std::uint64_t seed) {
    DomainScenario s;
    s.spec = bench_spec(seed);
    s.corruption = {CorruptionKind::AdditiveGaussian, kDomainNoiseSeverity,
                    Rng(seed).stream("domain-noise").next_u64()};
    s.teacher_train = make_clean(s.spec);
    s.parallel = corrupt(s.teacher_train, s.corruption);
    s.clean_test = sample_clusters(s.spec, kBenchClasses * kBenchTestPerClass, "clean-test");
    CorruptionSpec test_noise = s.corruption;
    test_noise.seed = Rng(seed).stream("domain-test-noise").next_u64();
    s.noisy_test = Dataset{corrupt(s.clean_test, test_noise).target, s.clean_test.labels, kBenchClasses};
    return s;
}

SpeakerScenario speaker_scenario(std::uint64_t seed) {
    SpeakerScenario s;
    s.spec = bench_spec(seed);
    s.teacher_train = make_clean(s.spec);
    s.clean_test = sample_clusters(s.spec, kBenchClasses * kBenchTestPerClass, "clean-test");
    for (std::size_t k = 0; k < kSpeakers; ++k) {
        const SpeakerSpec spk = random_speaker(k, kBenchDim, kSpeakerScaleLo, kSpeakerScaleHi,
                                               kSpeakerOffsetNorm, kSpeakerAdapt, kSpeakerTest, seed);
        s.speakers.push_back(make_speaker(s.spec, spk));
    }
    return s;
}

BenchmarkSuite benchmark_suite(std::uint64_t seed) {
    return {domain_scenario(seed), speaker_scenario(seed)};
}

}  // namespace distilkit
