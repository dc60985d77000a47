#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distilkit/adaptation.hpp"

namespace distilkit {

enum class ScenarioKind { Domain, Speaker, File };
enum class Method { Hard, SoftTS, Interpolated, Conditional, WrongOnly };
enum class Supervision { Supervised, Unsupervised };

std::string to_string(ScenarioKind s);
std::string to_string(Method m);
std::string to_string(Supervision s);
ScenarioKind scenario_from_string(const std::string& name);
Supervision supervision_from_string(const std::string& name);

struct MethodSpec {
    Method method = Method::Conditional;
    double lambda = 0.0;  // meaningful only for Interpolated

    /// Display/CSV name: hard, soft_ts, interpolated(0.5), conditional, wrong_only.
    std::string name() const;
    /// Same, safe for file names.
    std::string slug() const;
    AdaptMode mode() const;

    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// Parses "hard", "soft_ts", "conditional", "wrong_only", "interpolated(0.3)".
/// A bare "interpolated" yields nullopt lambda via `bare_interpolated`.
MethodSpec parse_method(const std::string& text, bool* bare_interpolated = nullptr);

struct TeacherConfig {
    std::vector<std::size_t> hidden{32, 32};
    std::size_t epochs = 100;
    double lr = 0.1;
    std::size_t batch_size = 32;
};

struct FileScenario {
    std::string teacher_train;                   // single-set CSV
    std::string parallel_train;                  // parallel CSV
    std::map<std::string, std::string> test_splits;  // name -> single-set CSV
};

/// One experiment run. Loaded from a JSON document; CLI flags override fields.
struct ExperimentConfig {
    ScenarioKind scenario = ScenarioKind::Domain;
    std::vector<MethodSpec> methods{{Method::Conditional, 0.0}};
    std::vector<double> lambda_sweep{0.2, 0.5, 0.8};
    Supervision supervision = Supervision::Supervised;

    std::size_t epochs = 10;
    std::size_t warmup_epochs = 10;
    double lr = 0.02;
    std::size_t batch_size = 32;
    double temperature = 1.0;
    bool augment_source_pairs = true;

    TeacherConfig teacher;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string out_dir = "runs";
    std::string teacher_dir;  // empty: same as out_dir
    FileScenario files;
    bool methods_explicit = false;  // methods came from the document or the command line

    void validate() const;
    std::filesystem::path teacher_directory() const;

    /// Schedule for one method; methods other than conditional fold the warmup
    /// budget into their main phase so every method trains the same number of epochs.
    AdaptationSchedule schedule_for(const MethodSpec& method, std::uint64_t seed) const;
};

/// Raw overrides collected from the command line.
struct ConfigOverrides {
    std::optional<std::string> scenario;
    std::optional<std::vector<std::string>> methods;
    std::optional<double> lambda;
    std::optional<std::string> supervision;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::string> out_dir;
};

/// Builds a config from JSON text (may be empty for all defaults) plus
/// overrides. Scenario-dependent defaults fill fields the document leaves out.
/// Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

std::string config_to_json(const ExperimentConfig& config);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace distilkit
