#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distilkit/adaptation.hpp"
#include "distilkit/config.hpp"
#include "distilkit/network.hpp"
#include "distilkit/synthdata.hpp"

namespace distilkit {

/// One evaluation record: a (method, seed) cell scored on one split.
struct ResultRow {
    std::string method;
    std::string scenario;
    std::string split;
    std::uint64_t seed = 0;
    double accuracy = 0.0;       // student on the split
    double loss = 0.0;           // final-epoch training loss
    double teacher_acc = 0.0;    // unadapted teacher on the split
    double soft_fraction = 0.0;  // final-epoch weight on teacher posteriors
    double teacher_train_acc = 0.0;
    std::optional<double> pseudo_label_acc;
    double wall_clock_s = 0.0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct NamedSplit {
    std::string name;
    Dataset data;
};

/// A student is adapted once per task: one task for the domain and file
/// scenarios, one per speaker for the speaker scenario.
struct AdaptTask {
    std::string name;
    ParallelDataset train;
    std::vector<NamedSplit> eval;
};

struct ScenarioData {
    ScenarioKind kind = ScenarioKind::Domain;
    Dataset teacher_train;
    std::vector<NamedSplit> teacher_eval;  // splits reported in the teacher metrics
    std::vector<AdaptTask> tasks;
};

ScenarioData load_scenario(const ExperimentConfig& config, std::uint64_t seed);

struct TeacherRun {
    Network teacher;
    std::vector<double> loss_history;
    std::map<std::string, double> accuracy;  // split -> teacher accuracy
};

TeacherRun train_teacher(const ExperimentConfig& config, const ScenarioData& scenario, std::uint64_t seed);

std::filesystem::path teacher_checkpoint_path(const ExperimentConfig& config, std::uint64_t seed);
std::filesystem::path teacher_metrics_path(const ExperimentConfig& config, std::uint64_t seed);

/// Trains and writes checkpoint + metrics JSON for every configured seed.
std::vector<TeacherRun> run_train_teacher(const ExperimentConfig& config);

std::string teacher_metrics_json(const ExperimentConfig& config, std::uint64_t seed, const TeacherRun& run);

struct CellResult {
    MethodSpec method;
    std::uint64_t seed = 0;
    std::vector<ResultRow> rows;
    std::vector<AdaptationReport> reports;  // one per task
};

/// Adapts one student per task with `method` and scores it on every split.
/// The speaker scenario adds a `mean` row averaging the per-speaker rows.
CellResult run_cell(const ExperimentConfig& config, const ScenarioData& scenario, const Network& teacher,
                    const MethodSpec& method, std::uint64_t seed);

/// Rows the unadapted teacher would score, one per evaluation split.
std::vector<ResultRow> teacher_rows(const ExperimentConfig& config, const ScenarioData& scenario,
                                    const Network& teacher, std::uint64_t seed);

/// Reads DISTILKIT_THREADS; unset means 1. Throws ConfigError on junk.
std::size_t thread_budget();

/// Runs fn(0..count-1) on up to `threads` workers. If any call throws, the
/// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

enum class TeacherSource { TrainIfMissing, RequireCheckpoint, AlwaysTrain };

struct ExperimentResult {
    std::vector<ResultRow> rows;          // sorted by (method order, seed, split order)
    std::vector<ResultRow> teacher_rows;  // sorted by (seed, split order)
    std::vector<CellResult> cells;
};

/// Every (method, seed) cell of the config. Missing teacher checkpoints are
/// trained (and saved when `save_teachers`) or reported as IoError depending
/// on `source`.
ExperimentResult run_experiment(const ExperimentConfig& config, TeacherSource source, bool save_teachers,
                                std::size_t threads = 1);

/// Writes adapted students as <out>/student_<method>_seed<s>[_<task>].json.
void save_students(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace distilkit
