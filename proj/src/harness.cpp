#include "distilkit/harness.hpp"

#include <atomic>
#include <chrono>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "distilkit/checkpoint.hpp"
#include "distilkit/dataset_io.hpp"
#include "distilkit/errors.hpp"
#include "distilkit/losses.hpp"

namespace distilkit {

namespace fs = std::filesystem;

namespace {

Dataset target_side(const ParallelDataset& data) {
    return Dataset{data.target, data.labels, data.num_classes};
}

Dataset source_side(const ParallelDataset& data) {
    return Dataset{data.source, data.labels, data.num_classes};
}

ScenarioData domain_data(const ExperimentConfig& config, std::uint64_t seed) {
    DomainScenario d = domain_scenario(seed);
    ScenarioData out;
    out.kind = ScenarioKind::Domain;
    out.teacher_train = d.teacher_train;
    out.teacher_eval = {{"clean_train", d.teacher_train},
                        {"noisy_train", target_side(d.parallel)},
                        {"clean_test", d.clean_test},
                        {"noisy_test", d.noisy_test}};
    AdaptTask task{"domain", config.augment_source_pairs ? augment_with_source_pairs(d.parallel) : d.parallel,
                   {{"clean_test", std::move(d.clean_test)}, {"noisy_test", std::move(d.noisy_test)}}};
    out.tasks.push_back(std::move(task));
    return out;
}

ScenarioData speaker_data(std::uint64_t seed) {
    SpeakerScenario s = speaker_scenario(seed);
    ScenarioData out;
    out.kind = ScenarioKind::Speaker;
    out.teacher_train = s.teacher_train;
    out.teacher_eval = {{"clean_train", s.teacher_train}, {"clean_test", s.clean_test}};
    for (std::size_t k = 0; k < s.speakers.size(); ++k) {
        const std::string name = "spk" + std::to_string(k);
        out.teacher_eval.push_back({name + "_adapt", s.speakers[k].adapt});
        out.teacher_eval.push_back({name + "_test", s.speakers[k].test});
        out.tasks.push_back({name, self_parallel(s.speakers[k].adapt), {{name, s.speakers[k].test}}});
    }
    return out;
}

ScenarioData file_data(const ExperimentConfig& config) {
    ScenarioData out;
    out.kind = ScenarioKind::File;
    out.teacher_train = load_dataset_csv(config.files.teacher_train);
    const ParallelDataset parallel = load_parallel_csv(config.files.parallel_train);
    if (parallel.num_classes > out.teacher_train.num_classes) {
        throw ConfigError("parallel set has more classes than the teacher training set");
    }
    out.teacher_eval = {{"teacher_train", out.teacher_train},
                        {"source_train", source_side(parallel)},
                        {"target_train", target_side(parallel)}};
    AdaptTask task{"file", config.augment_source_pairs ? augment_with_source_pairs(parallel) : parallel, {}};
    task.train.num_classes = out.teacher_train.num_classes;
    for (const auto& [name, path] : config.files.test_splits) {
        Dataset split = load_dataset_csv(path);
        split.num_classes = out.teacher_train.num_classes;
        out.teacher_eval.push_back({name, split});
        task.eval.push_back({name, std::move(split)});
    }
    out.tasks.push_back(std::move(task));
    return out;
}

ResultRow mean_row(const std::vector<ResultRow>& rows, const std::string& split) {
    ResultRow mean = rows.front();
    mean.split = split;
    const double n = static_cast<double>(rows.size());
    mean.accuracy = mean.loss = mean.teacher_acc = mean.soft_fraction = mean.teacher_train_acc = 0.0;
    double pseudo = 0.0;
    for (const auto& r : rows) {
        mean.accuracy += r.accuracy / n;
        mean.loss += r.loss / n;
        mean.teacher_acc += r.teacher_acc / n;
        mean.soft_fraction += r.soft_fraction / n;
        mean.teacher_train_acc += r.teacher_train_acc / n;
        pseudo += r.pseudo_label_acc.value_or(0.0) / n;
    }
    if (mean.pseudo_label_acc) mean.pseudo_label_acc = pseudo;
    return mean;
}

void check_teacher_shape(const Network& teacher, const ScenarioData& scenario, const fs::path& path) {
    if (teacher.input_dim() != scenario.teacher_train.features.cols() ||
        teacher.output_dim() != scenario.teacher_train.num_classes) {
        throw ConfigError("teacher checkpoint " + path.string() + " does not match the scenario dimensions");
    }
}

}  // namespace

ScenarioData load_scenario(const ExperimentConfig& config, std::uint64_t seed) {
    switch (config.scenario) {
        case ScenarioKind::Domain: return domain_data(config, seed);
        case ScenarioKind::Speaker: return speaker_data(seed);
        case ScenarioKind::File: return file_data(config);
    }
    throw ConfigError("unknown scenario");
}

TeacherRun train_teacher(const ExperimentConfig& config, const ScenarioData& scenario, std::uint64_t seed) {
    std::vector<std::size_t> dims{scenario.teacher_train.features.cols()};
    dims.insert(dims.end(), config.teacher.hidden.begin(), config.teacher.hidden.end());
    dims.push_back(scenario.teacher_train.num_classes);
    Rng init = Rng(seed).stream("teacher-init");

    TeacherRun run;
    run.teacher = Network::glorot(dims, init);
    TrainOptions options;
    options.epochs = config.teacher.epochs;
    options.lr = config.teacher.lr;
    options.batch_size = config.teacher.batch_size;
    options.seed = Rng(seed).stream("teacher-shuffle").next_u64();
    run.loss_history = train_classifier(run.teacher, scenario.teacher_train, options);
    for (const auto& split : scenario.teacher_eval) {
        run.accuracy[split.name] = evaluate(run.teacher, split.data.features, split.data.labels);
    }
    return run;
}

fs::path teacher_checkpoint_path(const ExperimentConfig& config, std::uint64_t seed) {
    return config.teacher_directory() / ("teacher_seed" + std::to_string(seed) + ".json");
}

fs::path teacher_metrics_path(const ExperimentConfig& config, std::uint64_t seed) {
    return config.teacher_directory() / ("teacher_seed" + std::to_string(seed) + "_metrics.json");
}

std::string teacher_metrics_json(const ExperimentConfig& config, std::uint64_t seed, const TeacherRun& run) {
    nlohmann::ordered_json doc;
    doc["scenario"] = to_string(config.scenario);
    doc["seed"] = seed;
    doc["epochs"] = config.teacher.epochs;
    doc["final_loss"] = run.loss_history.empty() ? 0.0 : run.loss_history.back();
    nlohmann::ordered_json acc = nlohmann::ordered_json::object();
    for (const auto& [name, value] : run.accuracy) acc[name] = value;
    doc["accuracy"] = acc;
    doc["loss_history"] = run.loss_history;
    return doc.dump(2) + "\n";
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void save_teacher(const ExperimentConfig& config, std::uint64_t seed, const TeacherRun& run) {
    const fs::path path = teacher_checkpoint_path(config, seed);
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    save_checkpoint(run.teacher, path);
    write_text(teacher_metrics_path(config, seed), teacher_metrics_json(config, seed, run));
}

}  // namespace

std::vector<TeacherRun> run_train_teacher(const ExperimentConfig& config) {
    std::vector<TeacherRun> runs(config.seeds.size());
    parallel_for(config.seeds.size(), thread_budget(), [&](std::size_t i) {
        const std::uint64_t seed = config.seeds[i];
        runs[i] = train_teacher(config, load_scenario(config, seed), seed);
    });
    for (std::size_t i = 0; i < runs.size(); ++i) save_teacher(config, config.seeds[i], runs[i]);
    return runs;
}

CellResult run_cell(const ExperimentConfig& config, const ScenarioData& scenario, const Network& teacher,
                    const MethodSpec& method, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    CellResult cell;
    cell.method = method;
    cell.seed = seed;
    const AdaptationSchedule schedule = config.schedule_for(method, seed);
    const bool unsupervised = config.supervision == Supervision::Unsupervised;

    std::vector<ResultRow> rows;
    for (const AdaptTask& task : scenario.tasks) {
        ParallelDataset train = task.train;
        std::optional<double> pseudo_acc;
        if (unsupervised) {
            train.labels = generate_pseudo_labels(teacher, train.source);
            std::size_t agree = 0;
            for (std::size_t i = 0; i < train.size(); ++i) agree += train.labels[i] == task.train.labels[i] ? 1 : 0;
            pseudo_acc = static_cast<double>(agree) / static_cast<double>(train.size());
        }
        AdaptationReport report =
            scenario.kind == ScenarioKind::Speaker
                ? speaker_adapt(teacher, Dataset{train.target, train.labels, train.num_classes}, schedule)
                : domain_adapt(teacher, train, schedule);
        for (const NamedSplit& split : task.eval) {
            ResultRow row;
            row.method = method.name();
            row.scenario = to_string(config.scenario);
            row.split = split.name;
            row.seed = seed;
            row.accuracy = evaluate(report.student, split.data.features, split.data.labels);
            row.loss = report.final_loss();
            row.teacher_acc = evaluate(teacher, split.data.features, split.data.labels);
            row.soft_fraction = report.final_soft_fraction();
            row.teacher_train_acc = report.teacher_train_accuracy;
            row.pseudo_label_acc = pseudo_acc;
            report.evaluations.push_back({split.name, row.accuracy});
            rows.push_back(row);
        }
        cell.reports.push_back(std::move(report));
    }
    if (scenario.kind == ScenarioKind::Speaker && rows.size() > 1) rows.push_back(mean_row(rows, "mean"));

    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& row : rows) row.wall_clock_s = elapsed;
    cell.rows = std::move(rows);
    return cell;
}

std::vector<ResultRow> teacher_rows(const ExperimentConfig& config, const ScenarioData& scenario,
                                    const Network& teacher, std::uint64_t seed) {
    std::vector<ResultRow> rows;
    for (const AdaptTask& task : scenario.tasks) {
        const double train_acc = evaluate(teacher, task.train.source, task.train.labels);
        for (const NamedSplit& split : task.eval) {
            ResultRow row;
            row.method = "teacher";
            row.scenario = to_string(config.scenario);
            row.split = split.name;
            row.seed = seed;
            row.accuracy = evaluate(teacher, split.data.features, split.data.labels);
            row.teacher_acc = row.accuracy;
            row.teacher_train_acc = train_acc;
            rows.push_back(row);
        }
    }
    if (scenario.kind == ScenarioKind::Speaker && rows.size() > 1) rows.push_back(mean_row(rows, "mean"));
    return rows;
}

std::size_t thread_budget() {
    const char* env = std::getenv("DISTILKIT_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    const std::string text(env);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || ptr != text.data() + text.size() || n == 0) {
        throw ConfigError("DISTILKIT_THREADS must be a positive integer, got '" + text + "'");
    }
    return n;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    std::vector<std::exception_ptr> errors(count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&] {
            for (std::size_t i = next++; i < count && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                    failed = true;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

ExperimentResult run_experiment(const ExperimentConfig& config, TeacherSource source, bool save_teachers,
                                std::size_t threads) {
    config.validate();
    const std::size_t n_seeds = config.seeds.size();
    std::vector<ScenarioData> scenarios(n_seeds);
    std::vector<Network> teachers(n_seeds);
    std::vector<bool> trained(n_seeds, false);
    std::vector<TeacherRun> runs(n_seeds);

    parallel_for(n_seeds, threads, [&](std::size_t i) {
        const std::uint64_t seed = config.seeds[i];
        scenarios[i] = load_scenario(config, seed);
        const fs::path path = teacher_checkpoint_path(config, seed);
        const bool exists = fs::exists(path);
        if (source == TeacherSource::RequireCheckpoint && !exists) {
            throw IoError("teacher checkpoint not found: " + path.string() + " (run train-teacher first)");
        }
        if (source != TeacherSource::AlwaysTrain && exists) {
            teachers[i] = load_checkpoint(path);
            check_teacher_shape(teachers[i], scenarios[i], path);
        } else {
            runs[i] = train_teacher(config, scenarios[i], seed);
            teachers[i] = runs[i].teacher;
            trained[i] = true;
        }
    });
    if (save_teachers) {
        for (std::size_t i = 0; i < n_seeds; ++i)
            if (trained[i]) save_teacher(config, config.seeds[i], runs[i]);
    }

    const std::size_t n_methods = config.methods.size();
    std::vector<CellResult> cells(n_methods * n_seeds);
    parallel_for(cells.size(), threads, [&](std::size_t c) {
        const std::size_t m = c / n_seeds;
        const std::size_t s = c % n_seeds;
        cells[c] = run_cell(config, scenarios[s], teachers[s], config.methods[m], config.seeds[s]);
    });

    ExperimentResult result;
    for (const auto& cell : cells) result.rows.insert(result.rows.end(), cell.rows.begin(), cell.rows.end());
    for (std::size_t s = 0; s < n_seeds; ++s) {
        const auto rows = teacher_rows(config, scenarios[s], teachers[s], config.seeds[s]);
        result.teacher_rows.insert(result.teacher_rows.end(), rows.begin(), rows.end());
    }
    result.cells = std::move(cells);
    return result;
}

void save_students(const ExperimentConfig& config, const ExperimentResult& result) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    for (const auto& cell : result.cells) {
        for (std::size_t t = 0; t < cell.reports.size(); ++t) {
            std::string name = "student_" + cell.method.slug() + "_seed" + std::to_string(cell.seed);
            if (cell.reports.size() > 1) name += "_spk" + std::to_string(t);
            save_checkpoint(cell.reports[t].student, fs::path(config.out_dir) / (name + ".json"));
        }
    }
}

}  // namespace distilkit
