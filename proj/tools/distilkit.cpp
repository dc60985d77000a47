#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distilkit/config.hpp"
#include "distilkit/dataset_io.hpp"
#include "distilkit/errors.hpp"
#include "distilkit/gradcheck.hpp"
#include "distilkit/harness.hpp"
#include "distilkit/report.hpp"

namespace fs = std::filesystem;
using namespace distilkit;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kDiverged = 4, kGradcheck = 5 };

struct CommonArgs {
    std::string config;
    std::string seeds;
    std::string methods;
    std::optional<double> lambda;
    std::string scenario;
    std::string supervision;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_methods) {
    cmd->add_option("--config", args.config, "experiment config (JSON)");
    cmd->add_option("--seed", args.seeds, "comma-separated seed list, e.g. 1,2,3");
    cmd->add_option("--scenario", args.scenario, "domain | speaker | file");
    cmd->add_option("--out", args.out, "output directory");
    if (with_methods) {
        cmd->add_option("--method", args.methods,
                        "hard | soft_ts | interpolated | interpolated(<l>) | conditional | wrong_only; "
                        "comma-separated for compare");
        cmd->add_option("--lambda", args.lambda, "teacher-posterior weight for interpolated");
        cmd->add_option("--supervision", args.supervision, "supervised | unsupervised");
        cmd->add_option("--format", args.format, "metrics format")->check(CLI::IsMember({"csv", "json"}));
    }
}

std::vector<std::string> split_methods(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    int depth = 0;
    for (char ch : text) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            out.push_back(item);
            item.clear();
        } else {
            item += ch;
        }
    }
    if (!item.empty()) out.push_back(item);
    return out;
}

ExperimentConfig resolve(const CommonArgs& args) {
    ConfigOverrides o;
    if (!args.scenario.empty()) o.scenario = args.scenario;
    if (!args.methods.empty()) o.methods = split_methods(args.methods);
    o.lambda = args.lambda;
    if (!args.supervision.empty()) o.supervision = args.supervision;
    if (!args.seeds.empty()) o.seeds = parse_seed_list(args.seeds);
    if (!args.out.empty()) o.out_dir = args.out;
    return args.config.empty() ? parse_config("", o) : load_config(args.config, o);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

int cmd_train_teacher(const CommonArgs& args) {
    const ExperimentConfig config = resolve(args);
    const auto runs = run_train_teacher(config);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::cout << "teacher seed " << config.seeds[i] << " -> "
                  << teacher_checkpoint_path(config, config.seeds[i]).string() << '\n';
        for (const auto& [split, acc] : runs[i].accuracy) {
            std::printf("  %-14s %.4f\n", split.c_str(), acc);
        }
    }
    return kOk;
}

int cmd_adapt(const CommonArgs& args) {
    const ExperimentConfig config = resolve(args);
    if (config.methods.size() != 1) {
        throw ConfigError("adapt runs one method; got " + std::to_string(config.methods.size()) +
                          " (give --lambda with a bare interpolated)");
    }
    const ExperimentResult result =
        run_experiment(config, TeacherSource::RequireCheckpoint, false, thread_budget());
    save_students(config, result);
    const auto path = write_rows(result.rows, config.out_dir, "metrics", output_format_from_string(args.format));
    std::cout << format_comparison(summarize(result.rows, result.teacher_rows));
    std::cout << "metrics -> " << path.string() << '\n';
    return kOk;
}

int cmd_compare(const CommonArgs& args) {
    ExperimentConfig config = resolve(args);
    if (!config.methods_explicit) {
        config.methods = {{Method::Hard, 0.0}, {Method::SoftTS, 0.0}};
        for (double l : config.lambda_sweep) config.methods.push_back({Method::Interpolated, l});
        config.methods.push_back({Method::Conditional, 0.0});
        if (config.scenario == ScenarioKind::Speaker) config.methods.push_back({Method::WrongOnly, 0.0});
        config.validate();
    }
    const ExperimentResult result = run_experiment(config, TeacherSource::TrainIfMissing, true, thread_budget());
    const Comparison cmp = summarize(result.rows, result.teacher_rows);
    const std::string table = format_comparison(cmp);
    const auto path = write_rows(result.rows, config.out_dir, "results", output_format_from_string(args.format));
    write_file(fs::path(config.out_dir) / "comparison.csv", comparison_to_csv(cmp));
    write_file(fs::path(config.out_dir) / "comparison.txt", table);
    std::cout << table << "results -> " << path.string() << '\n';
    return kOk;
}

int cmd_gradcheck(const GradcheckOptions& options) {
    const GradcheckReport report = run_gradcheck(options);
    std::cout << format_gradcheck(report);
    if (!report.passed()) {
        for (const auto& c : report.losses) {
            if (c.passed()) continue;
            std::cerr << "gradcheck: " << c.loss << " exceeds tolerance on nets";
            for (std::size_t n = 0; n < c.per_net.size(); ++n)
                if (c.per_net[n] > kGradcheckTolerance) std::cerr << ' ' << n;
            std::cerr << '\n';
        }
        return kGradcheck;
    }
    return kOk;
}

int cmd_gen_data(const CommonArgs& args) {
    const ExperimentConfig config = resolve(args);
    if (config.scenario == ScenarioKind::File) throw ConfigError("gen-data needs the domain or speaker scenario");
    for (std::uint64_t seed : config.seeds) {
        const fs::path dir = fs::path(config.out_dir) / ("seed" + std::to_string(seed));
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (config.scenario == ScenarioKind::Domain) {
            const DomainScenario d = domain_scenario(seed);
            save_dataset_csv(d.teacher_train, dir / "teacher_train.csv");
            save_parallel_csv(d.parallel, dir / "parallel_train.csv");
            save_dataset_csv(d.clean_test, dir / "clean_test.csv");
            save_dataset_csv(d.noisy_test, dir / "noisy_test.csv");
        } else {
            const SpeakerScenario s = speaker_scenario(seed);
            save_dataset_csv(s.teacher_train, dir / "teacher_train.csv");
            save_dataset_csv(s.clean_test, dir / "clean_test.csv");
            for (std::size_t k = 0; k < s.speakers.size(); ++k) {
                const std::string name = "spk" + std::to_string(k);
                save_dataset_csv(s.speakers[k].adapt, dir / (name + "_adapt.csv"));
                save_dataset_csv(s.speakers[k].test, dir / (name + "_test.csv"));
            }
        }
        std::cout << "wrote " << dir.string() << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distilkit: teacher-student adaptation experiments"};
    app.require_subcommand(1);

    CommonArgs teacher_args, adapt_args, compare_args, data_args;
    auto* train_teacher = app.add_subcommand("train-teacher", "train clean teachers and write checkpoints");
    add_common(train_teacher, teacher_args, false);
    auto* adapt = app.add_subcommand("adapt", "adapt students from existing teachers with one method");
    add_common(adapt, adapt_args, true);
    auto* compare = app.add_subcommand("compare", "run a method list over all seeds and tabulate");
    add_common(compare, compare_args, true);
    auto* gen_data = app.add_subcommand("gen-data", "export benchmark datasets as CSV");
    add_common(gen_data, data_args, false);

    GradcheckOptions gc;
    bool corrupt = false;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every loss gradient");
    gradcheck->add_option("--nets", gc.nets, "number of random nets");
    gradcheck->add_option("--step", gc.step, "central-difference step");
    gradcheck->add_flag("--corrupt-gradient", corrupt, "double the analytic gradients (negative control)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*train_teacher) return cmd_train_teacher(teacher_args);
        if (*adapt) return cmd_adapt(adapt_args);
        if (*compare) return cmd_compare(compare_args);
        if (*gen_data) return cmd_gen_data(data_args);
        if (*gradcheck) {
            if (corrupt) gc.gradient_scale = 2.0;
            return cmd_gradcheck(gc);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
