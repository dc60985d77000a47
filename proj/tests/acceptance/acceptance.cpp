// Acceptance checks 1-8. Run with no argument for all of them, or with a
// criterion number to run one. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "distilkit/adaptation.hpp"
#include "distilkit/config.hpp"
#include "distilkit/gradcheck.hpp"
#include "distilkit/harness.hpp"
#include "distilkit/losses.hpp"
#include "distilkit/report.hpp"

using namespace distilkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), pattern, a);
    return buf;
}

LabeledBatch random_batch(Rng rng) {
    const std::size_t n = 1 + rng.below(32);
    const std::size_t c = 2 + rng.below(9);
    const double scale = rng.uniform(0.1, 10.0);
    Matrix tl(n, c);
    for (double& v : tl.data()) v = rng.normal(0.0, scale);
    LabeledBatch b{softmax(tl), {}, Matrix(n, c)};
    for (double& v : b.student_logits.data()) v = rng.normal(0.0, scale);
    for (std::size_t i = 0; i < n; ++i) b.labels.push_back(rng.below(c));
    return b;
}

Outcome identity_suite() {
    const auto start = Clock::now();
    double worst_endpoint = 0.0;
    double worst_decomposition = 0.0;
    const Rng root(101);
    for (std::uint64_t k = 0; k < 100; ++k) {
        const LabeledBatch b = random_batch(root.stream("identity", k));
        const double hard = hard_ce_loss(b).loss;
        const double soft = soft_ts_loss(b).loss;
        worst_endpoint = std::max(worst_endpoint, std::abs(interpolated_loss(b, InterpolationWeight(0.0)).loss - hard));
        worst_endpoint = std::max(worst_endpoint, std::abs(interpolated_loss(b, InterpolationWeight(1.0)).loss - soft));

        const auto targets = conditional_targets(b.teacher_posteriors, b.labels);
        std::vector<std::size_t> right, wrong;
        for (std::size_t i = 0; i < targets.size(); ++i) (targets[i].is_soft() ? right : wrong).push_back(i);
        auto part = [&](const std::vector<std::size_t>& idx, bool soft_part) {
            if (idx.empty()) return 0.0;
            LabeledBatch s{b.teacher_posteriors.gather_rows(idx), {}, b.student_logits.gather_rows(idx)};
            for (std::size_t i : idx) s.labels.push_back(b.labels[i]);
            const double loss = soft_part ? soft_ts_loss(s).loss : hard_ce_loss(s).loss;
            return static_cast<double>(idx.size()) * loss;
        };
        const double expected = (part(right, true) + part(wrong, false)) / static_cast<double>(targets.size());
        worst_decomposition =
            std::max(worst_decomposition, std::abs(conditional_loss(targets, b.student_logits).loss - expected));
    }
    const double elapsed = seconds_since(start);
    Outcome o;
    o.pass = worst_endpoint <= 1e-12 && worst_decomposition <= 1e-10 && elapsed < 1.0;
    o.detail = fmt("lambda endpoints max |diff| %.3g (<= 1e-12)", worst_endpoint) +
               fmt(", decomposition max |diff| %.3g (<= 1e-10)", worst_decomposition) + fmt(", %.3fs (< 1s)", elapsed);
    return o;
}

Outcome degenerate_teacher_suite() {
    const auto start = Clock::now();
    ExperimentConfig config = parse_config("");
    const ScenarioData scenario = load_scenario(config, 1);
    const Network teacher = train_teacher(config, scenario, 1).teacher;
    ParallelDataset data = scenario.tasks.front().train;

    ParallelDataset right = data;
    right.labels = generate_pseudo_labels(teacher, data.source);
    ParallelDataset wrong = right;
    for (auto& c : wrong.labels) c = (c + 1) % wrong.num_classes;

    auto schedule = [&](AdaptMode mode, std::size_t warmup) {
        AdaptationSchedule s = config.schedule_for({Method::Conditional, 0.0}, 1);
        s.mode = mode;
        s.warmup_epochs = warmup;
        return s;
    };
    const std::size_t warmup = config.warmup_epochs;
    const bool domain_soft = domain_adapt(teacher, right, schedule(AdaptMode::Conditional, warmup)) ==
                             domain_adapt(teacher, right, schedule(AdaptMode::SoftOnly, warmup));
    const bool domain_hard = domain_adapt(teacher, wrong, schedule(AdaptMode::Conditional, 0)).student ==
                             domain_adapt(teacher, wrong, schedule(AdaptMode::HardOnly, 0)).student;
    const Dataset spk_right{right.target, generate_pseudo_labels(teacher, right.target), right.num_classes};
    Dataset spk_wrong = spk_right;
    for (auto& c : spk_wrong.labels) c = (c + 1) % spk_wrong.num_classes;
    const bool speaker_soft = speaker_adapt(teacher, spk_right, schedule(AdaptMode::Conditional, 0)).student ==
                              speaker_adapt(teacher, spk_right, schedule(AdaptMode::SoftOnly, 0)).student;
    const bool speaker_hard = speaker_adapt(teacher, spk_wrong, schedule(AdaptMode::Conditional, 0)).student ==
                              speaker_adapt(teacher, spk_wrong, schedule(AdaptMode::HardOnly, 0)).student;
    const double elapsed = seconds_since(start);

    Outcome o;
    o.pass = domain_soft && domain_hard && speaker_soft && speaker_hard && elapsed < 10.0;
    o.detail = std::string("always-correct == soft: domain ") + (domain_soft ? "yes" : "NO") + ", speaker " +
               (speaker_soft ? "yes" : "NO") + "; always-wrong == hard: domain " + (domain_hard ? "yes" : "NO") +
               ", speaker " + (speaker_hard ? "yes" : "NO") + fmt("; %.2fs (< 10s)", elapsed);
    return o;
}

Outcome gradient_suite() {
    const auto start = Clock::now();
    const GradcheckReport report = run_gradcheck();
    const double elapsed = seconds_since(start);
    Outcome o;
    o.pass = report.passed() && report.losses.size() == 5 && elapsed < 30.0;
    std::string detail;
    for (const auto& c : report.losses) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s%s %.2e", detail.empty() ? "" : ", ", c.loss.c_str(), c.worst_error);
        detail += buf;
    }
    o.detail = "worst relative error (<= 1e-6, step 1e-5, 10 nets): " + detail + fmt("; %.2fs (< 30s)", elapsed);
    return o;
}

Outcome kl_ce_relation() {
    const Rng root(404);
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        Rng rng = root.stream("pair", k);
        const std::size_t c = 2 + rng.below(15);
        const double scale = rng.uniform(0.1, 10.0);
        Matrix tl(1, c), sl(1, c);
        for (double& v : tl.data()) v = rng.normal(0.0, scale);
        for (double& v : sl.data()) v = rng.normal(0.0, scale);
        const Matrix p = softmax(tl);
        const ProbVector teacher(p.row(0));
        const ProbVector student(softmax(sl).row(0));
        const double ce = soft_ts_loss(LabeledBatch{p, {0}, sl}).loss;
        worst = std::max(worst, std::abs(ce - entropy(teacher) - kl_divergence(teacher, student)));
    }
    return {worst <= 1e-10, fmt("max |CE - H - KL| over 1000 pairs %.3g (<= 1e-10)", worst)};
}

double headline_mean(const Comparison& cmp, const std::string& method) {
    const ComparisonRow* row = cmp.find(method);
    return row ? row->splits.at(cmp.headline).mean : std::nan("");
}

Outcome domain_ordering() {
    const auto start = Clock::now();
    ConfigOverrides o;
    o.methods = std::vector<std::string>{"hard", "soft_ts", "conditional"};
    const ExperimentConfig config = parse_config(R"({"scenario": "domain"})", o);

    bool imperfect = true;
    bool shifted = true;
    double noisy_train_lo = 1.0, noisy_train_hi = 0.0, drop_min = 1.0;
    for (std::uint64_t seed : config.seeds) {
        const ScenarioData scenario = load_scenario(config, seed);
        const TeacherRun run = train_teacher(config, scenario, seed);
        const double noisy_train = run.accuracy.at("noisy_train");
        const double drop = run.accuracy.at("clean_test") - run.accuracy.at("noisy_test");
        imperfect = imperfect && noisy_train > 0.5 && noisy_train < 0.95;
        shifted = shifted && drop >= 0.10;
        noisy_train_lo = std::min(noisy_train_lo, noisy_train);
        noisy_train_hi = std::max(noisy_train_hi, noisy_train);
        drop_min = std::min(drop_min, drop);
    }

    const ExperimentResult result = run_experiment(config, TeacherSource::AlwaysTrain, false, thread_budget());
    const Comparison cmp = summarize(result.rows, result.teacher_rows);
    const double cond = headline_mean(cmp, "conditional");
    const double soft = headline_mean(cmp, "soft_ts");
    const double hard = headline_mean(cmp, "hard");
    const double elapsed = seconds_since(start);

    const bool above_floor = cond >= soft - 0.003;
    const bool ordered = cond >= soft && soft >= hard;
    Outcome out;
    out.pass = imperfect && shifted && above_floor && ordered;
    char buf[640];
    std::snprintf(buf, sizeof(buf),
                  "teacher noisy-train acc in [%.4f, %.4f] (need (0.5, 0.95)), min clean-noisy drop %.2fpp "
                  "(need >= 10); noisy-test means: conditional %.2f%%, soft_ts %.2f%%, hard %.2f%%; "
                  "conditional - soft_ts %+.2fpp (need >= 0, hard floor -0.3: %s), soft_ts - hard %+.2fpp (need >= 0), "
                  "conditional - hard %+.2fpp; %.0fs (target < 600s)",
                  noisy_train_lo, noisy_train_hi, 100 * drop_min, 100 * cond, 100 * soft, 100 * hard,
                  100 * (cond - soft), above_floor ? "met" : "MISSED", 100 * (soft - hard), 100 * (cond - hard), elapsed);
    out.detail = buf;
    return out;
}

Outcome speaker_analog() {
    const auto start = Clock::now();
    ConfigOverrides o;
    o.methods = std::vector<std::string>{"interpolated", "conditional", "wrong_only"};
    const ExperimentConfig config = parse_config(R"({"scenario": "speaker"})", o);
    const ExperimentResult result = run_experiment(config, TeacherSource::AlwaysTrain, false, thread_budget());
    const Comparison cmp = summarize(result.rows, result.teacher_rows);
    const double cond = headline_mean(cmp, "conditional");
    const double wrong = headline_mean(cmp, "wrong_only");
    double best = -1.0;
    std::string best_name;
    for (double lambda : {0.2, 0.5, 0.8}) {
        const std::string name = MethodSpec{Method::Interpolated, lambda}.name();
        if (headline_mean(cmp, name) > best) {
            best = headline_mean(cmp, name);
            best_name = name;
        }
    }
    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = cond >= best - 0.005 && wrong < cond;
    char buf[384];
    std::snprintf(buf, sizeof(buf),
                  "mean over 5 speakers x 5 seeds: conditional %.2f%%, best %s %.2f%% (conditional - best %+.2fpp, "
                  "need >= -0.5), interpolated(0.5) %.2f%%, wrong_only %.2f%% (need < conditional); %.0fs "
                  "(target < 900s)",
                  100 * cond, best_name.c_str(), 100 * best, 100 * (cond - best),
                  100 * headline_mean(cmp, "interpolated(0.5)"), 100 * wrong, elapsed);
    out.detail = buf;
    return out;
}

Outcome unsupervised_reduction() {
    ConfigOverrides o;
    o.methods = std::vector<std::string>{"conditional", "soft_ts"};
    o.seeds = std::vector<std::uint64_t>{1};
    const ExperimentConfig config = parse_config(R"({"scenario": "speaker", "supervision": "unsupervised"})", o);
    const ScenarioData scenario = load_scenario(config, 1);
    const Network teacher = train_teacher(config, scenario, 1).teacher;

    std::size_t batches = 0, soft_batches = 0;
    for (const AdaptTask& task : scenario.tasks) {
        const Dataset pseudo{task.train.target, generate_pseudo_labels(teacher, task.train.source),
                             task.train.num_classes};
        speaker_adapt(teacher, pseudo, config.schedule_for(config.methods[0], 1), [&](const BatchEvent& e) {
            ++batches;
            soft_batches += e.soft_fraction == 1.0 ? 1 : 0;
        });
    }
    const CellResult cond = run_cell(config, scenario, teacher, config.methods[0], 1);
    const CellResult soft = run_cell(config, scenario, teacher, config.methods[1], 1);
    bool identical = cond.rows.size() == soft.rows.size();
    for (std::size_t i = 0; identical && i < cond.rows.size(); ++i) {
        const ResultRow& a = cond.rows[i];
        const ResultRow& b = soft.rows[i];
        identical = a.accuracy == b.accuracy && a.loss == b.loss && a.soft_fraction == b.soft_fraction &&
                    a.teacher_acc == b.teacher_acc && a.pseudo_label_acc == b.pseudo_label_acc;
    }
    for (std::size_t t = 0; identical && t < cond.reports.size(); ++t)
        identical = cond.reports[t].student == soft.reports[t].student;

    Outcome out;
    out.pass = batches > 0 && soft_batches == batches && identical;
    out.detail = std::to_string(soft_batches) + "/" + std::to_string(batches) +
                 " minibatches fully soft; metrics and students bit-identical to soft self-distillation: " +
                 (identical ? "yes" : "NO");
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "distilkit_acceptance_determinism";
    fs::remove_all(root);
    std::string first, second;
#ifdef DISTILKIT_CLI_PATH
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + DISTILKIT_CLI_PATH + "\" compare --out \"" + (root / run).string() +
                                "\" > \"" + (root.string() + "_" + run + ".log") + "\" 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "compare exited non-zero: " + cmd};
    }
    first = read_file(root / "a" / "results.csv");
    second = read_file(root / "b" / "results.csv");
    const std::string how = "two `distilkit compare` runs (default config)";
#else
    ExperimentConfig config = parse_config("");
    first = rows_to_csv(run_experiment(config, TeacherSource::AlwaysTrain, false, 1).rows);
    second = rows_to_csv(run_experiment(config, TeacherSource::AlwaysTrain, false, 1).rows);
    const std::string how = "two in-process compare runs";
#endif
    const bool same = !first.empty() && first == second;
    return {same, how + ": results.csv " + (same ? "byte-identical" : "DIFFERS") + " (" +
                      std::to_string(first.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"identity suite", identity_suite},
        {"degenerate-teacher suite", degenerate_teacher_suite},
        {"gradient suite", gradient_suite},
        {"KL-CE relation", kl_ce_relation},
        {"domain ordering", domain_ordering},
        {"speaker analog", speaker_analog},
        {"unsupervised reduction", unsupervised_reduction},
        {"determinism", determinism},
    };
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(static_cast<std::size_t>(std::atoi(argv[i])));
    if (selected.empty())
        for (std::size_t k = 1; k <= criteria.size(); ++k) selected.push_back(k);

    bool all = true;
    for (std::size_t k : selected) {
        if (k < 1 || k > criteria.size()) {
            std::fprintf(stderr, "no criterion %zu\n", k);
            return 2;
        }
        Outcome o;
        try {
            o = criteria[k - 1].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %zu %-26s %s  %s\n", k, criteria[k - 1].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
