#include "distilkit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distilkit/errors.hpp"

namespace distilkit {

using nlohmann::json;

std::string to_string(ScenarioKind s) {
    switch (s) {
        case ScenarioKind::Domain: return "domain";
        case ScenarioKind::Speaker: return "speaker";
        case ScenarioKind::File: return "file";
    }
    return "domain";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Hard: return "hard";
        case Method::SoftTS: return "soft_ts";
        case Method::Interpolated: return "interpolated";
        case Method::Conditional: return "conditional";
        case Method::WrongOnly: return "wrong_only";
    }
    return "conditional";
}

std::string to_string(Supervision s) {
    return s == Supervision::Supervised ? "supervised" : "unsupervised";
}

ScenarioKind scenario_from_string(const std::string& name) {
    if (name == "domain" || name == "DOMAIN") return ScenarioKind::Domain;
    if (name == "speaker" || name == "SPEAKER") return ScenarioKind::Speaker;
    if (name == "file" || name == "from-file") return ScenarioKind::File;
    throw ConfigError("unknown scenario '" + name + "' (expected domain, speaker or file)");
}

Supervision supervision_from_string(const std::string& name) {
    if (name == "supervised") return Supervision::Supervised;
    if (name == "unsupervised") return Supervision::Unsupervised;
    throw ConfigError("unknown supervision '" + name + "'");
}

namespace {

std::string format_lambda(double lambda) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), lambda);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string MethodSpec::name() const {
    if (method == Method::Interpolated) return "interpolated(" + format_lambda(lambda) + ")";
    return to_string(method);
}

std::string MethodSpec::slug() const {
    if (method == Method::Interpolated) return "interpolated-" + format_lambda(lambda);
    return to_string(method);
}

AdaptMode MethodSpec::mode() const {
    switch (method) {
        case Method::Hard: return AdaptMode::HardOnly;
        case Method::SoftTS: return AdaptMode::SoftOnly;
        case Method::Interpolated: return AdaptMode::Interpolated;
        case Method::Conditional: return AdaptMode::Conditional;
        case Method::WrongOnly: return AdaptMode::WrongOnly;
    }
    return AdaptMode::Conditional;
}

MethodSpec parse_method(const std::string& text, bool* bare_interpolated) {
    if (bare_interpolated) *bare_interpolated = false;
    if (text == "hard" || text == "hard_only") return {Method::Hard, 0.0};
    if (text == "soft_ts" || text == "soft" || text == "soft_only") return {Method::SoftTS, 0.0};
    if (text == "conditional") return {Method::Conditional, 0.0};
    if (text == "wrong_only") return {Method::WrongOnly, 0.0};
    if (text == "interpolated") {
        if (bare_interpolated) *bare_interpolated = true;
        return {Method::Interpolated, 0.0};
    }
    const std::string prefix = "interpolated(";
    if (text.rfind(prefix, 0) == 0 && text.back() == ')') {
        const std::string inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
        double lambda = 0.0;
        const auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), lambda);
        if (ec != std::errc() || ptr != inner.data() + inner.size()) {
            throw ConfigError("bad lambda in method '" + text + "'");
        }
        return {Method::Interpolated, lambda};
    }
    throw ConfigError("unknown method '" + text +
                      "' (expected hard, soft_ts, interpolated, interpolated(<lambda>), conditional, wrong_only)");
}

void ExperimentConfig::validate() const {
    if (methods.empty()) throw ConfigError("no methods selected");
    for (const auto& m : methods) {
        if (m.method == Method::Interpolated && !(m.lambda >= 0.0 && m.lambda <= 1.0)) {
            throw ConfigError("lambda must lie in [0, 1], got " + format_lambda(m.lambda));
        }
    }
    if (supervision == Supervision::Unsupervised && scenario != ScenarioKind::Speaker) {
        throw ConfigError("unsupervised adaptation is only defined for the speaker scenario");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (!(teacher.lr > 0.0) || teacher.batch_size == 0) throw ConfigError("invalid teacher training settings");
    if (scenario == ScenarioKind::File) {
        if (files.teacher_train.empty() || files.parallel_train.empty() || files.test_splits.empty()) {
            throw ConfigError("file scenario needs files.teacher_train, files.parallel_train and files.test");
        }
    }
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::filesystem::path ExperimentConfig::teacher_directory() const {
    return teacher_dir.empty() ? std::filesystem::path(out_dir) : std::filesystem::path(teacher_dir);
}

AdaptationSchedule ExperimentConfig::schedule_for(const MethodSpec& method, std::uint64_t seed) const {
    AdaptationSchedule s;
    s.lr = lr;
    s.batch_size = batch_size;
    s.temperature = temperature;
    s.seed = seed;
    s.mode = method.mode();
    s.lambda = method.lambda;
    if (scenario == ScenarioKind::Speaker) {
        s.warmup_epochs = 0;
        s.conditional_epochs = epochs;
    } else if (method.method == Method::Conditional) {
        s.warmup_epochs = warmup_epochs;
        s.conditional_epochs = epochs;
    } else {
        s.warmup_epochs = 0;
        s.conditional_epochs = warmup_epochs + epochs;
    }
    return s;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
            throw ConfigError("bad seed '" + item + "' in list '" + text + "'");
        }
        seeds.push_back(v);
    }
    if (seeds.empty()) throw ConfigError("empty seed list");
    return seeds;
}

namespace {

template <class T>
void read_field(const json& doc, const char* key, T& target) {
    if (!doc.contains(key) || doc.at(key).is_null()) return;
    try {
        target = doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

const char* const kKnownKeys[] = {"scenario", "method", "methods", "lambda", "lambda_sweep", "supervision",
                                   "epochs", "warmup_epochs", "lr", "batch_size", "temperature",
                                   "augment_source_pairs", "teacher", "seeds", "out_dir", "teacher_dir",
                                   "files"};

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const ConfigOverrides& overrides) {
    json doc = json::object();
    if (!json_text.empty()) {
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        bool known = false;
        for (const char* k : kKnownKeys) known = known || key == k;
        if (!known) throw ConfigError("unknown config field '" + key + "'");
    }

    ExperimentConfig cfg;
    std::string scenario = "domain";
    read_field(doc, "scenario", scenario);
    if (overrides.scenario) scenario = *overrides.scenario;
    cfg.scenario = scenario_from_string(scenario);

    // Scenario-dependent defaults: the speaker sets are 20x smaller than the
    // domain training set, so they get more epochs at a larger step size.
    switch (cfg.scenario) {
        case ScenarioKind::Domain:
            cfg.epochs = 10;
            cfg.lr = 0.02;
            cfg.augment_source_pairs = true;
            break;
        case ScenarioKind::Speaker:
            cfg.epochs = 20;
            cfg.lr = 0.05;
            cfg.augment_source_pairs = false;
            break;
        case ScenarioKind::File:
            cfg.epochs = 10;
            cfg.lr = 0.02;
            cfg.augment_source_pairs = false;
            break;
    }

    std::vector<std::string> method_names;
    if (doc.contains("method") && doc.contains("methods")) {
        throw ConfigError("give either 'method' or 'methods', not both");
    }
    if (doc.contains("method")) {
        std::string m;
        read_field(doc, "method", m);
        method_names.push_back(m);
    }
    read_field(doc, "methods", method_names);
    if (overrides.methods) method_names = *overrides.methods;

    std::optional<double> lambda;
    if (doc.contains("lambda") && !doc.at("lambda").is_null()) {
        double l = 0.0;
        read_field(doc, "lambda", l);
        lambda = l;
    }
    if (overrides.lambda) lambda = overrides.lambda;
    read_field(doc, "lambda_sweep", cfg.lambda_sweep);

    if (!method_names.empty()) {
        cfg.methods.clear();
        bool any_interpolated = false;
        for (const auto& name : method_names) {
            bool bare = false;
            MethodSpec spec = parse_method(name, &bare);
            any_interpolated = any_interpolated || spec.method == Method::Interpolated;
            if (!bare) {
                cfg.methods.push_back(spec);
            } else if (lambda) {
                cfg.methods.push_back({Method::Interpolated, *lambda});
            } else {
                for (double l : cfg.lambda_sweep) cfg.methods.push_back({Method::Interpolated, l});
            }
        }
        if (lambda && !any_interpolated) {
            throw ConfigError("lambda is only meaningful for the interpolated method");
        }
        cfg.methods_explicit = true;
    } else if (lambda) {
        throw ConfigError("lambda given without the interpolated method");
    }

    std::string supervision = "supervised";
    read_field(doc, "supervision", supervision);
    if (overrides.supervision) supervision = *overrides.supervision;
    cfg.supervision = supervision_from_string(supervision);

    read_field(doc, "epochs", cfg.epochs);
    cfg.warmup_epochs = cfg.epochs;
    read_field(doc, "warmup_epochs", cfg.warmup_epochs);
    read_field(doc, "lr", cfg.lr);
    read_field(doc, "batch_size", cfg.batch_size);
    read_field(doc, "temperature", cfg.temperature);
    read_field(doc, "augment_source_pairs", cfg.augment_source_pairs);

    if (doc.contains("teacher")) {
        const json& t = doc.at("teacher");
        if (!t.is_object()) throw ConfigError("'teacher' must be an object");
        read_field(t, "hidden", cfg.teacher.hidden);
        read_field(t, "epochs", cfg.teacher.epochs);
        read_field(t, "lr", cfg.teacher.lr);
        read_field(t, "batch_size", cfg.teacher.batch_size);
    }

    read_field(doc, "seeds", cfg.seeds);
    if (overrides.seeds) cfg.seeds = *overrides.seeds;
    read_field(doc, "out_dir", cfg.out_dir);
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    read_field(doc, "teacher_dir", cfg.teacher_dir);

    if (doc.contains("files")) {
        const json& f = doc.at("files");
        read_field(f, "teacher_train", cfg.files.teacher_train);
        read_field(f, "parallel_train", cfg.files.parallel_train);
        read_field(f, "test", cfg.files.test_splits);
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), overrides);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json methods = json::array();
    for (const auto& m : cfg.methods) methods.push_back(m.name());
    json doc = {{"scenario", to_string(cfg.scenario)},
                {"methods", methods},
                {"lambda_sweep", cfg.lambda_sweep},
                {"supervision", to_string(cfg.supervision)},
                {"epochs", cfg.epochs},
                {"warmup_epochs", cfg.warmup_epochs},
                {"lr", cfg.lr},
                {"batch_size", cfg.batch_size},
                {"temperature", cfg.temperature},
                {"augment_source_pairs", cfg.augment_source_pairs},
                {"teacher",
                 {{"hidden", cfg.teacher.hidden},
                  {"epochs", cfg.teacher.epochs},
                  {"lr", cfg.teacher.lr},
                  {"batch_size", cfg.teacher.batch_size}}},
                {"seeds", cfg.seeds},
                {"out_dir", cfg.out_dir},
                {"teacher_dir", cfg.teacher_dir}};
    if (cfg.scenario == ScenarioKind::File) {
        doc["files"] = {{"teacher_train", cfg.files.teacher_train},
                        {"parallel_train", cfg.files.parallel_train},
                        {"test", cfg.files.test_splits}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace distilkit
