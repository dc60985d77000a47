#include "distilkit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distilkit/errors.hpp"

namespace distilkit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

OutputFormat output_format_from_string(const std::string& name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw ConfigError("unknown format '" + name + "' (expected csv or json)");
}

std::string format_number(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = std::string(kMetricsCsvHeader) + "\n";
    for (const auto& r : rows) {
        out += r.method + ',' + r.scenario + ',' + r.split + ',' + std::to_string(r.seed) + ',' +
               format_number(r.accuracy) + ',' + format_number(r.loss) + ',' + format_number(r.teacher_acc) + ',' +
               format_number(r.soft_fraction) + '\n';
    }
    return out;
}

std::string rows_to_json(const std::vector<ResultRow>& rows) {
    ordered_json doc = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json o;
        o["method"] = r.method;
        o["scenario"] = r.scenario;
        o["split"] = r.split;
        o["seed"] = r.seed;
        o["accuracy"] = r.accuracy;
        o["loss"] = r.loss;
        o["teacher_acc"] = r.teacher_acc;
        o["soft_fraction"] = r.soft_fraction;
        o["teacher_train_acc"] = r.teacher_train_acc;
        o["pseudo_label_acc"] = r.pseudo_label_acc ? ordered_json(*r.pseudo_label_acc) : ordered_json(nullptr);
        o["wall_clock_s"] = r.wall_clock_s;
        doc.push_back(std::move(o));
    }
    return doc.dump(2) + "\n";
}

std::vector<ResultRow> rows_from_json(const std::string& text) {
    std::vector<ResultRow> rows;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (!doc.is_array()) throw ConfigError("metrics JSON must be an array");
        for (const auto& o : doc) {
            ResultRow r;
            r.method = o.at("method").get<std::string>();
            r.scenario = o.at("scenario").get<std::string>();
            r.split = o.at("split").get<std::string>();
            r.seed = o.at("seed").get<std::uint64_t>();
            r.accuracy = o.at("accuracy").get<double>();
            r.loss = o.at("loss").get<double>();
            r.teacher_acc = o.at("teacher_acc").get<double>();
            r.soft_fraction = o.at("soft_fraction").get<double>();
            r.teacher_train_acc = o.value("teacher_train_acc", 0.0);
            if (o.contains("pseudo_label_acc") && !o.at("pseudo_label_acc").is_null()) {
                r.pseudo_label_acc = o.at("pseudo_label_acc").get<double>();
            }
            r.wall_clock_s = o.value("wall_clock_s", 0.0);
            rows.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed metrics JSON: ") + e.what());
    }
    return rows;
}

fs::path write_rows(const std::vector<ResultRow>& rows, const fs::path& dir, const std::string& stem,
                    OutputFormat format) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path path = dir / (stem + (format == OutputFormat::Csv ? ".csv" : ".json"));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (format == OutputFormat::Csv ? rows_to_csv(rows) : rows_to_json(rows));
    if (!out) throw IoError("write failed for " + path.string());
    return path;
}

const ComparisonRow* Comparison::find(const std::string& method) const {
    for (const auto& row : rows)
        if (row.method == method) return &row;
    return nullptr;
}

namespace {

void append_rows(const std::vector<ResultRow>& rows, Comparison& cmp,
                 std::map<std::string, std::map<std::string, std::vector<double>>>& samples) {
    for (const auto& r : rows) {
        if (cmp.scenario.empty()) cmp.scenario = r.scenario;
        if (std::find(cmp.splits.begin(), cmp.splits.end(), r.split) == cmp.splits.end()) cmp.splits.push_back(r.split);
        if (!cmp.find(r.method)) cmp.rows.push_back({r.method, {}});
        samples[r.method][r.split].push_back(r.accuracy);
    }
}

Summary summarize_samples(const std::vector<double>& xs) {
    Summary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
    return buf;
}

std::string signed_pp(double points) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f pp", points);
    return buf;
}

}  // namespace

Comparison summarize(const std::vector<ResultRow>& rows, const std::vector<ResultRow>& teacher_rows) {
    Comparison cmp;
    std::map<std::string, std::map<std::string, std::vector<double>>> samples;
    append_rows(teacher_rows, cmp, samples);
    append_rows(rows, cmp, samples);
    for (auto& row : cmp.rows)
        for (const auto& [split, xs] : samples[row.method]) row.splits[split] = summarize_samples(xs);

    for (const char* preferred : {"noisy_test", "mean"}) {
        if (cmp.headline.empty() && std::find(cmp.splits.begin(), cmp.splits.end(), preferred) != cmp.splits.end()) {
            cmp.headline = preferred;
        }
    }
    if (cmp.headline.empty() && !cmp.splits.empty()) cmp.headline = cmp.splits.front();
    return cmp;
}

std::vector<Gap> comparison_gaps(const Comparison& cmp) {
    std::vector<Gap> gaps;
    auto mean_of = [&](const std::string& method) -> std::optional<double> {
        const ComparisonRow* row = cmp.find(method);
        if (!row) return std::nullopt;
        const auto it = row->splits.find(cmp.headline);
        if (it == row->splits.end()) return std::nullopt;
        return it->second.mean;
    };
    auto add = [&](const std::string& label, std::optional<double> a, std::optional<double> b) {
        if (a && b) gaps.push_back({label, 100.0 * (*a - *b)});
    };

    const auto cond = mean_of("conditional");
    const auto soft = mean_of("soft_ts");
    add("conditional - soft_ts", cond, soft);
    add("soft_ts - hard", soft, mean_of("hard"));

    std::optional<double> best;
    std::string best_name;
    for (const auto& row : cmp.rows) {
        if (row.method.rfind("interpolated(", 0) != 0) continue;
        const auto m = mean_of(row.method);
        if (m && (!best || *m > *best)) {
            best = m;
            best_name = row.method;
        }
    }
    add("conditional - best interpolated [" + best_name + "]", cond, best);
    add("conditional - interpolated(0.5)", cond, mean_of("interpolated(0.5)"));
    add("conditional - wrong_only", cond, mean_of("wrong_only"));
    return gaps;
}

std::string format_comparison(const Comparison& cmp) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"method"};
    for (const auto& split : cmp.splits) header.push_back(split);
    cells.push_back(header);
    for (const auto& row : cmp.rows) {
        std::vector<std::string> line{row.method};
        for (const auto& split : cmp.splits) {
            const auto it = row.splits.find(split);
            line.push_back(it == row.splits.end() ? "-"
                                                  : pct(it->second.mean) + " +- " + pct(it->second.stddev));
        }
        cells.push_back(line);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

    std::ostringstream out;
    std::size_t seeds = 0;
    for (const auto& row : cmp.rows)
        for (const auto& [_, s] : row.splits) seeds = std::max(seeds, s.count);
    out << "scenario " << cmp.scenario << ": accuracy %, mean +- std over " << seeds << " seed(s)\n";
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            const std::string& text = cells[r][c];
            if (c == 0) {
                out << text << std::string(width[c] - text.size(), ' ');
            } else {
                out << "  " << std::string(width[c] - text.size(), ' ') << text;
            }
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = width[0];
            for (std::size_t c = 1; c < width.size(); ++c) total += 2 + width[c];
            out << std::string(total, '-') << '\n';
        }
    }
    out << "note: accuracy is higher-is-better (word error rate would be lower-is-better)\n";
    const auto gaps = comparison_gaps(cmp);
    if (!gaps.empty()) {
        out << "gaps on " << cmp.headline << ":\n";
        for (const auto& g : gaps) out << "  " << g.label << ": " << signed_pp(g.points) << '\n';
    }
    return out.str();
}

std::string comparison_to_csv(const Comparison& cmp) {
    std::string out = "method,scenario,split,mean_accuracy,std_accuracy,seeds\n";
    for (const auto& row : cmp.rows) {
        for (const auto& split : cmp.splits) {
            const auto it = row.splits.find(split);
            if (it == row.splits.end()) continue;
            out += row.method + ',' + cmp.scenario + ',' + split + ',' + format_number(it->second.mean) + ',' +
                   format_number(it->second.stddev) + ',' + std::to_string(it->second.count) + '\n';
        }
    }
    return out;
}

}  // namespace distilkit
