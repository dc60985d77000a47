#include "distilkit/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "distilkit/errors.hpp"

namespace distilkit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(field);
    }
    return fields;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

std::size_t parse_label(const std::string& s, std::size_t line_no) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("line " + std::to_string(line_no) + ": bad label '" + s + "'");
    }
    return v;
}

std::size_t infer_classes(const std::vector<std::size_t>& labels) {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::size_t> labels;
    std::vector<double> values;  // row-major, header.size() - 1 columns
};

RawTable read_table(std::istream& in) {
    RawTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("CSV is empty");
    t.header = split_csv_line(line);
    if (t.header.empty() || t.header.front() != "label") throw ConfigError("CSV header must start with 'label'");
    const std::size_t width = t.header.size();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != width) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                              " fields, got " + std::to_string(fields.size()));
        }
        t.labels.push_back(parse_label(fields[0], line_no));
        for (std::size_t j = 1; j < width; ++j) t.values.push_back(parse_double(fields[j], line_no));
    }
    return t;
}

template <class Writer>
void save_with(const std::filesystem::path& path, Writer&& write) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write(out);
    if (!out) throw IoError("failed writing " + path.string());
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    data.validate();
    out << "label";
    for (std::size_t j = 0; j < data.features.cols(); ++j) out << ",f" << j;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.labels[i];
        for (double v : data.features.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    save_with(path, [&](std::ostream& out) { write_dataset_csv(out, data); });
}

Dataset read_dataset_csv(std::istream& in) {
    RawTable t = read_table(in);
    const std::size_t dim = t.header.size() - 1;
    Dataset data{Matrix(t.labels.size(), dim, std::move(t.values)), std::move(t.labels), 0};
    data.num_classes = infer_classes(data.labels);
    return data;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_dataset_csv(in);
}

void write_parallel_csv(std::ostream& out, const ParallelDataset& data) {
    data.validate();
    const std::size_t dt = data.source.cols();
    const std::size_t ds = data.target.cols();
    out << "label";
    for (std::size_t j = 0; j < dt; ++j) out << ",t" << j;
    for (std::size_t j = 0; j < ds; ++j) out << ",s" << j;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.labels[i];
        for (double v : data.source.row(i)) out << ',' << format_double(v);
        for (double v : data.target.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

void save_parallel_csv(const ParallelDataset& data, const std::filesystem::path& path) {
    save_with(path, [&](std::ostream& out) { write_parallel_csv(out, data); });
}

ParallelDataset read_parallel_csv(std::istream& in) {
    RawTable t = read_table(in);
    std::size_t dt = 0;
    std::size_t ds = 0;
    for (std::size_t j = 1; j < t.header.size(); ++j) {
        const char kind = t.header[j].empty() ? '?' : t.header[j][0];
        if (kind == 't' && ds == 0) {
            ++dt;
        } else if (kind == 's') {
            ++ds;
        } else {
            throw ConfigError("parallel CSV header must be label,t0..,s0..; got '" + t.header[j] + "'");
        }
    }
    const std::size_t n = t.labels.size();
    const std::size_t width = dt + ds;
    ParallelDataset data{Matrix(n, dt), Matrix(n, ds), std::move(t.labels), 0};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dt; ++j) data.source(i, j) = t.values[i * width + j];
        for (std::size_t j = 0; j < ds; ++j) data.target(i, j) = t.values[i * width + dt + j];
    }
    data.num_classes = infer_classes(data.labels);
    return data;
}

ParallelDataset load_parallel_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_parallel_csv(in);
}

}  // namespace distilkit
