#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "distilkit/harness.hpp"

namespace distilkit {

enum class OutputFormat { Csv, Json };

OutputFormat output_format_from_string(const std::string& name);

inline constexpr const char* kMetricsCsvHeader = "method,scenario,split,seed,accuracy,loss,teacher_acc,soft_fraction";

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// Wall-clock time is left out of the CSV so identical runs give identical bytes.
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::string rows_to_json(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_json(const std::string& text);

/// Writes <dir>/<stem>.csv or <dir>/<stem>.json; returns the path written.
std::filesystem::path write_rows(const std::vector<ResultRow>& rows, const std::filesystem::path& dir,
                                 const std::string& stem, OutputFormat format);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation over seeds, 0 for a single seed
    std::size_t count = 0;
};

struct ComparisonRow {
    std::string method;
    std::map<std::string, Summary> splits;
};

struct Comparison {
    std::string scenario;
    std::vector<std::string> splits;  // column order
    std::string headline;             // split the gaps are measured on
    std::vector<ComparisonRow> rows;  // unadapted teacher first, then methods in run order

    const ComparisonRow* find(const std::string& method) const;
};

Comparison summarize(const std::vector<ResultRow>& rows, const std::vector<ResultRow>& teacher_rows = {});

struct Gap {
    std::string label;
    double points = 0.0;  // percentage points on the headline split
};

/// conditional - soft_ts, soft_ts - hard, conditional - best interpolated,
/// conditional - interpolated(0.5) and conditional - wrong_only, for the
/// methods that are present.
std::vector<Gap> comparison_gaps(const Comparison& comparison);

std::string format_comparison(const Comparison& comparison);
std::string comparison_to_csv(const Comparison& comparison);

}  // namespace distilkit
