#pragma once

#include <filesystem>
#include <iosfwd>

#include "distilkit/synthdata.hpp"

namespace distilkit {

// Single set: header `label,f0,f1,...`.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(std::istream& in);
Dataset load_dataset_csv(const std::filesystem::path& path);

// Parallel set: header `label,t0,...,t{D-1},s0,...,s{D-1}`.
void write_parallel_csv(std::ostream& out, const ParallelDataset& data);
void save_parallel_csv(const ParallelDataset& data, const std::filesystem::path& path);
ParallelDataset read_parallel_csv(std::istream& in);
ParallelDataset load_parallel_csv(const std::filesystem::path& path);

}  // namespace distilkit
