#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distilkit/checkpoint.hpp"
#include "distilkit/dataset_io.hpp"
#include "distilkit/errors.hpp"

using namespace distilkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "distilkit_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(DatasetCsv, RoundTripIsExact) {
    DatasetSpec spec;
    spec.samples_per_class = 20;
    spec.seed = 12;
    const Dataset d = make_clean(spec);
    std::stringstream buffer;
    write_dataset_csv(buffer, d);
    const std::string text = buffer.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "label,f0,f1,f2,f3,f4,f5,f6,f7");
    EXPECT_EQ(read_dataset_csv(buffer), d);
}

TEST(DatasetCsv, ParallelRoundTripIsExact) {
    DatasetSpec spec;
    spec.feature_dim = 3;
    spec.samples_per_class = 10;
    spec.seed = 13;
    const ParallelDataset p = corrupt(make_clean(spec), {CorruptionKind::AdditiveGaussian, 1.0, 1});
    const fs::path path = scratch("parallel.csv");
    save_parallel_csv(p, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "label,t0,t1,t2,s0,s1,s2");
    EXPECT_EQ(load_parallel_csv(path), p);
}

TEST(DatasetCsv, MalformedInputIsAConfigError) {
    std::stringstream bad_header("x,f0\n0,1\n");
    EXPECT_THROW(read_dataset_csv(bad_header), ConfigError);
    std::stringstream ragged("label,f0,f1\n0,1\n");
    EXPECT_THROW(read_dataset_csv(ragged), ConfigError);
    std::stringstream bad_number("label,f0\n0,abc\n");
    EXPECT_THROW(read_dataset_csv(bad_number), ConfigError);
    std::stringstream bad_label("label,f0\n-1,0.5\n");
    EXPECT_THROW(read_dataset_csv(bad_label), ConfigError);
    std::stringstream odd_parallel("label,s0,t0\n0,1,2\n");
    EXPECT_THROW(read_parallel_csv(odd_parallel), ConfigError);
}

TEST(DatasetCsv, MissingFileIsAnIoError) {
    EXPECT_THROW(load_dataset_csv(scratch("absent.csv")), IoError);
    EXPECT_THROW(save_dataset_csv(Dataset{}, scratch("no_such_dir") / "x" / "y.csv"), IoError);
}

TEST(Checkpoint, DocumentLayout) {
    const Network net({Layer{Matrix{{1, 2}, {3, 4}, {5, 6}}, {0.5, -0.5, 0.25}, Activation::Tanh},
                       Layer{Matrix{{1, 0, -1}}, {0.125}, Activation::Identity}});
    const auto doc = nlohmann::json::parse(network_to_json(net));
    EXPECT_EQ(doc.at("version"), kCheckpointVersion);
    EXPECT_EQ(doc.at("input_dim"), 2);
    EXPECT_EQ(doc.at("output_dim"), 1);
    ASSERT_EQ(doc.at("layers").size(), 2u);
    const auto& first = doc.at("layers")[0];
    EXPECT_EQ(first.at("rows"), 3);
    EXPECT_EQ(first.at("cols"), 2);
    EXPECT_EQ(first.at("weights"), nlohmann::json({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
    EXPECT_EQ(first.at("bias"), nlohmann::json({0.5, -0.5, 0.25}));
    EXPECT_EQ(first.at("activation"), "tanh");
    EXPECT_EQ(doc.at("layers")[1].at("activation"), "identity");
}

TEST(Checkpoint, FileRoundTripAndErrors) {
    Rng rng(1);
    const std::size_t dims[] = {8, 32, 32, 4};
    const Network net = Network::glorot(dims, rng);
    const fs::path path = scratch("net.json");
    save_checkpoint(net, path);
    EXPECT_EQ(load_checkpoint(path), net);

    EXPECT_THROW(load_checkpoint(scratch("missing.json")), IoError);
    EXPECT_THROW(network_from_json("{not json"), ConfigError);
    EXPECT_THROW(network_from_json(R"({"version": 99, "layers": []})"), ConfigError);
    EXPECT_THROW(network_from_json(R"({"version": 1, "input_dim": 2, "output_dim": 1,
        "layers": [{"rows": 1, "cols": 2, "weights": [1], "bias": [0], "activation": "identity"}]})"),
                 ConfigError);
    EXPECT_THROW(network_from_json(R"({"version": 1, "input_dim": 1, "output_dim": 1,
        "layers": [{"rows": 1, "cols": 1, "weights": [1], "bias": [0], "activation": "relu"}]})"),
                 ConfigError);
}
