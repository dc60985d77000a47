#pragma once

#include <filesystem>
#include <string>

#include "distilkit/network.hpp"

namespace distilkit {

inline constexpr int kCheckpointVersion = 1;

// {version, input_dim, output_dim, layers: [{rows, cols, weights, bias, activation}]}
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace distilkit
