#include "distilkit/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distilkit/errors.hpp"

namespace distilkit {

using nlohmann::json;

std::string network_to_json(const Network& net) {
    json doc;
    doc["version"] = kCheckpointVersion;
    doc["input_dim"] = net.input_dim();
    doc["output_dim"] = net.output_dim();
    json layers = json::array();
    for (const Layer& layer : net.layers()) {
        layers.push_back({{"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"weights", layer.weights.values()},
                          {"bias", layer.bias},
                          {"activation", to_string(layer.activation)}});
    }
    doc["layers"] = std::move(layers);
    // nlohmann emits the shortest representation that parses back to the same double.
    return doc.dump(1) + "\n";
}

Network network_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw ConfigError("unsupported checkpoint version " + doc.at("version").dump());
        }
        std::vector<Layer> layers;
        for (const auto& entry : doc.at("layers")) {
            Layer layer;
            layer.weights = Matrix(entry.at("rows").get<std::size_t>(), entry.at("cols").get<std::size_t>(),
                                   entry.at("weights").get<std::vector<double>>());
            layer.bias = entry.at("bias").get<std::vector<double>>();
            layer.activation = activation_from_string(entry.at("activation").get<std::string>());
            layers.push_back(std::move(layer));
        }
        Network net(std::move(layers));
        if (net.input_dim() != doc.at("input_dim").get<std::size_t>() ||
            net.output_dim() != doc.at("output_dim").get<std::size_t>()) {
            throw DimensionError("checkpoint header dims disagree with its layers");
        }
        return net;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("inconsistent checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << network_to_json(net);
    if (!out) throw IoError("failed writing " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return network_from_json(buffer.str());
}

}  // namespace distilkit
