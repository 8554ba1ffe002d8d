#pragma once

// Model files are JSON:
//   {"format": "bregman-perceptron-model", "version": 1,
//    "inputs": m, "outputs": n, "activation": "relu",
//    "W": [m*n reals, row-major], "b": [n reals], "metadata": {...}}

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bregman_perceptron/optim.hpp"

namespace bregman {

inline constexpr const char* kModelFormat = "bregman-perceptron-model";
inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  PerceptronModel model;
  std::string activation;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

nlohmann::ordered_json model_to_json(const ModelFile& file);
/// Throws std::invalid_argument on schema violations.
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace bregman
