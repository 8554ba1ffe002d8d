#include "bregman_perceptron/model_io.hpp"

#include <fstream>
#include <stdexcept>

namespace bregman {

nlohmann::ordered_json model_to_json(const ModelFile& file) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["inputs"] = file.model.inputs();
  j["outputs"] = file.model.outputs();
  j["activation"] = file.activation;
  j["W"] = file.model.W.raw();
  j["b"] = file.model.b.raw();
  j["metadata"] = file.metadata;
  return j;
}

ModelFile model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw std::invalid_argument("not a bregman-perceptron model file");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw std::invalid_argument("unsupported model file version");
    }
    const auto m = j.at("inputs").get<std::size_t>();
    const auto n = j.at("outputs").get<std::size_t>();
    auto w = j.at("W").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (w.size() != m * n || b.size() != n) {
      throw std::invalid_argument("model file: W/b sizes do not match inputs x outputs");
    }
    ModelFile file;
    file.model = PerceptronModel(DenseMatrix(m, n, std::move(w)), DenseVector(std::move(b)));
    file.activation = j.at("activation").get<std::string>();
    parse_activation(file.activation);
    if (j.contains("metadata")) file.metadata = j["metadata"];
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  out << model_to_json(file).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write model to " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace bregman
