#include "thermocast/checkpoint.hpp"

#include <fstream>

#include "thermocast/errors.hpp"

namespace thermocast::model {

nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"dynamic_features", d.dynamic_features}, {"context_features", d.context_features},
          {"window", d.window},                     {"horizon", d.horizon},
          {"hidden", d.hidden},                     {"ext_hidden", d.ext_hidden},
          {"phy_hidden", d.phy_hidden},             {"disc_hidden", d.disc_hidden}};
}

ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.dynamic_features = j.at("dynamic_features").get<std::size_t>();
  d.context_features = j.at("context_features").get<std::size_t>();
  d.window = j.at("window").get<std::size_t>();
  d.horizon = j.at("horizon").get<std::size_t>();
  d.hidden = j.at("hidden").get<std::size_t>();
  d.ext_hidden = j.at("ext_hidden").get<std::size_t>();
  d.phy_hidden = j.at("phy_hidden").get<std::size_t>();
  d.disc_hidden = j.at("disc_hidden").get<std::size_t>();
  return d;
}

nlohmann::json to_json(const Checkpoint& ckpt) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : ckpt.model.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", p.tensor.shape()},
                      {"values", std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())}});
  }
  return {{"format", "thermocast-checkpoint"},
          {"version", kCheckpointVersion},
          {"dims", dims_to_json(ckpt.model.dims())},
          {"variant", name_of(ckpt.variant)},
          {"metadata", ckpt.metadata},
          {"parameters", params}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "thermocast-checkpoint") throw IngestionError("not a thermocast checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw IngestionError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt{Model::zeros(dims_from_json(j.at("dims"))),
                    parse_variant(j.at("variant").get<std::string>()), j.value("metadata", nlohmann::json::object())};
    auto params = ckpt.model.parameters();
    const auto& stored = j.at("parameters");
    if (stored.size() != params.size()) throw IngestionError("checkpoint parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& s = stored[i];
      if (s.at("name").get<std::string>() != params[i].name) {
        throw IngestionError("checkpoint parameter " + std::to_string(i) + " is '" +
                             s.at("name").get<std::string>() + "', expected '" + params[i].name + "'");
      }
      const auto shape = s.at("shape").get<ndgrad::Shape>();
      const auto values = s.at("values").get<std::vector<double>>();
      if (shape != params[i].tensor.shape() || values.size() != params[i].tensor.size()) {
        throw IngestionError("checkpoint parameter '" + params[i].name + "' has shape " +
                             ndgrad::shape_string(shape) + ", expected " +
                             ndgrad::shape_string(params[i].tensor.shape()));
      }
      std::copy(values.begin(), values.end(), params[i].tensor.mutable_values().begin());
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace thermocast::model
