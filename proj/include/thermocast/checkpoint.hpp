#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "thermocast/model.hpp"

namespace thermocast::model {

inline constexpr int kCheckpointVersion = 1;

// JSON checkpoint: format version, dimensions, variant, free-form metadata
// (scalers, target domain, training config) and every named parameter with
// its shape. Doubles are written in shortest round-trip form, so values
// reload bit for bit.
struct Checkpoint {
  Model model;
  Variant variant = Variant::full;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json dims_to_json(const ModelDims& dims);
ModelDims dims_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws IngestionError for missing files, unknown versions or shape mismatches.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace thermocast::model
