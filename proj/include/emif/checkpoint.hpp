#pragma once

#include "emif/corpus.hpp"
#include "emif/model.hpp"
#include "emif/training.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace emif {

inline constexpr int kCheckpointFormatVersion = 1;

/// Parameters, vocabulary and training configuration in one JSON document.
/// Every parameter group is stored with its shape.
struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
  TrainConfig config;
};

std::string checkpoint_to_string(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_string(const std::string& text, const std::optional<ModelDims>& expected = std::nullopt);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// Throws ValidationError when a stored shape disagrees with the stored (or
/// expected) dimensions; nothing is reshaped.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelDims>& expected = std::nullopt);

}  // namespace emif
