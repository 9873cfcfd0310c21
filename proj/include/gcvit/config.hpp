#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace gcvit {

// Architecture hyperparameters. Stage s runs `stage_depths[s]` global-context attention blocks at
// width `stage_dims[s]` with `num_heads[s]` heads; the first stage width is the patch embedding
// width D.
struct ModelConfig
{
  std::int64_t input_height = 64;
  std::int64_t input_width = 64;
  std::int64_t patch_size = 8;
  std::int64_t stem_channels = 8;
  std::vector<std::int64_t> stage_depths{2, 2};
  std::vector<std::int64_t> stage_dims{32, 64};
  std::vector<std::int64_t> num_heads{2, 2};
  std::int64_t mlp_ratio = 4;
  std::int64_t num_classes = 12;

  std::int64_t embed_dim() const { return stage_dims.front(); }
  std::int64_t head_dim(std::size_t stage) const { return stage_dims.at(stage) / num_heads.at(stage); }
  std::int64_t grid_height() const { return input_height / patch_size; }
  std::int64_t grid_width() const { return input_width / patch_size; }
  std::int64_t num_patches() const { return grid_height() * grid_width(); }
  std::size_t num_stages() const { return stage_dims.size(); }

  // Throws ConfigError (or DimensionError for H, W not divisible by P) when an invariant fails.
  void validate() const;

  bool operator==(ModelConfig const &) const = default;
};

// 2 stages, dims 32/64, 2 heads, P=8 on 64x64 inputs.
ModelConfig desk_tiny(std::int64_t num_classes = 12);

// 224x224 input with 16x16 patches: a 14x14 grid halved once to 7x7.
ModelConfig paper_shaped(std::int64_t num_classes = 12);

// 224x224 input with 4x4 patches and four stages: 56 -> 28 -> 14 -> 7. Used for shape checks.
ModelConfig four_stage_layout(std::int64_t num_classes = 12);

// Closed-form patch grid side lengths (height, width) entering each stage.
std::vector<std::pair<std::int64_t, std::int64_t>> stage_grids(ModelConfig const &cfg);

void to_json(nlohmann::json &j, ModelConfig const &cfg);
void from_json(nlohmann::json const &j, ModelConfig &cfg);

} // namespace gcvit
