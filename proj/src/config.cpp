#include "gcvit/config.hpp"

#include "gcvit/types.hpp"

#include <fmt/format.h>

namespace gcvit {

void ModelConfig::validate() const
{
  if (input_height <= 0 || input_width <= 0 || patch_size <= 0) {
    throw ConfigError("input size and patch size must be positive");
  }
  if (input_height % patch_size != 0 || input_width % patch_size != 0) {
    throw DimensionError(
      fmt::format("input {}x{} is not divisible by patch size {}", input_height, input_width, patch_size));
  }
  if (stem_channels <= 0) { throw ConfigError("stem_channels must be positive"); }
  if (stage_dims.empty()) { throw ConfigError("at least one stage is required"); }
  if (stage_depths.size() != stage_dims.size() || num_heads.size() != stage_dims.size()) {
    throw ConfigError("stage_depths, stage_dims and num_heads must have one entry per stage");
  }
  for (std::size_t s = 0; s < stage_dims.size(); ++s) {
    if (stage_depths[s] < 0) { throw ConfigError(fmt::format("stage {} depth is negative", s)); }
    if (stage_dims[s] <= 0 || num_heads[s] <= 0) {
      throw ConfigError(fmt::format("stage {} dim and head count must be positive", s));
    }
    if (stage_dims[s] % num_heads[s] != 0) {
      throw ConfigError(fmt::format("stage {} dim {} is not divisible by {} heads", s, stage_dims[s], num_heads[s]));
    }
    if (s > 0 && stage_dims[s] < stage_dims[s - 1]) { throw ConfigError("stage_dims must be non-decreasing"); }
  }
  if (mlp_ratio <= 0) { throw ConfigError("mlp_ratio must be positive"); }
  if (num_classes < 2) { throw ConfigError("num_classes must be at least 2"); }
}

ModelConfig desk_tiny(std::int64_t num_classes)
{
  ModelConfig cfg;
  cfg.num_classes = num_classes;
  return cfg;
}

ModelConfig paper_shaped(std::int64_t num_classes)
{
  ModelConfig cfg;
  cfg.input_height = cfg.input_width = 224;
  cfg.patch_size = 16;
  cfg.stem_channels = 4;
  cfg.stage_depths = {1, 1};
  cfg.stage_dims = {32, 64};
  cfg.num_heads = {2, 4};
  cfg.num_classes = num_classes;
  return cfg;
}

ModelConfig four_stage_layout(std::int64_t num_classes)
{
  ModelConfig cfg;
  cfg.input_height = cfg.input_width = 224;
  cfg.patch_size = 4;
  cfg.stem_channels = 4;
  cfg.stage_depths = {1, 1, 1, 1};
  cfg.stage_dims = {8, 16, 32, 64};
  cfg.num_heads = {1, 2, 2, 4};
  cfg.num_classes = num_classes;
  return cfg;
}

std::vector<std::pair<std::int64_t, std::int64_t>> stage_grids(ModelConfig const &cfg)
{
  std::vector<std::pair<std::int64_t, std::int64_t>> grids;
  std::int64_t h = cfg.grid_height();
  std::int64_t w = cfg.grid_width();
  for (std::size_t s = 0; s < cfg.num_stages(); ++s) {
    grids.emplace_back(h, w);
    h /= 2;
    w /= 2;
  }
  return grids;
}

void to_json(nlohmann::json &j, ModelConfig const &cfg)
{
  j = nlohmann::json{{"input_height", cfg.input_height},
                     {"input_width", cfg.input_width},
                     {"patch_size", cfg.patch_size},
                     {"stem_channels", cfg.stem_channels},
                     {"stage_depths", cfg.stage_depths},
                     {"stage_dims", cfg.stage_dims},
                     {"num_heads", cfg.num_heads},
                     {"mlp_ratio", cfg.mlp_ratio},
                     {"num_classes", cfg.num_classes}};
}

void from_json(nlohmann::json const &j, ModelConfig &cfg)
{
  j.at("input_height").get_to(cfg.input_height);
  j.at("input_width").get_to(cfg.input_width);
  j.at("patch_size").get_to(cfg.patch_size);
  j.at("stem_channels").get_to(cfg.stem_channels);
  j.at("stage_depths").get_to(cfg.stage_depths);
  j.at("stage_dims").get_to(cfg.stage_dims);
  j.at("num_heads").get_to(cfg.num_heads);
  j.at("mlp_ratio").get_to(cfg.mlp_ratio);
  j.at("num_classes").get_to(cfg.num_classes);
}

} // namespace gcvit
