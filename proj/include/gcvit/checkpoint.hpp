#pragma once

#include "gcvit/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace gcvit {

// Binary container, little endian:
//   "GCVITCKP" | u32 version | u32 scalar bytes (4 or 8)
//   u64 length | JSON text {"config": ModelConfig, "metadata": {...}}
//   u64 tensor count | per tensor: u32 name length, name, u64 rows, u64 cols, column-major data
// Tensors are matched to the model by name on load; a missing, extra or reshaped tensor is an
// error. Saving and loading with the same scalar type is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar> struct Checkpoint
{
  GcVit<Scalar> model;
  nlohmann::json metadata = nlohmann::json::object();
};

template <typename Scalar>
void save_checkpoint(std::filesystem::path const &path, GcVit<Scalar> const &model,
                     nlohmann::json const &metadata = nlohmann::json::object());

// Loads into `Scalar`, converting when the file was written with the other precision.
template <typename Scalar> Checkpoint<Scalar> load_checkpoint(std::filesystem::path const &path);

} // namespace gcvit
