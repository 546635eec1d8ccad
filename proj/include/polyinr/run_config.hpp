#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "polyinr/generator.hpp"
#include "polyinr/inversion.hpp"
#include "polyinr/training.hpp"

namespace polyinr {

// JSON run description read by the CLI's --config flag:
//
// {
//   "generator": {"z_dim": 64, "levels": 10, ...},        required
//   "seed": 0,
//   "schedule": [{"resolution": 16, "image_budget": 1000, "batch_size": 8}],
//   "fit": {"steps": 2000, "lr": 1e-4},
//   "inversion": {"steps": 1000, "lr": 0.01, "init": "mean" | "seed",
//                 "loss": "mse" | "mse+gradient", "log_every": 0,
//                 "mean_samples": 1000, "seed": 0},
//   "dataset": "dir/of/pngs",
//   "output": {"dir": "out", "checkpoint": "model.pinr"}
// }
//
// Unknown keys anywhere are rejected. Inside a schedule stage, resolution,
// image_budget and batch_size are required.
struct FitSettings {
  std::size_t steps = 2000;
  double lr = 1e-4;
};

struct RunConfig {
  GeneratorConfig generator;
  std::uint64_t seed = 0;
  std::optional<Schedule> schedule;
  FitSettings fit;
  InversionConfig inversion;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> output_checkpoint;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace polyinr
