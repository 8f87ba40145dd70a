#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "progdf/edit_oracle.hpp"
#include "progdf/gdf.hpp"
#include "progdf/pgs.hpp"
#include "progdf/region_mask.hpp"

namespace progdf {

struct MaskConfig {
  double epsilon = 0.8;
  MaskNormalization normalization = MaskNormalization::kContribution;
};

// Everything cmd_pipeline needs besides the scene and the edit spec.
//
//   {"seed": 0,
//    "rig":  {"azimuth_steps", "elevations", "azimuth_offset", "radius",
//             "fov_deg", "width", "height", "target"},
//    "mask": {"epsilon", "normalization": "count" | "contribution"},
//    "pgs":  {"steps", "alpha", "beta", "s", "lambda_edit", "lambda_prog",
//             "lambda_render", "lambda_perceptual", "snapshot_interval",
//             "view_order", "progressive_mode",
//             "lr": {"position", "log_scale", "rotation", "opacity", "color"}},
//    "gdf":  {"bins", "embed_dim", "pe_frequencies", "hidden", "bank_interval",
//             "iterations", "learning_rate", "learning_rate_final",
//             "lambda_render", "lambda_perceptual", "sampling",
//             "embedding_init", "live"}}
//
// Every key is optional; unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 0;
  RigConfig rig;
  MaskConfig mask;
  PgsConfig pgs;
  GdfConfig gdf;
  // Train the GDF while PGS runs, feeding snapshots as they appear.
  bool live_gdf = false;

  // Copies `seed` into the PGS and GDF configs.
  void apply_seed();
  void validate() const;
};

PipelineConfig decode_config(std::string_view text);
// Canonical form with every key present.
std::string encode_config(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace progdf
