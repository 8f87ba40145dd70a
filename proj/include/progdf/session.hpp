#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "progdf/config.hpp"
#include "progdf/edit_oracle.hpp"
#include "progdf/gdf.hpp"
#include "progdf/pgs.hpp"
#include "progdf/types.hpp"

namespace progdf {

struct StageTimings {
  double oracle_ms = 0.0;
  double mask_ms = 0.0;
  double pgs_ms = 0.0;
  double gdf_ms = 0.0;
};

struct EditResult {
  std::string id;  // "edit-<n>"
  std::string label;
  EditSpec spec;
  Scene target;          // oracle-edited scene
  RegionMask region_gt;  // oracle region
  RegionMask region;     // recovered from 2D masks; what PGS and the GDF use
  double iou = 0.0;
  Trajectory trajectory;
  GdfModel model;
  std::vector<GdfLossReport> gdf_losses;
  StageTimings timings;
};

struct PipelineResult {
  Scene scene;
  PipelineConfig config;
  std::vector<EditResult> edits;
};

using PipelineLog = std::function<void(const std::string&)>;

// edit-oracle -> region-mask -> PGS -> GDF, once per spec, each from the
// original scene. Errors are re-thrown prefixed with the failing stage.
PipelineResult run_pipeline(const Scene& scene, const std::vector<EditSpec>& specs,
                            const PipelineConfig& cfg, const PipelineLog& log = {});

// Session directory:
//   session.json            manifest (no timings, no absolute paths)
//   timings.json            per-edit stage timings in ms
//   scene.json              original scene
//   edit-<n>/region.json, region-gt.json, target.json, model.gdf,
//            gdf-losses.csv, trajectory/
void write_session(const std::filesystem::path& dir, const PipelineResult& result);

// File-level driver used by the CLI. `seed` overrides the config's seed.
void cmd_pipeline(const std::filesystem::path& scene_path, const std::filesystem::path& edit_path,
                  const std::optional<std::filesystem::path>& config_path,
                  const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
                  const PipelineLog& log = {});

struct RenderRequest {
  Camera camera;
  // (edit index, u) with u clamped to [0, 1].
  std::vector<std::pair<std::size_t, double>> controls;
};

struct RenderResult {
  ImageBuffer image;
  std::vector<std::uint8_t> png;
  double compose_ms = 0.0;
  double render_ms = 0.0;
};

struct SessionEdit {
  std::string id;
  std::string label;
  std::string kind;
  RegionMask region;
  RegionMask region_gt;
  GdfModel model;
  Scene target;
  std::filesystem::path trajectory_dir;
  int horizon = 0;
  double iou = 0.0;
  std::optional<StageTimings> timings;
};

// A loaded session. Immutable after load; safe to share across threads.
class Session {
 public:
  static Session load(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const Scene& scene() const { return scene_; }
  const PipelineConfig& config() const { return config_; }
  const std::vector<SessionEdit>& edits() const { return edits_; }

  // Index of an edit by id ("edit-0") or label; throws kNotFound.
  std::size_t find_edit(std::string_view id) const;

  // Scene stats, edit list, camera defaults and bin count as JSON.
  std::string meta_json() const;

  // Body of POST /api/render:
  //   {"camera": {"azimuth", "elevation", "radius", "fov", "width",
  //               "height", "target"}
  //            | {"width", "height", "fx", "fy", "cx", "cy",
  //               "rotation": [9, row-major], "translation": [3]},
  //    "controls": [{"edit": "edit-0", "u": 0.5}, ...] | {"edit-0": 0.5}}
  // Missing camera fields take the session defaults. Throws kFormat on a
  // malformed body and kNotFound on an unknown edit id.
  RenderRequest parse_request(std::string_view text) const;

  // Controls at exactly u = 0 are treated as switched off, so a resting
  // slider shows the original scene.
  Scene compose(const std::vector<std::pair<std::size_t, double>>& controls) const;
  RenderResult render(const RenderRequest& req) const;

  Camera default_camera() const;

 private:
  std::filesystem::path dir_;
  Scene scene_;
  PipelineConfig config_;
  std::vector<SessionEdit> edits_;
};

// Rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// The training rig rotated by half an azimuth step.
RigConfig heldout_rig(const RigConfig& rig);

struct EvalRow {
  std::string edit;
  std::string label;
  double u = 0.0;
  double l1_vs_original = 0.0;
  double l1_vs_target = 0.0;
  double l1_vs_final = 0.0;  // against the PGS end state
  double offset_l1 = 0.0;    // mean raw-offset L1 norm over the region
  double sharpness = 0.0;
  double spearman = 0.0;  // per edit, repeated on each row
  double iou = 0.0;
  double pgs_residual = 0.0;  // PGS end state vs target
  double compose_ms = 0.0;
  std::optional<StageTimings> timings;
};

// One row per edit per u in {0, 1/u_steps, ..., 1}, over the held-out rig.
std::vector<EvalRow> evaluate_session(const Session& session, int u_steps = 10);
std::string encode_eval_csv(const std::vector<EvalRow>& rows);
void cmd_eval(const std::filesystem::path& session_dir, const std::filesystem::path& out_csv);

}  // namespace progdf
