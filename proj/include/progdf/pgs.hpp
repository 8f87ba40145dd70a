#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "progdf/adam.hpp"
#include "progdf/losses.hpp"
#include "progdf/renderer.hpp"
#include "progdf/types.hpp"

namespace progdf {

struct LearningRates {
  double position = 1.6e-4;
  double log_scale = 5e-3;
  double rotation = 1e-3;
  double opacity = 5e-2;
  double color = 2.5e-2;

  // Rate for raw coordinate k (RawVector layout).
  double for_coordinate(int k) const;
};

enum class ViewOrder { kRoundRobin, kShuffled };

const char* view_order_name(ViewOrder order);
ViewOrder parse_view_order(const std::string& name);

// How the L1 movement penalty lambda_prog * w_t * |d|_1 on the step d
// enters the update (r is the Adam-normalized direction).
enum class ProgressiveMode {
  // Quadratic majorizer of the L1 term at the nominal step size:
  // d = -lr * r / (1 + lambda_prog * w_t).
  kMajorized,
  // Exact soft-threshold: d = -lr * sign(r) * max(0, |r| - lambda_prog * w_t).
  kProximal,
  // Subgradient of the previous step's movement added to the loss gradient.
  kSubgradient,
};

const char* progressive_mode_name(ProgressiveMode mode);
ProgressiveMode parse_progressive_mode(const std::string& name);

struct PgsConfig {
  int steps = 1500;
  ProgressiveSchedule schedule;
  double lambda_edit = 1.0;
  double lambda_prog = 5.0;
  double lambda_render = 1.0;
  double lambda_perceptual = kDefaultPerceptualWeight;
  int snapshot_interval = 100;
  LearningRates lr;
  ViewOrder view_order = ViewOrder::kRoundRobin;
  ProgressiveMode progressive_mode = ProgressiveMode::kMajorized;
  std::uint64_t seed = 0;

  void validate() const;
};

// Unweighted terms; total = lambda_edit*edit + lambda_prog*prog +
// lambda_render*render. edit and render are measured on the state before
// the step, prog on the step taken.
struct LossReport {
  int t = 0;
  std::size_t view = 0;
  double edit = 0.0;
  double prog = 0.0;
  double render = 0.0;
  double total = 0.0;
};

class PgsState {
 public:
  PgsState(const Scene& initial, const RegionMask& region, const PgsConfig& cfg);

  const Scene& scene() const { return scene_; }
  const RegionMask& region() const { return region_; }
  const std::vector<std::size_t>& active() const { return active_; }
  // Raw parameters of the in-region Gaussians, in active() order.
  const std::vector<RawVector>& raw() const { return raw_; }

  // View index used at step t (1-based).
  std::size_t view_for_step(int t, std::size_t view_count);

 private:
  friend LossReport pgs_step(PgsState&, const std::vector<Camera>&, const std::vector<ImageBuffer>&,
                             int, const PgsConfig&);
  Scene scene_;
  RegionMask region_;
  std::vector<std::size_t> active_;
  std::vector<RawVector> raw_;
  std::vector<RawVector> last_step_;
  Adam<double> adam_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
};

// One optimization step on the view chosen for step t. Throws on a
// non-finite loss.
LossReport pgs_step(PgsState& state, const std::vector<Camera>& cameras,
                    const std::vector<ImageBuffer>& targets, int t, const PgsConfig& cfg);

struct Snapshot {
  int t = 0;
  Scene scene;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<LossReport> losses;
};

// Steps at which run_pgs records snapshots: 0, every interval, and steps.
std::vector<int> snapshot_steps(int steps, int interval);

using SnapshotCallback = std::function<void(const Snapshot&)>;

Trajectory run_pgs(const Scene& initial, const std::vector<Camera>& cameras,
                   const std::vector<ImageBuffer>& targets, const RegionMask& region,
                   const PgsConfig& cfg, const SnapshotCallback& on_snapshot = {});

// Directory layout: step-%06d.json per snapshot, losses.csv
// (t,edit,prog,render,total) and manifest.json.
void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                     const std::string& config_json);
Trajectory load_trajectory(const std::filesystem::path& dir);

std::string encode_losses_csv(const std::vector<LossReport>& losses);

}  // namespace progdf
