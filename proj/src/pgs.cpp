#include "progdf/pgs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "progdf/error.hpp"
#include "progdf/model.hpp"
#include "progdf/scene_io.hpp"

namespace progdf {

using nlohmann::json;

double LearningRates::for_coordinate(int k) const {
  if (k < raw::kLogScale) return position;
  if (k < raw::kQuaternion) return log_scale;
  if (k < raw::kOpacityLogit) return rotation;
  if (k < raw::kColorLogit) return opacity;
  return color;
}

const char* progressive_mode_name(ProgressiveMode mode) {
  switch (mode) {
    case ProgressiveMode::kMajorized: return "majorized";
    case ProgressiveMode::kProximal: return "proximal";
    case ProgressiveMode::kSubgradient: return "subgradient";
  }
  return "unknown";
}

ProgressiveMode parse_progressive_mode(const std::string& name) {
  if (name == "majorized") return ProgressiveMode::kMajorized;
  if (name == "proximal") return ProgressiveMode::kProximal;
  if (name == "subgradient") return ProgressiveMode::kSubgradient;
  fail(ErrorCode::kInvalidArgument, "unknown progressive mode '" + name + "'");
}

const char* view_order_name(ViewOrder order) {
  return order == ViewOrder::kRoundRobin ? "round-robin" : "shuffled";
}

ViewOrder parse_view_order(const std::string& name) {
  if (name == "round-robin") return ViewOrder::kRoundRobin;
  if (name == "shuffled") return ViewOrder::kShuffled;
  fail(ErrorCode::kInvalidArgument, "unknown view order '" + name + "'");
}

void PgsConfig::validate() const {
  require(steps >= 0, "pgs: steps must be >= 0");
  require(schedule.beta > 0.0 && schedule.s > 0.0, "pgs: beta and s must be positive");
  require(snapshot_interval >= 1, "pgs: snapshot interval must be >= 1");
  require(lambda_edit >= 0.0 && lambda_prog >= 0.0 && lambda_render >= 0.0 && lambda_perceptual >= 0.0,
          "pgs: loss weights must be non-negative");
}

PgsState::PgsState(const Scene& initial, const RegionMask& region, const PgsConfig& cfg)
    : scene_(initial), region_(region), rng_(cfg.seed) {
  require(region.size() == initial.size(), "pgs: region length does not match scene");
  active_ = region.indices();
  raw_.reserve(active_.size());
  for (std::size_t i : active_) raw_.push_back(deactivate(initial.gaussians[i]).values);
  last_step_.assign(active_.size(), RawVector{});
  adam_ = Adam<double>(active_.size() * raw::kDim);
}

std::size_t PgsState::view_for_step(int t, std::size_t view_count) {
  const std::size_t slot = static_cast<std::size_t>(t - 1) % view_count;
  if (order_.size() != view_count) {
    order_.resize(view_count);
    for (std::size_t i = 0; i < view_count; ++i) order_[i] = i;
  }
  return order_[slot];
}

LossReport pgs_step(PgsState& state, const std::vector<Camera>& cameras,
                    const std::vector<ImageBuffer>& targets, int t, const PgsConfig& cfg) {
  require(!cameras.empty() && cameras.size() == targets.size(), "pgs_step: need one target per camera");
  require(t >= 1, "pgs_step: steps are numbered from 1");

  LossReport report;
  report.t = t;
  if (cfg.view_order == ViewOrder::kShuffled && (t - 1) % cameras.size() == 0) {
    state.order_.resize(cameras.size());
    for (std::size_t i = 0; i < cameras.size(); ++i) state.order_[i] = i;
    std::shuffle(state.order_.begin(), state.order_.end(), state.rng_);
  }
  report.view = state.view_for_step(t, cameras.size());
  const Camera& cam = cameras[report.view];

  const ImageBuffer img = render(state.scene_, cam);
  ImageBuffer g_edit, g_sharp;
  const EditLoss el = edit_loss(img, targets[report.view], cfg.lambda_perceptual, g_edit);
  const double sharp = sharpness_loss(img, g_sharp);
  report.edit = el.value;
  report.render = sharp;
  if (!std::isfinite(el.value) || !std::isfinite(sharp)) {
    fail(ErrorCode::kNumeric, "pgs step " + std::to_string(t) + ": non-finite loss (edit=" +
                                  std::to_string(el.value) + ", render=" + std::to_string(sharp) + ")");
  }

  ImageBuffer adjoint(img.width, img.height);
  for (std::size_t p = 0; p < adjoint.pixels.size(); ++p) {
    adjoint.pixels[p] = cfg.lambda_edit * g_edit.pixels[p] + cfg.lambda_render * g_sharp.pixels[p];
  }
  const RenderGradients grads = render_backward(state.scene_, cam, adjoint);

  const double weight = cfg.schedule.weight(t);
  const double threshold = cfg.lambda_prog * weight;
  double moved = 0.0;
  state.adam_.begin_step();
  for (std::size_t a = 0; a < state.active_.size(); ++a) {
    const std::size_t gi = state.active_[a];
    RawVector& raw = state.raw_[a];
    RawVector g = grads[gi];
    double qn = 0.0;
    for (int k = raw::kQuaternion; k < raw::kQuaternion + 4; ++k) qn += raw[k] * raw[k];
    scale_quaternion_gradient(g, std::sqrt(qn));

    bool changed = false;
    for (int k = 0; k < raw::kDim; ++k) {
      double gk = g[k];
      if (cfg.progressive_mode == ProgressiveMode::kSubgradient) {
        const double prev = state.last_step_[a][k];
        gk += threshold * static_cast<double>((prev > 0) - (prev < 0));
      }
      if (!std::isfinite(gk)) {
        fail(ErrorCode::kNumeric, "pgs step " + std::to_string(t) + ": non-finite gradient on Gaussian " +
                                      std::to_string(gi));
      }
      const double r = state.adam_.direction(a * raw::kDim + k, gk);
      const double lr = cfg.lr.for_coordinate(k);
      double d;
      switch (cfg.progressive_mode) {
        case ProgressiveMode::kMajorized:
          d = -lr * r / (1.0 + threshold);
          break;
        case ProgressiveMode::kProximal:
          d = -lr * std::copysign(std::max(0.0, std::abs(r) - threshold), r);
          break;
        default:
          d = -lr * r;
      }
      state.last_step_[a][k] = d;
      if (d != 0.0) {
        raw[k] += d;
        moved += std::abs(d);
        changed = true;
      }
    }
    if (changed) state.scene_.gaussians[gi] = activate(RawParams{raw});
  }
  report.prog = weight * moved;
  report.total = cfg.lambda_edit * report.edit + cfg.lambda_prog * report.prog +
                 cfg.lambda_render * report.render;
  return report;
}

std::vector<int> snapshot_steps(int steps, int interval) {
  require(steps >= 0 && interval >= 1, "snapshot_steps: invalid arguments");
  std::vector<int> out;
  for (int t = 0; t < steps; t += interval) out.push_back(t);
  out.push_back(steps);
  return out;
}

Trajectory run_pgs(const Scene& initial, const std::vector<Camera>& cameras,
                   const std::vector<ImageBuffer>& targets, const RegionMask& region,
                   const PgsConfig& cfg, const SnapshotCallback& on_snapshot) {
  cfg.validate();
  Trajectory traj;
  const std::vector<int> marks = snapshot_steps(cfg.steps, cfg.snapshot_interval);
  auto record = [&](int t, const Scene& s) {
    traj.snapshots.push_back({t, s});
    if (on_snapshot) on_snapshot(traj.snapshots.back());
  };
  record(0, initial);
  if (cfg.steps == 0) return traj;

  PgsState state(initial, region, cfg);
  std::size_t next = 1;
  traj.losses.reserve(static_cast<std::size_t>(cfg.steps));
  for (int t = 1; t <= cfg.steps; ++t) {
    traj.losses.push_back(pgs_step(state, cameras, targets, t, cfg));
    if (next < marks.size() && marks[next] == t) {
      record(t, state.scene());
      ++next;
    }
  }
  return traj;
}

namespace {

std::string step_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%06d.json", t);
  return buf;
}

}  // namespace

std::string encode_losses_csv(const std::vector<LossReport>& losses) {
  std::string out = "t,edit,prog,render,total\n";
  char buf[160];
  for (const LossReport& l : losses) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g\n", l.t, l.edit, l.prog, l.render, l.total);
    out += buf;
  }
  return out;
}

void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                     const std::string& config_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  json manifest;
  manifest["version"] = 1;
  manifest["snapshots"] = json::array();
  for (const Snapshot& s : traj.snapshots) {
    save_scene(dir / step_name(s.t), s.scene);
    manifest["snapshots"].push_back({{"t", s.t}, {"file", step_name(s.t)}});
  }
  manifest["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  manifest["losses"] = "losses.csv";
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text_file(dir / "losses.csv", encode_losses_csv(traj.losses));
}

Trajectory load_trajectory(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "trajectory manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  Trajectory traj;
  if (!manifest.contains("snapshots") || !manifest["snapshots"].is_array()) {
    fail(ErrorCode::kFormat, "trajectory manifest: missing 'snapshots'");
  }
  for (const auto& entry : manifest["snapshots"]) {
    if (!entry.contains("t") || !entry.contains("file")) {
      fail(ErrorCode::kFormat, "trajectory manifest: bad snapshot entry");
    }
    traj.snapshots.push_back({entry["t"].get<int>(), load_scene(dir / entry["file"].get<std::string>())});
  }
  for (std::size_t i = 1; i < traj.snapshots.size(); ++i) {
    if (traj.snapshots[i].t <= traj.snapshots[i - 1].t ||
        traj.snapshots[i].scene.size() != traj.snapshots[0].scene.size()) {
      fail(ErrorCode::kFormat, "trajectory: snapshots must have increasing t and equal size");
    }
  }
  return traj;
}

}  // namespace progdf
