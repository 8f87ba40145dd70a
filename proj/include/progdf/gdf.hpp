#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "progdf/adam.hpp"
#include "progdf/losses.hpp"
#include "progdf/pgs.hpp"
#include "progdf/renderer.hpp"
#include "progdf/types.hpp"

namespace progdf {

enum class BankSampling { kUniform, kSequential };

// kGaussian: iid N(0, 1) rows. kOrdinal: rows interpolate linearly between
// two N(0, 1) endpoints, so neighbouring bins start close together.
enum class EmbeddingInit { kGaussian, kOrdinal };

const char* embedding_init_name(EmbeddingInit e);
EmbeddingInit parse_embedding_init(const std::string& name);

const char* bank_sampling_name(BankSampling s);
BankSampling parse_bank_sampling(const std::string& name);

struct GdfConfig {
  int bins = 10;
  int embed_dim = 32;
  int pe_frequencies = 6;
  std::vector<int> hidden{256, 256, 256};
  int bank_interval = 100;
  int iterations = 3000;
  // Exponential decay from learning_rate to learning_rate_final over the run.
  double learning_rate = 1e-4;
  double learning_rate_final = 1e-5;
  double lambda_render = 1.0;
  double lambda_perceptual = kDefaultPerceptualWeight;
  BankSampling sampling = BankSampling::kUniform;
  EmbeddingInit embedding_init = EmbeddingInit::kOrdinal;
  std::uint64_t seed = 0;

  // 3 raw coordinates plus a sin/cos pair per frequency per axis.
  int encoding_dim() const { return 3 + 6 * pe_frequencies; }
  int input_dim() const { return encoding_dim() + embed_dim; }
  void validate() const;
};

struct BinBlend {
  int lower = 0;
  int upper = 0;
  double weight = 0.0;  // share of `upper`
};

// c = u*k - 0.5, blended between floor(c) and floor(c)+1, clamped so that
// u = 0 is pure bin 0 and u = 1 is pure bin k-1.
BinBlend control_to_bins(double u, int k);

// [x, y, z, sin(2^j pi x), cos(2^j pi x), ...] for j < frequencies.
void positional_encoding(const Vec3& p, int frequencies, float* out);

struct DenseLayer {
  Eigen::MatrixXf weight;  // out x in
  Eigen::VectorXf bias;
};

// Control embedding table plus an MLP over [encoding(mu0), embedding(u)]
// with ReLU hidden layers and a 14-wide linear output in raw offset space.
class GdfModel {
 public:
  GdfModel() = default;
  // He-initialized hidden layers, zero output layer, embeddings per cfg.
  explicit GdfModel(const GdfConfig& cfg);

  const GdfConfig& config() const { return cfg_; }
  Eigen::MatrixXf& embedding() { return embedding_; }
  const Eigen::MatrixXf& embedding() const { return embedding_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  Eigen::VectorXf control_embedding(double u) const;

  // Offsets for a batch of original positions at slider value u.
  std::vector<GaussianOffset> forward(std::span<const Vec3> positions, double u) const;
  GaussianOffset forward(const Vec3& position, double u) const;

  bool operator==(const GdfModel& other) const;

 private:
  friend class GdfTrainer;
  GdfConfig cfg_;
  Eigen::MatrixXf embedding_;  // bins x embed_dim
  std::vector<DenseLayer> layers_;
};

// Gradients shaped like a GdfModel's parameters.
struct GdfGradients {
  Eigen::MatrixXf embedding;
  std::vector<DenseLayer> layers;
};

// Binary model file: "GDF1", u32 version, u32 bins, u32 embed_dim,
// u32 pe_frequencies, u32 hidden count, u32 per hidden width, u32 output
// width (14); then little-endian float32: embedding table (row-major), and
// per layer the weight (row-major, out x in) followed by the bias.
std::vector<std::uint8_t> encode_gdf_model(const GdfModel& model);
GdfModel decode_gdf_model(std::span<const std::uint8_t> bytes);
void save_gdf_model(const std::filesystem::path& path, const GdfModel& model);
GdfModel load_gdf_model(const std::filesystem::path& path);

// Queries the model at each in-region Gaussian's original position and
// applies the offsets; other Gaussians are copied unchanged.
Scene predict_scene(const Scene& original, const GdfModel& model, const RegionMask& mask, double u);

struct RegionControl {
  const GdfModel* model = nullptr;
  const RegionMask* mask = nullptr;
  double u = 0.0;
};

// Offsets of every entry are summed in raw space per Gaussian, then applied
// in one activation pass. Gaussians in no region are untouched.
Scene compose_regions(const Scene& original, std::span<const RegionControl> controls);

struct MemoryBank {
  std::vector<Snapshot> entries;
  int horizon = 0;  // t of the final snapshot; u = t / horizon

  double control_for(std::size_t index) const;
};

// Snapshots at multiples of `interval`, plus the first and last.
MemoryBank build_memory_bank(const Trajectory& traj, int interval);

// Uniform draw over bank entries.
std::size_t bank_sample(const MemoryBank& bank, std::mt19937_64& rng);

struct GdfLossReport {
  int iteration = 0;
  std::size_t entry = 0;
  int t = 0;
  double u = 0.0;
  std::size_t view = 0;
  double edit = 0.0;
  double render = 0.0;
  double total = 0.0;  // edit + lambda_render * render
};

class GdfTrainer {
 public:
  GdfTrainer(const Scene& original, const RegionMask& mask, std::vector<Camera> cameras,
             const GdfConfig& cfg, int horizon);

  // Adds a snapshot to the bank (live training streams them in order).
  void add_snapshot(const Snapshot& snap);
  void set_bank(MemoryBank bank);
  const MemoryBank& bank() const { return bank_; }

  const GdfModel& model() const { return model_; }
  GdfModel& model() { return model_; }

  // Draws an entry (uniformly, or by schedule position when sequential)
  // and a view, then applies one Adam update. `total_iterations` fixes the
  // sequential schedule.
  GdfLossReport step(int total_iterations);

  // Learning rate used at the current iteration of a run of this length.
  double learning_rate(int total_iterations) const;

  // Loss and parameter gradients for a fixed (entry, view), no update.
  GdfLossReport evaluate(std::size_t entry, std::size_t view, GdfGradients* grads);

  int iteration() const { return iteration_; }

 private:
  const ImageBuffer& target(std::size_t entry, std::size_t view);
  void apply_adam(const GdfGradients& g, double lr);

  Scene original_;
  RegionMask mask_;
  std::vector<std::size_t> active_;
  std::vector<Vec3> positions_;
  std::vector<Camera> cameras_;
  GdfConfig cfg_;
  MemoryBank bank_;
  GdfModel model_;
  Adam<float> adam_;
  std::mt19937_64 rng_;
  std::map<std::pair<std::size_t, std::size_t>, ImageBuffer> targets_;
  int iteration_ = 0;
};

struct GdfTrainingResult {
  GdfModel model;
  std::vector<GdfLossReport> losses;
};

// Post-hoc training from a stored trajectory.
GdfTrainingResult train_gdf(const Scene& original, const Trajectory& traj,
                            const std::vector<Camera>& cameras, const RegionMask& mask,
                            const GdfConfig& cfg);

// Mean edit loss per bank entry between render(predict_scene(u_t)) and
// render(snapshot_t), over `cameras`.
std::vector<double> gdf_validation_losses(const GdfModel& model, const Scene& original,
                                          const RegionMask& mask, const MemoryBank& bank,
                                          const std::vector<Camera>& cameras);

std::string encode_gdf_losses_csv(const std::vector<GdfLossReport>& losses);

}  // namespace progdf
