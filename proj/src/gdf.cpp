#include "progdf/gdf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "progdf/error.hpp"
#include "progdf/model.hpp"
#include "progdf/scene_io.hpp"

namespace progdf {

namespace {

constexpr std::uint32_t kModelVersion = 1;

struct ForwardCache {
  Eigen::MatrixXf x;               // encoding_dim x M
  Eigen::VectorXf emb;             // embed_dim
  BinBlend blend;
  std::vector<Eigen::MatrixXf> h;  // post-ReLU hidden activations
  Eigen::MatrixXf out;             // 14 x M
};

void run_forward(const GdfModel& m, std::span<const Vec3> positions, double u, ForwardCache& c) {
  const GdfConfig& cfg = m.config();
  const int enc = cfg.encoding_dim();
  const auto n = static_cast<Eigen::Index>(positions.size());
  c.x.resize(enc, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    positional_encoding(positions[static_cast<std::size_t>(j)], cfg.pe_frequencies, c.x.col(j).data());
  }
  c.blend = control_to_bins(u, cfg.bins);
  c.emb = m.control_embedding(u);

  const auto& layers = m.layers();
  const std::size_t count = layers.size();
  c.h.resize(count - 1);
  Eigen::MatrixXf z;
  for (std::size_t l = 0; l < count; ++l) {
    const DenseLayer& L = layers[l];
    if (l == 0) {
      const Eigen::VectorXf shift = L.weight.rightCols(cfg.embed_dim) * c.emb + L.bias;
      z.noalias() = L.weight.leftCols(enc) * c.x;
      z.colwise() += shift;
    } else {
      z.noalias() = L.weight * c.h[l - 1];
      z.colwise() += L.bias;
    }
    if (l + 1 < count) {
      c.h[l] = z.cwiseMax(0.0f);
    } else {
      c.out = z;
    }
  }
}

// Back-propagates d(loss)/d(out) through the cached forward pass.
void run_backward(const GdfModel& m, const ForwardCache& c, const Eigen::MatrixXf& d_out, GdfGradients& g) {
  const GdfConfig& cfg = m.config();
  const int enc = cfg.encoding_dim();
  const auto& layers = m.layers();
  g.embedding = Eigen::MatrixXf::Zero(m.embedding().rows(), m.embedding().cols());
  g.layers.resize(layers.size());
  Eigen::MatrixXf delta = d_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& L = layers[l];
    DenseLayer& G = g.layers[l];
    const Eigen::VectorXf row_sum = delta.rowwise().sum();
    G.bias = row_sum;
    if (l == 0) {
      G.weight.resize(L.weight.rows(), L.weight.cols());
      G.weight.leftCols(enc).noalias() = delta * c.x.transpose();
      G.weight.rightCols(cfg.embed_dim).noalias() = row_sum * c.emb.transpose();
      const Eigen::VectorXf d_emb = L.weight.rightCols(cfg.embed_dim).transpose() * row_sum;
      g.embedding.row(c.blend.lower) += (1.0f - static_cast<float>(c.blend.weight)) * d_emb.transpose();
      if (c.blend.weight != 0.0) {
        g.embedding.row(c.blend.upper) += static_cast<float>(c.blend.weight) * d_emb.transpose();
      }
    } else {
      G.weight.noalias() = delta * c.h[l - 1].transpose();
      Eigen::MatrixXf back = L.weight.transpose() * delta;
      delta = back.cwiseProduct((c.h[l - 1].array() > 0.0f).cast<float>().matrix());
    }
  }
}

std::vector<GaussianOffset> to_offsets(const Eigen::MatrixXf& out) {
  std::vector<GaussianOffset> offs(static_cast<std::size_t>(out.cols()));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (int k = 0; k < raw::kDim; ++k) offs[static_cast<std::size_t>(j)][k] = out(k, j);
  }
  return offs;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_floats(std::vector<std::uint8_t>& out, const float* data, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }
  void floats(float* out, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out[i] = std::bit_cast<float>(u32());
      if (!std::isfinite(out[i])) fail(ErrorCode::kFormat, "model file: non-finite weight");
    }
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::kFormat, "model file: truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename F>
void for_each_tensor(GdfModel& m, F&& f) {
  f(m.embedding().data(), m.embedding().size());
  for (auto& L : m.layers()) {
    f(L.weight.data(), L.weight.size());
    f(L.bias.data(), L.bias.size());
  }
}

}  // namespace

const char* bank_sampling_name(BankSampling s) {
  return s == BankSampling::kUniform ? "uniform" : "sequential";
}

BankSampling parse_bank_sampling(const std::string& name) {
  if (name == "uniform") return BankSampling::kUniform;
  if (name == "sequential") return BankSampling::kSequential;
  fail(ErrorCode::kInvalidArgument, "unknown bank sampling '" + name + "'");
}

const char* embedding_init_name(EmbeddingInit e) {
  return e == EmbeddingInit::kGaussian ? "gaussian" : "ordinal";
}

EmbeddingInit parse_embedding_init(const std::string& name) {
  if (name == "gaussian") return EmbeddingInit::kGaussian;
  if (name == "ordinal") return EmbeddingInit::kOrdinal;
  fail(ErrorCode::kInvalidArgument, "unknown embedding init '" + name + "'");
}

void GdfConfig::validate() const {
  require(bins >= 2, "gdf: bins must be >= 2");
  require(embed_dim >= 1 && pe_frequencies >= 0, "gdf: embed_dim must be >= 1 and pe_frequencies >= 0");
  for (int h : hidden) require(h >= 1, "gdf: hidden widths must be >= 1");
  require(bank_interval >= 1, "gdf: bank interval must be >= 1");
  require(iterations >= 0, "gdf: iterations must be >= 0");
  require(learning_rate > 0.0 && learning_rate_final > 0.0, "gdf: learning rates must be positive");
  require(lambda_render >= 0.0 && lambda_perceptual >= 0.0, "gdf: loss weights must be non-negative");
}

BinBlend control_to_bins(double u, int k) {
  require(k >= 1, "control_to_bins: k must be >= 1");
  u = std::clamp(std::isnan(u) ? 0.0 : u, 0.0, 1.0);
  const double c = u * k - 0.5;
  if (c <= 0.0) return {0, 0, 0.0};
  if (c >= k - 1) return {k - 1, k - 1, 0.0};
  const double f = std::floor(c);
  BinBlend b;
  b.lower = static_cast<int>(f);
  b.weight = c - f;
  b.upper = b.weight == 0.0 ? b.lower : b.lower + 1;
  return b;
}

void positional_encoding(const Vec3& p, int frequencies, float* out) {
  for (int a = 0; a < 3; ++a) out[a] = static_cast<float>(p[a]);
  float* o = out + 3;
  for (int j = 0; j < frequencies; ++j) {
    const double w = std::ldexp(std::numbers::pi, j);
    for (int a = 0; a < 3; ++a) o[a] = static_cast<float>(std::sin(w * p[a]));
    for (int a = 0; a < 3; ++a) o[3 + a] = static_cast<float>(std::cos(w * p[a]));
    o += 6;
  }
}

GdfModel::GdfModel(const GdfConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  embedding_.resize(cfg.bins, cfg.embed_dim);
  if (cfg.embedding_init == EmbeddingInit::kGaussian) {
    for (Eigen::Index i = 0; i < embedding_.size(); ++i) embedding_.data()[i] = normal(rng);
  } else {
    Eigen::VectorXf a(cfg.embed_dim), b(cfg.embed_dim);
    for (int j = 0; j < cfg.embed_dim; ++j) a[j] = normal(rng);
    for (int j = 0; j < cfg.embed_dim; ++j) b[j] = normal(rng);
    for (int r = 0; r < cfg.bins; ++r) {
      const float f = static_cast<float>(r) / static_cast<float>(cfg.bins - 1);
      embedding_.row(r) = ((1.0f - f) * a + f * b).transpose();
    }
  }

  std::vector<int> widths{cfg.input_dim()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(raw::kDim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer L;
    L.weight = Eigen::MatrixXf::Zero(widths[l + 1], widths[l]);
    L.bias = Eigen::VectorXf::Zero(widths[l + 1]);
    if (l + 2 < widths.size()) {
      const float sd = std::sqrt(2.0f / static_cast<float>(widths[l]));
      for (Eigen::Index i = 0; i < L.weight.size(); ++i) L.weight.data()[i] = sd * normal(rng);
    }
    layers_.push_back(std::move(L));
  }
}

std::size_t GdfModel::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(embedding_.size());
  for (const auto& L : layers_) n += static_cast<std::size_t>(L.weight.size() + L.bias.size());
  return n;
}

Eigen::VectorXf GdfModel::control_embedding(double u) const {
  const BinBlend b = control_to_bins(u, cfg_.bins);
  Eigen::VectorXf e = embedding_.row(b.lower).transpose();
  if (b.weight != 0.0) {
    const float w = static_cast<float>(b.weight);
    e = (1.0f - w) * e + w * embedding_.row(b.upper).transpose();
  }
  return e;
}

std::vector<GaussianOffset> GdfModel::forward(std::span<const Vec3> positions, double u) const {
  for (const Vec3& p : positions) {
    if (!p.allFinite()) fail(ErrorCode::kInvalidArgument, "gdf_forward: non-finite position");
  }
  if (!std::isfinite(u)) fail(ErrorCode::kInvalidArgument, "gdf_forward: non-finite control value");
  if (positions.empty()) return {};
  ForwardCache c;
  run_forward(*this, positions, u, c);
  return to_offsets(c.out);
}

GaussianOffset GdfModel::forward(const Vec3& position, double u) const {
  return forward(std::span<const Vec3>(&position, 1), u).front();
}

bool GdfModel::operator==(const GdfModel& o) const {
  if (cfg_.bins != o.cfg_.bins || cfg_.embed_dim != o.cfg_.embed_dim ||
      cfg_.pe_frequencies != o.cfg_.pe_frequencies || cfg_.hidden != o.cfg_.hidden ||
      layers_.size() != o.layers_.size() || embedding_ != o.embedding_) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != o.layers_[l].weight || layers_[l].bias != o.layers_[l].bias) return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_gdf_model(const GdfModel& model) {
  const GdfConfig& cfg = model.config();
  std::vector<std::uint8_t> out{'G', 'D', 'F', '1'};
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(cfg.bins));
  put_u32(out, static_cast<std::uint32_t>(cfg.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.pe_frequencies));
  put_u32(out, static_cast<std::uint32_t>(cfg.hidden.size()));
  for (int h : cfg.hidden) put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, raw::kDim);
  put_floats(out, model.embedding().data(), model.embedding().size());
  for (const auto& L : model.layers()) {
    // Row-major weights.
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = L.weight;
    put_floats(out, w.data(), w.size());
    put_floats(out, L.bias.data(), L.bias.size());
  }
  return out;
}

GdfModel decode_gdf_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) != "GDF1") {
    fail(ErrorCode::kFormat, "model file: bad magic (expected GDF1)");
  }
  Reader r(bytes.subspan(4));
  if (r.u32() != kModelVersion) fail(ErrorCode::kFormat, "model file: unsupported version");
  GdfConfig cfg;
  cfg.bins = static_cast<int>(r.u32());
  cfg.embed_dim = static_cast<int>(r.u32());
  cfg.pe_frequencies = static_cast<int>(r.u32());
  const std::uint32_t depth = r.u32();
  if (depth > 64) fail(ErrorCode::kFormat, "model file: implausible layer count");
  cfg.hidden.assign(depth, 0);
  for (auto& h : cfg.hidden) {
    h = static_cast<int>(r.u32());
    if (h < 1 || h > (1 << 16)) fail(ErrorCode::kFormat, "model file: implausible layer width");
  }
  if (r.u32() != raw::kDim) fail(ErrorCode::kFormat, "model file: output width must be 14");
  if (cfg.bins < 2 || cfg.bins > 4096 || cfg.embed_dim < 1 || cfg.embed_dim > 4096 ||
      cfg.pe_frequencies < 0 || cfg.pe_frequencies > 32) {
    fail(ErrorCode::kFormat, "model file: header dimensions out of range");
  }
  GdfConfig shape = cfg;
  GdfModel model{shape};
  r.floats(model.embedding().data(), model.embedding().size());
  for (auto& L : model.layers()) {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(L.weight.rows(), L.weight.cols());
    r.floats(w.data(), w.size());
    L.weight = w;
    r.floats(L.bias.data(), L.bias.size());
  }
  if (!r.done()) fail(ErrorCode::kFormat, "model file: trailing bytes after weights");
  return model;
}

void save_gdf_model(const std::filesystem::path& path, const GdfModel& model) {
  write_binary_file(path, encode_gdf_model(model));
}

GdfModel load_gdf_model(const std::filesystem::path& path) {
  return decode_gdf_model(read_binary_file(path));
}

Scene predict_scene(const Scene& original, const GdfModel& model, const RegionMask& mask, double u) {
  const RegionControl c{&model, &mask, u};
  return compose_regions(original, std::span<const RegionControl>(&c, 1));
}

Scene compose_regions(const Scene& original, std::span<const RegionControl> controls) {
  const std::size_t n = original.size();
  std::vector<GaussianOffset> sum(n);
  RegionMask any(n);
  std::vector<Vec3> positions;
  for (const RegionControl& c : controls) {
    require(c.model != nullptr && c.mask != nullptr, "compose_regions: missing model or mask");
    if (c.mask->size() != n) {
      fail(ErrorCode::kInvalidArgument, "compose_regions: mask length " + std::to_string(c.mask->size()) +
                                            " does not match scene size " + std::to_string(n));
    }
    const std::vector<std::size_t> idx = c.mask->indices();
    positions.clear();
    for (std::size_t i : idx) positions.push_back(original.gaussians[i].position);
    const std::vector<GaussianOffset> offs = c.model->forward(positions, c.u);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      for (int k = 0; k < raw::kDim; ++k) sum[idx[j]][k] += offs[j][k];
      any.set(idx[j]);
    }
  }
  return apply_offsets(original, sum, any);
}

double MemoryBank::control_for(std::size_t index) const {
  return horizon > 0 ? static_cast<double>(entries[index].t) / horizon : 0.0;
}

MemoryBank build_memory_bank(const Trajectory& traj, int interval) {
  require(interval >= 1, "memory bank: interval must be >= 1");
  require(!traj.snapshots.empty(), "memory bank: empty trajectory");
  MemoryBank bank;
  bank.horizon = traj.snapshots.back().t;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const Snapshot& s = traj.snapshots[i];
    if (i == 0 || i + 1 == traj.snapshots.size() || s.t % interval == 0) bank.entries.push_back(s);
  }
  return bank;
}

std::size_t bank_sample(const MemoryBank& bank, std::mt19937_64& rng) {
  if (bank.entries.empty()) fail(ErrorCode::kInvalidArgument, "bank_sample: empty memory bank");
  return std::uniform_int_distribution<std::size_t>(0, bank.entries.size() - 1)(rng);
}

GdfTrainer::GdfTrainer(const Scene& original, const RegionMask& mask, std::vector<Camera> cameras,
                       const GdfConfig& cfg, int horizon)
    : original_(original),
      mask_(mask),
      cameras_(std::move(cameras)),
      cfg_(cfg),
      model_(cfg),
      rng_(cfg.seed * 0x9E3779B97F4A7C15ull + 1) {
  require(mask.size() == original.size(), "gdf: mask length does not match scene");
  require(!cameras_.empty(), "gdf: need at least one camera");
  active_ = mask.indices();
  for (std::size_t i : active_) positions_.push_back(original.gaussians[i].position);
  adam_ = Adam<float>(model_.parameter_count());
  bank_.horizon = horizon;
}

void GdfTrainer::add_snapshot(const Snapshot& snap) {
  require(snap.scene.size() == original_.size(), "gdf: snapshot size does not match scene");
  require(bank_.entries.empty() || snap.t > bank_.entries.back().t, "gdf: snapshots must arrive in order");
  bank_.entries.push_back(snap);
}

void GdfTrainer::set_bank(MemoryBank bank) {
  for (const auto& e : bank.entries) {
    require(e.scene.size() == original_.size(), "gdf: snapshot size does not match scene");
  }
  bank_ = std::move(bank);
  targets_.clear();
}

const ImageBuffer& GdfTrainer::target(std::size_t entry, std::size_t view) {
  const auto key = std::make_pair(entry, view);
  auto it = targets_.find(key);
  if (it == targets_.end()) {
    it = targets_.emplace(key, render(bank_.entries[entry].scene, cameras_[view])).first;
  }
  return it->second;
}

GdfLossReport GdfTrainer::evaluate(std::size_t entry, std::size_t view, GdfGradients* grads) {
  require(entry < bank_.entries.size() && view < cameras_.size(), "gdf: entry or view out of range");
  GdfLossReport rep;
  rep.iteration = iteration_;
  rep.entry = entry;
  rep.t = bank_.entries[entry].t;
  rep.u = bank_.control_for(entry);
  rep.view = view;

  ForwardCache cache;
  std::vector<GaussianOffset> offs;
  if (!positions_.empty()) {
    run_forward(model_, positions_, rep.u, cache);
    offs = to_offsets(cache.out);
  }
  Scene pred = original_;
  for (std::size_t j = 0; j < active_.size(); ++j) {
    pred.gaussians[active_[j]] = apply_offset(original_.gaussians[active_[j]], offs[j]);
  }
  const Camera& cam = cameras_[view];
  const ImageBuffer img = render(pred, cam);
  ImageBuffer g_edit, g_sharp;
  const EditLoss el = edit_loss(img, target(entry, view), cfg_.lambda_perceptual, g_edit);
  rep.edit = el.value;
  rep.render = sharpness_loss(img, g_sharp);
  rep.total = rep.edit + cfg_.lambda_render * rep.render;
  if (!std::isfinite(rep.total)) {
    fail(ErrorCode::kNumeric, "gdf iteration " + std::to_string(iteration_) + ": non-finite loss");
  }
  if (!grads) return rep;

  ImageBuffer adjoint(img.width, img.height);
  for (std::size_t p = 0; p < adjoint.pixels.size(); ++p) {
    adjoint.pixels[p] = g_edit.pixels[p] + cfg_.lambda_render * g_sharp.pixels[p];
  }
  const RenderGradients rg = render_backward(pred, cam, adjoint);
  Eigen::MatrixXf d_out(raw::kDim, static_cast<Eigen::Index>(active_.size()));
  for (std::size_t j = 0; j < active_.size(); ++j) {
    RawVector g = rg[active_[j]];
    const Vec4 q = original_.gaussians[active_[j]].rotation +
                   Vec4(offs[j][raw::kQuaternion], offs[j][raw::kQuaternion + 1],
                        offs[j][raw::kQuaternion + 2], offs[j][raw::kQuaternion + 3]);
    scale_quaternion_gradient(g, q.norm());
    for (int k = 0; k < raw::kDim; ++k) {
      if (!std::isfinite(g[k])) fail(ErrorCode::kNumeric, "gdf: non-finite gradient");
      d_out(k, static_cast<Eigen::Index>(j)) = static_cast<float>(g[k]);
    }
  }
  if (active_.empty()) {
    *grads = GdfGradients{};
    grads->embedding = Eigen::MatrixXf::Zero(model_.embedding().rows(), model_.embedding().cols());
    for (const auto& L : model_.layers()) {
      grads->layers.push_back({Eigen::MatrixXf::Zero(L.weight.rows(), L.weight.cols()),
                               Eigen::VectorXf::Zero(L.bias.size())});
    }
    return rep;
  }
  run_backward(model_, cache, d_out, *grads);
  return rep;
}

void GdfTrainer::apply_adam(const GdfGradients& g, double lr) {
  adam_.begin_step();
  std::size_t offset = 0;
  std::vector<const float*> grad_ptrs{g.embedding.data()};
  for (const auto& L : g.layers) {
    grad_ptrs.push_back(L.weight.data());
    grad_ptrs.push_back(L.bias.data());
  }
  std::size_t tensor = 0;
  for_each_tensor(model_, [&](float* p, Eigen::Index n) {
    const float* gp = grad_ptrs[tensor++];
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = static_cast<float>(p[i] - lr * adam_.direction(offset + static_cast<std::size_t>(i), gp[i]));
    }
    offset += static_cast<std::size_t>(n);
  });
}

double GdfTrainer::learning_rate(int total_iterations) const {
  if (total_iterations <= 1) return cfg_.learning_rate;
  const double f = std::min(1.0, static_cast<double>(iteration_) / (total_iterations - 1));
  return cfg_.learning_rate * std::pow(cfg_.learning_rate_final / cfg_.learning_rate, f);
}

GdfLossReport GdfTrainer::step(int total_iterations) {
  if (bank_.entries.empty()) fail(ErrorCode::kInvalidArgument, "gdf: memory bank is empty");
  std::size_t entry;
  if (cfg_.sampling == BankSampling::kSequential) {
    const std::size_t n = bank_.entries.size();
    const std::size_t total = static_cast<std::size_t>(std::max(1, total_iterations));
    entry = std::min(n - 1, static_cast<std::size_t>(iteration_) * n / total);
  } else {
    entry = bank_sample(bank_, rng_);
  }
  const std::size_t view = std::uniform_int_distribution<std::size_t>(0, cameras_.size() - 1)(rng_);
  GdfGradients g;
  GdfLossReport rep = evaluate(entry, view, &g);
  apply_adam(g, learning_rate(total_iterations));
  ++iteration_;
  rep.iteration = iteration_;
  return rep;
}

GdfTrainingResult train_gdf(const Scene& original, const Trajectory& traj,
                            const std::vector<Camera>& cameras, const RegionMask& mask,
                            const GdfConfig& cfg) {
  cfg.validate();
  require(traj.snapshots.size() >= 2, "train_gdf: trajectory needs at least two snapshots");
  MemoryBank bank = build_memory_bank(traj, cfg.bank_interval);
  GdfTrainer trainer(original, mask, cameras, cfg, bank.horizon);
  trainer.set_bank(std::move(bank));
  GdfTrainingResult result;
  result.losses.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int i = 0; i < cfg.iterations; ++i) result.losses.push_back(trainer.step(cfg.iterations));
  result.model = trainer.model();
  return result;
}

std::vector<double> gdf_validation_losses(const GdfModel& model, const Scene& original,
                                          const RegionMask& mask, const MemoryBank& bank,
                                          const std::vector<Camera>& cameras) {
  require(!cameras.empty(), "gdf validation: need at least one camera");
  std::vector<double> out;
  for (std::size_t e = 0; e < bank.entries.size(); ++e) {
    const Scene pred = predict_scene(original, model, mask, bank.control_for(e));
    double sum = 0.0;
    for (const Camera& cam : cameras) {
      sum += edit_loss(render(pred, cam), render(bank.entries[e].scene, cam)).value;
    }
    out.push_back(sum / static_cast<double>(cameras.size()));
  }
  return out;
}

std::string encode_gdf_losses_csv(const std::vector<GdfLossReport>& losses) {
  std::string out = "iteration,t,u,view,edit,render,total\n";
  char buf[200];
  for (const auto& l : losses) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.6g,%zu,%.10g,%.10g,%.10g\n", l.iteration, l.t, l.u, l.view,
                  l.edit, l.render, l.total);
    out += buf;
  }
  return out;
}

}  // namespace progdf
