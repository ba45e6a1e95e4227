#include "nutrisight/fusion.h"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "json.hpp"
#include "nutrisight/digest.h"
#include "nutrisight/error.h"

namespace nutrisight::fusion {

std::string_view to_string(Gender g) { return g == Gender::kMale ? "male" : "female"; }

Gender gender_from_string(std::string_view s) {
  if (s == "male" || s == "m" || s == "M") return Gender::kMale;
  if (s == "female" || s == "f" || s == "F") return Gender::kFemale;
  fail(ErrorKind::kValidation, fmt::format("invalid gender '{}'", s));
}

template <typename T>
void FusionParams<T>::validate() const {
  const auto& arch = architecture;
  if (arch.embedding_dim < 1 || arch.hidden.empty()) fail(ErrorKind::kData, "invalid architecture");
  if (layers.size() != arch.hidden.size() + 1) fail(ErrorKind::kData, "layer count does not match architecture");
  int in = arch.input_dim();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const int out = l < arch.hidden.size() ? arch.hidden[l] : 1;
    if (layers[l].weight.rows() != out || layers[l].weight.cols() != in || layers[l].bias.size() != out) {
      fail(ErrorKind::kData, fmt::format("layer {} has shape {}x{}, expected {}x{}", l,
                                         layers[l].weight.rows(), layers[l].weight.cols(), out, in));
    }
    if (!layers[l].weight.allFinite() || !layers[l].bias.allFinite()) {
      fail(ErrorKind::kData, fmt::format("layer {} has non-finite parameters", l));
    }
    in = out;
  }
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
    fail(ErrorKind::kData, "at least one modality must be active");
  }
  for (int j = 0; j < kModalityCount; ++j) {
    if (active[j] && !std::isfinite(static_cast<double>(weight_logits[j]))) {
      fail(ErrorKind::kData, "non-finite fusion logit");
    }
  }
  if (!(ridge_lambda >= 0.0)) fail(ErrorKind::kData, "ridge lambda must be non-negative");
}

template <typename T>
std::size_t FusionParams<T>::parameter_count() const {
  std::size_t n = kModalityCount;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

template <typename T>
FusionParams<T> zero_params(const Architecture& arch) {
  FusionParams<T> p;
  p.architecture = arch;
  int in = arch.input_dim();
  for (std::size_t l = 0; l <= arch.hidden.size(); ++l) {
    const int out = l < arch.hidden.size() ? arch.hidden[l] : 1;
    p.layers.push_back({Mat<T>::Zero(out, in), Vec<T>::Zero(out)});
    in = out;
  }
  return p;
}

template <typename T>
FusionParams<T> init_params(const Architecture& arch, std::uint64_t seed) {
  auto p = zero_params<T>(arch);
  p.seed = seed;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& w = p.layers[l].weight;
    const bool output = l + 1 == p.layers.size();
    const double fan_in = static_cast<double>(w.cols());
    const double limit = output ? std::sqrt(6.0 / (fan_in + static_cast<double>(w.rows())))
                                : std::sqrt(6.0 / fan_in);
    SplitMix rng(hash_combine(seed, l + 1));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<T>(rng.uniform(-limit, limit));
    }
  }
  return p;
}

template <typename T>
FusionParams<T> cast_params(const FusionParams<float>& src) {
  FusionParams<T> p;
  for (int j = 0; j < kModalityCount; ++j) p.weight_logits[j] = static_cast<T>(src.weight_logits[j]);
  p.active = src.active;
  p.architecture = src.architecture;
  p.ridge_lambda = src.ridge_lambda;
  p.ridge_scope = src.ridge_scope;
  p.normalize_embeddings = src.normalize_embeddings;
  p.seed = src.seed;
  for (const auto& l : src.layers) p.layers.push_back({l.weight.template cast<T>(), l.bias.template cast<T>()});
  return p;
}

template <typename T>
std::array<double, kModalityCount> fusion_weights(const FusionParams<T>& params) {
  double m = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < kModalityCount; ++j) {
    if (params.active[j]) m = std::max(m, static_cast<double>(params.weight_logits[j]));
  }
  std::array<double, kModalityCount> w{};
  double total = 0.0;
  for (int j = 0; j < kModalityCount; ++j) {
    if (!params.active[j]) continue;
    w[j] = std::exp(static_cast<double>(params.weight_logits[j]) - m);
    total += w[j];
  }
  for (auto& x : w) x /= total;
  return w;
}

namespace {

template <typename T>
Vec<T> maybe_normalized(const Eigen::Ref<const Vec<T>>& z, bool normalize) {
  if (!normalize) return z;
  const T n = z.norm();
  return n > T(0) ? Vec<T>(z / n) : Vec<T>(z);
}

template <typename T>
double ridge_penalty(const FusionParams<T>& params) {
  double sq = 0.0;
  if (params.ridge_scope == RidgeScope::kAllLayers) {
    for (const auto& l : params.layers) sq += static_cast<double>(l.weight.squaredNorm());
  } else {
    sq = static_cast<double>(params.layers.back().weight.squaredNorm());
  }
  return params.ridge_lambda * sq;
}

template <typename T>
struct Activations {
  std::vector<Mat<T>> pre;   // per hidden layer, before relu
  std::vector<Mat<T>> post;  // post[0] = input, post[l+1] = relu(pre[l])
  Mat<T> out;                // 1 x B
};

template <typename T>
void forward_batch(const Batch<T>& batch, const FusionParams<T>& params,
                   const std::array<double, kModalityCount>& w, Activations<T>& acts) {
  const int d = params.architecture.embedding_dim;
  const Eigen::Index b = batch.targets.size();
  Mat<T> x(params.architecture.input_dim(), b);
  x.topRows(d).setZero();
  const Mat<T>* z[kModalityCount] = {&batch.z_face, &batch.z_body, &batch.z_cloud};
  for (int j = 0; j < kModalityCount; ++j) {
    if (params.active[j] && w[j] != 0.0) x.topRows(d).noalias() += static_cast<T>(w[j]) * *z[j];
  }
  x.bottomRows(3) = batch.side;
  acts.pre.clear();
  acts.post.clear();
  acts.post.push_back(std::move(x));
  const std::size_t hidden = params.layers.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    Mat<T> a = params.layers[l].weight * acts.post.back();
    a.colwise() += params.layers[l].bias;
    acts.post.push_back(a.cwiseMax(T(0)));
    acts.pre.push_back(std::move(a));
  }
  acts.out = params.layers.back().weight * acts.post.back();
  acts.out.array() += params.layers.back().bias(0);
}

}  // namespace

template <typename T>
Vec<T> fuse(const Eigen::Ref<const Vec<T>>& z_face, const Eigen::Ref<const Vec<T>>& z_body,
            const Eigen::Ref<const Vec<T>>& z_cloud, const FusionParams<T>& params) {
  const int d = params.architecture.embedding_dim;
  const Eigen::Ref<const Vec<T>>* z[kModalityCount] = {&z_face, &z_body, &z_cloud};
  for (int j = 0; j < kModalityCount; ++j) {
    if (z[j]->size() != d) fail(ErrorKind::kData, "embedding length does not match the model");
    if (!z[j]->allFinite()) fail(ErrorKind::kData, "embedding has non-finite values");
  }
  const auto w = fusion_weights(params);
  Vec<T> e = Vec<T>::Zero(d);
  for (int j = 0; j < kModalityCount; ++j) {
    if (params.active[j]) e += static_cast<T>(w[j]) * maybe_normalized<T>(*z[j], params.normalize_embeddings);
  }
  return e;
}

template <typename T>
Vec<T> assemble_input(const Eigen::Ref<const Vec<T>>& fused, Gender gender, double height_cm) {
  if (!(height_cm > 0.0) || !std::isfinite(height_cm)) {
    fail(ErrorKind::kParameter, "height must be positive");
  }
  Vec<T> x(fused.size() + 3);
  x.head(fused.size()) = fused;
  x[fused.size()] = gender == Gender::kMale ? T(1) : T(0);
  x[fused.size() + 1] = gender == Gender::kFemale ? T(1) : T(0);
  x[fused.size() + 2] = static_cast<T>(height_cm / 100.0);
  return x;
}

template <typename T>
T forward(const Eigen::Ref<const Vec<T>>& input, const FusionParams<T>& params) {
  if (input.size() != params.architecture.input_dim()) {
    fail(ErrorKind::kParameter, fmt::format("head input has {} values, expected {}", input.size(),
                                            params.architecture.input_dim()));
  }
  Vec<T> h = input;
  const std::size_t hidden = params.layers.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    h = (params.layers[l].weight * h + params.layers[l].bias).cwiseMax(T(0));
    if (!h.allFinite()) fail(ErrorKind::kNumeric, fmt::format("non-finite activation in layer {}", l));
  }
  const T out = params.layers.back().weight.row(0).dot(h) + params.layers.back().bias(0);
  if (!std::isfinite(static_cast<double>(out))) fail(ErrorKind::kNumeric, "non-finite head output");
  return out;
}

template <typename T>
double loss(std::span<const double> predictions, std::span<const double> targets,
            const FusionParams<T>& params) {
  if (predictions.empty()) fail(ErrorKind::kParameter, "loss needs a non-empty batch");
  if (predictions.size() != targets.size()) fail(ErrorKind::kParameter, "prediction/target length mismatch");
  double sse = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    sse += r * r;
  }
  return sse / static_cast<double>(predictions.size()) + ridge_penalty(params);
}

template <typename T>
Vec<T> predict_batch(const Batch<T>& batch, const FusionParams<T>& params) {
  Activations<T> acts;
  forward_batch(batch, params, fusion_weights(params), acts);
  return acts.out.row(0).transpose();
}

template <typename T>
double loss_and_gradients(const Batch<T>& batch, const FusionParams<T>& params,
                          Gradients<T>* grads) {
  const Eigen::Index b = batch.targets.size();
  if (b == 0) fail(ErrorKind::kParameter, "empty batch");
  const auto w = fusion_weights(params);
  Activations<T> acts;
  forward_batch(batch, params, w, acts);
  const Mat<T> resid = acts.out - batch.targets.transpose();
  const double value = static_cast<double>(resid.squaredNorm()) / static_cast<double>(b) + ridge_penalty(params);
  if (grads == nullptr) return value;

  const std::size_t n_layers = params.layers.size();
  const T lambda2 = static_cast<T>(2.0 * params.ridge_lambda);
  grads->layers.resize(n_layers);
  Mat<T> g = resid * static_cast<T>(2.0 / static_cast<double>(b));  // 1 x B
  for (std::size_t li = n_layers; li-- > 0;) {
    if (li + 1 < n_layers) g.array() *= (acts.pre[li].array() > T(0)).template cast<T>();
    auto& gl = grads->layers[li];
    const auto& layer = params.layers[li];
    gl.weight.noalias() = g * acts.post[li].transpose();
    if (params.ridge_scope == RidgeScope::kAllLayers || li + 1 == n_layers) {
      gl.weight += lambda2 * layer.weight;
    }
    gl.bias = g.rowwise().sum();
    Mat<T> next = layer.weight.transpose() * g;
    g = std::move(next);
  }
  // g is now d(loss)/d(input), input_dim x B.
  const int d = params.architecture.embedding_dim;
  const Mat<T>* z[kModalityCount] = {&batch.z_face, &batch.z_body, &batch.z_cloud};
  std::array<double, kModalityCount> dw{};
  double mean_dw = 0.0;
  for (int j = 0; j < kModalityCount; ++j) {
    if (!params.active[j]) continue;
    dw[j] = static_cast<double>(g.topRows(d).cwiseProduct(*z[j]).sum());
    mean_dw += w[j] * dw[j];
  }
  for (int j = 0; j < kModalityCount; ++j) {
    grads->weight_logits[j] = params.active[j] ? static_cast<T>(w[j] * (dw[j] - mean_dw)) : T(0);
  }
  return value;
}

template <typename T>
Batch<T> make_batch(std::span<const TrainingSample> samples, const ModalityMask& active,
                    bool normalize_embeddings) {
  Batch<T> b;
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index d = samples.empty() ? embed::kEmbeddingDim : samples[0].features.face.values.size();
  b.z_face = Mat<T>::Zero(d, n);
  b.z_body = Mat<T>::Zero(d, n);
  b.z_cloud = Mat<T>::Zero(d, n);
  b.side.resize(3, n);
  b.targets.resize(n);
  Mat<T>* z[kModalityCount] = {&b.z_face, &b.z_body, &b.z_cloud};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const embed::EmbeddingVector* e[kModalityCount] = {&s.features.face, &s.features.body, &s.features.cloud};
    for (int j = 0; j < kModalityCount; ++j) {
      if (e[j]->values.size() != d) fail(ErrorKind::kData, "inconsistent embedding length in dataset");
      if (!e[j]->values.allFinite()) fail(ErrorKind::kData, "non-finite embedding in dataset");
      if (!active[j]) continue;
      Vec<T> col = e[j]->values.template cast<T>();
      z[j]->col(i) = maybe_normalized<T>(col, normalize_embeddings);
    }
    if (!(s.features.height_cm > 0.0)) fail(ErrorKind::kData, "sample height must be positive");
    b.side(0, i) = s.features.gender == Gender::kMale ? T(1) : T(0);
    b.side(1, i) = s.features.gender == Gender::kFemale ? T(1) : T(0);
    b.side(2, i) = static_cast<T>(s.features.height_cm / 100.0);
    b.targets(i) = static_cast<T>(s.target_weight_kg);
  }
  return b;
}

double predict_weight(const SubjectFeatures& features, const FusionModelParams& params) {
  params.validate();
  const Vec<float> zf = features.face.values.cast<float>();
  const Vec<float> zb = features.body.values.cast<float>();
  const Vec<float> zr = features.cloud.values.cast<float>();
  const Vec<float> fused = fuse<float>(zf, zb, zr, params);
  const Vec<float> x = assemble_input<float>(fused, features.gender, features.height_cm);
  return static_cast<double>(forward<float>(x, params));
}

#define NUTRISIGHT_INSTANTIATE(T)                                                              \
  template struct FusionParams<T>;                                                             \
  template FusionParams<T> zero_params<T>(const Architecture&);                                \
  template FusionParams<T> init_params<T>(const Architecture&, std::uint64_t);                 \
  template FusionParams<T> cast_params<T>(const FusionParams<float>&);                         \
  template std::array<double, kModalityCount> fusion_weights<T>(const FusionParams<T>&);       \
  template Vec<T> fuse<T>(const Eigen::Ref<const Vec<T>>&, const Eigen::Ref<const Vec<T>>&,    \
                          const Eigen::Ref<const Vec<T>>&, const FusionParams<T>&);            \
  template Vec<T> assemble_input<T>(const Eigen::Ref<const Vec<T>>&, Gender, double);          \
  template T forward<T>(const Eigen::Ref<const Vec<T>>&, const FusionParams<T>&);              \
  template double loss<T>(std::span<const double>, std::span<const double>,                    \
                          const FusionParams<T>&);                                             \
  template Vec<T> predict_batch<T>(const Batch<T>&, const FusionParams<T>&);                   \
  template double loss_and_gradients<T>(const Batch<T>&, const FusionParams<T>&, Gradients<T>*); \
  template Batch<T> make_batch<T>(std::span<const TrainingSample>, const ModalityMask&, bool);

NUTRISIGHT_INSTANTIATE(float)
NUTRISIGHT_INSTANTIATE(double)
#undef NUTRISIGHT_INSTANTIATE

// ---------------------------------------------------------------------------
// Training

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::kParameter, "learning_rate must be positive");
  }
  if (epochs < 1) fail(ErrorKind::kParameter, "epochs must be at least 1");
  if (batch_size < 1) fail(ErrorKind::kParameter, "batch_size must be at least 1");
  if (!(ridge_lambda >= 0.0)) fail(ErrorKind::kParameter, "ridge_lambda must be non-negative");
  if (patience < 1) fail(ErrorKind::kParameter, "patience must be at least 1");
  if (architecture.embedding_dim < 1 || architecture.hidden.empty() ||
      std::any_of(architecture.hidden.begin(), architecture.hidden.end(), [](int w) { return w < 1; })) {
    fail(ErrorKind::kParameter, "invalid architecture");
  }
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
    fail(ErrorKind::kParameter, "at least one modality must be active");
  }
}

namespace {

struct AdamState {
  Gradients<float> m, v;
  int t = 0;
};

Gradients<float> zero_like(const FusionModelParams& p) {
  Gradients<float> g;
  for (const auto& l : p.layers) {
    g.layers.push_back({Mat<float>::Zero(l.weight.rows(), l.weight.cols()), Vec<float>::Zero(l.bias.size())});
  }
  return g;
}

template <typename Derived, typename GradDerived, typename MDerived, typename VDerived>
void adam_update(Eigen::MatrixBase<Derived>& p, const Eigen::MatrixBase<GradDerived>& g,
                 Eigen::MatrixBase<MDerived>& m, Eigen::MatrixBase<VDerived>& v, float lr_t) {
  constexpr float kB1 = 0.9f, kB2 = 0.999f, kEps = 1e-8f;
  m = kB1 * m + (1.0f - kB1) * g;
  v = kB2 * v + (1.0f - kB2) * g.cwiseAbs2();
  p.array() -= lr_t * m.array() / (v.array().sqrt() + kEps);
}

void adam_step(FusionModelParams& p, const Gradients<float>& g, AdamState& s, double lr) {
  constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
  ++s.t;
  const double lr_t = lr * std::sqrt(1.0 - std::pow(kB2, s.t)) / (1.0 - std::pow(kB1, s.t));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    adam_update(p.layers[l].weight, g.layers[l].weight, s.m.layers[l].weight, s.v.layers[l].weight,
                static_cast<float>(lr_t));
    adam_update(p.layers[l].bias, g.layers[l].bias, s.m.layers[l].bias, s.v.layers[l].bias,
                static_cast<float>(lr_t));
  }
  for (int j = 0; j < kModalityCount; ++j) {
    if (!p.active[j]) continue;
    const double gj = g.weight_logits[j];
    s.m.weight_logits[j] = static_cast<float>(kB1 * s.m.weight_logits[j] + (1 - kB1) * gj);
    s.v.weight_logits[j] = static_cast<float>(kB2 * s.v.weight_logits[j] + (1 - kB2) * gj * gj);
    p.weight_logits[j] -= static_cast<float>(lr_t * s.m.weight_logits[j] /
                                             (std::sqrt(static_cast<double>(s.v.weight_logits[j])) + kEps));
  }
}

Batch<float> gather(const Batch<float>& all, std::span<const int> idx) {
  Batch<float> b;
  const auto n = static_cast<Eigen::Index>(idx.size());
  b.z_face.resize(all.z_face.rows(), n);
  b.z_body.resize(all.z_body.rows(), n);
  b.z_cloud.resize(all.z_cloud.rows(), n);
  b.side.resize(3, n);
  b.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = idx[static_cast<std::size_t>(i)];
    b.z_face.col(i) = all.z_face.col(k);
    b.z_body.col(i) = all.z_body.col(k);
    b.z_cloud.col(i) = all.z_cloud.col(k);
    b.side.col(i) = all.side.col(k);
    b.targets(i) = all.targets(k);
  }
  return b;
}

double mean_abs_error(const Batch<float>& batch, const FusionModelParams& params) {
  const Vec<float> pred = predict_batch(batch, params);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    sum += std::abs(static_cast<double>(pred(i)) - static_cast<double>(batch.targets(i)));
  }
  return sum / static_cast<double>(pred.size());
}

}  // namespace

FitResult fit(std::span<const TrainingSample> train, const TrainingConfig& config,
              std::span<const TrainingSample> validation, const StepObserver& observer) {
  config.validate();
  if (train.size() < 2) fail(ErrorKind::kParameter, "training needs at least 2 samples");
  if (train[0].features.face.values.size() != config.architecture.embedding_dim) {
    fail(ErrorKind::kParameter, "embedding length does not match the architecture");
  }

  const Batch<float> all = make_batch<float>(train, config.active, config.normalize_embeddings);
  const std::optional<Batch<float>> val =
      validation.empty() ? std::nullopt
                         : std::optional(make_batch<float>(validation, config.active, config.normalize_embeddings));

  FusionModelParams params = init_params<float>(config.architecture, config.seed);
  params.active = config.active;
  params.ridge_lambda = config.ridge_lambda;
  params.ridge_scope = config.ridge_scope;
  params.normalize_embeddings = config.normalize_embeddings;
  if (config.init_output_bias_to_mean) params.layers.back().bias(0) = all.targets.mean();

  AdamState adam{zero_like(params), zero_like(params), 0};
  Gradients<float> grads;
  FitResult result{params, {}};
  result.log.height_source = config.height_source;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int step = 0;

  const int n = static_cast<int>(train.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix shuffle_rng(hash_combine(config.seed, 0xa11ce));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<int>(shuffle_rng.below(static_cast<std::uint64_t>(i) + 1))]);
    }
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int count = std::min(config.batch_size, n - start);
      const Batch<float> mb = gather(all, std::span<const int>(order).subspan(start, count));
      const double l = loss_and_gradients(mb, params, &grads);
      if (!std::isfinite(l)) {
        fail(ErrorKind::kTraining,
             fmt::format("training diverged at epoch {} step {}: loss={} (learning_rate={}, batch_size={})",
                         epoch, step + 1, l, config.learning_rate, config.batch_size));
      }
      epoch_loss += l * count;
      adam_step(params, grads, adam, config.learning_rate);
      ++step;
      if (observer) observer(step, params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / n;
    rec.train_mae = mean_abs_error(all, params);
    if (val) rec.val_mae = mean_abs_error(*val, params);
    rec.weights = fusion_weights(params);
    if (!std::isfinite(rec.train_mae)) {
      fail(ErrorKind::kTraining, fmt::format("training diverged at epoch {}: train MAE is not finite", epoch));
    }
    result.log.epochs.push_back(rec);

    const double monitored = rec.val_mae.value_or(rec.train_mae);
    if (monitored < best) {
      best = monitored;
      since_best = 0;
      result.params = params;
      result.log.best_epoch = epoch;
    } else if (++since_best >= config.patience) {
      result.log.early_stopped = true;
      break;
    }
  }
  result.log.steps = step;
  return result;
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const auto& r : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["train_mae"] = r.train_mae;
    j["val_mae"] = r.val_mae ? nlohmann::ordered_json(*r.val_mae) : nlohmann::ordered_json(nullptr);
    j["w_F"] = r.weights[0];
    j["w_B"] = r.weights[1];
    j["w_R"] = r.weights[2];
    j["train_loss"] = r.train_loss;
    j["height_source"] = height_source;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace nutrisight::fusion
