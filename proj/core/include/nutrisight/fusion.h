#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nutrisight/embedding.h"

namespace nutrisight::fusion {

enum class Gender { kMale, kFemale };

std::string_view to_string(Gender g);
Gender gender_from_string(std::string_view s);

// Face, body, cloud.
inline constexpr int kModalityCount = 3;
using ModalityMask = std::array<bool, kModalityCount>;
inline constexpr ModalityMask kAllModalities{true, true, true};

struct Architecture {
  int embedding_dim = embed::kEmbeddingDim;
  std::vector<int> hidden{512, 512, 256};

  // Fused embedding plus gender one-hot (2) plus height in metres.
  int input_dim() const { return embedding_dim + 3; }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

enum class RidgeScope { kFinalLayer, kAllLayers };

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct Layer {
  Mat<T> weight;  // out x in
  Vec<T> bias;    // out
};

template <typename T>
struct FusionParams {
  std::array<T, kModalityCount> weight_logits{T(0), T(0), T(0)};
  // Inactive modalities are excluded from the softmax (weight exactly 0).
  ModalityMask active = kAllModalities;
  std::vector<Layer<T>> layers;
  Architecture architecture;
  double ridge_lambda = 1e-3;
  RidgeScope ridge_scope = RidgeScope::kFinalLayer;
  bool normalize_embeddings = false;
  std::uint64_t seed = 0;

  // Throws kData on shape mismatch or non-finite values.
  void validate() const;
  std::size_t parameter_count() const;
};

using FusionModelParams = FusionParams<float>;

// Zero-initialised parameters with the given shapes.
template <typename T>
FusionParams<T> zero_params(const Architecture& arch);

// He-uniform hidden layers, Glorot-uniform output, zero biases and logits.
template <typename T>
FusionParams<T> init_params(const Architecture& arch, std::uint64_t seed);

template <typename T>
FusionParams<T> cast_params(const FusionParams<float>& p);

// softmax over the active logits, computed in double.
template <typename T>
std::array<double, kModalityCount> fusion_weights(const FusionParams<T>& params);

// Weighted sum of the three modality embeddings.
template <typename T>
Vec<T> fuse(const Eigen::Ref<const Vec<T>>& z_face, const Eigen::Ref<const Vec<T>>& z_body,
            const Eigen::Ref<const Vec<T>>& z_cloud, const FusionParams<T>& params);

// [fused | male, female one-hot | height_cm / 100].
template <typename T>
Vec<T> assemble_input(const Eigen::Ref<const Vec<T>>& fused, Gender gender, double height_cm);

// MLP head: relu hidden layers, linear scalar output. Throws kNumeric on a
// non-finite intermediate.
template <typename T>
T forward(const Eigen::Ref<const Vec<T>>& input, const FusionParams<T>& params);

// Mean squared error plus ridge penalty (final layer or all layers, per params).
template <typename T>
double loss(std::span<const double> predictions, std::span<const double> targets,
            const FusionParams<T>& params);

// Batched training view: columns are samples.
template <typename T>
struct Batch {
  Mat<T> z_face, z_body, z_cloud;  // embedding_dim x B
  Mat<T> side;                      // 3 x B: male, female, height_m
  Vec<T> targets;                   // B
};

template <typename T>
struct Gradients {
  std::array<T, kModalityCount> weight_logits{};
  std::vector<Layer<T>> layers;
};

// Loss of the batch under params and its gradient with respect to every
// parameter (logits of inactive modalities get zero gradient).
template <typename T>
double loss_and_gradients(const Batch<T>& batch, const FusionParams<T>& params,
                          Gradients<T>* grads);

// Batched predictions (one per column).
template <typename T>
Vec<T> predict_batch(const Batch<T>& batch, const FusionParams<T>& params);

struct SubjectFeatures {
  embed::EmbeddingVector face;
  embed::EmbeddingVector body;
  embed::EmbeddingVector cloud;
  Gender gender = Gender::kMale;
  double height_cm = 0.0;
  double age_years = 0.0;
};

struct TrainingSample {
  SubjectFeatures features;
  double target_weight_kg = 0.0;
};

// Single-subject inference through fuse -> assemble_input -> forward.
double predict_weight(const SubjectFeatures& features, const FusionModelParams& params);

template <typename T>
Batch<T> make_batch(std::span<const TrainingSample> samples, const ModalityMask& active,
                    bool normalize_embeddings);

struct TrainingConfig {
  double learning_rate = 1e-3;
  int epochs = 500;
  int batch_size = 32;
  double ridge_lambda = 1e-3;
  RidgeScope ridge_scope = RidgeScope::kFinalLayer;
  std::uint64_t seed = 0;
  int patience = 20;
  Architecture architecture;
  ModalityMask active = kAllModalities;
  bool normalize_embeddings = false;
  // Start the output bias at the mean training target.
  bool init_output_bias_to_mean = true;
  // Recorded in the log: which height fed the head during training.
  std::string height_source = "ground_truth";

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_mae = 0.0;
  std::optional<double> val_mae;
  std::array<double, kModalityCount> weights{};
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  int steps = 0;
  bool early_stopped = false;
  std::string height_source;

  // {epoch, train_mae, val_mae, w_F, w_B, w_R} per line.
  std::string to_jsonl() const;
};

struct FitResult {
  FusionModelParams params;
  TrainingLog log;
};

// Called after every optimiser step with the updated parameters.
using StepObserver = std::function<void(int step, const FusionModelParams& params)>;

// Adam on minibatches with early stopping on validation MAE (training MAE
// when no validation set is given). Returns the best-epoch parameters.
FitResult fit(std::span<const TrainingSample> train, const TrainingConfig& config,
              std::span<const TrainingSample> validation = {},
              const StepObserver& observer = nullptr);

// Parameter file I/O. Little-endian, versioned, SHA-256 trailer.
inline constexpr std::uint32_t kParamsFormatVersion = 1;

std::vector<std::uint8_t> save_params(const FusionModelParams& params);
FusionModelParams load_params(std::span<const std::uint8_t> bytes);
void write_params(const std::filesystem::path& path, const FusionModelParams& params);
FusionModelParams read_params(const std::filesystem::path& path);
// Hex digest of the serialised parameters.
std::string params_digest(const FusionModelParams& params);

bool bitwise_equal(const FusionModelParams& a, const FusionModelParams& b);

}  // namespace nutrisight::fusion
