#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nutrisight/fusion.h"
#include "nutrisight/pipeline.h"

namespace nutrisight::eval {

enum class Split { kTrain, kVal, kTest, kHeldout };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);  // kIngestion on unknown names

inline constexpr int kManifestSchemaVersion = 1;

struct SubjectRecord {
  std::string record_id;
  std::string image_path;  // relative paths resolve against the manifest directory
  std::string subject_id;
  fusion::Gender gender = fusion::Gender::kMale;
  double age_years = 0.0;
  std::optional<double> true_height_cm;
  double true_weight_kg = 0.0;
  Split split = Split::kTrain;
  std::string device_tag;
  std::string pose_tag;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

// One JSON object per line; blank lines are skipped. Throws kIngestion with
// the 1-based line number on schema violations and names duplicated ids.
std::vector<SubjectRecord> parse_manifest(std::istream& in, const std::string& source = "<manifest>");
std::vector<SubjectRecord> load_manifest(const std::filesystem::path& path);
std::string format_manifest_line(const SubjectRecord& record);
void write_manifest(const std::filesystem::path& path, std::span<const SubjectRecord> records);

std::map<Split, int> split_counts(std::span<const SubjectRecord> records);
std::vector<SubjectRecord> select_split(std::span<const SubjectRecord> records, Split split);

struct RegressionMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

// Throws kParameter on empty or mismatched inputs and kUndefinedMetric when
// the truths have zero variance.
RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> truth);

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long total() const { return tp + fp + fn + tn; }
};

// Empty optionals mark metrics whose denominator is zero.
struct ConfusionMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

ConfusionMetrics confusion_metrics(const ConfusionCounts& counts);

// Positive class: malnourished (BMI below the underweight threshold).
ConfusionCounts malnutrition_confusion(std::span<const double> predicted_bmi, std::span<const double> true_bmi);

struct ReportLabels {
  std::string face_fe;
  std::string body_fe;
  std::string cloud_fe;
  std::string feature_mask = "FF+BF+DF";
  double gamma = 1.0;
};

struct EvalReport {
  ReportLabels labels;
  std::size_t n = 0;
  RegressionMetrics weight;
  std::optional<RegressionMetrics> height;
  std::array<double, fusion::kModalityCount> fusion_weights{};

  // Throws kNumeric unless rmse >= mae >= 0 and r2 <= 1.
  void validate() const;
};

struct Prediction {
  std::string record_id;
  std::string device_tag;
  double pred_weight_kg = 0.0;
  double true_weight_kg = 0.0;
  double pred_height_cm = 0.0;
  std::optional<double> true_height_cm;
};

// Report over a prediction set; height metrics only when every record has a
// height truth with non-zero variance. The result is validated.
EvalReport make_report(const ReportLabels& labels, std::span<const Prediction> predictions,
                       const std::array<double, fusion::kModalityCount>& fusion_weights);

// Devices whose metrics are undefined (e.g. a single record) are left out.
std::map<std::string, EvalReport> group_by_device(const ReportLabels& labels,
                                                  std::span<const Prediction> predictions,
                                                  const std::array<double, fusion::kModalityCount>& fusion_weights);

std::array<double, fusion::kModalityCount> feature_importance(const fusion::FusionModelParams& params);

// BF = body, DF = 3D, FF = face; labels joined with '+', e.g. "FF+DF".
struct FeatureMask {
  std::string label;
  fusion::ModalityMask mask = fusion::kAllModalities;
};
FeatureMask parse_feature_mask(std::string_view label);
std::vector<FeatureMask> all_feature_masks();

struct ExtractorSelection {
  std::string face;
  std::string body;
  std::string cloud;
};

struct AblationCell {
  ExtractorSelection extractors;
  FeatureMask mask;
};

std::vector<AblationCell> expand_grid(std::span<const std::string> face, std::span<const std::string> body,
                                      std::span<const std::string> cloud, std::span<const FeatureMask> masks);

// Produces head inputs for manifest records under a given extractor choice
// and gamma correction.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  // Throws kConfiguration if any extractor is unavailable or of the wrong modality.
  virtual void check(const ExtractorSelection& extractors) const = 0;
  // `use_true_height` feeds ground-truth height (training); otherwise the
  // estimated height is used.
  virtual std::vector<fusion::SubjectFeatures> features(std::span<const SubjectRecord> records,
                                                        const ExtractorSelection& extractors, double gamma,
                                                        bool use_true_height) const = 0;
};

// Fast stand-in: tiny record-specific payload images (mid-grey foreground)
// and point clouds fed straight to the registered providers. Heights come
// from the manifest.
class SyntheticFeatureSource final : public FeatureSource {
 public:
  SyntheticFeatureSource(embed::ProviderRegistry providers,
                         geometry::GammaConvention convention = geometry::GammaConvention::kInverseExponent);
  void check(const ExtractorSelection& extractors) const override;
  std::vector<fusion::SubjectFeatures> features(std::span<const SubjectRecord> records,
                                                const ExtractorSelection& extractors, double gamma,
                                                bool use_true_height) const override;

 private:
  embed::ProviderRegistry providers_;
  geometry::GammaConvention convention_;
};

struct LoadedFrame {
  RgbImage image;
  std::optional<geometry::SubjectAnnotation> annotation;
};
using FrameLoader = std::function<LoadedFrame(const SubjectRecord&)>;

// Reads record.image_path (relative to `base_dir`) plus its sidecar annotation if present.
FrameLoader disk_frame_loader(std::filesystem::path base_dir);

// Full image pipeline per record; gamma is applied to the decoded frame.
class PipelineFeatureSource final : public FeatureSource {
 public:
  PipelineFeatureSource(PipelineConfig config, PipelineComponents components, FrameLoader loader,
                        geometry::GammaConvention convention = geometry::GammaConvention::kInverseExponent);
  void check(const ExtractorSelection& extractors) const override;
  std::vector<fusion::SubjectFeatures> features(std::span<const SubjectRecord> records,
                                                const ExtractorSelection& extractors, double gamma,
                                                bool use_true_height) const override;

 private:
  Pipeline pipeline_for(const ExtractorSelection& extractors) const;

  PipelineConfig config_;
  PipelineComponents components_;
  FrameLoader loader_;
  geometry::GammaConvention convention_;
};

struct CellResult {
  EvalReport report;
  std::vector<Prediction> predictions;
  fusion::TrainingLog log;
  fusion::FusionModelParams params;
};

// Trains one model per cell on the train split (val split for early
// stopping) with identical configs and evaluates on the test split. Every
// cell's providers are checked before the first fit.
std::vector<CellResult> run_ablation(std::span<const AblationCell> cells, std::span<const SubjectRecord> records,
                                     const FeatureSource& source, const fusion::TrainingConfig& config);

std::vector<Prediction> predict_records(std::span<const SubjectRecord> records,
                                        std::span<const fusion::SubjectFeatures> features,
                                        const fusion::FusionModelParams& params);

struct SweepPoint {
  double gamma = 1.0;
  EvalReport report;
  std::vector<Prediction> predictions;
};

// Re-runs feature extraction on gamma-corrected frames for each gamma and
// evaluates a fixed model. Throws kParameter on non-positive gammas.
std::vector<SweepPoint> lighting_sweep(std::span<const SubjectRecord> records, std::span<const double> gammas,
                                       const fusion::FusionModelParams& params, const FeatureSource& source,
                                       const ExtractorSelection& extractors, const ReportLabels& labels);

// Training samples from features plus manifest weights.
std::vector<fusion::TrainingSample> make_samples(std::span<const SubjectRecord> records,
                                                 std::span<const fusion::SubjectFeatures> features);

// Fixed-format tables. Identical inputs give identical bytes.
std::string reports_csv(std::span<const EvalReport> reports);
std::string reports_jsonl(std::span<const EvalReport> reports);
std::string predictions_csv(std::span<const Prediction> predictions, const std::string& series = "");
std::string sweep_csv(std::span<const SweepPoint> sweep);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nutrisight::eval
