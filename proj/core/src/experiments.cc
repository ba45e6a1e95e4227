#include <cmath>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nutrisight/digest.h"
#include "nutrisight/error.h"
#include "nutrisight/eval.h"
#include "nutrisight/health.h"
#include "nutrisight/image_io.h"

namespace nutrisight::eval {

namespace {

constexpr std::array<const char*, fusion::kModalityCount> kMaskTokens{"FF", "BF", "DF"};

std::uint64_t record_hash(const std::string& id) {
  return hash_bytes({reinterpret_cast<const std::uint8_t*>(id.data()), id.size()}, 0x7265636f7264ull);
}

RgbImage payload_image(std::uint64_t h, int base) {
  const int w = base + static_cast<int>(h % 9);
  const int ht = base + static_cast<int>((h >> 8) % 9);
  RgbImage img(w, ht);
  SplitMix rng(h);
  for (int y = 0; y < ht; ++y) {
    for (int x = 0; x < w; ++x) {
      if (rng.uniform() < 0.7) img.set(x, y, Rgb{128, 128, 128});
    }
  }
  return img;
}

recon::PointCloud payload_cloud(std::uint64_t h) {
  recon::PointCloud c;
  SplitMix rng(h);
  for (int i = 0; i < 64; ++i) c.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
  return recon::normalize_point_cloud(c);
}

SubjectSignal signal_of(const SubjectRecord& r) {
  if (!r.true_height_cm) {
    fail(ErrorKind::kData, fmt::format("record '{}' has no height; the synthetic source needs one", r.record_id));
  }
  const double bmi = health::bmi(r.true_weight_kg, *r.true_height_cm);
  return {r.true_weight_kg, *r.true_height_cm, health::bfp(bmi, r.age_years, r.gender) / 100.0};
}

void check_selection(const embed::ProviderRegistry& providers, const ExtractorSelection& s) {
  const auto expect = [&](const std::string& name, embed::Modality m) {
    const auto p = providers.get(name);
    if (p->descriptor().modality != m) {
      fail(ErrorKind::kConfiguration, fmt::format("provider '{}' is not a {} extractor", name, embed::to_string(m)));
    }
  };
  expect(s.face, embed::Modality::kFace);
  expect(s.body, embed::Modality::kBody);
  expect(s.cloud, embed::Modality::kCloud);
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::kParameter, fmt::format("gamma must be positive, got {}", gamma));
  }
}

}  // namespace

FeatureMask parse_feature_mask(std::string_view label) {
  fusion::ModalityMask mask{false, false, false};
  std::size_t start = 0;
  while (start <= label.size()) {
    const auto end = std::min(label.find('+', start), label.size());
    const auto token = label.substr(start, end - start);
    bool matched = false;
    for (int m = 0; m < fusion::kModalityCount; ++m) {
      if (token == kMaskTokens[m]) {
        if (mask[m]) fail(ErrorKind::kParameter, fmt::format("feature mask '{}' repeats {}", label, token));
        mask[m] = true;
        matched = true;
      }
    }
    if (!matched) fail(ErrorKind::kParameter, fmt::format("unknown feature mask token '{}'", token));
    start = end + 1;
  }
  FeatureMask out;
  out.mask = mask;
  for (int m = 0; m < fusion::kModalityCount; ++m) {
    if (!mask[m]) continue;
    if (!out.label.empty()) out.label += '+';
    out.label += kMaskTokens[m];
  }
  return out;
}

std::vector<FeatureMask> all_feature_masks() {
  std::vector<FeatureMask> out;
  for (const char* label : {"FF", "BF", "DF", "FF+BF", "FF+DF", "BF+DF", "FF+BF+DF"}) {
    out.push_back(parse_feature_mask(label));
  }
  return out;
}

std::vector<AblationCell> expand_grid(std::span<const std::string> face, std::span<const std::string> body,
                                      std::span<const std::string> cloud, std::span<const FeatureMask> masks) {
  std::vector<AblationCell> cells;
  const std::vector<FeatureMask> all{parse_feature_mask("FF+BF+DF")};
  const auto mask_list = masks.empty() ? std::span<const FeatureMask>(all) : masks;
  for (const auto& f : face) {
    for (const auto& b : body) {
      for (const auto& c : cloud) {
        for (const auto& m : mask_list) cells.push_back({{f, b, c}, m});
      }
    }
  }
  return cells;
}

SyntheticFeatureSource::SyntheticFeatureSource(embed::ProviderRegistry providers,
                                               geometry::GammaConvention convention)
    : providers_(std::move(providers)), convention_(convention) {}

void SyntheticFeatureSource::check(const ExtractorSelection& extractors) const {
  check_selection(providers_, extractors);
}

std::vector<fusion::SubjectFeatures> SyntheticFeatureSource::features(std::span<const SubjectRecord> records,
                                                                      const ExtractorSelection& extractors,
                                                                      double gamma, bool /*use_true_height*/) const {
  check_gamma(gamma);
  check(extractors);
  const auto face = providers_.get(extractors.face);
  const auto body = providers_.get(extractors.body);
  const auto cloud = providers_.get(extractors.cloud);
  const auto corrupt = [&](RgbImage img) { return gamma == 1.0 ? img : geometry::apply_gamma(img, gamma, convention_); };
  std::vector<fusion::SubjectFeatures> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const SubjectSignal signal = signal_of(r);
    const std::uint64_t h = record_hash(r.record_id);
    fusion::SubjectFeatures f;
    f.face = embed::extract({embed::FaceCrop{corrupt(payload_image(h, 24))}, signal}, *face);
    f.body = embed::extract({embed::BodyImage{corrupt(payload_image(hash_combine(h, 1), 32))}, signal}, *body);
    f.cloud = embed::extract({payload_cloud(hash_combine(h, 2)), signal}, *cloud);
    f.gender = r.gender;
    f.age_years = r.age_years;
    f.height_cm = *r.true_height_cm;
    out.push_back(std::move(f));
  }
  return out;
}

FrameLoader disk_frame_loader(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const SubjectRecord& r) {
    std::filesystem::path p(r.image_path);
    if (p.is_relative()) p = base / p;
    LoadedFrame frame{read_image(p), std::nullopt};
    const auto ann = geometry::annotation_path_for(p);
    if (std::filesystem::exists(ann)) frame.annotation = geometry::read_annotation(ann);
    return frame;
  };
}

PipelineFeatureSource::PipelineFeatureSource(PipelineConfig config, PipelineComponents components,
                                             FrameLoader loader, geometry::GammaConvention convention)
    : config_(std::move(config)), components_(std::move(components)), loader_(std::move(loader)),
      convention_(convention) {
  if (!loader_) fail(ErrorKind::kConfiguration, "pipeline feature source needs a frame loader");
}

Pipeline PipelineFeatureSource::pipeline_for(const ExtractorSelection& extractors) const {
  PipelineConfig cfg = config_;
  cfg.face_provider = extractors.face;
  cfg.body_provider = extractors.body;
  cfg.cloud_provider = extractors.cloud;
  cfg.keep_intermediates = false;
  return Pipeline(cfg, components_);
}

void PipelineFeatureSource::check(const ExtractorSelection& extractors) const {
  pipeline_for(extractors).check_providers();
}

std::vector<fusion::SubjectFeatures> PipelineFeatureSource::features(std::span<const SubjectRecord> records,
                                                                     const ExtractorSelection& extractors,
                                                                     double gamma, bool use_true_height) const {
  check_gamma(gamma);
  const Pipeline pipeline = pipeline_for(extractors);
  pipeline.check_providers();
  std::vector<fusion::SubjectFeatures> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    try {
      const LoadedFrame frame = loader_(r);
      geometry::FrameContext ctx;
      ctx.source_digest = image_digest(frame.image);
      if (frame.annotation) ctx.annotation = &*frame.annotation;
      const RgbImage image = gamma == 1.0 ? frame.image : geometry::apply_gamma(frame.image, gamma, convention_);
      const FrameAnalysis analysis = pipeline.analyze(image, ctx, r.device_tag);
      std::optional<double> height;
      if (use_true_height) height = r.true_height_cm;
      out.push_back(Pipeline::to_features(analysis, r.gender, r.age_years, height));
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("record '{}': {}", r.record_id, e.what()), e.stage());
    }
  }
  return out;
}

std::vector<fusion::TrainingSample> make_samples(std::span<const SubjectRecord> records,
                                                 std::span<const fusion::SubjectFeatures> features) {
  if (records.size() != features.size()) fail(ErrorKind::kParameter, "records/features length mismatch");
  std::vector<fusion::TrainingSample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back({features[i], records[i].true_weight_kg});
  return out;
}

std::vector<Prediction> predict_records(std::span<const SubjectRecord> records,
                                        std::span<const fusion::SubjectFeatures> features,
                                        const fusion::FusionModelParams& params) {
  if (records.size() != features.size()) fail(ErrorKind::kParameter, "records/features length mismatch");
  std::vector<Prediction> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Prediction p;
    p.record_id = records[i].record_id;
    p.device_tag = records[i].device_tag;
    p.pred_weight_kg = fusion::predict_weight(features[i], params);
    p.true_weight_kg = records[i].true_weight_kg;
    p.pred_height_cm = features[i].height_cm;
    p.true_height_cm = records[i].true_height_cm;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CellResult> run_ablation(std::span<const AblationCell> cells, std::span<const SubjectRecord> records,
                                     const FeatureSource& source, const fusion::TrainingConfig& config) {
  for (const auto& cell : cells) source.check(cell.extractors);
  const auto train = select_split(records, Split::kTrain);
  const auto val = select_split(records, Split::kVal);
  const auto test = select_split(records, Split::kTest);
  if (train.empty()) fail(ErrorKind::kData, "manifest has no train records");
  if (test.empty()) fail(ErrorKind::kData, "manifest has no test records");

  struct Cached {
    std::vector<fusion::TrainingSample> train, val;
    std::vector<fusion::SubjectFeatures> test;
  };
  std::map<std::string, Cached> cache;
  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (const auto& cell : cells) {
    const auto key = cell.extractors.face + "|" + cell.extractors.body + "|" + cell.extractors.cloud;
    auto it = cache.find(key);
    if (it == cache.end()) {
      Cached c;
      c.train = make_samples(train, source.features(train, cell.extractors, 1.0, true));
      c.val = make_samples(val, source.features(val, cell.extractors, 1.0, true));
      c.test = source.features(test, cell.extractors, 1.0, false);
      it = cache.emplace(key, std::move(c)).first;
    }
    fusion::TrainingConfig cfg = config;
    cfg.active = cell.mask.mask;
    spdlog::info("ablation cell {} / {}", key, cell.mask.label);
    auto fitted = fusion::fit(it->second.train, cfg, it->second.val);
    CellResult res;
    res.predictions = predict_records(test, it->second.test, fitted.params);
    const ReportLabels labels{cell.extractors.face, cell.extractors.body, cell.extractors.cloud, cell.mask.label, 1.0};
    res.report = make_report(labels, res.predictions, feature_importance(fitted.params));
    res.log = std::move(fitted.log);
    res.params = std::move(fitted.params);
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<SweepPoint> lighting_sweep(std::span<const SubjectRecord> records, std::span<const double> gammas,
                                       const fusion::FusionModelParams& params, const FeatureSource& source,
                                       const ExtractorSelection& extractors, const ReportLabels& labels) {
  for (const double g : gammas) check_gamma(g);
  source.check(extractors);
  std::vector<SweepPoint> out;
  for (const double g : gammas) {
    SweepPoint pt;
    pt.gamma = g;
    const auto feats = source.features(records, extractors, g, false);
    pt.predictions = predict_records(records, feats, params);
    ReportLabels l = labels;
    l.gamma = g;
    pt.report = make_report(l, pt.predictions, feature_importance(params));
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace nutrisight::eval
