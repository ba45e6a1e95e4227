#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "nutrisight/error.h"
#include "nutrisight/eval.h"
#include "nutrisight/health.h"

namespace nutrisight::eval {

RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::kParameter,
         fmt::format("prediction/truth length mismatch: {} vs {}", pred.size(), truth.size()));
  }
  if (pred.empty()) fail(ErrorKind::kParameter, "regression metrics need at least one sample");
  const double n = static_cast<double>(pred.size());
  double abs_sum = 0.0, sq_sum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    mean += truth[i];
  }
  mean /= n;
  double ss_tot = 0.0;
  for (const double t : truth) ss_tot += (t - mean) * (t - mean);
  if (!(ss_tot > 0.0)) fail(ErrorKind::kUndefinedMetric, "r2 is undefined: truths have zero variance");
  RegressionMetrics m;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  m.r2 = 1.0 - sq_sum / ss_tot;
  return m;
}

ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0) fail(ErrorKind::kParameter, "confusion counts must be >= 0");
  if (c.total() == 0) fail(ErrorKind::kParameter, "confusion counts are all zero");
  ConfusionMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

ConfusionCounts malnutrition_confusion(std::span<const double> predicted_bmi, std::span<const double> true_bmi) {
  if (predicted_bmi.size() != true_bmi.size()) fail(ErrorKind::kParameter, "BMI list length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < true_bmi.size(); ++i) {
    const bool p = health::classify_malnutrition(predicted_bmi[i]) == health::Classification::kMalnourished;
    const bool t = health::classify_malnutrition(true_bmi[i]) == health::Classification::kMalnourished;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

void check_metrics(const RegressionMetrics& m, const char* what) {
  const double slack = 1e-12 * std::max(1.0, m.mae);
  if (!(m.mae >= 0.0) || !(m.rmse + slack >= m.mae) || !(m.r2 <= 1.0)) {
    fail(ErrorKind::kNumeric, fmt::format("{} metrics violate rmse >= mae >= 0, r2 <= 1 (mae {}, rmse {}, r2 {})",
                                          what, m.mae, m.rmse, m.r2));
  }
}

}  // namespace

void EvalReport::validate() const {
  check_metrics(weight, "weight");
  if (height) check_metrics(*height, "height");
}

EvalReport make_report(const ReportLabels& labels, std::span<const Prediction> predictions,
                       const std::array<double, fusion::kModalityCount>& fusion_weights) {
  EvalReport r;
  r.labels = labels;
  r.n = predictions.size();
  r.fusion_weights = fusion_weights;
  std::vector<double> pw, tw, ph, th;
  bool all_heights = true;
  for (const auto& p : predictions) {
    pw.push_back(p.pred_weight_kg);
    tw.push_back(p.true_weight_kg);
    if (p.true_height_cm) {
      ph.push_back(p.pred_height_cm);
      th.push_back(*p.true_height_cm);
    } else {
      all_heights = false;
    }
  }
  r.weight = regression_metrics(pw, tw);
  if (all_heights && th.size() > 1) {
    try {
      r.height = regression_metrics(ph, th);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUndefinedMetric) throw;
    }
  }
  r.validate();
  return r;
}

std::map<std::string, EvalReport> group_by_device(const ReportLabels& labels,
                                                  std::span<const Prediction> predictions,
                                                  const std::array<double, fusion::kModalityCount>& fusion_weights) {
  std::map<std::string, std::vector<Prediction>> groups;
  for (const auto& p : predictions) groups[p.device_tag].push_back(p);
  std::map<std::string, EvalReport> out;
  for (const auto& [device, preds] : groups) {
    try {
      out.emplace(device, make_report(labels, preds, fusion_weights));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUndefinedMetric) throw;
      spdlog::warn("device '{}' skipped: {}", device, e.what());
    }
  }
  return out;
}

std::array<double, fusion::kModalityCount> feature_importance(const fusion::FusionModelParams& params) {
  return fusion::fusion_weights(params);
}

namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

std::string reports_csv(std::span<const EvalReport> reports) {
  std::string out =
      "face_fe,body_fe,cloud_fe,feature_mask,gamma,n,mae,rmse,r2,height_mae,height_rmse,height_r2,w_F,w_B,w_R\n";
  for (const auto& r : reports) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},", r.labels.face_fe, r.labels.body_fe, r.labels.cloud_fe,
                       r.labels.feature_mask, num(r.labels.gamma), r.n, num(r.weight.mae), num(r.weight.rmse),
                       num(r.weight.r2));
    if (r.height) {
      out += fmt::format("{},{},{},", num(r.height->mae), num(r.height->rmse), num(r.height->r2));
    } else {
      out += ",,,";
    }
    out += fmt::format("{},{},{}\n", num(r.fusion_weights[0]), num(r.fusion_weights[1]), num(r.fusion_weights[2]));
  }
  return out;
}

std::string reports_jsonl(std::span<const EvalReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["face_fe"] = r.labels.face_fe;
    j["body_fe"] = r.labels.body_fe;
    j["cloud_fe"] = r.labels.cloud_fe;
    j["feature_mask"] = r.labels.feature_mask;
    j["gamma"] = r.labels.gamma;
    j["n"] = r.n;
    j["mae"] = r.weight.mae;
    j["rmse"] = r.weight.rmse;
    j["r2"] = r.weight.r2;
    if (r.height) {
      j["height_mae"] = r.height->mae;
      j["height_rmse"] = r.height->rmse;
      j["height_r2"] = r.height->r2;
    }
    j["w_F"] = r.fusion_weights[0];
    j["w_B"] = r.fusion_weights[1];
    j["w_R"] = r.fusion_weights[2];
    out += j.dump() + "\n";
  }
  return out;
}

std::string predictions_csv(std::span<const Prediction> predictions, const std::string& series) {
  std::string out = "series,record_id,device_tag,pred_weight_kg,true_weight_kg,pred_height_cm,true_height_cm\n";
  for (const auto& p : predictions) {
    out += fmt::format("{},{},{},{},{},{},{}\n", series, p.record_id, p.device_tag, num(p.pred_weight_kg),
                       num(p.true_weight_kg), num(p.pred_height_cm),
                       p.true_height_cm ? num(*p.true_height_cm) : std::string());
  }
  return out;
}

std::string sweep_csv(std::span<const SweepPoint> sweep) {
  std::string out = "gamma,n,mae,rmse,r2\n";
  for (const auto& s : sweep) {
    out += fmt::format("{},{},{},{},{}\n", num(s.gamma), s.report.n, num(s.report.weight.mae),
                       num(s.report.weight.rmse), num(s.report.weight.r2));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kStorage, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kStorage, "write failed for " + path.string());
}

}  // namespace nutrisight::eval
