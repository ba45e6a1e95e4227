#include "nutrisight/service.h"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nutrisight/digest.h"
#include "nutrisight/error.h"
#include "nutrisight/health.h"
#include "nutrisight/image_io.h"

namespace nutrisight::service {

ValidatedRequest validate_request(const EstimateRequest& request) {
  std::vector<std::string> problems;
  if (request.image.empty()) problems.push_back("missing required field: image");
  if (!request.age_years) {
    problems.push_back("missing required field: age_years");
  } else if (!(*request.age_years > 0.0) || !std::isfinite(*request.age_years)) {
    problems.push_back("age_years must be positive");
  }
  if (!request.gender) {
    problems.push_back("missing required field: gender");
  } else if (*request.gender != "male" && *request.gender != "female") {
    problems.push_back(fmt::format("gender must be 'male' or 'female', got '{}'", *request.gender));
  }
  std::optional<health::ActivityLevel> activity;
  try {
    activity = health::activity_level_from_string(request.activity_level);
  } catch (const Error&) {
    problems.push_back(fmt::format("unknown activity_level '{}'", request.activity_level));
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorKind::kValidation, msg, "request");
  }
  ValidatedRequest v;
  v.image = run_stage("decode", [&] { return decode_image(request.image); });
  v.image_digest = image_digest(v.image);
  v.inputs.age_years = *request.age_years;
  v.inputs.gender = fusion::gender_from_string(*request.gender);
  v.inputs.device_id = request.device_id;
  v.inputs.activity = *activity;
  return v;
}

std::string request_id_base(const ValidatedRequest& r, const std::string& model_digest) {
  return fmt::format("{}|{}|{:.17g}|{}|{}|{}|{}", kPipelineVersion, r.image_digest, r.inputs.age_years,
                     fusion::to_string(r.inputs.gender), r.inputs.device_id, health::to_string(r.inputs.activity),
                     model_digest);
}

std::string derive_record_id(const std::string& id_base, std::size_t prior) {
  return sha256_hex(fmt::format("{}:{}", id_base, prior)).substr(0, 16);
}

Json estimate_to_json(const std::string& record_id, const std::string& image_digest, const Estimate& e) {
  Json j;
  j["record_id"] = record_id;
  j["pipeline_version"] = std::string(kPipelineVersion);
  j["height_cm"] = e.height_cm;
  j["weight_kg"] = e.weight_kg;
  Json h;
  h["bmi"] = e.report.bmi;
  h["bmr"] = e.report.bmr;
  h["active_bmr"] = e.report.active_bmr;
  h["bfp"] = e.report.bfp;
  h["ideal_weight_kg"] = e.report.ideal_weight_kg;
  h["classification"] = std::string(health::to_string(e.report.classification));
  h["activity_level"] = std::string(health::to_string(e.report.activity_level));
  h["obesity_flag"] = e.report.obesity_flag;
  j["health"] = h;
  Json d;
  d["face"] = e.digests.face;
  d["body"] = e.digests.body;
  d["cloud"] = e.digests.cloud;
  d["model"] = e.model_digest;
  j["provider_digests"] = d;
  j["image_digest"] = image_digest;
  return j;
}

Json subject_to_json(const ValidatedRequest& r) {
  Json j;
  j["image_digest"] = r.image_digest;
  j["age_years"] = r.inputs.age_years;
  j["gender"] = std::string(fusion::to_string(r.inputs.gender));
  j["device_id"] = r.inputs.device_id;
  j["activity_level"] = std::string(health::to_string(r.inputs.activity));
  return j;
}

Json plan_to_json(const health::NutritionPlan& p) {
  Json j;
  j["diet_type"] = std::string(health::to_string(p.diet_type));
  j["activity_level"] = std::string(health::to_string(p.activity_level));
  j["weeks"] = p.weeks;
  j["daily_calorie_target"] = p.daily_calorie_target;
  j["weekly_weight_kg"] = p.weekly_weight_kg;
  j["macros"] = {{"carbs_pct", p.macros.carbs_pct}, {"protein_pct", p.macros.protein_pct}, {"fat_pct", p.macros.fat_pct}};
  return j;
}

namespace {

Estimate run_estimate(const Pipeline& pipeline, const fusion::FusionModelParams& params, const ValidatedRequest& v) {
  geometry::FrameContext ctx;
  ctx.source_digest = v.image_digest;
  return pipeline.estimate(v.image, ctx, v.inputs, params);
}

}  // namespace

Json estimate_response(const Pipeline& pipeline, const fusion::FusionModelParams& params,
                       const EstimateRequest& request) {
  const ValidatedRequest v = validate_request(request);
  const Estimate e = run_estimate(pipeline, params, v);
  const std::string id = derive_record_id(request_id_base(v, e.model_digest), 0);
  return estimate_to_json(id, v.image_digest, e);
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kFormat:
    case ErrorKind::kParameter:
      return 400;
    case ErrorKind::kNotFound:
      return 404;
    case ErrorKind::kNoSubject:
    case ErrorKind::kInfeasible:
    case ErrorKind::kGeometry:
    case ErrorKind::kDegenerate:
    case ErrorKind::kTopology:
      return 422;
    case ErrorKind::kProvider:
    case ErrorKind::kContract:
      return 502;
    default:
      return 500;
  }
}

Json error_body(const Error& error) {
  Json j;
  j["stage"] = error.stage();
  j["code"] = std::string(to_string(error.kind()));
  j["message"] = error.what();
  if (const auto* inf = dynamic_cast<const health::InfeasiblePlan*>(&error); inf && inf->minimum_weeks()) {
    j["minimum_weeks"] = *inf->minimum_weeks();
  }
  return j;
}

Service::Service(std::shared_ptr<const Pipeline> pipeline, std::shared_ptr<const fusion::FusionModelParams> params,
                 std::shared_ptr<RecordStore> store)
    : pipeline_(std::move(pipeline)), store_(std::move(store)), params_(std::move(params)) {
  if (!pipeline_ || !params_ || !store_) fail(ErrorKind::kConfiguration, "service needs pipeline, model and store");
  pipeline_->check_providers();
  params_->validate();
}

std::unique_ptr<Service> Service::from_config(const AppConfig& config) {
  auto pipeline = std::make_shared<const Pipeline>(make_pipeline_config(config), make_components(config));
  auto params = std::make_shared<const fusion::FusionModelParams>(load_model(config));
  auto store = std::make_shared<JsonlRecordStore>(config.store_path);
  auto svc = std::make_unique<Service>(std::move(pipeline), std::move(params), std::move(store));
  svc->config_ = config;
  return svc;
}

std::shared_ptr<const fusion::FusionModelParams> Service::model() const {
  std::lock_guard lock(model_mutex_);
  return params_;
}

void Service::reload_model(std::shared_ptr<const fusion::FusionModelParams> params) {
  if (!params) fail(ErrorKind::kConfiguration, "cannot load an empty model");
  params->validate();
  std::lock_guard lock(model_mutex_);
  params_ = std::move(params);
}

void Service::reload_from_config() {
  if (!config_) fail(ErrorKind::kConfiguration, "service was not built from a config file");
  reload_model(std::make_shared<const fusion::FusionModelParams>(load_model(*config_)));
  spdlog::info("model reloaded from {}", config_->model_path.string());
}

Json Service::handle_estimate(const EstimateRequest& request) {
  const ValidatedRequest v = validate_request(request);
  const auto params = model();
  const Estimate e = run_estimate(*pipeline_, *params, v);
  const std::string base = request_id_base(v, e.model_digest);
  run_stage("store", [&] { store_->put_image(v.image_digest, request.image); });
  std::lock_guard lock(id_mutex_);
  const std::string id = derive_record_id(base, store_->count_for_base(base));
  StoredRecord rec;
  rec.record_id = id;
  rec.subject = subject_to_json(v);
  rec.response = estimate_to_json(id, v.image_digest, e);
  run_stage("store", [&] { store_->append_record(base, rec); });
  return rec.response;
}

Json Service::handle_plan(const std::string& record_id, const std::string& diet_type, std::optional<int> weeks,
                          const std::string& activity_level) {
  std::vector<std::string> problems;
  std::optional<health::DietType> diet;
  std::optional<health::ActivityLevel> activity;
  try {
    diet = health::diet_type_from_string(diet_type);
  } catch (const Error&) {
    problems.push_back(fmt::format("unknown diet_type '{}'", diet_type));
  }
  try {
    activity = health::activity_level_from_string(activity_level);
  } catch (const Error&) {
    problems.push_back(fmt::format("unknown activity_level '{}'", activity_level));
  }
  if (!weeks) problems.push_back("missing required field: weeks");
  else if (*weeks < 1) problems.push_back("weeks must be at least 1");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorKind::kValidation, msg, "request");
  }
  const StoredRecord rec = store_->get(record_id);
  const auto& h = rec.response.at("health");
  health::HealthReport report;
  report.bmi = h.at("bmi").get<double>();
  report.bmr = h.at("bmr").get<double>();
  report.active_bmr = h.at("active_bmr").get<double>();
  report.bfp = h.at("bfp").get<double>();
  report.ideal_weight_kg = h.at("ideal_weight_kg").get<double>();
  report.classification = health::classify_malnutrition(report.bmi);
  report.activity_level = health::activity_level_from_string(h.at("activity_level").get<std::string>());
  report.obesity_flag = h.at("obesity_flag").get<bool>();
  const double weight = rec.response.at("weight_kg").get<double>();
  const auto plan = run_stage("plan", [&] {
    try {
      return health::nutrition_plan(report, weight, *diet, *weeks, *activity);
    } catch (const health::InfeasiblePlan& e) {
      throw health::InfeasiblePlan(e.what(), e.minimum_weeks(), "plan");
    }
  });
  Json j = plan_to_json(plan);
  run_stage("store", [&] { store_->append_plan(record_id, j); });
  Json out;
  out["record_id"] = record_id;
  out["plan"] = j;
  return out;
}

Json Service::get_record(const std::string& record_id) const {
  const StoredRecord rec = store_->get(record_id);
  Json j;
  j["record_id"] = rec.record_id;
  j["subject"] = rec.subject;
  j["response"] = rec.response;
  j["plans"] = rec.plans;
  return j;
}

Json Service::health() const {
  Json j;
  j["status"] = "ok";
  j["pipeline_version"] = std::string(kPipelineVersion);
  j["model"] = fusion::params_digest(*model());
  return j;
}

}  // namespace nutrisight::service
