#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nutrisight/config.h"
#include "nutrisight/error.h"
#include "nutrisight/pipeline.h"
#include "nutrisight/record_store.h"

namespace nutrisight::service {

struct EstimateRequest {
  std::vector<std::uint8_t> image;
  std::optional<double> age_years;
  std::optional<std::string> gender;
  std::string device_id;
  std::string activity_level = "sedentary";
};

// Checks required fields and enum values; kValidation lists every problem.
struct ValidatedRequest {
  RgbImage image;
  std::string image_digest;
  EstimateInputs inputs;
};
ValidatedRequest validate_request(const EstimateRequest& request);

// Canonical request string and the record id derived from it: first 16 hex
// digits of SHA-256(canonical + ":" + number of earlier identical requests).
std::string request_id_base(const ValidatedRequest& request, const std::string& model_digest);
std::string derive_record_id(const std::string& id_base, std::size_t prior);

Json estimate_to_json(const std::string& record_id, const std::string& image_digest, const Estimate& estimate);
Json subject_to_json(const ValidatedRequest& request);
Json plan_to_json(const health::NutritionPlan& plan);

// Stateless estimate used by the CLI: the id a fresh store would assign.
Json estimate_response(const Pipeline& pipeline, const fusion::FusionModelParams& params,
                       const EstimateRequest& request);

// HTTP status for an error kind.
int http_status(ErrorKind kind);
// {stage, code, message} plus minimum_weeks for infeasible plans.
Json error_body(const Error& error);

class Service {
 public:
  Service(std::shared_ptr<const Pipeline> pipeline, std::shared_ptr<const fusion::FusionModelParams> params,
          std::shared_ptr<RecordStore> store);
  static std::unique_ptr<Service> from_config(const AppConfig& config);

  Json handle_estimate(const EstimateRequest& request);
  Json handle_plan(const std::string& record_id, const std::string& diet_type, std::optional<int> weeks,
                   const std::string& activity_level);
  Json get_record(const std::string& record_id) const;
  Json health() const;

  // Atomically swaps the model snapshot.
  void reload_model(std::shared_ptr<const fusion::FusionModelParams> params);
  std::shared_ptr<const fusion::FusionModelParams> model() const;
  // Re-reads the model file named by the config used at construction.
  void reload_from_config();

 private:
  std::shared_ptr<const Pipeline> pipeline_;
  std::shared_ptr<RecordStore> store_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const fusion::FusionModelParams> params_;
  std::mutex id_mutex_;
  std::optional<AppConfig> config_;
};

}  // namespace nutrisight::service
