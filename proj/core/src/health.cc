#include "nutrisight/health.h"

#include <cmath>
#include <fmt/format.h>

#include "nutrisight/error.h"

namespace nutrisight::health {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::kParameter, fmt::format("{} must be positive", name));
}

}  // namespace

std::string_view to_string(Classification c) {
  return c == Classification::kHealthy ? "healthy" : "malnourished";
}

std::string_view to_string(DietType d) {
  switch (d) {
    case DietType::kBalanced: return "balanced";
    case DietType::kHighProtein: return "high_protein";
    case DietType::kLowCarb: return "low_carb";
    case DietType::kMediterranean: return "mediterranean";
  }
  return "?";
}

std::string_view to_string(ActivityLevel a) {
  switch (a) {
    case ActivityLevel::kSedentary: return "sedentary";
    case ActivityLevel::kLight: return "light";
    case ActivityLevel::kModerate: return "moderate";
    case ActivityLevel::kActive: return "active";
  }
  return "?";
}

DietType diet_type_from_string(std::string_view s) {
  for (auto d : {DietType::kBalanced, DietType::kHighProtein, DietType::kLowCarb, DietType::kMediterranean}) {
    if (s == to_string(d)) return d;
  }
  fail(ErrorKind::kValidation, fmt::format("unknown diet_type '{}'", s));
}

ActivityLevel activity_level_from_string(std::string_view s) {
  for (auto a : {ActivityLevel::kSedentary, ActivityLevel::kLight, ActivityLevel::kModerate, ActivityLevel::kActive}) {
    if (s == to_string(a)) return a;
  }
  fail(ErrorKind::kValidation, fmt::format("unknown activity_level '{}'", s));
}

double activity_factor(ActivityLevel level) {
  switch (level) {
    case ActivityLevel::kSedentary: return 1.2;
    case ActivityLevel::kLight: return 1.375;
    case ActivityLevel::kModerate: return 1.55;
    case ActivityLevel::kActive: return 1.725;
  }
  return 1.2;
}

double bmi(double weight_kg, double height_cm) {
  require_positive(weight_kg, "weight");
  require_positive(height_cm, "height");
  const double m = height_cm / 100.0;
  return weight_kg / (m * m);
}

double bmi_imperial(double weight_lb, double height_in) {
  require_positive(weight_lb, "weight");
  require_positive(height_in, "height");
  return weight_lb * 703.0 / (height_in * height_in);
}

double bmr_intercept(Gender gender) { return gender == Gender::kMale ? 5.0 : -161.0; }

double bmr(double weight_kg, double height_cm, double age_years, Gender gender) {
  require_positive(weight_kg, "weight");
  require_positive(height_cm, "height");
  require_positive(age_years, "age");
  return 10.0 * weight_kg + 6.25 * height_cm - 5.0 * age_years + bmr_intercept(gender);
}

double bfp_intercept(Gender gender) { return gender == Gender::kMale ? 16.2 : 5.4; }

double bfp(double bmi_value, double age_years, Gender gender) {
  require_positive(bmi_value, "bmi");
  require_positive(age_years, "age");
  return 1.2 * bmi_value + 0.23 * age_years - bfp_intercept(gender);
}

Classification classify_malnutrition(double bmi_value) {
  return bmi_value < kUnderweightBmi ? Classification::kMalnourished : Classification::kHealthy;
}

double ideal_weight(double height_cm) {
  require_positive(height_cm, "height");
  const double m = height_cm / 100.0;
  return kIdealBmi * m * m;
}

void HealthReport::validate() const {
  if (!(bmi > 0.0) || !std::isfinite(bmi)) fail(ErrorKind::kData, "report BMI must be positive");
  if (!(bmr > 0.0) || !std::isfinite(bmr)) fail(ErrorKind::kData, "report BMR must be positive");
  if (!(active_bmr > 0.0) || !std::isfinite(active_bmr)) fail(ErrorKind::kData, "report active BMR must be positive");
  if (!std::isfinite(bfp)) fail(ErrorKind::kData, "report BFP must be finite");
  if (!(ideal_weight_kg > 0.0)) fail(ErrorKind::kData, "report ideal weight must be positive");
  if (classification != classify_malnutrition(bmi)) fail(ErrorKind::kData, "report classification disagrees with BMI");
}

HealthReport make_report(double weight_kg, double height_cm, double age_years, Gender gender,
                         ActivityLevel activity) {
  HealthReport r;
  r.bmi = bmi(weight_kg, height_cm);
  r.bmr = bmr(weight_kg, height_cm, age_years, gender);
  r.active_bmr = r.bmr * activity_factor(activity);
  r.bfp = bfp(r.bmi, age_years, gender);
  r.ideal_weight_kg = ideal_weight(height_cm);
  r.classification = classify_malnutrition(r.bmi);
  r.activity_level = activity;
  r.obesity_flag = r.bmi >= kObeseBmi;
  return r;
}

MacroSplit macro_split(DietType diet) {
  switch (diet) {
    case DietType::kBalanced: return {50, 20, 30};
    case DietType::kHighProtein: return {40, 30, 30};
    case DietType::kLowCarb: return {25, 30, 45};
    case DietType::kMediterranean: return {45, 20, 35};
  }
  return {50, 20, 30};
}

InfeasiblePlan::InfeasiblePlan(std::string message, std::optional<int> minimum_weeks, std::string stage)
    : Error(ErrorKind::kInfeasible, std::move(message), std::move(stage)), minimum_weeks_(minimum_weeks) {}

NutritionPlan nutrition_plan(const HealthReport& report, double current_weight_kg, DietType diet,
                             int weeks, ActivityLevel activity) {
  if (weeks < 1) fail(ErrorKind::kParameter, "weeks must be at least 1");
  require_positive(current_weight_kg, "current weight");
  require_positive(report.bmr, "bmr");
  const double active = report.bmr * activity_factor(activity);
  const double delta = report.ideal_weight_kg - current_weight_kg;
  const double daily_per_kg_week = kKcalPerKg / 7.0;
  const double target = active + delta * daily_per_kg_week / weeks;
  if (target < kCalorieFloor) {
    std::optional<int> min_weeks;
    if (delta < 0.0 && active > kCalorieFloor) {
      min_weeks = static_cast<int>(std::ceil(-delta * daily_per_kg_week / (active - kCalorieFloor)));
    }
    throw InfeasiblePlan(
        min_weeks ? fmt::format("daily target {:.0f} kcal is below the {:.0f} kcal floor; need at least {} weeks",
                                target, kCalorieFloor, *min_weeks)
                  : fmt::format("daily target {:.0f} kcal is below the {:.0f} kcal floor at any duration",
                                target, kCalorieFloor),
        min_weeks);
  }
  NutritionPlan plan;
  plan.diet_type = diet;
  plan.activity_level = activity;
  plan.weeks = weeks;
  plan.daily_calorie_target = target;
  plan.macros = macro_split(diet);
  plan.weekly_weight_kg.reserve(weeks + 1);
  for (int k = 0; k <= weeks; ++k) {
    plan.weekly_weight_kg.push_back(k == weeks ? report.ideal_weight_kg
                                               : current_weight_kg + delta * k / weeks);
  }
  return plan;
}

std::string plan_to_text(const NutritionPlan& plan) {
  std::string out = "Personalised nutrition plan\n===========================\n";
  out += fmt::format("Diet: {} (carbs {}%, protein {}%, fat {}%)\n", to_string(plan.diet_type),
                     plan.macros.carbs_pct, plan.macros.protein_pct, plan.macros.fat_pct);
  out += fmt::format("Activity level: {}\n", to_string(plan.activity_level));
  out += fmt::format("Daily calorie target: {:.0f} kcal\n", plan.daily_calorie_target);
  out += fmt::format("Duration: {} weeks\n\nWeek  Target weight (kg)\n", plan.weeks);
  for (std::size_t k = 0; k < plan.weekly_weight_kg.size(); ++k) {
    out += fmt::format("{:>4}  {:.1f}\n", k, plan.weekly_weight_kg[k]);
  }
  return out;
}

}  // namespace nutrisight::health
