#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nutrisight/error.h"
#include "nutrisight/fusion.h"

namespace nutrisight::health {

using fusion::Gender;

enum class Classification { kHealthy, kMalnourished };
enum class DietType { kBalanced, kHighProtein, kLowCarb, kMediterranean };
enum class ActivityLevel { kSedentary, kLight, kModerate, kActive };

std::string_view to_string(Classification c);
std::string_view to_string(DietType d);
std::string_view to_string(ActivityLevel a);
DietType diet_type_from_string(std::string_view s);
ActivityLevel activity_level_from_string(std::string_view s);

// 1.2, 1.375, 1.55, 1.725.
double activity_factor(ActivityLevel level);

inline constexpr double kUnderweightBmi = 18.5;
inline constexpr double kObeseBmi = 30.0;
inline constexpr double kIdealBmi = 22.0;
inline constexpr double kKcalPerKg = 7700.0;
inline constexpr double kCalorieFloor = 1200.0;

double bmi(double weight_kg, double height_cm);
double bmi_imperial(double weight_lb, double height_in);

// Mifflin-St Jeor: 10 w + 6.25 h - 5 a + p, with p = +5 (male) / -161 (female).
double bmr(double weight_kg, double height_cm, double age_years, Gender gender);
double bmr_intercept(Gender gender);

// 1.2 BMI + 0.23 age - m, with m = 16.2 (male) / 5.4 (female).
double bfp(double bmi_value, double age_years, Gender gender);
double bfp_intercept(Gender gender);

// Malnourished iff BMI < 18.5; 18.5 itself is healthy.
Classification classify_malnutrition(double bmi_value);

double ideal_weight(double height_cm);

struct HealthReport {
  double bmi = 0.0;
  double bmr = 0.0;
  double active_bmr = 0.0;
  double bfp = 0.0;
  double ideal_weight_kg = 0.0;
  Classification classification = Classification::kHealthy;
  ActivityLevel activity_level = ActivityLevel::kSedentary;
  bool obesity_flag = false;  // advisory only, never changes classification

  // Throws kData if the report breaks bmi > 0, bmr > 0, finite bfp.
  void validate() const;
};

HealthReport make_report(double weight_kg, double height_cm, double age_years, Gender gender,
                         ActivityLevel activity = ActivityLevel::kSedentary);

struct MacroSplit {
  int carbs_pct;
  int protein_pct;
  int fat_pct;
};
MacroSplit macro_split(DietType diet);

struct NutritionPlan {
  DietType diet_type = DietType::kBalanced;
  ActivityLevel activity_level = ActivityLevel::kSedentary;
  int weeks = 1;
  double daily_calorie_target = 0.0;
  std::vector<double> weekly_weight_kg;  // weeks + 1 entries
  MacroSplit macros{};
};

// Raised when the plan would require eating below the calorie floor.
class InfeasiblePlan : public Error {
 public:
  InfeasiblePlan(std::string message, std::optional<int> minimum_weeks, std::string stage = {});
  const std::optional<int>& minimum_weeks() const { return minimum_weeks_; }

 private:
  std::optional<int> minimum_weeks_;
};

// Daily target = active BMR + (ideal - current) * 7700 / (7 * weeks), with a
// linear weekly trajectory from current to ideal weight. `report.active_bmr`
// is recomputed for the requested activity level from report.bmr.
NutritionPlan nutrition_plan(const HealthReport& report, double current_weight_kg, DietType diet,
                             int weeks, ActivityLevel activity);

std::string plan_to_text(const NutritionPlan& plan);

}  // namespace nutrisight::health
