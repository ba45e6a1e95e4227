#include <cmath>

#include <gtest/gtest.h>

#include "nutrisight/error.h"
#include "nutrisight/health.h"

using namespace nutrisight;
using namespace nutrisight::health;

TEST(Bmi, ClosedForm) {
  EXPECT_NEAR(bmi(70, 175), 22.857, 1e-3);
  EXPECT_DOUBLE_EQ(bmi(100, 200), 25.0);
  EXPECT_NEAR(bmi_imperial(154.32, 68.90), bmi(70, 175), 0.1);
}

TEST(Bmi, ScaleIdentity) {
  for (double w = 30; w < 150; w += 7.3) {
    for (double h = 120; h < 210; h += 11.1) EXPECT_NEAR(bmi(w, h), bmi(2 * w, h * std::sqrt(2.0)), 1e-12);
  }
}

TEST(Bmi, NonPositiveIsParameterError) {
  for (const auto& [w, h] : {std::pair{0.0, 170.0}, {70.0, 0.0}, {-1.0, 170.0}}) {
    try {
      bmi(w, h);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
}

TEST(Bmr, ClosedForm) {
  EXPECT_EQ(bmr(70, 175, 25, Gender::kMale), 1673.75);
  EXPECT_EQ(bmr(60, 165, 30, Gender::kFemale), 1320.25);
  EXPECT_EQ(bmr(80, 180, 40, Gender::kMale) - bmr(80, 180, 40, Gender::kFemale), 166.0);
  EXPECT_EQ(bmr_intercept(Gender::kMale), 5.0);
  EXPECT_EQ(bmr_intercept(Gender::kFemale), -161.0);
}

TEST(Bmr, Monotonicity) {
  for (const auto g : {Gender::kMale, Gender::kFemale}) {
    for (double x = 40; x < 120; x += 1) EXPECT_LT(bmr(x, 170, 30, g), bmr(x + 1, 170, 30, g));
    for (double x = 140; x < 200; x += 1) EXPECT_LT(bmr(70, x, 30, g), bmr(70, x + 1, 30, g));
    for (double x = 18; x < 80; x += 1) EXPECT_GT(bmr(70, 170, x, g), bmr(70, 170, x + 1, g));
  }
}

TEST(Bfp, ClosedForm) {
  EXPECT_NEAR(bfp(22.857, 25, Gender::kMale), 16.978, 1e-3);
  EXPECT_NEAR(bfp(21, 30, Gender::kFemale), 26.7, 1e-12);
  EXPECT_NEAR(bfp(25, 40, Gender::kFemale) - bfp(25, 40, Gender::kMale), 10.8, 1e-12);
  EXPECT_THROW(bfp(0, 30, Gender::kMale), Error);
}

TEST(Classify, Threshold) {
  EXPECT_EQ(classify_malnutrition(17.0), Classification::kMalnourished);
  EXPECT_EQ(classify_malnutrition(22.0), Classification::kHealthy);
  EXPECT_EQ(classify_malnutrition(18.5), Classification::kHealthy);
  EXPECT_EQ(classify_malnutrition(std::nextafter(18.5, 0.0)), Classification::kMalnourished);
}

TEST(Classify, MonotoneInWeight) {
  for (double h = 140; h <= 200; h += 5) {
    bool healthy = false;
    for (double w = 30; w <= 130; w += 0.25) {
      const bool now = classify_malnutrition(bmi(w, h)) == Classification::kHealthy;
      EXPECT_FALSE(healthy && !now);
      healthy = healthy || now;
    }
  }
}

TEST(Report, FieldsAndFlags) {
  const auto r = make_report(70, 175, 25, Gender::kMale, ActivityLevel::kModerate);
  EXPECT_NEAR(r.bmi, 22.857, 1e-3);
  EXPECT_EQ(r.bmr, 1673.75);
  EXPECT_DOUBLE_EQ(r.active_bmr, 1673.75 * 1.55);
  EXPECT_DOUBLE_EQ(r.ideal_weight_kg, 22.0 * 1.75 * 1.75);
  EXPECT_EQ(r.classification, Classification::kHealthy);
  EXPECT_FALSE(r.obesity_flag);
  const auto obese = make_report(120, 170, 40, Gender::kFemale);
  EXPECT_TRUE(obese.obesity_flag);
  EXPECT_EQ(obese.classification, Classification::kHealthy);
}

TEST(Enums, ParseAndFactors) {
  EXPECT_EQ(activity_factor(activity_level_from_string("sedentary")), 1.2);
  EXPECT_EQ(activity_factor(activity_level_from_string("light")), 1.375);
  EXPECT_EQ(activity_factor(activity_level_from_string("moderate")), 1.55);
  EXPECT_EQ(activity_factor(activity_level_from_string("active")), 1.725);
  EXPECT_EQ(diet_type_from_string("high_protein"), DietType::kHighProtein);
  EXPECT_THROW(activity_level_from_string("couch"), Error);
  EXPECT_THROW(diet_type_from_string("carnivore"), Error);
}

TEST(Plan, ZeroDeltaIsFlat) {
  auto r = make_report(70, 175, 25, Gender::kMale);
  const auto p = nutrition_plan(r, r.ideal_weight_kg, DietType::kBalanced, 4, ActivityLevel::kSedentary);
  EXPECT_DOUBLE_EQ(p.daily_calorie_target, r.active_bmr);
  for (const double w : p.weekly_weight_kg) EXPECT_EQ(w, r.ideal_weight_kg);
}

TEST(Plan, ClosedFormLoss) {
  HealthReport r;
  r.bmr = 2000.0 / 1.2;
  r.ideal_weight_kg = 75.0;
  const auto p = nutrition_plan(r, 80.0, DietType::kLowCarb, 10, ActivityLevel::kSedentary);
  EXPECT_NEAR(p.daily_calorie_target, 1450.0, 1e-9);
  ASSERT_EQ(p.weekly_weight_kg.size(), 11u);
  EXPECT_EQ(p.weekly_weight_kg.front(), 80.0);
  EXPECT_EQ(p.weekly_weight_kg.back(), 75.0);
  for (std::size_t k = 1; k < p.weekly_weight_kg.size(); ++k) {
    EXPECT_NEAR(p.weekly_weight_kg[k] - p.weekly_weight_kg[k - 1], -0.5, 1e-12);
  }
  EXPECT_EQ(p.macros.carbs_pct + p.macros.protein_pct + p.macros.fat_pct, 100);
}

TEST(Plan, InfeasibleSuggestsMinimumWeeks) {
  HealthReport r;
  r.bmr = 2000.0 / 1.2;
  r.ideal_weight_kg = 60.0;
  try {
    nutrition_plan(r, 80.0, DietType::kBalanced, 4, ActivityLevel::kSedentary);
    FAIL();
  } catch (const InfeasiblePlan& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
    ASSERT_TRUE(e.minimum_weeks().has_value());
    const int w = *e.minimum_weeks();
    EXPECT_NO_THROW(nutrition_plan(r, 80.0, DietType::kBalanced, w, ActivityLevel::kSedentary));
    EXPECT_THROW(nutrition_plan(r, 80.0, DietType::kBalanced, w - 1, ActivityLevel::kSedentary), InfeasiblePlan);
  }
}

TEST(Plan, WeeksMustBePositive) {
  const auto r = make_report(70, 175, 25, Gender::kMale);
  try {
    nutrition_plan(r, 70, DietType::kBalanced, 0, ActivityLevel::kSedentary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParameter);
  }
}

TEST(Plan, TextExport) {
  const auto r = make_report(80, 175, 25, Gender::kMale);
  const auto p = nutrition_plan(r, 80, DietType::kMediterranean, 8, ActivityLevel::kActive);
  const auto text = plan_to_text(p);
  EXPECT_NE(text.find("mediterranean"), std::string::npos);
  EXPECT_NE(text.find("8 weeks"), std::string::npos);
}
