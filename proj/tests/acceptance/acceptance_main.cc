// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cli.h"
#include "linear_signal.h"
#include "nutrisight/config.h"
#include "nutrisight/error.h"
#include "nutrisight/eval.h"
#include "nutrisight/fusion.h"
#include "nutrisight/health.h"
#include "nutrisight/height.h"
#include "nutrisight/image_io.h"
#include "nutrisight/perception.h"
#include "nutrisight/recon3d.h"
#include "nutrisight/service.h"
#include "oracles.h"
#include "synthetic_records.h"
#include "test_paths.h"

using namespace nutrisight;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

struct Criterion {
  std::string name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

Outcome confidence_map_closed_form() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(8, 96);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int w = size(rng), h = size(rng);
    const PixelCoord p{unit(rng) * (w - 1), unit(rng) * (h - 1)};
    const double sigma = 0.5 + 20.0 * unit(rng);
    const int x = static_cast<int>(unit(rng) * w) % w;
    const int y = static_cast<int>(unit(rng) * h) % h;
    const auto map = geometry::render_confidence_map(p, w, h, sigma);
    const long double d2 = (static_cast<long double>(x) - p.x) * (x - p.x) + (static_cast<long double>(y) - p.y) * (y - p.y);
    const double expected = std::max(static_cast<double>(std::exp(-d2 / (static_cast<long double>(sigma) * sigma))),
                                     std::numeric_limits<double>::min());
    worst = std::max(worst, std::abs(map.at(x, y) - expected));
  }
  o.require(worst <= 1e-9, fmt::format("max deviation {:.3g}", worst));
  o.detail = o.ok ? fmt::format("max deviation {:.3g} over 10000 triples", worst) : o.detail;
  return o;
}

Outcome height_round_trip() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> px(10, 5000);
  std::uniform_real_distribution<double> cm(40.0, 240.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int c = px(rng);
    const double h = cm(rng);
    worst = std::max(worst, std::abs(height::estimate_height_from_pixels(c, height::calibrate_ppm_from_pixels(c, h)) - h));
  }
  o.require(worst <= 1e-9, fmt::format("max deviation {:.3g} cm", worst));
  if (o.ok) o.detail = fmt::format("max deviation {:.3g} cm over 1000 cases", worst);
  return o;
}

Outcome health_formulas() {
  Outcome o;
  const double b = health::bmi(70, 175);
  const double r = health::bmr(70, 175, 25, fusion::Gender::kMale);
  const double f = health::bfp(22.857, 25, fusion::Gender::kMale);
  o.require(std::abs(b - 22.857) <= 1e-3, fmt::format("BMI {}", b));
  o.require(r == 1673.75, fmt::format("BMR {}", r));
  o.require(std::abs(f - 16.978) <= 1e-3, fmt::format("BFP {}", f));
  if (o.ok) o.detail = fmt::format("BMI {:.4f}, BMR {:.2f}, BFP {:.4f}", b, r, f);
  return o;
}

Outcome confusion_reference() {
  Outcome o;
  const auto m = eval::confusion_metrics({8, 2, 2, 18});
  const double acc = 100 * m.accuracy;
  o.require(std::abs(acc - 86.67) <= 0.01, fmt::format("accuracy {:.4f}", acc));
  for (const auto& [name, v] : {std::pair{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}) {
    o.require(v.has_value() && std::abs(100 * *v - 80.0) <= 0.01, std::string(name) + " off");
  }
  if (o.ok) o.detail = fmt::format("accuracy {:.2f}%, precision/recall/f1 {:.2f}%", acc, 100 * *m.precision);
  return o;
}

Outcome fusion_simplex_every_step() {
  Outcome o;
  const auto data = linear_signal::dataset(64, 21);
  fusion::TrainingConfig cfg;
  cfg.epochs = 250;
  cfg.patience = 250;
  int steps = 0;
  double worst = 0.0;
  fusion::fit(data, cfg, {}, [&](int, const fusion::FusionModelParams& p) {
    const auto w = fusion::fusion_weights(p);
    for (const double x : w) o.require(x >= 0.0 && x <= 1.0, fmt::format("weight {} outside [0,1]", x));
    worst = std::max(worst, std::abs(w[0] + w[1] + w[2] - 1.0));
    ++steps;
  });
  o.require(steps == 500, fmt::format("{} steps", steps));
  o.require(worst <= 1e-6, fmt::format("sum deviation {:.3g}", worst));
  if (o.ok) o.detail = fmt::format("{} steps, max |sum - 1| {:.3g}", steps, worst);
  return o;
}

Outcome gradient_check() {
  Outcome o;
  using fusion::Mat;
  using fusion::Vec;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  const fusion::Architecture arch{5, {8, 8, 4}};
  const double h = 1e-5;
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; instances < 50; ++seed) {
    auto p = fusion::init_params<double>(arch, seed);
    for (auto& l : p.layers) l.bias = Vec<double>::NullaryExpr(l.bias.size(), [&] { return 0.1 * g(rng); });
    p.weight_logits = {g(rng), g(rng), g(rng)};
    p.ridge_lambda = 0.01;
    const int n = 6;
    fusion::Batch<double> b;
    b.z_face = Mat<double>::NullaryExpr(arch.embedding_dim, n, [&] { return g(rng); });
    b.z_body = Mat<double>::NullaryExpr(arch.embedding_dim, n, [&] { return g(rng); });
    b.z_cloud = Mat<double>::NullaryExpr(arch.embedding_dim, n, [&] { return g(rng); });
    b.side.resize(3, n);
    for (int i = 0; i < n; ++i) b.side.col(i) << i % 2, 1 - i % 2, 1.5 + 0.1 * g(rng);
    b.targets = Vec<double>::NullaryExpr(n, [&] { return g(rng); });

    // Skip instances with a pre-activation within reach of a relu kink.
    bool near_kink = false;
    {
      const auto w = fusion::fusion_weights(p);
      Mat<double> x(arch.input_dim(), n);
      x << w[0] * b.z_face + w[1] * b.z_body + w[2] * b.z_cloud, b.side;
      for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
        Mat<double> a = p.layers[l].weight * x;
        a.colwise() += p.layers[l].bias;
        near_kink = near_kink || (a.array().abs() < 1e-3).any();
        x = a.cwiseMax(0.0);
      }
    }
    if (near_kink) continue;

    fusion::Gradients<double> grads;
    fusion::loss_and_gradients(b, p, &grads);
    auto probe = [&](double& slot, double analytic) {
      const double saved = slot;
      slot = saved + h;
      const double up = fusion::loss_and_gradients<double>(b, p, nullptr);
      slot = saved - h;
      const double down = fusion::loss_and_gradients<double>(b, p, nullptr);
      slot = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    };
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      for (Eigen::Index i = 0; i < p.layers[l].weight.size(); ++i) probe(p.layers[l].weight.data()[i], grads.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < p.layers[l].bias.size(); ++i) probe(p.layers[l].bias[i], grads.layers[l].bias[i]);
    }
    for (int j = 0; j < fusion::kModalityCount; ++j) probe(p.weight_logits[j], grads.weight_logits[j]);
    ++instances;
  }
  o.require(worst < 1e-4, fmt::format("max relative error {:.3g}", worst));
  if (o.ok) o.detail = fmt::format("{} instances, max relative error {:.3g}", instances, worst);
  return o;
}

Outcome training_oracle() {
  Outcome o;
  const auto data = linear_signal::dataset(200, 11);
  fusion::TrainingConfig cfg;
  cfg.epochs = 500;
  const auto r = fusion::fit(data, cfg);
  const double mae = r.log.epochs.at(r.log.best_epoch - 1).train_mae;
  const auto w = eval::feature_importance(r.params);
  o.require(mae < 1.0, fmt::format("train MAE {:.3f} kg", mae));
  o.require(w[0] > w[1] && w[0] > w[2], fmt::format("weights ({:.3f}, {:.3f}, {:.3f})", w[0], w[1], w[2]));
  if (o.ok) {
    o.detail = fmt::format("train MAE {:.3f} kg at epoch {}, weights ({:.3f}, {:.3f}, {:.3f})", mae, r.log.best_epoch,
                           w[0], w[1], w[2]);
  }
  return o;
}

double chi_square_p_even(double x, int dof) {
  double term = 1.0, sum = 1.0;
  for (int i = 1; i < dof / 2; ++i) {
    term *= (x / 2.0) / i;
    sum += term;
  }
  return std::exp(-x / 2.0) * sum;
}

Outcome sampling_statistics() {
  Outcome o;
  recon::TriangleMesh two;
  two.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {3, 0, 0}, {5, 0, 0}, {3, 3, 0}};
  two.faces = {{0, 1, 2}, {3, 4, 5}};
  const int per_seed = 10000, seeds = 20;
  double summed = 0.0;
  long pooled_small = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto cloud = recon::sample_point_cloud(two, per_seed, static_cast<std::uint64_t>(s));
    long small = 0;
    for (const int f : cloud.face_index) small += f == 0;
    const double e0 = per_seed * 0.25, e1 = per_seed * 0.75;
    summed += (small - e0) * (small - e0) / e0 + (per_seed - small - e1) * (per_seed - small - e1) / e1;
    pooled_small += small;
  }
  const double n = static_cast<double>(per_seed) * seeds;
  const double e0 = n * 0.25, e1 = n * 0.75;
  const double pooled = (pooled_small - e0) * (pooled_small - e0) / e0 + (n - pooled_small - e1) * (n - pooled_small - e1) / e1;
  const double p_pooled = oracle::chi_square_p_df1(pooled);
  const double p_summed = chi_square_p_even(summed, seeds);
  o.require(p_pooled > 0.01, fmt::format("pooled p {:.4f}", p_pooled));
  o.require(p_summed > 0.01, fmt::format("per-seed p {:.4f}", p_summed));

  const auto sphere = recon::make_ellipsoid({0, 0, 0}, {1, 1, 1}, 10, 11);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  int checked = 0, mismatches = 0;
  while (checked < 1000) {
    const Eigen::Vector3d q(u(rng), u(rng), u(rng));
    const double wn = oracle::winding_number(sphere, q);
    if (std::abs(wn - 0.5) < 0.45) continue;
    mismatches += recon::occupancy(sphere, {q}) != (wn > 0.5 ? 1 : 0);
    ++checked;
  }
  o.require(mismatches == 0, fmt::format("{} occupancy mismatches", mismatches));
  if (o.ok) {
    o.detail = fmt::format("p pooled {:.3f}, p per-seed {:.3f}, occupancy 1000/1000 agree", p_pooled, p_summed);
  }
  return o;
}

Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(70.0, 15.0);
  std::uniform_int_distribution<int> len(2, 500);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = len(rng);
    std::vector<double> p(n), y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = g(rng);
      p[i] = y[i] + 0.4 * (g(rng) - 70.0);
    }
    const auto m = eval::regression_metrics(p, y);
    const auto b = oracle::brute_force_metrics(p, y);
    worst = std::max({worst, std::abs(m.mae - b.mae), std::abs(m.rmse - b.rmse), std::abs(m.r2 - b.r2)});
    o.require(m.rmse >= m.mae, "rmse < mae");
    eval::EvalReport report;
    report.n = static_cast<std::size_t>(n);
    report.weight = m;
    try {
      report.validate();
    } catch (const Error& e) {
      o.require(false, e.what());
    }
  }
  o.require(worst <= 1e-12, fmt::format("max deviation {:.3g}", worst));
  if (o.ok) o.detail = fmt::format("1000 vectors, max deviation {:.3g}", worst);
  return o;
}

std::pair<int, std::string> run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"nutrisight"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, code == 0 ? out.str() : err.str()};
}

Outcome end_to_end_determinism() {
  Outcome o;
  const auto config = (testpaths::data_dir() / "config.json").string();
  const auto image = (testpaths::data_dir() / "fixture" / "subject.png").string();
  std::vector<std::string> outputs;
  for (const char* name : {"accept_cli_1", "accept_cli_2"}) {
    const auto dir = testpaths::scratch(name);
    const auto [code, text] = run_cli({"-c", config, "--out-dir", dir.string(), "--log-level", "off", "estimate",
                                       "--image", image, "--age", "25", "--gender", "male"});
    o.require(code == 0, "cli exited " + std::to_string(code) + ": " + text);
    outputs.push_back(text);
    const auto file = read_file_bytes(dir / "estimate.json");
    o.require(std::string(file.begin(), file.end()) == text, "estimate.json differs from stdout");
  }
  o.require(outputs[0] == outputs[1], "two CLI runs differ");

  AppConfig cfg = load_config(config);
  cfg.store_path = testpaths::scratch("accept_service_store");
  auto svc = service::Service::from_config(cfg);
  service::EstimateRequest req;
  req.image = read_file_bytes(image);
  req.age_years = 25.0;
  req.gender = "male";
  const std::string served = svc->handle_estimate(req).dump() + "\n";
  o.require(served == outputs[0], "service response differs from CLI output");
  if (o.ok) o.detail = fmt::format("{} identical bytes from two CLI runs and the service", served.size());
  return o;
}

Outcome lighting_sweep_shape() {
  Outcome o;
  const auto records = synthetic_records::make(200, 50, 100, 9);
  const eval::SyntheticFeatureSource source(embed::ProviderRegistry::with_builtin_synthetics(1.0));
  const eval::ExtractorSelection sel{"synthetic-vggface", "synthetic-xception", "synthetic-pointnet"};
  const auto cells = eval::expand_grid(std::vector<std::string>{sel.face}, std::vector<std::string>{sel.body},
                                       std::vector<std::string>{sel.cloud}, {});
  const auto trained = eval::run_ablation(cells, records, source, fusion::TrainingConfig{}).front();
  const std::vector<double> gammas{0.25, 0.5, 1.0, 1.5, 2.0};
  const auto test = eval::select_split(records, eval::Split::kTest);
  const auto points = eval::lighting_sweep(test, gammas, trained.params, source, sel, trained.report.labels);
  std::string curve;
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    curve += fmt::format("{}{}:{:.2f}", i ? " " : "", points[i].gamma, points[i].report.weight.mae);
    if (points[i].report.weight.mae < points[best].report.weight.mae) best = i;
  }
  o.require(points[best].gamma == 1.0, "minimum at gamma " + fmt::format("{}", points[best].gamma) + " (" + curve + ")");
  if (o.ok) o.detail = "MAE by gamma " + curve;
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<Criterion> criteria{
      {"confidence map matches closed form", 5.0, confidence_map_closed_form},
      {"height calibration round trip", 1.0, height_round_trip},
      {"BMI, BMR and BFP reference values", 0.0, health_formulas},
      {"malnutrition confusion metrics on 8/2/2/18", 0.0, confusion_reference},
      {"fusion weights stay on the simplex every step", 0.0, fusion_simplex_every_step},
      {"analytic gradients match finite differences", 30.0, gradient_check},
      {"training recovers the linear face signal", 120.0, training_oracle},
      {"surface sampling and occupancy statistics", 60.0, sampling_statistics},
      {"regression metrics match brute force", 0.0, metric_oracle},
      {"end-to-end estimate determinism", 0.0, end_to_end_determinism},
      {"lighting sweep minimum at gamma 1.0", 0.0, lighting_sweep_shape},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      outcome.ok = false;
      outcome.detail += fmt::format("; took {:.2f} s, budget {:.0f} s", secs, c.budget_s);
    }
    failures += outcome.ok ? 0 : 1;
    std::cout << fmt::format("{} {} ({:.2f} s): {}", outcome.ok ? "PASS" : "FAIL", c.name, secs, outcome.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures == 0 ? 0 : 1;
}
