// Regenerates the committed test fixtures under tests/data.

#include <filesystem>
#include <iostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "nutrisight/config.h"
#include "nutrisight/eval.h"
#include "nutrisight/image_io.h"
#include "nutrisight/service.h"
#include "nutrisight/synthetic_scene.h"

namespace fs = std::filesystem;
using namespace nutrisight;

namespace {

constexpr int kTrain = 48;
constexpr int kVal = 16;
constexpr int kTest = 24;

void write_config(const fs::path& dir) {
  nlohmann::ordered_json j;
  j["fixture_dir"] = "fixture";
  j["model_path"] = "golden_params.bin";
  j["calibration_registry_path"] = "calibration.json";
  j["reconstructor"] = "ellipsoid";
  j["store_path"] = "store";
  j["seed"] = 7;
  eval::write_text(dir / "config.json", j.dump(2) + "\n");
}

std::vector<eval::SubjectRecord> write_dataset(const fs::path& dir) {
  std::vector<eval::SubjectRecord> records;
  const int total = kTrain + kVal + kTest;
  for (int i = 0; i < total; ++i) {
    const auto spec = synth::random_scene(1000 + i);
    const auto subject = synth::render_subject(spec);
    const std::string stem = fmt::format("s{:03d}", i);
    synth::write_subject(dir / "dataset", stem, subject, false);
    eval::SubjectRecord r;
    r.record_id = fmt::format("rec-{:03d}", i);
    r.image_path = "dataset/" + stem + ".png";
    r.subject_id = fmt::format("subj-{:03d}", i);
    r.gender = spec.gender;
    r.age_years = spec.age_years;
    r.true_height_cm = spec.height_cm;
    r.true_weight_kg = spec.weight_kg;
    r.split = i < kTrain ? eval::Split::kTrain : i < kTrain + kVal ? eval::Split::kVal : eval::Split::kTest;
    r.device_tag = i % 2 == 0 ? "phone-a" : "phone-b";
    r.pose_tag = "frontal";
    records.push_back(r);
  }
  eval::write_manifest(dir / "manifest.jsonl", records);
  std::vector<eval::SubjectRecord> small;
  for (int i = 0; i < 4; ++i) small.push_back(records[i]);
  for (int i = 0; i < 2; ++i) small.push_back(records[kTrain + kVal + i]);
  eval::write_manifest(dir / "manifest_small.jsonl", small);
  return records;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate nutrisight test fixtures", "nutrisight-fixtures"};
  std::string out_dir = "tests/data";
  int epochs = 150;
  app.add_option("--out-dir", out_dir, "fixture directory");
  app.add_option("--epochs", epochs, "training epochs for the golden parameters");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  try {
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    synth::SceneSpec spec;
    spec.height_cm = 175.0;
    spec.weight_kg = 70.0;
    spec.gender = fusion::Gender::kMale;
    spec.age_years = 25.0;
    synth::write_subject(dir / "fixture", "subject", synth::render_subject(spec));

    height::CalibrationRegistry calibrations;
    calibrations.register_calibration(height::default_calibration());
    for (const char* device : {"phone-a", "phone-b"}) {
      auto cal = height::default_calibration();
      cal.device_id = device;
      calibrations.register_calibration(cal);
    }
    calibrations.save(dir / "calibration.json");
    write_config(dir);

    const auto records = write_dataset(dir);
    const AppConfig cfg = load_config(dir / "config.json");
    eval::PipelineFeatureSource source(make_pipeline_config(cfg), make_components(cfg), eval::disk_frame_loader(dir));
    const eval::ExtractorSelection sel{cfg.face_provider, cfg.body_provider, cfg.cloud_provider};
    const auto train = eval::select_split(records, eval::Split::kTrain);
    const auto val = eval::select_split(records, eval::Split::kVal);
    fusion::TrainingConfig tc;
    tc.seed = cfg.seed;
    tc.epochs = epochs;
    const auto fitted = fusion::fit(eval::make_samples(train, source.features(train, sel, 1.0, true)), tc,
                                    eval::make_samples(val, source.features(val, sel, 1.0, true)));
    fusion::write_params(dir / "golden_params.bin", fitted.params);

    const Pipeline pipeline(make_pipeline_config(cfg), make_components(cfg));
    service::EstimateRequest req;
    req.image = read_file_bytes(dir / "fixture" / "subject.png");
    req.age_years = 25.0;
    req.gender = "male";
    const auto response = service::estimate_response(pipeline, fitted.params, req);
    eval::write_text(dir / "golden_response.json", response.dump() + "\n");

    PipelineConfig keep = make_pipeline_config(cfg);
    keep.keep_intermediates = true;
    const Pipeline tracing(keep, make_components(cfg));
    const RgbImage image = read_image(dir / "fixture" / "subject.png");
    geometry::FrameContext ctx;
    ctx.source_digest = image_digest(image);
    const auto a = tracing.analyze(image, ctx, "");
    write_png(dir / "golden_face_aligned.png", *a.face_crop);
    const auto& reg = tracing.components().providers;
    embed::write_embedding(dir / "golden_embedding_face.txt", a.face, reg.get(cfg.face_provider)->descriptor());
    embed::write_embedding(dir / "golden_embedding_body.txt", a.body, reg.get(cfg.body_provider)->descriptor());
    embed::write_embedding(dir / "golden_embedding_cloud.txt", a.cloud, reg.get(cfg.cloud_provider)->descriptor());

    std::cout << fmt::format("fixtures written to {}; golden weight {:.3f} kg, best epoch {}\n", dir.string(),
                             response["weight_kg"].get<double>(), fitted.log.best_epoch);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
