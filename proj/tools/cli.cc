#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "nutrisight/config.h"
#include "nutrisight/digest.h"
#include "nutrisight/eval.h"
#include "nutrisight/http_server.h"
#include "nutrisight/image_io.h"
#include "nutrisight/service.h"

namespace nutrisight::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kParameter:
      return 2;
    case ErrorKind::kData:
    case ErrorKind::kIngestion:
    case ErrorKind::kFormat:
    case ErrorKind::kUndefinedMetric:
      return 3;
    case ErrorKind::kTraining:
    case ErrorKind::kNumeric:
      return 4;
    case ErrorKind::kProvider:
    case ErrorKind::kContract:
      return 5;
    default:
      return 1;
  }
}

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "nutrisight-out";
  std::string log_level = "warn";
};

// Collects what a run read and wrote for run-manifest.json.
class RunRecord {
 public:
  RunRecord(std::string subcommand, const Common& common) : subcommand_(std::move(subcommand)), common_(common) {}

  void input(const std::string& role, const fs::path& path) {
    inputs_[role] = {path.string(), sha256_hex_of(read_file_bytes(path))};
  }
  void arg(const std::string& key, Json value) { args_[key] = std::move(value); }
  fs::path output(const std::string& name) {
    outputs_.push_back(name);
    return fs::path(common_.out_dir) / name;
  }

  void write(const AppConfig& config) const {
    Json j;
    j["tool"] = "nutrisight";
    j["pipeline_version"] = std::string(kPipelineVersion);
    j["subcommand"] = subcommand_;
    j["seed"] = config.seed;
    Json args = Json::object();
    for (const auto& [k, v] : args_) args[k] = v;
    j["arguments"] = args;
    j["overrides"] = common_.overrides;
    j["config"] = Json::parse(config_to_json(config));
    Json inputs = Json::object();
    for (const auto& [role, entry] : inputs_) inputs[role] = {{"path", entry.first}, {"sha256", entry.second}};
    j["inputs"] = inputs;
    j["outputs"] = outputs_;
    eval::write_text(fs::path(common_.out_dir) / "run-manifest.json", j.dump(2) + "\n");
  }

 private:
  static std::string sha256_hex_of(const std::vector<std::uint8_t>& bytes) { return to_hex(sha256(bytes)); }

  std::string subcommand_;
  const Common& common_;
  std::map<std::string, std::pair<std::string, std::string>> inputs_;
  std::map<std::string, Json> args_;
  std::vector<std::string> outputs_;
};

AppConfig resolve_config(const Common& c) {
  AppConfig cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  for (const auto& o : c.overrides) apply_override(cfg, o, fs::current_path());
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_gammas(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::kValidation, fmt::format("'{}' is not a number", item));
    }
  }
  if (out.empty()) fail(ErrorKind::kValidation, "gamma list is empty");
  return out;
}

eval::ExtractorSelection selection_of(const AppConfig& cfg) {
  return {cfg.face_provider, cfg.body_provider, cfg.cloud_provider};
}

std::unique_ptr<eval::FeatureSource> make_source(const AppConfig& cfg, const std::string& kind,
                                                 const fs::path& manifest_path) {
  if (kind == "synthetic") {
    return std::make_unique<eval::SyntheticFeatureSource>(
        embed::ProviderRegistry::with_builtin_synthetics(cfg.brightness_sensitivity), gamma_convention(cfg));
  }
  if (kind == "pipeline") {
    return std::make_unique<eval::PipelineFeatureSource>(make_pipeline_config(cfg), make_components(cfg),
                                                         eval::disk_frame_loader(manifest_path.parent_path()),
                                                         gamma_convention(cfg));
  }
  fail(ErrorKind::kValidation, fmt::format("unknown feature source '{}'", kind));
}

fusion::TrainingConfig training_config(const AppConfig& cfg, int epochs, double lr, int batch, int patience,
                                       double lambda, const std::string& mask) {
  fusion::TrainingConfig t;
  t.seed = cfg.seed;
  t.epochs = epochs;
  t.learning_rate = lr;
  t.batch_size = batch;
  t.patience = patience;
  t.ridge_lambda = lambda;
  t.active = eval::parse_feature_mask(mask).mask;
  t.validate();
  return t;
}

struct TrainFlags {
  int epochs = 500;
  double lr = 1e-3;
  int batch = 32;
  int patience = 20;
  double lambda = 1e-3;

  void attach(CLI::App* app) {
    app->add_option("--epochs", epochs, "maximum training epochs");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--batch-size", batch, "minibatch size");
    app->add_option("--patience", patience, "early-stopping patience in epochs");
    app->add_option("--ridge-lambda", lambda, "ridge penalty on the output layer");
  }
};

Json analysis_summary(const FrameAnalysis& a) {
  Json j;
  j["height_cm"] = a.height_cm;
  j["crop_pixel_height"] = a.crop_pixel_height;
  j["provider_digests"] = {{"face", a.digests.face}, {"body", a.digests.body}, {"cloud", a.digests.cloud}};
  return j;
}

std::pair<RgbImage, geometry::FrameContext> load_frame(const fs::path& path,
                                                       std::optional<geometry::SubjectAnnotation>& annotation) {
  RgbImage image = decode_image(read_file_bytes(path));
  geometry::FrameContext ctx;
  ctx.source_digest = image_digest(image);
  const auto ann = geometry::annotation_path_for(path);
  if (fs::exists(ann)) {
    annotation = geometry::read_annotation(ann);
    ctx.annotation = &*annotation;
  }
  return {std::move(image), ctx};
}

std::vector<std::uint8_t> to_pgm_bytes(const BinaryMask& m) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(m.width()) * m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) v[static_cast<std::size_t>(y) * m.width() + x] = m.at(x, y) ? 255 : 0;
  }
  return v;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nutrisight: camera-based height, weight and nutrition estimation", "nutrisight"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON config shared with the service")->check(CLI::ExistingFile);
  app.add_option("--set", common.overrides, "config override key=value (repeatable)");
  app.add_option("--seed", common.seed, "seed overriding the config");
  app.add_option("--out-dir", common.out_dir, "directory for artifacts and run-manifest.json");
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off");

  std::string image, device_id, gender, activity = "sedentary", modality, manifest, params_path, mask = "FF+BF+DF";
  std::string source = "pipeline", gammas = "0.25,0.5,1.0,1.5,2.0", faces, bodies, clouds, masks, host = "127.0.0.1";
  std::optional<double> calibrate_cm;
  std::optional<int> pixels;
  std::optional<double> age;
  std::optional<int> port;
  std::string val_manifest;
  TrainFlags tf;

  auto* preprocess = app.add_subcommand("preprocess", "segment, crop, align the face and locate keypoints");
  preprocess->add_option("--image", image, "input image")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--device-id", device_id, "calibration entry");

  auto* height_cmd = app.add_subcommand("height", "estimate height, or calibrate ppm from a known height");
  height_cmd->add_option("--image", image, "input image")->check(CLI::ExistingFile);
  height_cmd->add_option("--pixels", pixels, "crop height in pixels instead of an image");
  height_cmd->add_option("--device-id", device_id, "calibration entry");
  height_cmd->add_option("--calibrate", calibrate_cm, "known subject height in cm; writes calibration.json");

  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct the body mesh and sample a point cloud");
  reconstruct->add_option("--image", image, "input image")->required()->check(CLI::ExistingFile);

  auto* embed_cmd = app.add_subcommand("embed", "extract the three modality embeddings");
  embed_cmd->add_option("--image", image, "input image")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--modality", modality, "face, body or cloud (default: all)");
  embed_cmd->add_option("--device-id", device_id, "calibration entry");

  auto* train = app.add_subcommand("train", "fit the fusion regressor on a manifest");
  train->add_option("--manifest", manifest, "training manifest (train/val splits)")->required()->check(CLI::ExistingFile);
  train->add_option("--source", source, "feature source: pipeline or synthetic");
  train->add_option("--mask", mask, "feature mask, e.g. FF+BF+DF");
  tf.attach(train);

  auto* estimate = app.add_subcommand("estimate", "estimate height, weight and health metrics for one image");
  estimate->add_option("--image", image, "input image")->required()->check(CLI::ExistingFile);
  estimate->add_option("--age", age, "age in years");
  estimate->add_option("--gender", gender, "male or female");
  estimate->add_option("--device-id", device_id, "calibration entry");
  estimate->add_option("--activity", activity, "sedentary, light, moderate or active");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a parameter file on a manifest split");
  evaluate->add_option("--manifest", manifest, "manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--params", params_path, "parameter file (default: config model_path)");
  evaluate->add_option("--source", source, "feature source: pipeline or synthetic");
  std::string split = "test";
  evaluate->add_option("--split", split, "split to evaluate");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate every extractor/feature-mask combination");
  ablate->add_option("--manifest", manifest, "manifest with train/test splits")->required()->check(CLI::ExistingFile);
  ablate->add_option("--source", source, "feature source: pipeline or synthetic");
  ablate->add_option("--face", faces, "comma-separated face extractors");
  ablate->add_option("--body", bodies, "comma-separated body extractors");
  ablate->add_option("--cloud", clouds, "comma-separated 3D extractors");
  ablate->add_option("--masks", masks, "comma-separated feature masks (e.g. FF,BF,FF+BF+DF)");
  tf.attach(ablate);

  auto* sweep = app.add_subcommand("lighting-sweep", "evaluate a model under gamma-corrected lighting");
  sweep->add_option("--manifest", manifest, "manifest")->required()->check(CLI::ExistingFile);
  sweep->add_option("--params", params_path, "parameter file (default: config model_path)");
  sweep->add_option("--source", source, "feature source: pipeline or synthetic");
  sweep->add_option("--gammas", gammas, "comma-separated gamma values");
  sweep->add_option("--split", split, "split to evaluate");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--port", port, "port (default: NUTRISIGHT_PORT or 8080)");
  serve->add_option("--host", host, "bind address");

  auto* plot = app.add_subcommand("plot-data", "emit (gamma, MAE) and (pred, true) series as CSV");
  plot->add_option("--manifest", manifest, "manifest with train/test splits")->required()->check(CLI::ExistingFile);
  plot->add_option("--source", source, "feature source: pipeline or synthetic");
  plot->add_option("--gammas", gammas, "comma-separated gamma values");
  plot->add_option("--masks", masks, "feature masks for the correlation series");
  tf.attach(plot);

  if (argc <= 1) {
    err << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const auto previous = spdlog::default_logger();
  auto logger = spdlog::stderr_color_mt("nutrisight-cli");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  const auto finish = [&] {
    spdlog::set_default_logger(previous);
    spdlog::drop("nutrisight-cli");
  };
  try {
    const AppConfig cfg = resolve_config(common);
    CLI::App* sub = app.get_subcommands().front();
    RunRecord record(sub->get_name(), common);
    fs::create_directories(common.out_dir);
    if (!common.config_path.empty()) record.input("config", common.config_path);

    const auto model_path = [&]() -> fs::path {
      const fs::path p = params_path.empty() ? cfg.model_path : fs::path(params_path);
      if (p.empty()) fail(ErrorKind::kValidation, "no --params given and the config has no model_path");
      record.input("params", p);
      return p;
    };

    if (sub == preprocess || sub == reconstruct || sub == embed_cmd) {
      record.input("image", image);
      std::optional<geometry::SubjectAnnotation> ann;
      auto [img, ctx] = load_frame(image, ann);
      PipelineConfig pc = make_pipeline_config(cfg);
      pc.keep_intermediates = true;
      const Pipeline pipeline(pc, make_components(cfg));
      const FrameAnalysis a = pipeline.analyze(img, ctx, device_id);
      Json summary = analysis_summary(a);
      if (sub == preprocess) {
        write_png(record.output("body_crop.png"), *a.body_crop);
        write_pgm(record.output("mask.pgm"), a.mask->width(), a.mask->height(), to_pgm_bytes(*a.mask));
        write_png(record.output("face_aligned.png"), *a.face_crop);
        Json lm = Json::array();
        for (const auto& p : a.landmarks->points) lm.push_back({p.x, p.y});
        Json kp = Json::array();
        std::vector<std::uint8_t> heat(static_cast<std::size_t>(img.width()) * img.height(), 0);
        const double sigma = geometry::default_sigma(img.height());
        for (int i = 0; i < geometry::kBodyKeypointCount; ++i) {
          const auto& p = a.keypoints->points[i];
          if (!p) {
            kp.push_back(nullptr);
            continue;
          }
          kp.push_back({p->x, p->y});
          const auto map = geometry::render_confidence_map(*p, img.width(), img.height(), sigma, i);
          for (std::size_t k = 0; k < heat.size(); ++k) {
            heat[k] = std::max<std::uint8_t>(heat[k], static_cast<std::uint8_t>(std::lround(255.0 * map.values[k])));
          }
        }
        write_pgm(record.output("confidence_maps.pgm"), img.width(), img.height(), heat);
        summary["landmarks"] = lm;
        summary["keypoints"] = kp;
        eval::write_text(record.output("preprocess.json"), summary.dump(2) + "\n");
      } else if (sub == reconstruct) {
        recon::write_obj(record.output("mesh.obj"), *a.mesh);
        recon::write_xyz(record.output("cloud.xyz"), *a.cloud_points);
        summary["vertices"] = a.mesh->vertices.size();
        summary["faces"] = a.mesh->faces.size();
        summary["points"] = a.cloud_points->points.size();
      } else {
        const auto& reg = pipeline.components().providers;
        const auto emit = [&](const std::string& m, const embed::EmbeddingVector& v, const std::string& provider) {
          if (!modality.empty() && modality != m) return;
          embed::write_embedding(record.output("embedding_" + m + ".txt"), v, reg.get(provider)->descriptor());
        };
        if (!modality.empty()) embed::modality_from_string(modality);
        emit("face", a.face, cfg.face_provider);
        emit("body", a.body, cfg.body_provider);
        emit("cloud", a.cloud, cfg.cloud_provider);
      }
      out << summary.dump(2) << "\n";
    } else if (sub == height_cmd) {
      int px = 0;
      if (pixels) {
        px = *pixels;
      } else if (!image.empty()) {
        record.input("image", image);
        std::optional<geometry::SubjectAnnotation> ann;
        auto [img, ctx] = load_frame(image, ann);
        const auto comps = make_components(cfg);
        const BinaryMask mask = comps.perception->segment(img, ctx);
        px = bounding_box(mask).height();
        if (px <= 0) throw Error(ErrorKind::kNoSubject, "no subject in image", "preprocess");
      } else {
        fail(ErrorKind::kValidation, "height needs --image or --pixels");
      }
      Json j;
      j["crop_pixel_height"] = px;
      if (calibrate_cm) {
        auto cal = height::calibrate_ppm_from_pixels(px, *calibrate_cm);
        cal.device_id = device_id.empty() ? "default" : device_id;
        height::CalibrationRegistry reg =
            cfg.calibration_registry_path.empty() ? height::CalibrationRegistry{}
                                                  : height::CalibrationRegistry::load(cfg.calibration_registry_path);
        reg.register_calibration(cal);
        reg.save(record.output("calibration.json"));
        j["device_id"] = cal.device_id;
        j["ppm"] = cal.ppm;
      } else {
        const auto comps = make_components(cfg);
        const auto cal = comps.calibrations.resolve(device_id);
        j["device_id"] = cal ? cal->device_id : device_id;
        j["ppm"] = cal ? cal->ppm : 0.0;
        j["height_cm"] = height::estimate_height_from_pixels(px, cal);
      }
      record.arg("device_id", device_id);
      out << j.dump(2) << "\n";
    } else if (sub == train) {
      record.input("manifest", manifest);
      const auto records = eval::load_manifest(manifest);
      const auto src = make_source(cfg, source, manifest);
      const auto sel = selection_of(cfg);
      src->check(sel);
      const auto tr = eval::select_split(records, eval::Split::kTrain);
      const auto va = eval::select_split(records, eval::Split::kVal);
      if (tr.empty()) fail(ErrorKind::kData, "manifest has no train records");
      const auto train_samples = eval::make_samples(tr, src->features(tr, sel, 1.0, true));
      const auto val_samples = eval::make_samples(va, src->features(va, sel, 1.0, true));
      const auto tc = training_config(cfg, tf.epochs, tf.lr, tf.batch, tf.patience, tf.lambda, mask);
      const auto result = fusion::fit(train_samples, tc, val_samples);
      fusion::write_params(record.output("params.bin"), result.params);
      eval::write_text(record.output("training_log.jsonl"), result.log.to_jsonl());
      const auto w = eval::feature_importance(result.params);
      Json j;
      j["epochs_run"] = result.log.epochs.size();
      j["best_epoch"] = result.log.best_epoch;
      j["early_stopped"] = result.log.early_stopped;
      j["train_mae"] = result.log.epochs.at(result.log.best_epoch - 1).train_mae;
      j["w_F"] = w[0];
      j["w_B"] = w[1];
      j["w_R"] = w[2];
      j["params_digest"] = fusion::params_digest(result.params);
      record.arg("source", source);
      record.arg("mask", mask);
      record.arg("epochs", tf.epochs);
      out << j.dump(2) << "\n";
    } else if (sub == estimate) {
      record.input("image", image);
      const fs::path mp = model_path();
      const Pipeline pipeline(make_pipeline_config(cfg), make_components(cfg));
      service::EstimateRequest req;
      req.image = read_file_bytes(image);
      req.age_years = age;
      if (!gender.empty()) req.gender = gender;
      req.device_id = device_id;
      req.activity_level = activity;
      const auto params = fusion::read_params(mp);
      const Json response = service::estimate_response(pipeline, params, req);
      const std::string text = response.dump();
      eval::write_text(record.output("estimate.json"), text + "\n");
      out << text << "\n";
    } else if (sub == evaluate || sub == sweep) {
      record.input("manifest", manifest);
      const auto params = fusion::read_params(model_path());
      const auto records = eval::select_split(eval::load_manifest(manifest), eval::split_from_string(split));
      if (records.empty()) fail(ErrorKind::kData, fmt::format("manifest has no '{}' records", split));
      const auto src = make_source(cfg, source, manifest);
      const auto sel = selection_of(cfg);
      const eval::ReportLabels labels{sel.face, sel.body, sel.cloud, "FF+BF+DF", 1.0};
      record.arg("split", split);
      record.arg("source", source);
      if (sub == evaluate) {
        const auto preds = eval::predict_records(records, src->features(records, sel, 1.0, false), params);
        const auto report = eval::make_report(labels, preds, eval::feature_importance(params));
        const std::vector<eval::EvalReport> reports{report};
        const std::string csv = eval::reports_csv(reports);
        eval::write_text(record.output("report.csv"), csv);
        eval::write_text(record.output("report.jsonl"), eval::reports_jsonl(reports));
        eval::write_text(record.output("predictions.csv"), eval::predictions_csv(preds, "FF+BF+DF"));
        std::vector<eval::EvalReport> by_device;
        for (auto [device, r] : eval::group_by_device(labels, preds, eval::feature_importance(params))) {
          r.labels.feature_mask = "device:" + device;
          by_device.push_back(r);
        }
        eval::write_text(record.output("by_device.csv"), eval::reports_csv(by_device));
        out << csv;
      } else {
        const auto g = parse_gammas(gammas);
        record.arg("gammas", g);
        const auto points = eval::lighting_sweep(records, g, params, *src, sel, labels);
        std::vector<eval::EvalReport> reports;
        for (const auto& p : points) reports.push_back(p.report);
        const std::string csv = eval::sweep_csv(points);
        eval::write_text(record.output("sweep.csv"), csv);
        eval::write_text(record.output("sweep.jsonl"), eval::reports_jsonl(reports));
        out << csv;
      }
    } else if (sub == ablate || sub == plot) {
      record.input("manifest", manifest);
      const auto records = eval::load_manifest(manifest);
      const auto src = make_source(cfg, source, manifest);
      const auto pick = [](const std::string& list, const std::string& fallback) {
        auto v = split_list(list);
        if (v.empty()) v.push_back(fallback);
        return v;
      };
      const auto f = pick(faces, cfg.face_provider);
      const auto b = pick(bodies, cfg.body_provider);
      const auto c = pick(clouds, cfg.cloud_provider);
      std::vector<eval::FeatureMask> mask_list;
      for (const auto& m : split_list(masks)) mask_list.push_back(eval::parse_feature_mask(m));
      if (sub == plot && mask_list.empty()) mask_list = eval::all_feature_masks();
      const auto cells = eval::expand_grid(f, b, c, mask_list);
      const auto tc = training_config(cfg, tf.epochs, tf.lr, tf.batch, tf.patience, tf.lambda, "FF+BF+DF");
      record.arg("source", source);
      record.arg("masks", masks);
      const auto results = eval::run_ablation(cells, records, *src, tc);
      std::vector<eval::EvalReport> reports;
      std::string pairs;
      for (const auto& r : results) {
        reports.push_back(r.report);
        const std::string series = fmt::format("{}|{}|{}|{}", r.report.labels.face_fe, r.report.labels.body_fe,
                                               r.report.labels.cloud_fe, r.report.labels.feature_mask);
        const std::string chunk = eval::predictions_csv(r.predictions, series);
        pairs += pairs.empty() ? chunk : chunk.substr(chunk.find('\n') + 1);
      }
      if (sub == ablate) {
        const std::string csv = eval::reports_csv(reports);
        eval::write_text(record.output("ablation.csv"), csv);
        eval::write_text(record.output("ablation.jsonl"), eval::reports_jsonl(reports));
        eval::write_text(record.output("predictions.csv"), pairs);
        out << csv;
      } else {
        eval::write_text(record.output("pred_true.csv"), pairs);
        // Gamma series on the all-features model (or the last cell when absent).
        std::size_t pick_idx = results.size() - 1;
        for (std::size_t i = 0; i < results.size(); ++i) {
          if (results[i].report.labels.feature_mask == "FF+BF+DF") pick_idx = i;
        }
        const auto& best = results[pick_idx];
        const auto test = eval::select_split(records, eval::Split::kTest);
        const eval::ExtractorSelection sel{best.report.labels.face_fe, best.report.labels.body_fe,
                                           best.report.labels.cloud_fe};
        const auto g = parse_gammas(gammas);
        record.arg("gammas", g);
        const auto points = eval::lighting_sweep(test, g, best.params, *src, sel, best.report.labels);
        eval::write_text(record.output("gamma_mae.csv"), eval::sweep_csv(points));
        out << fmt::format("wrote {} and {}\n", (fs::path(common.out_dir) / "pred_true.csv").string(),
                           (fs::path(common.out_dir) / "gamma_mae.csv").string());
      }
    } else if (sub == serve) {
      int p = 8080;
      if (port) {
        p = *port;
      } else if (const char* env = std::getenv("NUTRISIGHT_PORT")) {
        try {
          p = std::stoi(env);
        } catch (const std::exception&) {
          fail(ErrorKind::kValidation, fmt::format("NUTRISIGHT_PORT '{}' is not a port number", env));
        }
      }
      service::HttpOptions opts;
      opts.host = host;
      opts.port = p;
      if (const char* token = std::getenv("NUTRISIGHT_ADMIN_TOKEN")) opts.admin_token = token;
      record.write(cfg);
      auto svc = service::Service::from_config(cfg);
      service::HttpServer server(*svc, opts);
      const int bound = server.bind();
      out << fmt::format("listening on {}:{}", host, bound) << std::endl;
      server.serve();
    }
    if (sub != serve) record.write(cfg);
    finish();
    return 0;
  } catch (const Error& e) {
    err << "error";
    if (!e.stage().empty()) err << " [" << e.stage() << "]";
    err << " (" << to_string(e.kind()) << "): " << e.what() << "\n";
    finish();
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    finish();
    return 1;
  }
}

}  // namespace nutrisight::cli
