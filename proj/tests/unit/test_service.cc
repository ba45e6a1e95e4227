#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "nutrisight/config.h"
#include "nutrisight/http_server.h"
#include "nutrisight/image_io.h"
#include "nutrisight/service.h"
#include "nutrisight/synthetic_scene.h"
#include "test_paths.h"

// After Eigen: resolv.h defines a _res macro that collides with Eigen internals.
#include "httplib.h"

using namespace nutrisight;
using namespace nutrisight::service;

namespace {

AppConfig fixture_config(const std::string& store_name) {
  AppConfig cfg = load_config(testpaths::data_dir() / "config.json");
  const auto dir = testpaths::scratch(store_name);
  std::filesystem::remove_all(dir);
  cfg.store_path = dir;
  return cfg;
}

EstimateRequest fixture_request() {
  EstimateRequest req;
  req.image = read_file_bytes(testpaths::data_dir() / "fixture" / "subject.png");
  req.age_years = 25.0;
  req.gender = "male";
  return req;
}

Json golden_response() {
  std::ifstream in(testpaths::data_dir() / "golden_response.json");
  return Json::parse(in);
}

template <typename Fn>
Error capture(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return Error(ErrorKind::kData, "none");
}

}  // namespace

TEST(PipelineGolden, IntermediatesMatchFixtures) {
  const AppConfig cfg = fixture_config("pipeline_golden");
  PipelineConfig pc = make_pipeline_config(cfg);
  pc.keep_intermediates = true;
  const Pipeline pipeline(pc, make_components(cfg));
  const RgbImage image = read_image(testpaths::data_dir() / "fixture" / "subject.png");
  geometry::FrameContext ctx;
  ctx.source_digest = image_digest(image);
  const auto a = pipeline.analyze(image, ctx, "");
  EXPECT_TRUE(*a.face_crop == read_image(testpaths::data_dir() / "golden_face_aligned.png"));
  EXPECT_EQ(a.face.values, embed::read_embedding(testpaths::data_dir() / "golden_embedding_face.txt").values);
  EXPECT_EQ(a.body.values, embed::read_embedding(testpaths::data_dir() / "golden_embedding_body.txt").values);
  EXPECT_EQ(a.cloud.values, embed::read_embedding(testpaths::data_dir() / "golden_embedding_cloud.txt").values);
  EXPECT_NEAR(a.height_cm, 175.0, 0.5);
}

TEST(Service, EstimateMatchesGolden) {
  auto svc = Service::from_config(fixture_config("svc_golden"));
  const Json got = svc->handle_estimate(fixture_request());
  EXPECT_EQ(got.dump(), golden_response().dump());
  const auto& h = got["health"];
  EXPECT_GT(h["bmi"].get<double>(), 0.0);
  EXPECT_GT(h["bmr"].get<double>(), 0.0);
}

TEST(Service, StatelessResponseMatchesStoredOne) {
  const AppConfig cfg = fixture_config("svc_stateless");
  const Pipeline pipeline(make_pipeline_config(cfg), make_components(cfg));
  const auto params = load_model(cfg);
  EXPECT_EQ(estimate_response(pipeline, params, fixture_request()).dump(), golden_response().dump());
}

TEST(Service, RepeatedRequestsGetDistinctIds) {
  auto svc = Service::from_config(fixture_config("svc_repeat"));
  const Json a = svc->handle_estimate(fixture_request());
  const Json b = svc->handle_estimate(fixture_request());
  EXPECT_NE(a["record_id"], b["record_id"]);
  Json a2 = a, b2 = b;
  a2.erase("record_id");
  b2.erase("record_id");
  EXPECT_EQ(a2, b2);
}

TEST(Service, MissingGenderListsField) {
  auto svc = Service::from_config(fixture_config("svc_validation"));
  auto req = fixture_request();
  req.gender.reset();
  req.age_years.reset();
  const Error e = capture([&] { svc->handle_estimate(req); });
  EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  EXPECT_NE(std::string(e.what()).find("gender"), std::string::npos);
  EXPECT_NE(std::string(e.what()).find("age_years"), std::string::npos);
  EXPECT_EQ(http_status(e.kind()), 400);
}

TEST(Service, BlankImageFailsInPreprocessing) {
  auto svc = Service::from_config(fixture_config("svc_blank"));
  auto req = fixture_request();
  req.image = encode_png(RgbImage(64, 128));
  const Error e = capture([&] { svc->handle_estimate(req); });
  EXPECT_EQ(e.kind(), ErrorKind::kNoSubject);
  EXPECT_EQ(e.stage(), "preprocess");
  EXPECT_EQ(http_status(e.kind()), 422);
  const Json body = error_body(e);
  EXPECT_EQ(body["stage"], "preprocess");
  EXPECT_EQ(body["code"], "no_subject");
}

TEST(Service, UndecodableImageIs400) {
  auto svc = Service::from_config(fixture_config("svc_decode"));
  auto req = fixture_request();
  req.image = {'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'a', 'g', 'e'};
  const Error e = capture([&] { svc->handle_estimate(req); });
  EXPECT_EQ(http_status(e.kind()), 400);
  EXPECT_EQ(e.stage(), "decode");
}

TEST(Service, UnannotatedFrameHasNoFace) {
  auto svc = Service::from_config(fixture_config("svc_unannotated"));
  auto req = fixture_request();
  req.image = encode_png(synth::render_subject({}).image);
  const Error e = capture([&] { svc->handle_estimate(req); });
  EXPECT_EQ(e.kind(), ErrorKind::kNoSubject);
  EXPECT_EQ(e.stage(), "face");
  EXPECT_EQ(http_status(e.kind()), 422);
}

TEST(Service, ProviderFailureIs502) {
  const AppConfig cfg = fixture_config("svc_provider");
  auto components = make_components(cfg);
  components.reconstructor = std::make_shared<const recon::FixtureMeshReconstructor>();
  Service svc(std::make_shared<const Pipeline>(make_pipeline_config(cfg), components),
              std::make_shared<const fusion::FusionModelParams>(load_model(cfg)),
              std::make_shared<JsonlRecordStore>(cfg.store_path));
  const Error e = capture([&] { svc.handle_estimate(fixture_request()); });
  EXPECT_EQ(e.kind(), ErrorKind::kProvider);
  EXPECT_EQ(e.stage(), "reconstruct");
  EXPECT_EQ(http_status(e.kind()), 502);
}

TEST(Service, PlansAndRecords) {
  auto svc = Service::from_config(fixture_config("svc_plans"));
  const Json est = svc->handle_estimate(fixture_request());
  const std::string id = est["record_id"];
  EXPECT_EQ(svc->get_record(id)["response"], est);
  EXPECT_EQ(svc->get_record(id)["plans"].size(), 0u);

  const Json plan = svc->handle_plan(id, "balanced", 52, "light");
  EXPECT_EQ(plan["record_id"], id);
  const auto& traj = plan["plan"]["weekly_weight_kg"];
  ASSERT_EQ(traj.size(), 53u);
  EXPECT_EQ(traj.front().get<double>(), est["weight_kg"].get<double>());
  EXPECT_EQ(traj.back().get<double>(), est["health"]["ideal_weight_kg"].get<double>());

  const Json rec = svc->get_record(id);
  EXPECT_EQ(rec["plans"].size(), 1u);
  EXPECT_EQ(rec, svc->get_record(id));

  EXPECT_EQ(capture([&] { svc->get_record("0000000000000000"); }).kind(), ErrorKind::kNotFound);
  EXPECT_EQ(capture([&] { svc->handle_plan("0000000000000000", "balanced", 4, "sedentary"); }).kind(),
            ErrorKind::kNotFound);
  EXPECT_EQ(capture([&] { svc->handle_plan(id, "balanced", 0, "sedentary"); }).kind(), ErrorKind::kValidation);
  EXPECT_EQ(capture([&] { svc->handle_plan(id, "keto-ish", 4, "sedentary"); }).kind(), ErrorKind::kValidation);
}

TEST(Service, InfeasiblePlanCarriesMinimumWeeks) {
  auto svc = Service::from_config(fixture_config("svc_infeasible"));
  const Json est = svc->handle_estimate(fixture_request());
  std::optional<Json> body;
  try {
    svc->handle_plan(est["record_id"], "balanced", 1, "sedentary");
  } catch (const health::InfeasiblePlan& e) {
    EXPECT_EQ(e.stage(), "plan");
    EXPECT_EQ(http_status(e.kind()), 422);
    body = error_body(e);
  }
  ASSERT_TRUE(body.has_value());
  ASSERT_TRUE(body->contains("minimum_weeks"));
  EXPECT_NO_THROW(svc->handle_plan(est["record_id"], "balanced", (*body)["minimum_weeks"].get<int>(), "sedentary"));
}

TEST(Service, PlanAtIdealWeightIsFlat) {
  const auto dir = testpaths::scratch("svc_flat");
  std::filesystem::remove_all(dir);
  auto store = std::make_shared<JsonlRecordStore>(dir);
  const auto report = health::make_report(67.375, 175.0, 25.0, fusion::Gender::kMale);
  StoredRecord rec;
  rec.record_id = "ideal-record";
  rec.subject = Json{{"age_years", 25.0}};
  rec.response = Json{{"record_id", rec.record_id},
                      {"weight_kg", report.ideal_weight_kg},
                      {"health",
                       {{"bmi", report.bmi},
                        {"bmr", report.bmr},
                        {"active_bmr", report.active_bmr},
                        {"bfp", report.bfp},
                        {"ideal_weight_kg", report.ideal_weight_kg},
                        {"classification", "healthy"},
                        {"activity_level", "sedentary"},
                        {"obesity_flag", false}}}};
  store->append_record("base", rec);
  const AppConfig cfg = fixture_config("svc_flat_cfg");
  Service svc(std::make_shared<const Pipeline>(make_pipeline_config(cfg), make_components(cfg)),
              std::make_shared<const fusion::FusionModelParams>(load_model(cfg)), store);
  const Json plan = svc.handle_plan("ideal-record", "mediterranean", 4, "sedentary");
  for (const auto& w : plan["plan"]["weekly_weight_kg"]) EXPECT_EQ(w.get<double>(), report.ideal_weight_kg);
  EXPECT_NEAR(plan["plan"]["daily_calorie_target"].get<double>(), report.bmr * 1.2, 1e-9);
}

TEST(Store, SurvivesReopenAndIgnoresTornLine) {
  const auto dir = testpaths::scratch("store_reopen");
  std::filesystem::remove_all(dir);
  StoredRecord rec{"abc", Json{{"k", 1}}, Json{{"weight_kg", 70.0}}, {}};
  {
    JsonlRecordStore store(dir);
    store.append_record("b", rec);
    store.append_plan("abc", Json{{"weeks", 3}});
  }
  {
    std::ofstream out(dir / "records.jsonl", std::ios::app);
    out << R"({"type":"record","record_id":"torn")";
  }
  JsonlRecordStore reopened(dir);
  EXPECT_TRUE(reopened.contains("abc"));
  EXPECT_FALSE(reopened.contains("torn"));
  EXPECT_EQ(reopened.count_for_base("b"), 1u);
  EXPECT_EQ(reopened.get("abc").plans.size(), 1u);
  EXPECT_EQ(capture([&] { reopened.append_record("b", rec); }).kind(), ErrorKind::kStorage);
}

TEST(Store, DeletedFileIsStorageError) {
  auto cfg = fixture_config("svc_deleted");
  auto svc = Service::from_config(cfg);
  const Json est = svc->handle_estimate(fixture_request());
  std::filesystem::remove(cfg.store_path / "records.jsonl");
  const Error e = capture([&] { svc->get_record(est["record_id"]); });
  EXPECT_EQ(e.kind(), ErrorKind::kStorage);
  EXPECT_EQ(http_status(e.kind()), 500);
}

TEST(Store, ImagesAreContentAddressed) {
  auto cfg = fixture_config("svc_images");
  auto svc = Service::from_config(cfg);
  const Json est = svc->handle_estimate(fixture_request());
  const std::string digest = est["image_digest"];
  EXPECT_TRUE(std::filesystem::exists(cfg.store_path / "images" / (digest + ".img")));
  EXPECT_EQ(read_file_bytes(cfg.store_path / "images" / (digest + ".img")), fixture_request().image);
}

TEST(Service, ConcurrentEstimatesPersistCompleteRecords) {
  auto cfg = fixture_config("svc_concurrent");
  auto svc = Service::from_config(cfg);
  constexpr int kThreads = 4, kPerThread = 3;
  std::vector<std::thread> threads;
  std::mutex ids_mutex;
  std::set<std::string> ids;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < kPerThread; ++i) {
        const std::string id = svc->handle_estimate(fixture_request())["record_id"];
        std::lock_guard lock(ids_mutex);
        ids.insert(id);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ids.size(), static_cast<std::size_t>(kThreads * kPerThread));
  std::ifstream in(cfg.store_path / "records.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_NO_THROW((void)Json::parse(line));
    ++lines;
  }
  EXPECT_EQ(lines, kThreads * kPerThread);
  JsonlRecordStore reopened(cfg.store_path);
  for (const auto& id : ids) EXPECT_TRUE(reopened.contains(id));
}

TEST(Service, ReloadSwapsModel) {
  auto svc = Service::from_config(fixture_config("svc_reload"));
  const auto before = svc->model();
  auto constant = fusion::zero_params<float>({});
  constant.layers.back().bias(0) = 64.0f;
  auto other = std::make_shared<const fusion::FusionModelParams>(constant);
  svc->reload_model(other);
  EXPECT_EQ(svc->model(), other);
  EXPECT_EQ(svc->handle_estimate(fixture_request())["weight_kg"].get<double>(), 64.0);
  svc->reload_from_config();
  EXPECT_TRUE(fusion::bitwise_equal(*svc->model(), *before));
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    service_ = Service::from_config(fixture_config("http"));
    HttpOptions opts;
    opts.port = 0;
    opts.admin_token = "secret";
    server_ = std::make_unique<HttpServer>(*service_, opts);
    port_ = server_->bind();
    thread_ = std::thread([this] { server_->serve(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  httplib::Result post_estimate(const std::string& gender) {
    const auto bytes = fixture_request().image;
    httplib::MultipartFormDataItems items{
        {"image", std::string(bytes.begin(), bytes.end()), "subject.png", "image/png"},
        {"age_years", "25", "", ""},
    };
    if (!gender.empty()) items.push_back({"gender", gender, "", ""});
    return client_->Post("/api/v1/estimate", items);
  }

  std::unique_ptr<Service> service_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpTest, Health) {
  const auto res = client_->Get("/api/v1/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["status"], "ok");
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(HttpTest, EstimatePlanAndFetch) {
  const auto res = post_estimate("male");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const Json est = Json::parse(res->body);
  EXPECT_EQ(est.dump(), golden_response().dump());
  const std::string id = est["record_id"];

  const auto plan = client_->Post("/api/v1/records/" + id + "/plan", R"({"diet_type":"high_protein","weeks":40})",
                                  "application/json");
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->status, 200) << plan->body;

  const auto rec = client_->Get("/api/v1/records/" + id);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->status, 200);
  EXPECT_EQ(Json::parse(rec->body)["plans"].size(), 1u);
}

TEST_F(HttpTest, ErrorStatuses) {
  const auto missing = post_estimate("");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 400);
  const Json body = Json::parse(missing->body);
  EXPECT_EQ(body["code"], "validation");
  EXPECT_EQ(body["stage"], "request");

  const auto not_found = client_->Get("/api/v1/records/ffffffffffffffff");
  ASSERT_TRUE(not_found);
  EXPECT_EQ(not_found->status, 404);

  const auto bad_json = client_->Post("/api/v1/records/ffffffffffffffff/plan", "{", "application/json");
  ASSERT_TRUE(bad_json);
  EXPECT_EQ(bad_json->status, 400);

  const auto options = client_->Options("/api/v1/estimate");
  ASSERT_TRUE(options);
  EXPECT_EQ(options->status, 204);
}

TEST_F(HttpTest, AdminReloadNeedsToken) {
  const auto denied = client_->Post("/api/v1/admin/reload", "", "application/json");
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 403);
  httplib::Headers headers{{"X-Admin-Token", "secret"}};
  const auto ok = client_->Post("/api/v1/admin/reload", headers, "", "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200) << ok->body;
}
