#include <functional>
#include <optional>

#include <gtest/gtest.h>

#include "nutrisight/config.h"
#include "nutrisight/error.h"
#include "test_paths.h"

using namespace nutrisight;

namespace {

std::optional<ErrorKind> kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(Config, DefaultsWhenKeysAbsent) {
  const auto c = parse_config("{}", "/base");
  EXPECT_EQ(c.face_provider, "synthetic-vggface");
  EXPECT_EQ(c.point_count, 2048);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.brightness_sensitivity, 0.0);
  EXPECT_EQ(gamma_convention(c), geometry::GammaConvention::kInverseExponent);
}

TEST(Config, RelativePathsResolveAgainstBase) {
  const auto c = parse_config(R"({"model_path": "m.bin", "store_path": "/abs/store"})", "/base/dir");
  EXPECT_EQ(c.model_path, std::filesystem::path("/base/dir/m.bin"));
  EXPECT_EQ(c.store_path, std::filesystem::path("/abs/store"));
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_EQ(kind_of([] { parse_config(R"({"modle_path": "x"})", "."); }), ErrorKind::kConfiguration);
}

TEST(Config, BadValuesRejected) {
  EXPECT_EQ(kind_of([] { parse_config("[1]", "."); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_config("{", "."); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_config(R"({"seed": "seven"})", "."); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_config(R"({"point_count": 0})", "."); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_config(R"({"reconstructor": "nerf"})", "."); }), ErrorKind::kConfiguration);
  EXPECT_EQ(kind_of([] { parse_config(R"({"brightness_sensitivity": -1})", "."); }), ErrorKind::kConfiguration);
}

TEST(Config, OverridesApply) {
  auto c = parse_config("{}", "/base");
  apply_override(c, "seed=11", "/base");
  apply_override(c, "gamma_convention=direct", "/base");
  apply_override(c, "model_path=p.bin", "/other");
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(gamma_convention(c), geometry::GammaConvention::kDirectExponent);
  EXPECT_EQ(c.model_path, std::filesystem::path("/other/p.bin"));
}

TEST(Config, BadOverrides) {
  auto c = parse_config("{}", ".");
  EXPECT_EQ(kind_of([&] { apply_override(c, "seed", "."); }), ErrorKind::kValidation);
  EXPECT_EQ(kind_of([&] { apply_override(c, "seed=abc", "."); }), ErrorKind::kValidation);
  EXPECT_EQ(kind_of([&] { apply_override(c, "colour=red", "."); }), ErrorKind::kConfiguration);
}

TEST(Config, JsonRoundTrip) {
  const auto c = load_config(testpaths::data_dir() / "config.json");
  const auto again = parse_config(config_to_json(c), "/unused");
  EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, MissingFile) {
  EXPECT_EQ(kind_of([] { load_config(testpaths::scratch("no_config") / "absent.json"); }),
            ErrorKind::kConfiguration);
}
