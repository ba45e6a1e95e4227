#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "nutrisight/error.h"
#include "nutrisight/eval.h"

namespace nutrisight::eval {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kHeldout: return "heldout";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  if (s == "heldout") return Split::kHeldout;
  fail(ErrorKind::kIngestion, fmt::format("unknown split '{}'", s));
}

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys{"schema_version", "record_id",   "image_path",     "subject_id",
                                       "gender",         "age_years",   "true_height_cm", "true_weight_kg",
                                       "split",          "device_tag",  "pose_tag"};

SubjectRecord parse_record(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (kKnownKeys.count(key) == 0) throw std::invalid_argument("unknown field '" + key + "'");
  }
  const auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw std::invalid_argument(fmt::format("missing field '{}'", key));
    return j.at(key);
  };
  const auto text = [&](const char* key, bool required) -> std::string {
    if (!required && !j.contains(key)) return {};
    const auto& v = need(key);
    if (!v.is_string()) throw std::invalid_argument(fmt::format("field '{}' must be a string", key));
    return v.get<std::string>();
  };
  const auto positive = [&](const char* key) {
    const auto& v = need(key);
    if (!v.is_number()) throw std::invalid_argument(fmt::format("field '{}' must be a number", key));
    const double d = v.get<double>();
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument(fmt::format("field '{}' must be positive", key));
    return d;
  };

  const auto& version = need("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kManifestSchemaVersion) {
    throw std::invalid_argument(fmt::format("schema_version must be {}", kManifestSchemaVersion));
  }
  SubjectRecord r;
  r.record_id = text("record_id", true);
  if (r.record_id.empty()) throw std::invalid_argument("record_id is empty");
  r.image_path = text("image_path", true);
  r.subject_id = text("subject_id", true);
  r.gender = fusion::gender_from_string(text("gender", true));
  r.age_years = positive("age_years");
  if (j.contains("true_height_cm") && !j.at("true_height_cm").is_null()) r.true_height_cm = positive("true_height_cm");
  r.true_weight_kg = positive("true_weight_kg");
  r.split = split_from_string(text("split", true));
  r.device_tag = text("device_tag", false);
  r.pose_tag = text("pose_tag", false);
  return r;
}

}  // namespace

std::vector<SubjectRecord> parse_manifest(std::istream& in, const std::string& source) {
  std::vector<SubjectRecord> records;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SubjectRecord r;
    try {
      r = parse_record(json::parse(line));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kIngestion, fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
    if (!seen.insert(r.record_id).second) {
      throw Error(ErrorKind::kIngestion,
                  fmt::format("{}:{}: duplicate record_id '{}'", source, line_no, r.record_id));
    }
    records.push_back(std::move(r));
  }
  const auto counts = split_counts(records);
  std::string summary;
  for (const auto& [split, n] : counts) summary += fmt::format(" {}={}", to_string(split), n);
  spdlog::info("manifest {}: {} records{}", source, records.size(), summary);
  return records;
}

std::vector<SubjectRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIngestion, "cannot open manifest " + path.string());
  return parse_manifest(in, path.string());
}

std::string format_manifest_line(const SubjectRecord& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["record_id"] = r.record_id;
  j["image_path"] = r.image_path;
  j["subject_id"] = r.subject_id;
  j["gender"] = std::string(fusion::to_string(r.gender));
  j["age_years"] = r.age_years;
  if (r.true_height_cm) j["true_height_cm"] = *r.true_height_cm;
  j["true_weight_kg"] = r.true_weight_kg;
  j["split"] = std::string(to_string(r.split));
  j["device_tag"] = r.device_tag;
  j["pose_tag"] = r.pose_tag;
  return j.dump();
}

void write_manifest(const std::filesystem::path& path, std::span<const SubjectRecord> records) {
  std::string text;
  for (const auto& r : records) text += format_manifest_line(r) + "\n";
  write_text(path, text);
}

std::map<Split, int> split_counts(std::span<const SubjectRecord> records) {
  std::map<Split, int> counts;
  for (const auto& r : records) ++counts[r.split];
  return counts;
}

std::vector<SubjectRecord> select_split(std::span<const SubjectRecord> records, Split split) {
  std::vector<SubjectRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

}  // namespace nutrisight::eval
