#include "nutrisight/annotations.h"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "nutrisight/error.h"
#include "nutrisight/image_io.h"

namespace nutrisight::geometry {
namespace {

[[noreturn]] void bad_line(int line_no, std::string_view why) {
  fail(ErrorKind::kFormat, fmt::format("annotation line {}: {}", line_no, why));
}

}  // namespace

SubjectAnnotation parse_annotation(std::string_view text) {
  SubjectAnnotation out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int line_no = 0;
  std::vector<std::optional<PixelCoord>> face(kFaceLandmarkCount);
  std::vector<double> face_conf(kFaceLandmarkCount, 0.0);
  BodyKeypoints body;
  SubjectSignal signal;
  bool saw_face = false, saw_body = false, saw_subject = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head.front() == '[') {
      if (head == "[face]") {
        saw_face = true;
      } else if (head == "[body]") {
        saw_body = true;
      } else if (head == "[subject]") {
        saw_subject = true;
      } else {
        bad_line(line_no, "unknown section " + head);
      }
      section = head;
      continue;
    }
    if (section == "[face]" || section == "[body]") {
      int index = 0;
      double x = 0, y = 0, c = 0;
      std::istringstream row(line);
      if (!(row >> index >> x >> y >> c)) bad_line(line_no, "expected 'index x y confidence'");
      if (!(c >= 0.0 && c <= 1.0)) bad_line(line_no, "confidence outside [0,1]");
      if (section == "[face]") {
        if (index < 0 || index >= kFaceLandmarkCount) bad_line(line_no, "face index out of range");
        face[index] = PixelCoord{x, y};
        face_conf[index] = c;
      } else {
        if (index < 0 || index >= kBodyKeypointCount) bad_line(line_no, "body index out of range");
        body.points[index] = PixelCoord{x, y};
        body.confidence[index] = c;
      }
    } else if (section == "[subject]") {
      double value = 0;
      if (!(ls >> value)) bad_line(line_no, "expected 'key value'");
      if (head == "weight_kg") {
        signal.weight_kg = value;
      } else if (head == "height_cm") {
        signal.height_cm = value;
      } else if (head == "adiposity") {
        signal.adiposity = value;
      } else {
        bad_line(line_no, "unknown subject key " + head);
      }
    } else {
      bad_line(line_no, "record outside of a section");
    }
  }
  if (saw_face) {
    FaceLandmarks lm;
    double conf_sum = 0.0;
    for (int i = 0; i < kFaceLandmarkCount; ++i) {
      if (!face[i]) fail(ErrorKind::kFormat, fmt::format("face landmark {} missing", i));
      lm.points.push_back(*face[i]);
      conf_sum += face_conf[i];
    }
    lm.detection_confidence = conf_sum / kFaceLandmarkCount;
    out.face = std::move(lm);
  }
  if (saw_body) out.body = body;
  if (saw_subject) out.signal = signal;
  return out;
}

std::string format_annotation(const SubjectAnnotation& annotation) {
  std::string out = "# nutrisight-annotation 1\n";
  if (annotation.face) {
    out += "[face]\n";
    for (std::size_t i = 0; i < annotation.face->points.size(); ++i) {
      const auto& p = annotation.face->points[i];
      out += fmt::format("{} {:.6f} {:.6f} {:.4f}\n", i, p.x, p.y,
                         annotation.face->detection_confidence);
    }
  }
  if (annotation.body) {
    out += "[body]\n";
    for (int i = 0; i < kBodyKeypointCount; ++i) {
      if (!annotation.body->points[i]) continue;
      const auto& p = *annotation.body->points[i];
      out += fmt::format("{} {:.6f} {:.6f} {:.4f}\n", i, p.x, p.y, annotation.body->confidence[i]);
    }
  }
  if (annotation.signal) {
    out += "[subject]\n";
    out += fmt::format("weight_kg {:.6f}\nheight_cm {:.6f}\nadiposity {:.6f}\n",
                       annotation.signal->weight_kg, annotation.signal->height_cm,
                       annotation.signal->adiposity);
  }
  return out;
}

SubjectAnnotation read_annotation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kStorage, "cannot open annotation " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotation(ss.str());
}

std::filesystem::path annotation_path_for(const std::filesystem::path& image_path) {
  auto p = image_path;
  p.replace_extension(".ann");
  return p;
}

void FixturePerceptionProvider::index_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorKind::kConfiguration, "fixture directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if ((ext == ".png" || ext == ".ppm") &&
        std::filesystem::exists(annotation_path_for(entry.path()))) {
      images.push_back(entry.path());
    }
  }
  std::sort(images.begin(), images.end());
  for (const auto& p : images) register_image(p);
}

void FixturePerceptionProvider::register_image(const std::filesystem::path& image_path) {
  const auto image = read_image(image_path);
  register_annotation(image_digest(image), read_annotation(annotation_path_for(image_path)));
}

void FixturePerceptionProvider::register_annotation(const std::string& image_digest,
                                                    SubjectAnnotation annotation) {
  by_digest_[image_digest] = std::move(annotation);
}

const SubjectAnnotation* FixturePerceptionProvider::lookup(const RgbImage& image) const {
  const auto it = by_digest_.find(image_digest(image));
  return it == by_digest_.end() ? nullptr : &it->second;
}

const SubjectAnnotation* FixturePerceptionProvider::resolve(const RgbImage& image,
                                                            const FrameContext& ctx) const {
  if (ctx.annotation != nullptr) return ctx.annotation;
  if (!ctx.source_digest.empty()) {
    const auto it = by_digest_.find(ctx.source_digest);
    return it == by_digest_.end() ? nullptr : &it->second;
  }
  return lookup(image);
}

BinaryMask FixturePerceptionProvider::segment(const RgbImage& image, const FrameContext&) const {
  BinaryMask mask(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb px = image.at(x, y);
      mask.set(x, y, px[0] != 0 || px[1] != 0 || px[2] != 0);
    }
  }
  return mask;
}

std::optional<FaceLandmarks> FixturePerceptionProvider::detect_face(const RgbImage& image,
                                                                    const FrameContext& ctx) const {
  const auto* ann = resolve(image, ctx);
  if (ann == nullptr || !ann->face) return std::nullopt;
  return ann->face;
}

std::optional<BodyKeypoints> FixturePerceptionProvider::detect_body(const RgbImage& image,
                                                                    const FrameContext& ctx) const {
  const auto* ann = resolve(image, ctx);
  if (ann == nullptr || !ann->body) return std::nullopt;
  return ann->body;
}

}  // namespace nutrisight::geometry
