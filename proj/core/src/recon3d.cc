#include "nutrisight/recon3d.h"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "nutrisight/digest.h"
#include "nutrisight/error.h"
#include "nutrisight/image_io.h"

namespace nutrisight::recon {
namespace {

constexpr double kSurfaceTolerance = 1e-9;

double point_triangle_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  // Closest-point classification by Voronoi region (Ericson, RTCD 5.1.5).
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

// Möller-Trumbore; counts hits with t > 0.
bool ray_hits(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Eigen::Vector3d& a,
              const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d e1 = b - a, e2 = c - a;
  const Eigen::Vector3d h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-300) return false;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = origin - a;
  const double u = inv * s.dot(h);
  if (u < 0.0 || u > 1.0) return false;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = inv * dir.dot(q);
  if (v < 0.0 || u + v > 1.0) return false;
  return inv * e2.dot(q) > 0.0;
}

}  // namespace

int occupancy(const TriangleMesh& mesh, const OccupancyQuery& query) {
  validate_indices(mesh);
  if (!is_watertight(mesh)) fail(ErrorKind::kTopology, "occupancy needs a watertight mesh");
  const Eigen::Vector3d& p = query.position;
  if (!p.allFinite()) fail(ErrorKind::kParameter, "occupancy query is not finite");
  for (const auto& f : mesh.faces) {
    if (point_triangle_distance(p, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) <=
        kSurfaceTolerance) {
      return 1;
    }
  }
  // Majority over three skew rays guards against grazing edge/vertex hits.
  static const Eigen::Vector3d kDirs[3] = {
      Eigen::Vector3d(0.5773502691896258, 0.6123724356957945, 0.5400617248673217).normalized(),
      Eigen::Vector3d(-0.3141592653589793, 0.8660254037844386, -0.3826834323650898).normalized(),
      Eigen::Vector3d(0.7071067811865476, -0.2718281828459045, -0.6532814824381883).normalized()};
  int inside_votes = 0;
  for (const auto& dir : kDirs) {
    int hits = 0;
    for (const auto& f : mesh.faces) {
      hits += ray_hits(p, dir, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) ? 1 : 0;
    }
    inside_votes += hits % 2;
  }
  return inside_votes >= 2 ? 1 : 0;
}

PointCloud sample_point_cloud(const TriangleMesh& mesh, int n, std::uint64_t seed) {
  if (n < 1) fail(ErrorKind::kParameter, "sample count must be at least 1");
  if (mesh.faces.empty()) fail(ErrorKind::kTopology, "cannot sample an empty mesh");
  validate_indices(mesh);
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) fail(ErrorKind::kTopology, "mesh has zero surface area");

  PointCloud cloud;
  cloud.source = mesh.id;
  cloud.points.reserve(n);
  cloud.face_index.reserve(n);
  SplitMix rng(seed);
  for (int i = 0; i < n; ++i) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto face = static_cast<std::size_t>(it - cumulative.begin());
    const double s = std::sqrt(rng.uniform());
    const double r = rng.uniform();
    const auto& t = mesh.faces[face];
    const Eigen::Vector3d p = (1.0 - s) * mesh.vertices[t[0]] + s * (1.0 - r) * mesh.vertices[t[1]] +
                              s * r * mesh.vertices[t[2]];
    cloud.points.push_back(p);
    cloud.face_index.push_back(static_cast<int>(face));
  }
  return cloud;
}

PointCloud normalize_point_cloud(const PointCloud& cloud) {
  if (cloud.points.empty()) fail(ErrorKind::kParameter, "point cloud is empty");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(cloud.points.size());
  double max_norm = 0.0;
  for (const auto& p : cloud.points) max_norm = std::max(max_norm, (p - centroid).norm());
  if (!(max_norm > 0.0)) fail(ErrorKind::kDegenerate, "all points coincide");

  PointCloud out = cloud;
  for (auto& p : out.points) p = (p - centroid) / max_norm;
  // Compose with any previous normalisation so denormalize recovers the source.
  out.normalization.centroid = cloud.normalization.centroid + cloud.normalization.scale * centroid;
  out.normalization.scale = cloud.normalization.scale * max_norm;
  return out;
}

PointCloud denormalize_point_cloud(const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = p * cloud.normalization.scale + cloud.normalization.centroid;
  out.normalization = {};
  return out;
}

std::string format_xyz(const PointCloud& cloud) {
  std::string out;
  out.reserve(cloud.points.size() * 40);
  for (const auto& p : cloud.points) out += fmt::format("{:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());
  return out;
}

PointCloud parse_xyz(const std::string& text) {
  PointCloud cloud;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x)) continue;
    if (!(ls >> y >> z)) fail(ErrorKind::kFormat, fmt::format("xyz line {}: expected 3 values", line_no));
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kStorage, "cannot write " + path.string());
  out << format_xyz(cloud);
}

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kStorage, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cloud = parse_xyz(ss.str());
  cloud.source = path.stem().string();
  return cloud;
}

TriangleMesh reconstruct_checked(const Reconstructor& reconstructor, const RgbImage& image,
                                 const geometry::FrameContext& ctx) {
  TriangleMesh mesh = reconstructor.reconstruct(image, ctx);
  remove_degenerate_faces(mesh);
  if (mesh.faces.empty()) fail(ErrorKind::kTopology, reconstructor.name() + " returned an empty mesh");
  if (!is_watertight(mesh)) fail(ErrorKind::kTopology, reconstructor.name() + " mesh is not watertight");
  if (connected_components(mesh) != 1) {
    fail(ErrorKind::kTopology, reconstructor.name() + " mesh has multiple components");
  }
  return mesh;
}

TriangleMesh EllipsoidReconstructor::reconstruct(const RgbImage& image,
                                                 const geometry::FrameContext&) const {
  BinaryMask mask(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb px = image.at(x, y);
      mask.set(x, y, px[0] != 0 || px[1] != 0 || px[2] != 0);
    }
  }
  const PixelBox box = bounding_box(mask);
  if (box.empty()) fail(ErrorKind::kNoSubject, "no subject pixels to reconstruct");
  const double half_w = 0.5 * box.width() * units_per_pixel_;
  const double half_h = 0.5 * box.height() * units_per_pixel_;
  auto mesh = make_ellipsoid(Eigen::Vector3d(0.0, half_h, 0.0),
                             Eigen::Vector3d(half_w, half_h, 0.5 * half_w), slices_, stacks_);
  mesh.id = "ellipsoid-" + image_digest(image).substr(0, 12);
  return mesh;
}

void FixtureMeshReconstructor::index_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorKind::kConfiguration, "fixture directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto obj = entry.path();
    obj.replace_extension(".obj");
    if (entry.path().extension() == ".png" && std::filesystem::exists(obj)) {
      images.push_back(entry.path());
    }
  }
  std::sort(images.begin(), images.end());
  for (const auto& p : images) {
    auto obj = p;
    obj.replace_extension(".obj");
    register_mesh(image_digest(read_image(p)), read_obj(obj));
  }
}

void FixtureMeshReconstructor::register_mesh(const std::string& image_digest, TriangleMesh mesh) {
  meshes_[image_digest] = std::move(mesh);
}

TriangleMesh FixtureMeshReconstructor::reconstruct(const RgbImage& image,
                                                   const geometry::FrameContext& ctx) const {
  const auto it = meshes_.find(ctx.source_digest.empty() ? image_digest(image) : ctx.source_digest);
  if (it == meshes_.end()) fail(ErrorKind::kProvider, "no fixture mesh for this image");
  return it->second;
}

}  // namespace nutrisight::recon
