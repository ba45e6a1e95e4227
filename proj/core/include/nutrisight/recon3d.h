#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nutrisight/image.h"
#include "nutrisight/mesh.h"
#include "nutrisight/perception.h"

namespace nutrisight::recon {

inline constexpr int kDefaultSampleCount = 2048;

struct Normalization {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  double scale = 1.0;
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  Normalization normalization;  // maps stored points back to source frame
  std::string source;
  std::vector<int> face_index;  // per point, when sampled from a mesh
};

// Orthographic query: projection (x, y) on the image plane, depth z along the
// camera axis.
struct OccupancyQuery {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();

  Eigen::Vector2d projection() const { return position.head<2>(); }
  double depth() const { return position.z(); }
};

// 1 if the point is inside (or within 1e-9 of) the closed surface, else 0.
// Throws kTopology for non-watertight meshes.
int occupancy(const TriangleMesh& mesh, const OccupancyQuery& query);

// Area-weighted face choice plus uniform barycentric placement, seeded.
PointCloud sample_point_cloud(const TriangleMesh& mesh, int n, std::uint64_t seed);

PointCloud normalize_point_cloud(const PointCloud& cloud);
PointCloud denormalize_point_cloud(const PointCloud& cloud);

// Whitespace-delimited "x y z" rows.
std::string format_xyz(const PointCloud& cloud);
PointCloud parse_xyz(const std::string& text);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_xyz(const std::filesystem::path& path);

// Single-image body reconstruction. Output frame: y up, subject facing +z.
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;
  virtual std::string name() const = 0;
  virtual TriangleMesh reconstruct(const RgbImage& image,
                                   const geometry::FrameContext& ctx) const = 0;
};

// Runs the reconstructor and enforces the output contract: cleaned,
// watertight, single component.
TriangleMesh reconstruct_checked(const Reconstructor& reconstructor, const RgbImage& image,
                                 const geometry::FrameContext& ctx = {});

// Ellipsoid whose bounding box matches the non-black silhouette's aspect.
class EllipsoidReconstructor final : public Reconstructor {
 public:
  explicit EllipsoidReconstructor(double units_per_pixel = 0.01, int slices = 24, int stacks = 16)
      : units_per_pixel_(units_per_pixel), slices_(slices), stacks_(stacks) {}
  std::string name() const override { return "synthetic-ellipsoid"; }
  TriangleMesh reconstruct(const RgbImage& image, const geometry::FrameContext& ctx) const override;

 private:
  double units_per_pixel_;
  int slices_;
  int stacks_;
};

// Returns stored meshes (<stem>.obj beside <stem>.png) keyed by image digest.
class FixtureMeshReconstructor final : public Reconstructor {
 public:
  void index_directory(const std::filesystem::path& dir);
  void register_mesh(const std::string& image_digest, TriangleMesh mesh);
  std::string name() const override { return "fixture-mesh"; }
  TriangleMesh reconstruct(const RgbImage& image, const geometry::FrameContext& ctx) const override;

 private:
  std::map<std::string, TriangleMesh> meshes_;
};

}  // namespace nutrisight::recon
