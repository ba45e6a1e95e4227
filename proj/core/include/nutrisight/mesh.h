#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace nutrisight::recon {

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string id;

  double face_area(std::size_t f) const;
  Eigen::Vector3d face_normal(std::size_t f) const;  // unit length
  Eigen::AlignedBox3d bounds() const;
};

// Throws kTopology on out-of-range indices.
void validate_indices(const TriangleMesh& mesh);

// Drops faces with area <= eps and unreferenced vertices. Returns removed face count.
std::size_t remove_degenerate_faces(TriangleMesh& mesh, double eps = 1e-15);

// Every directed edge has exactly one opposite twin: closed, oriented 2-manifold.
bool is_watertight(const TriangleMesh& mesh);
int connected_components(const TriangleMesh& mesh);

// ASCII OBJ subset: "v x y z" and "f a b c" (1-based, "a/t/n" tokens accepted).
TriangleMesh parse_obj(const std::string& text);
std::string format_obj(const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

// Axis-aligned unit cube [0,1]^3, outward-facing triangles.
TriangleMesh make_unit_cube();
// Ellipsoid with the given semi-axes; 2*slices*(stacks-1) faces.
TriangleMesh make_ellipsoid(const Eigen::Vector3d& center, const Eigen::Vector3d& semi_axes,
                            int slices, int stacks);
// Closed surface of revolution about the y axis. `radii[i]` is the x radius of
// ring i between the bottom (y=0) and top (y=height) poles; z radius is
// depth_ratio * x radius.
TriangleMesh make_revolved_body(double height, const std::vector<double>& radii,
                                double depth_ratio, int slices);

}  // namespace nutrisight::recon
