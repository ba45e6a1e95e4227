#include "nutrisight/mesh.h"

#include <Eigen/Geometry>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nutrisight/error.h"

namespace nutrisight::recon {

double TriangleMesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

Eigen::Vector3d TriangleMesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).normalized();
}

Eigen::AlignedBox3d TriangleMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

void validate_indices(const TriangleMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& f : mesh.faces) {
    for (int i : f) {
      if (i < 0 || i >= n) fail(ErrorKind::kTopology, "face references a missing vertex");
    }
  }
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) fail(ErrorKind::kTopology, "mesh has non-finite vertex");
  }
}

std::size_t remove_degenerate_faces(TriangleMesh& mesh, double eps) {
  validate_indices(mesh);
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (mesh.face_area(f) > eps) kept.push_back(mesh.faces[f]);
  }
  const std::size_t removed = mesh.faces.size() - kept.size();
  std::vector<int> remap(mesh.vertices.size(), -1);
  std::vector<Eigen::Vector3d> verts;
  for (auto& f : kept) {
    for (int& i : f) {
      if (remap[i] < 0) {
        remap[i] = static_cast<int>(verts.size());
        verts.push_back(mesh.vertices[i]);
      }
      i = remap[i];
    }
  }
  mesh.faces = std::move(kept);
  mesh.vertices = std::move(verts);
  return removed;
}

bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return false;
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;
    }
  }
  for (const auto& [edge, count] : directed) {
    const auto twin = directed.find({edge.second, edge.first});
    if (twin == directed.end() || twin->second != 1) return false;
  }
  return true;
}

int connected_components(const TriangleMesh& mesh) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      used[f[e]] = true;
      parent[find(f[e])] = find(f[(e + 1) % 3]);
    }
  }
  int roots = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (used[i] && find(static_cast<int>(i)) == static_cast<int>(i)) ++roots;
  }
  return roots;
}

TriangleMesh parse_obj(const std::string& text) {
  TriangleMesh mesh;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail(ErrorKind::kFormat, fmt::format("obj line {}: bad vertex", line_no));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(mesh.vertices.size()) + i);
      }
      if (idx.size() < 3) fail(ErrorKind::kFormat, fmt::format("obj line {}: face needs 3 indices", line_no));
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
      }
    }
  }
  validate_indices(mesh);
  return mesh;
}

std::string format_obj(const TriangleMesh& mesh) {
  std::string out = "# nutrisight mesh\n";
  for (const auto& v : mesh.vertices) out += fmt::format("v {:.9g} {:.9g} {:.9g}\n", v.x(), v.y(), v.z());
  for (const auto& f : mesh.faces) out += fmt::format("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1);
  return out;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kStorage, "cannot open mesh " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto mesh = parse_obj(ss.str());
  mesh.id = path.stem().string();
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kStorage, "cannot write mesh " + path.string());
  out << format_obj(mesh);
}

TriangleMesh make_unit_cube() {
  TriangleMesh m;
  m.id = "unit_cube";
  for (int i = 0; i < 8; ++i) m.vertices.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  // Quads listed counter-clockwise seen from outside.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

namespace {

// Rings of vertices between two poles; ring r has `slices` vertices at
// position(r, s). Faces wind outward for a surface whose rings go from the
// bottom pole upward.
template <typename Pos>
TriangleMesh revolve(int rings, int slices, const Eigen::Vector3d& bottom,
                     const Eigen::Vector3d& top, Pos position) {
  TriangleMesh m;
  m.vertices.push_back(bottom);
  for (int r = 0; r < rings; ++r) {
    for (int s = 0; s < slices; ++s) m.vertices.push_back(position(r, s));
  }
  m.vertices.push_back(top);
  const int top_index = static_cast<int>(m.vertices.size()) - 1;
  const auto ring = [&](int r, int s) { return 1 + r * slices + (s % slices); };
  for (int s = 0; s < slices; ++s) m.faces.push_back({0, ring(0, s + 1), ring(0, s)});
  for (int r = 0; r + 1 < rings; ++r) {
    for (int s = 0; s < slices; ++s) {
      m.faces.push_back({ring(r, s), ring(r, s + 1), ring(r + 1, s + 1)});
      m.faces.push_back({ring(r, s), ring(r + 1, s + 1), ring(r + 1, s)});
    }
  }
  for (int s = 0; s < slices; ++s) m.faces.push_back({top_index, ring(rings - 1, s), ring(rings - 1, s + 1)});
  return m;
}

}  // namespace

TriangleMesh make_ellipsoid(const Eigen::Vector3d& center, const Eigen::Vector3d& semi_axes,
                            int slices, int stacks) {
  if (slices < 3 || stacks < 2) fail(ErrorKind::kParameter, "ellipsoid needs slices>=3, stacks>=2");
  const double pi = std::numbers::pi;
  auto m = revolve(stacks - 1, slices, center - Eigen::Vector3d(0, semi_axes.y(), 0),
                   center + Eigen::Vector3d(0, semi_axes.y(), 0), [&](int r, int s) {
                     const double phi = pi - pi * (r + 1) / stacks;  // from bottom pole
                     const double theta = 2.0 * pi * s / slices;
                     return Eigen::Vector3d(center.x() + semi_axes.x() * std::sin(phi) * std::cos(theta),
                                            center.y() + semi_axes.y() * std::cos(phi),
                                            center.z() - semi_axes.z() * std::sin(phi) * std::sin(theta));
                   });
  m.id = "ellipsoid";
  return m;
}

TriangleMesh make_revolved_body(double height, const std::vector<double>& radii,
                                double depth_ratio, int slices) {
  if (radii.empty() || slices < 3 || !(height > 0.0)) {
    fail(ErrorKind::kParameter, "revolved body needs rings, slices>=3 and positive height");
  }
  const int rings = static_cast<int>(radii.size());
  const double pi = std::numbers::pi;
  auto m = revolve(rings, slices, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, height, 0),
                   [&](int r, int s) {
                     const double y = height * (r + 1) / (rings + 1);
                     const double theta = 2.0 * pi * s / slices;
                     return Eigen::Vector3d(radii[r] * std::cos(theta), y,
                                            -depth_ratio * radii[r] * std::sin(theta));
                   });
  m.id = "revolved_body";
  return m;
}

}  // namespace nutrisight::recon
