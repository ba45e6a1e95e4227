#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "nutrisight/error.h"
#include "nutrisight/image_io.h"
#include "nutrisight/recon3d.h"
#include "nutrisight/synthetic_scene.h"
#include "oracles.h"
#include "test_paths.h"

using namespace nutrisight;
using namespace nutrisight::recon;

namespace {

TriangleMesh two_faces_one_to_three() {
  TriangleMesh m;
  // Triangle areas 1 and 3 in the z=0 plane.
  m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {3, 0, 0}, {5, 0, 0}, {3, 3, 0}};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  return m;
}

// Upper tail of chi-square with an even number of degrees of freedom.
double chi_square_p_even(double x, int dof) {
  double term = 1.0, sum = 1.0;
  for (int i = 1; i < dof / 2; ++i) {
    term *= (x / 2.0) / i;
    sum += term;
  }
  return std::exp(-x / 2.0) * sum;
}

}  // namespace

TEST(Mesh, PrimitivesAreWatertightAndOutward) {
  const auto cube = make_unit_cube();
  EXPECT_TRUE(is_watertight(cube));
  EXPECT_NEAR(oracle::signed_volume(cube), 1.0, 1e-12);
  const auto sphere = make_ellipsoid({0, 0, 0}, {1, 1, 1}, 10, 11);
  EXPECT_EQ(sphere.faces.size(), 200u);
  EXPECT_TRUE(is_watertight(sphere));
  EXPECT_GT(oracle::signed_volume(sphere), 0.0);
  EXPECT_EQ(connected_components(sphere), 1);
}

TEST(Mesh, RevolvedBodyIsClosedAndOutward) {
  const auto scene = synth::render_subject({});
  EXPECT_TRUE(is_watertight(scene.body_mesh));
  EXPECT_EQ(connected_components(scene.body_mesh), 1);
  EXPECT_GT(oracle::signed_volume(scene.body_mesh), 0.0);
  const auto box = scene.body_mesh.bounds();
  EXPECT_NEAR(box.max().y() - box.min().y(), 1.70, 1e-9);
}

TEST(Mesh, ObjRoundTrip) {
  const auto cube = make_unit_cube();
  const auto parsed = parse_obj(format_obj(cube));
  ASSERT_EQ(parsed.vertices.size(), cube.vertices.size());
  EXPECT_EQ(parsed.faces, cube.faces);
  for (std::size_t i = 0; i < cube.vertices.size(); ++i) EXPECT_EQ(parsed.vertices[i], cube.vertices[i]);
}

TEST(Mesh, BadIndicesAreTopologyErrors) {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 3}};
  try {
    validate_indices(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTopology);
  }
}

TEST(Occupancy, UnitCubeInsideOutside) {
  const auto cube = make_unit_cube();
  EXPECT_EQ(occupancy(cube, {{0.5, 0.5, 0.5}}), 1);
  EXPECT_EQ(occupancy(cube, {{2.0, 0.0, 0.0}}), 0);
  EXPECT_EQ(occupancy(cube, {{0.5, 0.5, 1.0}}), 1);  // on the surface
}

TEST(Occupancy, QueryProjectionAndDepth) {
  const OccupancyQuery q{{1.0, 2.0, 3.0}};
  EXPECT_EQ(q.projection(), Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(q.depth(), 3.0);
}

TEST(Occupancy, AgreesWithWindingNumberOnSphere) {
  const auto sphere = make_ellipsoid({0, 0, 0}, {1, 1, 1}, 10, 11);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  int checked = 0;
  while (checked < 1000) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const double w = oracle::winding_number(sphere, p);
    if (std::abs(w - 0.5) < 0.45) continue;  // skip points on the surface
    EXPECT_EQ(occupancy(sphere, {p}), w > 0.5 ? 1 : 0) << p.transpose();
    ++checked;
  }
}

TEST(Occupancy, AgreesWithWindingNumberOnBodyMesh) {
  const auto mesh = synth::render_subject({}).body_mesh;
  const auto box = mesh.bounds();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const Eigen::Vector3d p = box.min() + (box.max() - box.min()).cwiseProduct(Eigen::Vector3d(u(rng), u(rng), u(rng)));
    const double w = oracle::winding_number(mesh, p);
    if (std::abs(w - 0.5) < 0.45) continue;
    EXPECT_EQ(occupancy(mesh, {p}), w > 0.5 ? 1 : 0);
  }
}

TEST(Occupancy, OpenMeshIsRejected) {
  auto cube = make_unit_cube();
  cube.faces.pop_back();
  try {
    occupancy(cube, {{0.5, 0.5, 0.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTopology);
  }
}

TEST(Sampling, SingleTrianglePointsAreInside) {
  TriangleMesh tri;
  tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  tri.faces = {{0, 1, 2}};
  const auto cloud = sample_point_cloud(tri, 100, 1);
  ASSERT_EQ(cloud.points.size(), 100u);
  for (const auto& p : cloud.points) {
    EXPECT_GE(p.x(), 0.0);
    EXPECT_GE(p.y(), 0.0);
    EXPECT_LE(p.x() + p.y(), 1.0 + 1e-12);
    EXPECT_EQ(p.z(), 0.0);
  }
}

TEST(Sampling, PointsLieOnTheirFacePlane) {
  const auto mesh = make_ellipsoid({0.1, 0.2, 0.3}, {1.0, 2.0, 0.5}, 12, 9);
  const auto cloud = sample_point_cloud(mesh, 2000, 4);
  ASSERT_EQ(cloud.face_index.size(), cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& f = mesh.faces[cloud.face_index[i]];
    const Eigen::Vector3d n = mesh.face_normal(cloud.face_index[i]);
    EXPECT_LT(std::abs(n.dot(cloud.points[i] - mesh.vertices[f[0]])), 1e-9);
  }
}

TEST(Sampling, DeterministicForSeed) {
  const auto mesh = make_unit_cube();
  const auto a = sample_point_cloud(mesh, 500, 9);
  const auto b = sample_point_cloud(mesh, 500, 9);
  const auto c = sample_point_cloud(mesh, 500, 10);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, c.points);
}

TEST(Sampling, AreaWeightedCountsPassChiSquare) {
  const auto mesh = two_faces_one_to_three();
  double stat_sum = 0.0;
  long pooled_small = 0, pooled_total = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto cloud = sample_point_cloud(mesh, 10000, static_cast<std::uint64_t>(seed));
    long small = 0;
    for (const int f : cloud.face_index) small += f == 0 ? 1 : 0;
    const double e0 = 2500.0, e1 = 7500.0;
    const double s = (small - e0) * (small - e0) / e0 + ((10000 - small) - e1) * ((10000 - small) - e1) / e1;
    stat_sum += s;
    pooled_small += small;
    pooled_total += 10000;
  }
  EXPECT_GT(chi_square_p_even(stat_sum, 20), 0.01);
  const double e0 = pooled_total * 0.25, e1 = pooled_total * 0.75;
  const double pooled = (pooled_small - e0) * (pooled_small - e0) / e0 +
                        ((pooled_total - pooled_small) - e1) * ((pooled_total - pooled_small) - e1) / e1;
  EXPECT_GT(oracle::chi_square_p_df1(pooled), 0.01);
}

TEST(Sampling, EmptyMeshIsTopologyError) {
  TriangleMesh empty;
  try {
    sample_point_cloud(empty, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTopology);
  }
}

TEST(Normalize, TwoPointExample) {
  PointCloud c;
  c.points = {{0, 0, 0}, {2, 0, 0}};
  const auto n = normalize_point_cloud(c);
  EXPECT_EQ(n.points[0], Eigen::Vector3d(-1, 0, 0));
  EXPECT_EQ(n.points[1], Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(n.normalization.centroid, Eigen::Vector3d(1, 0, 0));
  EXPECT_DOUBLE_EQ(n.normalization.scale, 1.0);
}

TEST(Normalize, InvariantsRoundTripAndIdempotence) {
  const auto mesh = make_ellipsoid({3, -2, 1}, {0.4, 1.7, 0.2}, 16, 12);
  const auto raw = sample_point_cloud(mesh, 2048, 2);
  const auto n = normalize_point_cloud(raw);
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  double max_norm = 0.0;
  for (const auto& p : n.points) {
    centroid += p;
    max_norm = std::max(max_norm, p.norm());
  }
  centroid /= static_cast<double>(n.points.size());
  EXPECT_LT(centroid.norm(), 1e-6);
  EXPECT_NEAR(max_norm, 1.0, 1e-6);
  const auto back = denormalize_point_cloud(n);
  for (std::size_t i = 0; i < raw.points.size(); ++i) EXPECT_LT((back.points[i] - raw.points[i]).norm(), 1e-9);
  const auto twice = normalize_point_cloud(n);
  for (std::size_t i = 0; i < n.points.size(); ++i) EXPECT_LT((twice.points[i] - n.points[i]).norm(), 1e-9);
  const auto back2 = denormalize_point_cloud(twice);
  for (std::size_t i = 0; i < raw.points.size(); ++i) EXPECT_LT((back2.points[i] - raw.points[i]).norm(), 1e-9);
}

TEST(Normalize, CoincidentPointsAreDegenerate) {
  PointCloud c;
  c.points = {{1, 1, 1}, {1, 1, 1}};
  try {
    normalize_point_cloud(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(Normalize, RotationEquivariance) {
  const auto mesh = make_ellipsoid({0.5, 1.0, -0.2}, {0.3, 0.9, 0.2}, 14, 10);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  auto rotated = mesh;
  for (auto& v : rotated.vertices) v = r * v;
  const auto a = normalize_point_cloud(sample_point_cloud(mesh, 1000, 6));
  const auto b = normalize_point_cloud(sample_point_cloud(rotated, 1000, 6));
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    double best = 1e9;
    for (const auto& q : b.points) best = std::min(best, (r * a.points[i] - q).norm());
    EXPECT_LT(best, 1e-6);
  }
}

TEST(Normalize, XyzRoundTrip) {
  const auto cloud = sample_point_cloud(make_unit_cube(), 50, 3);
  const auto parsed = parse_xyz(format_xyz(cloud));
  EXPECT_EQ(parsed.points, cloud.points);
}

TEST(Reconstruct, EllipsoidAspectMatchesMask) {
  RgbImage img(60, 200);
  for (int y = 20; y < 180; ++y) {
    for (int x = 10; x < 50; ++x) img.set(x, y, Rgb{100, 100, 100});
  }
  const EllipsoidReconstructor r;
  const auto mesh = reconstruct_checked(r, img);
  const auto box = mesh.bounds();
  const double aspect = (box.max().y() - box.min().y()) / (box.max().x() - box.min().x());
  EXPECT_NEAR(aspect / (160.0 / 40.0), 1.0, 0.05);
}

TEST(Reconstruct, BlankImageIsNoSubject) {
  const EllipsoidReconstructor r;
  try {
    reconstruct_checked(r, RgbImage(10, 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoSubject);
  }
}

TEST(Reconstruct, FixtureProviderReturnsStoredMesh) {
  FixtureMeshReconstructor r;
  r.index_directory(testpaths::data_dir() / "fixture");
  const auto image = read_image(testpaths::data_dir() / "fixture" / "subject.png");
  const auto mesh = reconstruct_checked(r, image);
  const auto stored = read_obj(testpaths::data_dir() / "fixture" / "subject.obj");
  EXPECT_EQ(mesh.faces.size(), stored.faces.size());
  EXPECT_EQ(mesh.vertices.size(), stored.vertices.size());
  EXPECT_NEAR(oracle::signed_volume(mesh), oracle::signed_volume(stored), 1e-12);
  try {
    reconstruct_checked(r, RgbImage(5, 5, Rgb{1, 2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvider);
  }
}

namespace {

class OpenMeshReconstructor final : public Reconstructor {
 public:
  std::string name() const override { return "open"; }
  TriangleMesh reconstruct(const RgbImage&, const geometry::FrameContext&) const override {
    auto m = make_unit_cube();
    m.faces.pop_back();
    return m;
  }
};

}  // namespace

TEST(Reconstruct, NonWatertightAdapterIsRejected) {
  try {
    reconstruct_checked(OpenMeshReconstructor{}, RgbImage(5, 5, Rgb{1, 1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTopology);
  }
}
