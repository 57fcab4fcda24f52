#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "oracles/eigen_oracle.hpp"
#include "wastegrasp/cloud_processing.hpp"
#include "wastegrasp/error.hpp"
#include "wastegrasp/ply_io.hpp"
#include "wastegrasp/spatial_index.hpp"
#include "wastegrasp/symmetric_eigen3.hpp"

using namespace wastegrasp;
using namespace wastegrasp::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

PointCloud random_cloud(std::size_t n, Rng& rng, double extent = 1.0) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.points.push_back({uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent)});
  return c;
}

std::vector<Neighbor> brute_knn(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& q, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({i, (pts[i] - q).squaredNorm()});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.squared_distance != b.squared_distance ? a.squared_distance < b.squared_distance : a.index < b.index;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST_CASE("kd-tree queries match a linear scan") {
  Rng rng(5);
  PointCloud c = random_cloud(700, rng);
  // Grid duplicates exercise distance ties.
  for (int i = 0; i < 100; ++i) c.points.push_back({double(i % 5) * 0.1, double(i / 5 % 5) * 0.1, 0.0});
  const SpatialIndex index(c.points);
  for (int q = 0; q < 200; ++q) {
    const Eigen::Vector3d query =
        q % 4 == 0 ? c.points[static_cast<std::size_t>(q)] : Eigen::Vector3d(uniform(rng, -1, 1), uniform(rng, -1, 1), 0.0);
    for (std::size_t k : {1u, 7u, 17u}) {
      const auto got = index.knn(query, k);
      const auto want = brute_knn(c.points, query, k);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].index == want[i].index);
        CHECK(got[i].squared_distance == want[i].squared_distance);
      }
    }
    const double r = uniform(rng, 0.05, 0.4);
    const auto within = index.radius(query, r);
    auto want = brute_knn(c.points, query, c.points.size());
    want.erase(std::remove_if(want.begin(), want.end(), [&](const Neighbor& n) { return n.squared_distance > r * r; }),
               want.end());
    REQUIRE(within.size() == want.size());
    for (std::size_t i = 0; i < within.size(); ++i) CHECK(within[i].index == want[i].index);
  }
  CHECK(index.knn(Eigen::Vector3d::Zero(), 5000).size() == c.size());
}

TEST_CASE("voxel downsampling") {
  PointCloud single;
  single.points.push_back({0.123, 0.456, 0.789});
  const PointCloud s = voxel_downsample(single, 0.005);
  REQUIRE(s.size() == 1);
  CHECK(s.points[0] == single.points[0]);

  PointCloud cube;
  for (int i = 0; i < 8; ++i) {
    cube.points.push_back({0.001 + 0.002 * (i & 1), 0.001 + 0.002 * ((i >> 1) & 1), 0.001 + 0.002 * ((i >> 2) & 1)});
    cube.colors.push_back({static_cast<std::uint8_t>(i * 10), 0, 255});
  }
  const PointCloud cd = voxel_downsample(cube, 0.005);
  REQUIRE(cd.size() == 1);
  CHECK((cd.points[0] - Eigen::Vector3d(0.002, 0.002, 0.002)).norm() < 1e-15);
  CHECK(cd.colors[0] == Rgb{35, 0, 255});

  CHECK(code_of([] { voxel_downsample(PointCloud{}, 0.01); }) == ErrorCode::EmptyCloud);
  CHECK(code_of([&] { voxel_downsample(single, 0.0); }) == ErrorCode::InvalidArgument);

  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud c = random_cloud(500, rng, 0.05);
    const double voxel = uniform(rng, 0.005, 0.03);
    const PointCloud d = voxel_downsample(c, voxel);
    std::map<std::array<long, 3>, std::pair<Eigen::Vector3d, int>> cells;
    for (const auto& p : c.points) {
      const std::array<long, 3> key{static_cast<long>(std::floor(p.x() / voxel)),
                                    static_cast<long>(std::floor(p.y() / voxel)),
                                    static_cast<long>(std::floor(p.z() / voxel))};
      auto& cell = cells.try_emplace(key, Eigen::Vector3d::Zero(), 0).first->second;
      cell.first += p;
      ++cell.second;
    }
    CHECK(d.size() == cells.size());
    CHECK(d.size() <= c.size());
    std::size_t matched = 0;
    for (const auto& [key, cell] : cells) {
      const Eigen::Vector3d mean = cell.first / cell.second;
      for (const auto& p : d.points)
        if ((p - mean).norm() < 1e-12) {
          ++matched;
          break;
        }
    }
    CHECK(matched == cells.size());
  }
}

TEST_CASE("statistical outlier removal") {
  Rng rng(13);
  PointCloud c;
  for (int i = 0; i < 50; ++i) c.points.push_back({uniform(rng, 0, 0.01), uniform(rng, 0, 0.01), 0.5});
  c.points.push_back({10.0, 10.0, 10.0});
  const PointCloud kept = remove_statistical_outliers(c, 8, 1.0);
  CHECK(kept.size() == 50);
  for (const auto& p : kept.points) CHECK(p.z() == 0.5);

  const PointCloud all = remove_statistical_outliers(c, 8, 1e6);
  CHECK(all.size() == c.size());

  PointCloud tiny;
  for (int i = 0; i < 16; ++i) tiny.points.push_back({double(i), 0.0, 0.0});
  CHECK(code_of([&] { remove_statistical_outliers(tiny, 16, 1.0); }) == ErrorCode::TooFewPoints);

  // Survivors are a subsequence of the input.
  const PointCloud noisy = random_cloud(400, rng);
  const PointCloud filtered = remove_statistical_outliers(noisy, 10, 0.5);
  std::size_t j = 0;
  for (const auto& p : filtered.points) {
    while (j < noisy.size() && noisy.points[j] != p) ++j;
    CHECK(j < noisy.size());
    ++j;
  }
}

TEST_CASE("normal estimation") {
  Rng rng(21);
  PointCloud plane;
  for (int i = 0; i < 400; ++i) plane.points.push_back({uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), 1.0});
  const PointCloud pn = estimate_normals(plane, 16);
  REQUIRE(pn.has_normals());
  for (const auto& n : pn.normals) CHECK((n - Eigen::Vector3d(0, 0, -1)).norm() < 1e-9);

  PointCloud sphere;
  const Eigen::Vector3d center(0.0, 0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    Eigen::Vector3d d(g(rng), g(rng), g(rng));
    d.normalize();
    if (d.z() > -0.1) continue;  // the cap visible from the origin
    sphere.points.push_back(center + 0.1 * d);
  }
  const PointCloud sn = estimate_normals(sphere, 16);
  for (std::size_t i = 0; i < sn.size(); ++i) {
    const Eigen::Vector3d radial = (sn.points[i] - center).normalized();
    const double angle = std::acos(std::clamp(sn.normals[i].dot(radial), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    CHECK(angle < 5.0);
    CHECK(std::abs(sn.normals[i].norm() - 1.0) < 1e-12);
    CHECK(sn.normals[i].dot(sn.viewpoint - sn.points[i]) >= 0.0);
  }

  PointCloud three;
  three.points = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
  CHECK(code_of([&] { estimate_normals(three, 3); }) == ErrorCode::TooFewPoints);
}

TEST_CASE("principal axes examples") {
  PointCloud line;
  for (int i = 0; i < 10; ++i) line.points.push_back({0.0, 0.0, double(i)});
  line.points.push_back({0.01, 0.0, 4.5});
  const PrincipalAxes pa = centroid_and_principal_axes(line);
  CHECK(std::abs(pa.axes.col(0).z()) > 0.999);
  CHECK(pa.axes.col(0).z() > 0.0);
  CHECK(pa.axes.determinant() == doctest::Approx(1.0));

  PointCloud two;
  two.points = {{0, 0, 0}, {1, 1, 1}};
  CHECK(code_of([&] { centroid_and_principal_axes(two); }) == ErrorCode::DegenerateCloud);
  PointCloud same;
  same.points.assign(5, Eigen::Vector3d(1, 2, 3));
  CHECK(code_of([&] { centroid_and_principal_axes(same); }) == ErrorCode::DegenerateCloud);

  CHECK(canonical_axis_sign({0.2, -0.9, 0.1}) == Eigen::Vector3d(-0.2, 0.9, -0.1));
  CHECK(canonical_axis_sign({-0.5, 0.5, 0.0}) == Eigen::Vector3d(0.5, -0.5, 0.0));
}

TEST_CASE("eigensolver agrees with the extended-precision oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::Matrix3d a;
    const Eigen::Matrix3d r = random_rotation(rng);
    Eigen::Vector3d lambda(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1));
    if (trial % 3 == 1) lambda[1] = lambda[0] * (1.0 + 1e-9);
    if (trial % 3 == 2) lambda[2] = lambda[1];
    a = r * lambda.asDiagonal() * r.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    const SymmetricEigen3 e = eigen_symmetric3(a);
    const oracle::OracleEigen o = oracle::oracle_eigen(a);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(e.values[i] - double(o.values[i])) < 1e-12);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(e.vectors.determinant() == doctest::Approx(1.0));
    CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).norm() < 1e-12);
    const double scale = std::max(1e-300, std::abs(double(o.values[0])));
    for (int i = 0; i < 3; ++i) {
      bool separated = true;
      for (int j = 0; j < 3; ++j)
        if (j != i && std::abs(double(o.values[i] - o.values[j])) < 1e-6 * scale) separated = false;
      if (separated) CHECK(std::abs(std::abs(e.vectors.col(i).dot(o.vectors[i])) - 1.0) < 1e-9);
    }
  }
  const SymmetricEigen3 id = eigen_symmetric3(Eigen::Matrix3d::Identity());
  CHECK(id.values == Eigen::Vector3d(1, 1, 1));
  CHECK((id.vectors.transpose() * id.vectors - Eigen::Matrix3d::Identity()).norm() < 1e-15);
}

TEST_CASE("principal axes are equivariant under rigid motion") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 200; ++i)
      pts.push_back({uniform(rng, -0.3, 0.3), uniform(rng, -0.1, 0.1), uniform(rng, -0.02, 0.02)});
    const Eigen::Matrix3d r = random_rotation(rng);
    const Eigen::Vector3d t(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    std::vector<Eigen::Vector3d> moved;
    for (const auto& p : pts) moved.push_back(r * p + t);
    const PrincipalAxes a = centroid_and_principal_axes(std::span<const Eigen::Vector3d>(pts));
    const PrincipalAxes b = centroid_and_principal_axes(std::span<const Eigen::Vector3d>(moved));
    CHECK((r * a.centroid + t - b.centroid).norm() < 1e-12);
    CHECK((a.eigenvalues - b.eigenvalues).norm() < 1e-12);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(std::abs((r * a.axes.col(i)).dot(b.axes.col(i))) - 1.0) < 1e-9);
  }
}

TEST_CASE("PLY round trip") {
  Rng rng(51);
  PointCloud c = random_cloud(64, rng);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.colors.push_back({static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(255 - i), 7});
    c.normals.push_back(Eigen::Vector3d(uniform(rng, -1, 1), 1.0, 0.5).normalized());
  }
  for (PlyFormat format : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
    std::stringstream buffer;
    write_ply(buffer, c, format);
    const PointCloud back = read_ply(buffer);
    CHECK(back.points == c.points);
    CHECK(back.colors == c.colors);
    CHECK(back.normals == c.normals);
  }
  PointCloud bare = random_cloud(5, rng);
  std::stringstream buffer;
  write_ply(buffer, bare, PlyFormat::Ascii);
  const PointCloud back = read_ply(buffer);
  CHECK(back.points == bare.points);
  CHECK_FALSE(back.has_colors());

  std::stringstream floats(
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar intensity\nelement face 1\nproperty list uchar int vertex_indices\n"
      "end_header\n1 2 3 9\n4 5 6 9\n3 0 1 1\n");
  const PointCloud f = read_ply(floats);
  REQUIRE(f.size() == 2);
  CHECK(f.points[1] == Eigen::Vector3d(4, 5, 6));

  std::stringstream big("ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nend_header\n");
  CHECK(code_of([&] { read_ply(big); }) == ErrorCode::ParseError);
}
