#pragma once

#include <array>
#include <vector>

#include "lmcf/calibrated.hpp"
#include "lmcf/core.hpp"
#include "lmcf/sample.hpp"

namespace lmcf {

/// Oriented triangle mesh with vertices in R^4. Boundary vertices are
/// flagged and held fixed by the flow and by remeshing.
struct Mesh4D {
  std::vector<Vec4> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<char> boundary;  // per vertex; rebuilt by finalize()

  int nv() const { return static_cast<int>(vertices.size()); }
  int nf() const { return static_cast<int>(faces.size()); }

  /// Rebuilds the boundary flags from edge incidence.
  void finalize();

  /// Checks manifoldness (each edge on 1 or 2 faces, consistent
  /// orientation) and positive face areas. Errors: MeshTangled.
  void validate(double min_area = 1e-30) const;

  double face_area(int fi) const;
  double total_area() const;
  double min_edge() const;
  double max_edge() const;
  double min_angle() const;  // radians, over all face corners

  /// |omega(e1,e2)| / (2 area) per face; the Lagrangian defect monitor.
  double omega_defect(int fi, const CalibratedStructure& S) const;
  double max_omega_defect(const CalibratedStructure& S) const;

  /// Cotangent Laplacian of the position (the discrete mean curvature
  /// vector) at every vertex; vertex-centric, deterministic, parallel.
  std::vector<Vec4> mean_curvature() const;
  /// Serial reference of the same kernel (bitwise-identical result).
  std::vector<Vec4> mean_curvature_serial() const;

  /// Barycentric-lumped vertex areas.
  std::vector<double> vertex_areas() const;

  /// Distance from a point to the mesh (exact point-triangle distances).
  double distance(const Vec4& p) const;
};

/// Vertex -> incident faces adjacency (deterministic order).
std::vector<std::vector<int>> vertex_faces(const Mesh4D& m);

/// Isotropic remeshing toward the sizing field: split long edges, collapse
/// short ones, flip for valence/angle quality, tangentially smooth interior
/// vertices. Boundary vertices are kept. Reports (not fatal) self
/// intersections via the return flag.
struct RemeshOptions {
  double target_edge = 0.0;  // uniform target; used if sizing not given
  std::function<double(const Vec4&)> sizing;
  int iterations = 4;
  bool smooth = true;
};
Mesh4D remesh(const Mesh4D& m, const RemeshOptions& opt);

/// Sphere S^2(r) about `center` inside the (x1, y1, x2) hyperplane
/// (subdivided icosahedron; control case for the mesh flow).
Mesh4D icosphere(double radius, int subdivisions, Vec4 center = Vec4::Zero());

/// Hausdorff-style one-sided distance: max over vertices of `a` of the
/// distance to mesh `b`.
double one_sided_mesh_distance(const Mesh4D& a, const Mesh4D& b);

}  // namespace lmcf
