#include "lmcf/mesh.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>
#include <set>

#include "lmcf/parallel.hpp"

namespace lmcf {

namespace {
using Edge = std::pair<int, int>;
Edge key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

std::map<Edge, std::vector<int>> edge_faces(const Mesh4D& m) {
  std::map<Edge, std::vector<int>> ef;
  for (int fi = 0; fi < m.nf(); ++fi) {
    const auto& f = m.faces[fi];
    for (int k = 0; k < 3; ++k)
      ef[key(f[k], f[(k + 1) % 3])].push_back(fi);
  }
  return ef;
}

double corner_cot(const Vec4& at, const Vec4& a, const Vec4& b) {
  const Vec4 u = a - at, v = b - at;
  const double cross2 = u.squaredNorm() * v.squaredNorm() - std::pow(u.dot(v), 2);
  const double sin_area = std::sqrt(std::max(cross2, 1e-300));
  return u.dot(v) / sin_area;
}

double point_triangle_distance(const Vec4& p, const Vec4& a, const Vec4& b,
                               const Vec4& c) {
  // Solve the 2x2 least squares for barycentric coordinates, clamp to the
  // triangle by checking edges.
  const Vec4 e0 = b - a, e1 = c - a, d = p - a;
  const double a00 = e0.squaredNorm(), a01 = e0.dot(e1), a11 = e1.squaredNorm();
  const double b0 = e0.dot(d), b1 = e1.dot(d);
  const double det = a00 * a11 - a01 * a01;
  double s = 0.0, t = 0.0;
  if (det > 1e-300) {
    s = (a11 * b0 - a01 * b1) / det;
    t = (a00 * b1 - a01 * b0) / det;
  }
  if (s >= 0 && t >= 0 && s + t <= 1) return (d - s * e0 - t * e1).norm();
  auto seg = [&](const Vec4& u, const Vec4& v) {
    const Vec4 e = v - u;
    const double tt = std::clamp((p - u).dot(e) / e.squaredNorm(), 0.0, 1.0);
    return (p - u - tt * e).norm();
  };
  return std::min({seg(a, b), seg(a, c), seg(b, c)});
}
}  // namespace

void Mesh4D::finalize() {
  boundary.assign(vertices.size(), 0);
  for (const auto& [e, fs] : edge_faces(*this)) {
    if (fs.size() == 1) {
      boundary[e.first] = 1;
      boundary[e.second] = 1;
    }
  }
}

void Mesh4D::validate(double min_area) const {
  if (boundary.size() != vertices.size())
    fail(ErrorCode::MeshTangled, "mesh not finalized");
  std::map<Edge, int> count;
  std::map<Edge, int> directed;
  for (const auto& f : faces) {
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      fail(ErrorCode::MeshTangled, "degenerate face indices");
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      if (a < 0 || b < 0 || a >= nv() || b >= nv())
        fail(ErrorCode::MeshTangled, "face index out of range");
      count[key(a, b)]++;
      directed[{a, b}]++;
    }
  }
  for (const auto& [e, c] : count) {
    if (c > 2) fail(ErrorCode::MeshTangled, "non-manifold edge");
    if (c == 2 && (directed[{e.first, e.second}] != 1 ||
                   directed[{e.second, e.first}] != 1))
      fail(ErrorCode::MeshTangled, "inconsistent orientation");
  }
  for (int fi = 0; fi < nf(); ++fi)
    if (!(face_area(fi) > min_area))
      fail(ErrorCode::MeshTangled, "nonpositive face area");
}

double Mesh4D::face_area(int fi) const {
  const auto& f = faces[fi];
  const Vec4 u = vertices[f[1]] - vertices[f[0]];
  const Vec4 v = vertices[f[2]] - vertices[f[0]];
  const double g = u.squaredNorm() * v.squaredNorm() - std::pow(u.dot(v), 2);
  return 0.5 * std::sqrt(std::max(0.0, g));
}

double Mesh4D::total_area() const {
  return par::deterministic_sum(nf(), [&](std::ptrdiff_t i) {
    return face_area(static_cast<int>(i));
  });
}

double Mesh4D::min_edge() const {
  double m = 1e300;
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k)
      m = std::min(m, (vertices[f[k]] - vertices[f[(k + 1) % 3]]).norm());
  return m;
}

double Mesh4D::max_edge() const {
  double m = 0.0;
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k)
      m = std::max(m, (vertices[f[k]] - vertices[f[(k + 1) % 3]]).norm());
  return m;
}

double Mesh4D::min_angle() const {
  double m = kPi;
  for (const auto& f : faces) {
    for (int k = 0; k < 3; ++k) {
      const Vec4& at = vertices[f[k]];
      const Vec4 u = vertices[f[(k + 1) % 3]] - at;
      const Vec4 v = vertices[f[(k + 2) % 3]] - at;
      const double c =
          std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
      m = std::min(m, std::acos(c));
    }
  }
  return m;
}

double Mesh4D::omega_defect(int fi, const CalibratedStructure& S) const {
  const auto& f = faces[fi];
  const Vec4 u = vertices[f[1]] - vertices[f[0]];
  const Vec4 v = vertices[f[2]] - vertices[f[0]];
  const double area = face_area(fi);
  if (area <= 0.0) return 0.0;
  return std::abs(S.omega_eval(u, v)) / (2.0 * area);
}

double Mesh4D::max_omega_defect(const CalibratedStructure& S) const {
  double m = 0.0;
  for (int fi = 0; fi < nf(); ++fi) m = std::max(m, omega_defect(fi, S));
  return m;
}

std::vector<std::vector<int>> vertex_faces(const Mesh4D& m) {
  std::vector<std::vector<int>> vf(m.vertices.size());
  for (int fi = 0; fi < m.nf(); ++fi)
    for (int k = 0; k < 3; ++k) vf[m.faces[fi][k]].push_back(fi);
  return vf;
}

namespace {
// Mixed Voronoi area of vertex i within one face (Meyer et al.): true
// Voronoi cell for non-obtuse triangles, area/2 or area/4 otherwise.
double mixed_area(const Vec4& xi, const Vec4& xa, const Vec4& xb,
                  double face_area) {
  const double ca = corner_cot(xa, xb, xi);  // angle at a (opposite edge i-b)
  const double cb = corner_cot(xb, xi, xa);  // angle at b (opposite edge i-a)
  const double ci = corner_cot(xi, xa, xb);  // angle at i
  if (ci < 0.0) return 0.5 * face_area;
  if (ca < 0.0 || cb < 0.0) return 0.25 * face_area;
  return 0.125 * ((xa - xi).squaredNorm() * cb + (xb - xi).squaredNorm() * ca);
}

template <typename Runner>
std::vector<Vec4> cotan_H(const Mesh4D& m, Runner&& run) {
  const auto vf = vertex_faces(m);
  std::vector<Vec4> H(m.vertices.size(), Vec4::Zero());
  run(m.nv(), [&](std::ptrdiff_t iv) {
    const int i = static_cast<int>(iv);
    if (!vf[i].empty() && !m.boundary[i]) {
      Vec4 acc = Vec4::Zero();
      double area = 0.0;
      for (int fi : vf[i]) {
        const auto& f = m.faces[fi];
        int k = 0;
        while (f[k] != i) ++k;
        const int a = f[(k + 1) % 3], b = f[(k + 2) % 3];
        const Vec4 &xi = m.vertices[i], &xa = m.vertices[a],
                   &xb = m.vertices[b];
        // cot at b weights edge (i,a); cot at a weights edge (i,b)
        acc += corner_cot(xb, xi, xa) * (xa - xi);
        acc += corner_cot(xa, xb, xi) * (xb - xi);
        area += mixed_area(xi, xa, xb, m.face_area(fi));
      }
      H[i] = acc / (2.0 * area);
    }
  });
  return H;
}
}  // namespace

std::vector<Vec4> Mesh4D::mean_curvature() const {
  return cotan_H(*this, [](std::ptrdiff_t n, auto&& b) {
    par::parallel_for(n, b);
  });
}

std::vector<Vec4> Mesh4D::mean_curvature_serial() const {
  return cotan_H(*this, [](std::ptrdiff_t n, auto&& b) {
    par::serial_for(n, b);
  });
}

std::vector<double> Mesh4D::vertex_areas() const {
  std::vector<double> a(vertices.size(), 0.0);
  for (int fi = 0; fi < nf(); ++fi) {
    const double third = face_area(fi) / 3.0;
    for (int k = 0; k < 3; ++k) a[faces[fi][k]] += third;
  }
  return a;
}

double Mesh4D::distance(const Vec4& p) const {
  double d = 1e300;
  for (const auto& f : faces)
    d = std::min(d, point_triangle_distance(p, vertices[f[0]], vertices[f[1]],
                                            vertices[f[2]]));
  return d;
}

double one_sided_mesh_distance(const Mesh4D& a, const Mesh4D& b) {
  std::vector<double> d(a.vertices.size());
  par::parallel_for(a.nv(), [&](std::ptrdiff_t i) {
    d[static_cast<std::size_t>(i)] = b.distance(a.vertices[i]);
  });
  double m = 0.0;
  for (double v : d) m = std::max(m, v);
  return m;
}

Mesh4D icosphere(double radius, int subdivisions, Vec4 center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& p : v) p.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<Edge, int> mid;
    std::vector<std::array<int, 3>> nf;
    auto midpoint = [&](int a, int b) {
      const Edge e = key(a, b);
      auto it = mid.find(e);
      if (it != mid.end()) return it->second;
      v.push_back(((v[a] + v[b]) * 0.5).normalized());
      mid[e] = static_cast<int>(v.size()) - 1;
      return mid[e];
    };
    for (const auto& tri : f) {
      const int ab = midpoint(tri[0], tri[1]);
      const int bc = midpoint(tri[1], tri[2]);
      const int ca = midpoint(tri[2], tri[0]);
      nf.push_back({tri[0], ab, ca});
      nf.push_back({tri[1], bc, ab});
      nf.push_back({tri[2], ca, bc});
      nf.push_back({ab, bc, ca});
    }
    f = std::move(nf);
  }
  Mesh4D m;
  for (const auto& p : v)
    m.vertices.push_back(center + radius * Vec4(p[0], p[1], p[2], 0.0));
  m.faces = f;
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// isotropic remeshing

namespace {
struct Remesher {
  Mesh4D m;
  std::function<double(const Vec4&)> size;

  double target(const Vec4& a, const Vec4& b) const {
    return 0.5 * (size(a) + size(b));
  }

  void split_long_edges() {
    for (int pass = 0; pass < 8; ++pass) {
      auto ef = edge_faces(m);
      std::set<int> touched;
      bool any = false;
      for (const auto& [e, fs] : ef) {
        const Vec4 a = m.vertices[e.first], b = m.vertices[e.second];
        if ((a - b).norm() <= 4.0 / 3.0 * target(a, b)) continue;
        bool skip = false;
        for (int fi : fs)
          if (touched.count(fi)) skip = true;
        if (skip) continue;
        const int mi = m.nv();
        m.vertices.push_back(0.5 * (a + b));
        m.boundary.push_back(fs.size() == 1 ? 1 : 0);
        for (int fi : fs) {
          touched.insert(fi);
          auto f = m.faces[fi];
          int k = 0;
          while (!((f[k] == e.first && f[(k + 1) % 3] == e.second) ||
                   (f[k] == e.second && f[(k + 1) % 3] == e.first)))
            ++k;
          const int p = f[k], q = f[(k + 1) % 3], r = f[(k + 2) % 3];
          m.faces[fi] = {p, mi, r};
          m.faces.push_back({mi, q, r});
          touched.insert(m.nf() - 1);
        }
        any = true;
      }
      if (!any) break;
    }
  }

  void collapse_short_edges() {
    for (int pass = 0; pass < 6; ++pass)
      if (!collapse_pass()) break;
  }

  // Split the long edge of nearly-degenerate caps so the next collapse
  // pass can remove them.
  void split_caps(double cos_thresh) {
    auto ef = edge_faces(m);
    std::set<int> touched;
    const int nf0 = m.nf();
    for (int fi = 0; fi < nf0; ++fi) {
      if (touched.count(fi)) continue;
      const auto f = m.faces[fi];
      int apex = -1;
      for (int k = 0; k < 3; ++k) {
        const Vec4 u = m.vertices[f[(k + 1) % 3]] - m.vertices[f[k]];
        const Vec4 v = m.vertices[f[(k + 2) % 3]] - m.vertices[f[k]];
        const double nn = u.norm() * v.norm();
        if (nn > 1e-300 && u.dot(v) / nn < cos_thresh) apex = k;
      }
      if (apex < 0) continue;
      const int a = f[(apex + 1) % 3], b = f[(apex + 2) % 3];
      auto it = ef.find(key(a, b));
      if (it == ef.end()) continue;
      const auto& fs = it->second;
      bool skip = false;
      for (int fj : fs)
        if (touched.count(fj)) skip = true;
      if (skip) continue;
      // split (a,b) at the projection of the apex onto it
      const Vec4 &xa = m.vertices[a], &xb = m.vertices[b];
      const Vec4 xp = m.vertices[f[apex]];
      double tt = (xp - xa).dot(xb - xa) / (xb - xa).squaredNorm();
      tt = std::clamp(tt, 0.25, 0.75);
      const int mi = m.nv();
      m.vertices.push_back(xa + tt * (xb - xa));
      m.boundary.push_back(fs.size() == 1 ? 1 : 0);
      for (int fj : fs) {
        touched.insert(fj);
        auto g = m.faces[fj];
        int k = 0;
        while (!((g[k] == a && g[(k + 1) % 3] == b) ||
                 (g[k] == b && g[(k + 1) % 3] == a)))
          ++k;
        const int p = g[k], q = g[(k + 1) % 3], r = g[(k + 2) % 3];
        m.faces[fj] = {p, mi, r};
        m.faces.push_back({mi, q, r});
        touched.insert(m.nf() - 1);
      }
    }
  }

  bool collapse_pass() {
    auto ef = edge_faces(m);
    std::vector<char> dead(m.vertices.size(), 0);
    std::vector<int> remap(m.vertices.size());
    for (int i = 0; i < m.nv(); ++i) remap[i] = i;
    // neighbor sets for the link condition
    std::vector<std::set<int>> nbr(m.vertices.size());
    for (const auto& [e, fs] : ef) {
      nbr[e.first].insert(e.second);
      nbr[e.second].insert(e.first);
    }
    const auto vf = vertex_faces(m);
    std::vector<char> locked(m.vertices.size(), 0);
    for (const auto& [e, fs] : ef) {
      int a = e.first, b = e.second;
      if (dead[a] || dead[b] || locked[a] || locked[b]) continue;
      if (m.boundary[a] && m.boundary[b]) continue;
      const Vec4 &xa = m.vertices[a], &xb = m.vertices[b];
      if ((xa - xb).norm() >= 0.8 * target(xa, xb)) continue;
      // link condition: common neighbors of a and b must be exactly the
      // opposite vertices of the faces containing the edge
      std::set<int> common;
      for (int x : nbr[a])
        if (nbr[b].count(x)) common.insert(x);
      std::set<int> opposite;
      for (int fi : fs)
        for (int k = 0; k < 3; ++k)
          if (m.faces[fi][k] != a && m.faces[fi][k] != b)
            opposite.insert(m.faces[fi][k]);
      if (common != opposite) continue;
      // keep boundary vertex, collapse the interior one into it
      int keep = a, drop = b;
      if (m.boundary[b]) std::swap(keep, drop);
      const Vec4 pos =
          (m.boundary[keep]) ? m.vertices[keep] : 0.5 * (xa + xb);
      // geometric guard: surviving faces around `drop` and `keep` must stay
      // non-degenerate with `keep` at its new position
      bool ok = true;
      for (int v : {drop, keep}) {
        for (int fi : vf[v]) {
          auto f = m.faces[fi];
          bool shared = false;
          for (int fj : fs)
            if (fj == fi) shared = true;
          if (shared) continue;
          Vec4 q[3];
          for (int k = 0; k < 3; ++k)
            q[k] = (f[k] == drop || f[k] == keep) ? pos : m.vertices[f[k]];
          const Vec4 u = q[1] - q[0], w = q[2] - q[0];
          const double g2 =
              u.squaredNorm() * w.squaredNorm() - std::pow(u.dot(w), 2);
          if (!(g2 > 1e-24 * std::pow(target(xa, xb), 4))) ok = false;
        }
      }
      if (!ok) continue;
      m.vertices[keep] = pos;
      dead[drop] = 1;
      remap[drop] = keep;
      // one topological change per neighborhood per pass
      locked[keep] = 1;
      for (int x : nbr[keep]) locked[x] = 1;
      for (int x : nbr[drop]) locked[x] = 1;
    }
    // apply remap, drop degenerate faces, compact vertices
    bool any = false;
    for (char d : dead)
      if (d) any = true;
    std::vector<std::array<int, 3>> nf;
    for (auto f : m.faces) {
      for (int k = 0; k < 3; ++k) {
        int v = f[k];
        while (remap[v] != v) v = remap[v];
        f[k] = v;
      }
      if (f[0] != f[1] && f[1] != f[2] && f[0] != f[2]) nf.push_back(f);
    }
    std::vector<int> newid(m.vertices.size(), -1);
    Mesh4D out;
    for (const auto& f : nf)
      for (int k = 0; k < 3; ++k)
        if (newid[f[k]] < 0) {
          newid[f[k]] = out.nv();
          out.vertices.push_back(m.vertices[f[k]]);
          out.boundary.push_back(m.boundary[f[k]]);
        }
    for (auto f : nf) out.faces.push_back({newid[f[0]], newid[f[1]], newid[f[2]]});
    m = std::move(out);
    return any;
  }

  void flip_edges() {
    for (int pass = 0; pass < 12; ++pass)
      if (!flip_pass()) break;
  }

  bool flip_pass() {
    auto ef = edge_faces(m);
    std::set<Edge> all_edges;
    for (const auto& [e, fs] : ef) all_edges.insert(e);
    std::set<int> touched;
    bool any = false;
    auto tri_min_angle = [&](int i, int j, int k) {
      double mn = kPi;
      const Vec4 xs[3] = {m.vertices[i], m.vertices[j], m.vertices[k]};
      for (int t = 0; t < 3; ++t) {
        const Vec4 u = xs[(t + 1) % 3] - xs[t], v = xs[(t + 2) % 3] - xs[t];
        const double nn = u.norm() * v.norm();
        if (nn < 1e-300) return 0.0;
        mn = std::min(mn, std::acos(std::clamp(u.dot(v) / nn, -1.0, 1.0)));
      }
      return mn;
    };
    for (const auto& [e, fs] : ef) {
      if (fs.size() != 2) continue;
      const int f0 = fs[0], f1 = fs[1];
      if (touched.count(f0) || touched.count(f1)) continue;
      auto opposite = [&](int fi) {
        for (int k = 0; k < 3; ++k) {
          const int v = m.faces[fi][k];
          if (v != e.first && v != e.second) return v;
        }
        return -1;
      };
      const int c = opposite(f0), d = opposite(f1);
      if (c < 0 || d < 0 || c == d) continue;
      if (all_edges.count(key(c, d))) continue;
      const double before = std::min(tri_min_angle(e.first, e.second, c),
                                     tri_min_angle(e.first, e.second, d));
      const double after =
          std::min(tri_min_angle(c, d, e.first), tri_min_angle(c, d, e.second));
      if (after <= before + 1e-12) continue;
      // In f0 the edge appears with direction (p -> q); replacing q by d in
      // f0 and p by c in f1 keeps both windings consistent.
      int p = e.first, q = e.second;
      bool dir = false;
      for (int k = 0; k < 3; ++k)
        if (m.faces[f0][k] == p && m.faces[f0][(k + 1) % 3] == q) dir = true;
      if (!dir) std::swap(p, q);
      for (int k = 0; k < 3; ++k) {
        if (m.faces[f0][k] == q) m.faces[f0][k] = d;
        if (m.faces[f1][k] == p) m.faces[f1][k] = c;
      }
      touched.insert(f0);
      touched.insert(f1);
      all_edges.erase(key(e.first, e.second));
      all_edges.insert(key(c, d));
      any = true;
    }
    return any;
  }

  void smooth() {
    const auto vf = vertex_faces(m);
    std::vector<Vec4> np = m.vertices;
    for (int i = 0; i < m.nv(); ++i) {
      if (m.boundary[i] || vf[i].empty()) continue;
      std::set<int> nb;
      for (int fi : vf[i])
        for (int k = 0; k < 3; ++k)
          if (m.faces[fi][k] != i) nb.insert(m.faces[fi][k]);
      if (nb.empty()) continue;
      Vec4 cen = Vec4::Zero();
      for (int j : nb) cen += m.vertices[j];
      cen /= static_cast<double>(nb.size());
      // tangent projector from incident-face average
      Mat4 proj = Mat4::Zero();
      for (int fi : vf[i]) {
        const auto& f = m.faces[fi];
        Vec4 u = m.vertices[f[1]] - m.vertices[f[0]];
        Vec4 v = m.vertices[f[2]] - m.vertices[f[0]];
        u.normalize();
        v -= v.dot(u) * u;
        if (v.norm() < 1e-14) continue;
        v.normalize();
        proj += u * u.transpose() + v * v.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat4> es(proj);
      Mat4 tang = Mat4::Zero();
      for (int k = 2; k < 4; ++k) {  // top-2 eigenvectors
        const Vec4 v = es.eigenvectors().col(k);
        tang += v * v.transpose();
      }
      np[i] = m.vertices[i] + 0.5 * (tang * (cen - m.vertices[i]));
    }
    m.vertices = std::move(np);
  }
};
}  // namespace

Mesh4D remesh(const Mesh4D& mesh, const RemeshOptions& opt) {
  Remesher r;
  r.m = mesh;
  if (opt.sizing)
    r.size = opt.sizing;
  else {
    const double t = opt.target_edge;
    r.size = [t](const Vec4&) { return t; };
  }
  for (int it = 0; it < opt.iterations; ++it) {
    r.split_long_edges();
    r.collapse_short_edges();
    r.flip_edges();
    r.split_caps(-0.94);  // caps beyond ~160 degrees
    r.collapse_short_edges();
    r.flip_edges();
    if (opt.smooth) r.smooth();
  }
  r.split_caps(-0.94);
  r.collapse_short_edges();
  r.flip_edges();
  r.m.finalize();
  r.m.validate();
  return r.m;
}

}  // namespace lmcf
