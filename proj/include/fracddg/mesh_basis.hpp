#ifndef FRACDDG_MESH_BASIS_HPP_
#define FRACDDG_MESH_BASIS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracddg/errors.hpp"
#include "fracddg/specfun.hpp"

namespace fracddg {

/// Uniform partition of [a,b] into K cells.
struct Mesh1D {
  double a = 0.0;
  double b = 1.0;
  int K = 1;
  std::vector<double> boundaries;
  double dx_min = 1.0;

  double left(int k) const { return boundaries[k]; }
  double right(int k) const { return boundaries[k + 1]; }
  double h(int k) const { return boundaries[k + 1] - boundaries[k]; }

  /// Index of the cell owning x. Interior cell boundaries belong to the cell
  /// on their left.
  int owning_cell(double x) const {
    if (!(x >= a && x <= b)) {
      throw DomainError("point " + std::to_string(x) + " outside mesh [" + std::to_string(a) +
                        ", " + std::to_string(b) + "]");
    }
    auto it = std::lower_bound(boundaries.begin(), boundaries.end(), x);
    int k = static_cast<int>(it - boundaries.begin()) - 1;
    return std::clamp(k, 0, K - 1);
  }
};

inline Mesh1D build_mesh(double a, double b, int K) {
  if (!(a < b)) throw DomainError("build_mesh: need a < b");
  if (K < 1) throw ParameterError("build_mesh: K must be >= 1");
  Mesh1D mesh;
  mesh.a = a;
  mesh.b = b;
  mesh.K = K;
  mesh.boundaries.resize(K + 1);
  const double h = (b - a) / K;
  for (int k = 0; k <= K; ++k) mesh.boundaries[k] = a + k * h;
  mesh.boundaries[K] = b;
  mesh.dx_min = h;
  return mesh;
}

inline constexpr int kMaxDegree = 8;

/// Nodal Lagrange basis of degree N on [-1,1]. Gauss-Lobatto nodes for N >= 1,
/// the midpoint for N = 0.
struct ElementBasis {
  int N = 0;
  std::vector<double> ref_nodes;
  std::vector<double> bary;        // barycentric weights
  Eigen::MatrixXd mass;            // reference mass on [-1,1]
  Eigen::MatrixXd diff;            // diff(i,j) = l_j'(t_i)
  Eigen::MatrixXd eta_coeffs;      // row j: monomial coefficients of l_j in eta=(t+1)/2
  // Reference-coordinate traces: [0] value, [1] d/dt, [2] d^2/dt^2.
  Eigen::RowVectorXd trace_left[3];
  Eigen::RowVectorXd trace_right[3];

  int n() const { return N + 1; }

  /// Basis values l_j(t) at a reference point.
  Eigen::RowVectorXd values_at(double t) const {
    Eigen::RowVectorXd v(n());
    if (N == 0) {
      v(0) = 1.0;
      return v;
    }
    for (int j = 0; j < n(); ++j) {
      if (t == ref_nodes[j]) {
        v.setZero();
        v(j) = 1.0;
        return v;
      }
    }
    double denom = 0.0;
    for (int j = 0; j < n(); ++j) {
      v(j) = bary[j] / (t - ref_nodes[j]);
      denom += v(j);
    }
    return v / denom;
  }

  /// Rows: points, columns: basis functions.
  Eigen::MatrixXd eval_matrix(std::span<const double> ts) const {
    Eigen::MatrixXd e(static_cast<Eigen::Index>(ts.size()), n());
    for (std::size_t i = 0; i < ts.size(); ++i) e.row(static_cast<Eigen::Index>(i)) = values_at(ts[i]);
    return e;
  }
};

inline ElementBasis build_basis(int N) {
  if (N < 0 || N > kMaxDegree) {
    throw ParameterError("build_basis: N must be in [0, 8], got " + std::to_string(N));
  }
  ElementBasis basis;
  basis.N = N;
  const int n = N + 1;
  if (N == 0) {
    basis.ref_nodes = {0.0};
  } else {
    basis.ref_nodes.push_back(-1.0);
    if (N >= 2) {
      const QuadRule inner = gauss_jacobi(N - 1, 1.0, 1.0);
      basis.ref_nodes.insert(basis.ref_nodes.end(), inner.nodes.begin(), inner.nodes.end());
    }
    basis.ref_nodes.push_back(1.0);
  }

  basis.bary.assign(n, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < n; ++m) {
      if (m != j) basis.bary[j] /= (basis.ref_nodes[j] - basis.ref_nodes[m]);
    }
  }

  basis.diff = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      basis.diff(i, j) = (basis.bary[j] / basis.bary[i]) / (basis.ref_nodes[i] - basis.ref_nodes[j]);
      row_sum += basis.diff(i, j);
    }
    basis.diff(i, i) = -row_sum;
  }

  const QuadRule gl = gauss_legendre(N + 1);
  const Eigen::MatrixXd vq = basis.eval_matrix(gl.nodes);
  const Eigen::VectorXd wq = Eigen::Map<const Eigen::VectorXd>(gl.weights.data(), gl.size());
  basis.mass = vq.transpose() * wq.asDiagonal() * vq;

  // Monomial coefficients in eta in [0,1]: solve the eta-Vandermonde system.
  Eigen::MatrixXd vander(n, n);
  for (int i = 0; i < n; ++i) {
    const double eta = 0.5 * (basis.ref_nodes[i] + 1.0);
    double p = 1.0;
    for (int m = 0; m < n; ++m, p *= eta) vander(i, m) = p;
  }
  // Column j of V^{-1} holds the coefficients of l_j.
  basis.eta_coeffs = vander.fullPivLu().inverse().transpose();

  const Eigen::MatrixXd d2 = basis.diff * basis.diff;
  if (N == 0) {
    for (int d = 0; d < 3; ++d) {
      basis.trace_left[d] = Eigen::RowVectorXd::Constant(1, d == 0 ? 1.0 : 0.0);
      basis.trace_right[d] = basis.trace_left[d];
    }
  } else {
    basis.trace_left[0] = Eigen::RowVectorXd::Unit(n, 0);
    basis.trace_right[0] = Eigen::RowVectorXd::Unit(n, n - 1);
    basis.trace_left[1] = basis.diff.row(0);
    basis.trace_right[1] = basis.diff.row(n - 1);
    basis.trace_left[2] = d2.row(0);
    basis.trace_right[2] = d2.row(n - 1);
  }
  return basis;
}

/// Identity of the discrete space a field lives in.
struct Layout {
  int K = 0;
  int N = 0;
  double a = 0.0;
  double b = 0.0;

  bool operator==(const Layout&) const = default;
  Eigen::Index size() const { return static_cast<Eigen::Index>(K) * (N + 1); }
};

inline Layout layout_of(const Mesh1D& mesh, const ElementBasis& basis) {
  return {mesh.K, basis.N, mesh.a, mesh.b};
}

inline void require_same_layout(const Layout& x, const Layout& y, const char* where) {
  if (!(x == y)) throw ParameterError(std::string(where) + ": mesh/basis mismatch");
}

/// Element-major DOF vector: cell k occupies [k(N+1), k(N+1)+N].
struct FieldVector {
  Layout layout;
  Eigen::VectorXd values;

  FieldVector() = default;
  explicit FieldVector(const Layout& l) : layout(l), values(Eigen::VectorXd::Zero(l.size())) {}
  FieldVector(const Layout& l, Eigen::VectorXd v) : layout(l), values(std::move(v)) {
    if (values.size() != l.size()) throw ParameterError("FieldVector: length does not match layout");
  }

  auto cell(int k) { return values.segment(static_cast<Eigen::Index>(k) * (layout.N + 1), layout.N + 1); }
  auto cell(int k) const {
    return values.segment(static_cast<Eigen::Index>(k) * (layout.N + 1), layout.N + 1);
  }

  FieldVector& operator+=(const FieldVector& o) {
    require_same_layout(layout, o.layout, "FieldVector +=");
    values += o.values;
    return *this;
  }
  FieldVector& operator-=(const FieldVector& o) {
    require_same_layout(layout, o.layout, "FieldVector -=");
    values -= o.values;
    return *this;
  }
  FieldVector& operator*=(double s) {
    values *= s;
    return *this;
  }
  friend FieldVector operator+(FieldVector x, const FieldVector& y) { return x += y; }
  friend FieldVector operator-(FieldVector x, const FieldVector& y) { return x -= y; }
  friend FieldVector operator*(double s, FieldVector x) { return x *= s; }
};

/// Block-diagonal global mass matrix, stored as one factorized reference block
/// per cell scale.
class GlobalMass {
 public:
  GlobalMass(const Mesh1D& mesh, const ElementBasis& basis)
      : layout_(layout_of(mesh, basis)), mass_ref_(basis.mass), llt_(basis.mass) {
    jac_.resize(mesh.K);
    for (int k = 0; k < mesh.K; ++k) jac_[k] = 0.5 * mesh.h(k);
  }

  const Layout& layout() const { return layout_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r(u.size());
    const int n = layout_.N + 1;
    for (int k = 0; k < layout_.K; ++k) r.segment(k * n, n) = jac_[k] * (mass_ref_ * u.segment(k * n, n));
    return r;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& r) const {
    Eigen::VectorXd u(r.size());
    const int n = layout_.N + 1;
    for (int k = 0; k < layout_.K; ++k) u.segment(k * n, n) = llt_.solve(r.segment(k * n, n)) / jac_[k];
    return u;
  }

  /// Applies M^{-1} to every column.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& r) const {
    Eigen::MatrixXd u(r.rows(), r.cols());
    const int n = layout_.N + 1;
    for (int k = 0; k < layout_.K; ++k) u.middleRows(k * n, n) = llt_.solve(r.middleRows(k * n, n)) / jac_[k];
    return u;
  }

  Eigen::MatrixXd dense() const {
    const int n = layout_.N + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(layout_.size(), layout_.size());
    for (int k = 0; k < layout_.K; ++k) m.block(k * n, k * n, n, n) = jac_[k] * mass_ref_;
    return m;
  }

  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return u.dot(apply(v)); }

 private:
  Layout layout_;
  Eigen::MatrixXd mass_ref_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<double> jac_;
};

/// Gauss-Legendre points in every cell. Fields are evaluated there as
/// (points x cells) arrays, and point data is turned back into load vectors
/// (int g phi_{k,j} dx).
class CellQuadrature {
 public:
  CellQuadrature(const Mesh1D& mesh, const ElementBasis& basis, int points)
      : layout_(layout_of(mesh, basis)), rule_(gauss_legendre(points)), vq_(basis.eval_matrix(rule_.nodes)) {
    wjac_.resize(static_cast<Eigen::Index>(rule_.size()), mesh.K);
    for (int k = 0; k < mesh.K; ++k) {
      for (std::size_t q = 0; q < rule_.size(); ++q) {
        wjac_(static_cast<Eigen::Index>(q), k) = 0.5 * mesh.h(k) * rule_.weights[q];
      }
    }
  }

  const Layout& layout() const { return layout_; }
  Eigen::Index points() const { return static_cast<Eigen::Index>(rule_.size()); }

  Eigen::ArrayXXd values(const Eigen::VectorXd& u) const {
    const Eigen::Map<const Eigen::MatrixXd> cells(u.data(), layout_.N + 1, layout_.K);
    return (vq_ * cells).array();
  }

  Eigen::VectorXd load(const Eigen::ArrayXXd& g) const {
    Eigen::VectorXd r(layout_.size());
    Eigen::Map<Eigen::MatrixXd> cells(r.data(), layout_.N + 1, layout_.K);
    cells.noalias() = vq_.transpose() * (g * wjac_).matrix();
    return r;
  }

 private:
  Layout layout_;
  QuadRule rule_;
  Eigen::MatrixXd vq_;
  Eigen::ArrayXXd wjac_;
};

using RealFunction = std::function<double(double)>;

namespace detail {

// Reference-cell rule graded geometrically toward one end (t = -1 when
// toward_left, else t = +1). Resolves integrable endpoint singularities such
// as (b - x)^mu that fractional operators produce at the domain ends.
inline QuadRule graded_rule(int n_per_level, bool toward_left, int levels = 24, double ratio = 0.15) {
  const QuadRule gl = gauss_legendre(n_per_level);
  QuadRule out;
  // Sub-intervals in distance from the singular end: [0, r^L], [r^{l+1}, r^l].
  std::vector<std::pair<double, double>> pieces;
  double hi = 2.0;
  for (int l = 0; l < levels; ++l) {
    const double lo = hi * ratio;
    pieces.emplace_back(lo, hi);
    hi = lo;
  }
  pieces.emplace_back(0.0, hi);
  for (auto [lo, up] : pieces) {
    const double half = 0.5 * (up - lo);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double d = lo + half * (gl.nodes[i] + 1.0);
      out.nodes.push_back(toward_left ? -1.0 + d : 1.0 - d);
      out.weights.push_back(half * gl.weights[i]);
    }
  }
  return out;
}

// Graded toward both ends: each half of the cell graded toward its own end.
inline QuadRule graded_rule_both(int n_per_level) {
  QuadRule out;
  const QuadRule l = graded_rule(n_per_level, true);
  const QuadRule r = graded_rule(n_per_level, false);
  for (std::size_t i = 0; i < l.size(); ++i) {
    out.nodes.push_back(0.5 * (l.nodes[i] - 1.0));
    out.weights.push_back(0.5 * l.weights[i]);
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.nodes.push_back(0.5 * (r.nodes[i] + 1.0));
    out.weights.push_back(0.5 * r.weights[i]);
  }
  return out;
}

}  // namespace detail

/// Cell-wise L2 projection, integrated with (N+2)-point Gauss-Legendre. The two
/// end cells use a rule graded toward the domain boundary.
inline FieldVector project(const RealFunction& f, const Mesh1D& mesh, const ElementBasis& basis) {
  FieldVector u(layout_of(mesh, basis));
  const QuadRule gl = gauss_legendre(basis.N + 6);
  const QuadRule left_end = detail::graded_rule(basis.N + 4, true);
  const QuadRule right_end = detail::graded_rule(basis.N + 4, false);
  const Eigen::LLT<Eigen::MatrixXd> llt(basis.mass);
  auto cell_projection = [&](int k, const QuadRule& rule) {
    const Eigen::MatrixXd vq = basis.eval_matrix(rule.nodes);
    Eigen::VectorXd fq(rule.size());
    const double xl = mesh.left(k);
    const double hk = mesh.h(k);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      fq(q) = rule.weights[q] * f(xl + 0.5 * hk * (rule.nodes[q] + 1.0));
    }
    return Eigen::VectorXd(llt.solve(vq.transpose() * fq));
  };
  for (int k = 0; k < mesh.K; ++k) {
    if (mesh.K == 1) {
      u.cell(k) = cell_projection(k, detail::graded_rule_both(basis.N + 4));
    } else if (k == 0) {
      u.cell(k) = cell_projection(k, left_end);
    } else if (k == mesh.K - 1) {
      u.cell(k) = cell_projection(k, right_end);
    } else {
      u.cell(k) = cell_projection(k, gl);
    }
  }
  return u;
}

/// Nodal interpolation (samples at the physical node positions).
inline FieldVector interpolate(const RealFunction& f, const Mesh1D& mesh, const ElementBasis& basis) {
  FieldVector u(layout_of(mesh, basis));
  for (int k = 0; k < mesh.K; ++k) {
    for (int i = 0; i <= basis.N; ++i) {
      u.cell(k)(i) = f(mesh.left(k) + 0.5 * mesh.h(k) * (basis.ref_nodes[i] + 1.0));
    }
  }
  return u;
}

/// Point evaluation. Points on interior cell boundaries use the left cell.
inline std::vector<double> eval_field(const FieldVector& u, const Mesh1D& mesh, const ElementBasis& basis,
                                      std::span<const double> points) {
  require_same_layout(u.layout, layout_of(mesh, basis), "eval_field");
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int k = mesh.owning_cell(points[i]);
    const double t = 2.0 * (points[i] - mesh.left(k)) / mesh.h(k) - 1.0;
    out[i] = basis.values_at(t).dot(u.cell(k));
  }
  return out;
}

/// sqrt(sum_k int_{D^k} (u_h - exact)^2 dx) with (N+3)-point Gauss-Legendre.
inline double l2_error(const FieldVector& u, const RealFunction& exact, const Mesh1D& mesh,
                       const ElementBasis& basis) {
  require_same_layout(u.layout, layout_of(mesh, basis), "l2_error");
  const QuadRule gl = gauss_legendre(basis.N + 5);
  const Eigen::MatrixXd vq = basis.eval_matrix(gl.nodes);
  double acc = 0.0;
  for (int k = 0; k < mesh.K; ++k) {
    const Eigen::VectorXd uq = vq * u.cell(k);
    const double hk = mesh.h(k);
    for (std::size_t q = 0; q < gl.size(); ++q) {
      const double x = mesh.left(k) + 0.5 * hk * (gl.nodes[q] + 1.0);
      const double e = uq(static_cast<Eigen::Index>(q)) - exact(x);
      acc += 0.5 * hk * gl.weights[q] * e * e;
    }
  }
  return std::sqrt(acc);
}

inline double l2_norm(const FieldVector& u, const Mesh1D& mesh, const ElementBasis& basis) {
  return l2_error(u, [](double) { return 0.0; }, mesh, basis);
}

}  // namespace fracddg

#endif  // FRACDDG_MESH_BASIS_HPP_
