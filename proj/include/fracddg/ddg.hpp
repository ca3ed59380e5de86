#ifndef FRACDDG_DDG_HPP_
#define FRACDDG_DDG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fracddg/errors.hpp"
#include "fracddg/frac_ops.hpp"
#include "fracddg/mesh_basis.hpp"

namespace fracddg {

/// (d_x u)* = beta0 [u]/h + {d_x u} + beta1 h [d_xx u].
struct FluxParams {
  double beta0 = 1.0;
  double beta1 = 0.0;
};

/// Per-coefficient overrides applied on top of the degree-dependent default.
struct FluxOverride {
  std::optional<double> beta0;
  std::optional<double> beta1;
};

inline FluxParams default_flux(int N) {
  FluxParams f;
  f.beta1 = N >= 1 ? 1.0 / (2.0 * N * (N + 1)) : 0.0;
  f.beta0 = std::max(1.0, 0.5 * (N + 1) * (N + 1));
  return f;
}

inline void validate_flux(const FluxParams& f) {
  if (!(f.beta0 > 0.0) || !std::isfinite(f.beta0) || !std::isfinite(f.beta1)) {
    throw ParameterError("flux: beta0 must be positive and both coefficients finite");
  }
}

/// One-sided traces at an interface: value, first and second derivative.
struct Traces {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// minus = traces from the cell on the left of the interface, plus = from the
/// right; [w] = w+ - w-, {w} = (w+ + w-)/2.
inline double numerical_flux_deriv(const Traces& minus, const Traces& plus, double h, const FluxParams& flux) {
  return flux.beta0 * (plus.value - minus.value) / h + 0.5 * (plus.d1 + minus.d1) +
         flux.beta1 * h * (plus.d2 - minus.d2);
}

/// Dirichlet data at both ends; empty functions mean homogeneous data.
struct BoundarySpec {
  std::function<double(double)> left;
  std::function<double(double)> right;

  double left_at(double t) const { return left ? left(t) : 0.0; }
  double right_at(double t) const { return right ? right(t) : 0.0; }
  bool homogeneous() const { return !left && !right; }
};

/// Weak second derivative: M q = A u + g_left(t) b_left + g_right(t) b_right.
struct DdgOperators {
  Layout layout;
  FluxParams flux;
  double boundary_penalty = 0.0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b_left;
  Eigen::VectorXd b_right;

  Eigen::VectorXd weak_q(const Eigen::VectorXd& u, double g_left, double g_right) const {
    Eigen::VectorXd r = A * u;
    if (g_left != 0.0) r += g_left * b_left;
    if (g_right != 0.0) r += g_right * b_right;
    return r;
  }
};

/// Penalty used on boundary faces, where only one cell contributes to the
/// average and the interior condition on beta0 no longer suffices.
inline double boundary_penalty_for(const FluxParams& flux, int N) {
  return std::max(2.0 * flux.beta0, 2.0 * N * N);
}

inline DdgOperators assemble_q_operator(const Mesh1D& mesh, const ElementBasis& basis, const FluxParams& flux) {
  validate_flux(flux);
  DdgOperators ops;
  ops.layout = layout_of(mesh, basis);
  ops.flux = flux;
  ops.boundary_penalty = boundary_penalty_for(flux, basis.N);
  const int n = basis.n();
  const Eigen::Index ndof = ops.layout.size();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(ndof, ndof);

  const Eigen::MatrixXd stiff_ref = basis.diff.transpose() * basis.mass * basis.diff;
  for (int k = 0; k < mesh.K; ++k) dense.block(k * n, k * n, n, n) -= (2.0 / mesh.h(k)) * stiff_ref;

  for (int k = 0; k + 1 < mesh.K; ++k) {
    const double hm = mesh.h(k);
    const double hp = mesh.h(k + 1);
    const double hf = 0.5 * (hm + hp);
    Eigen::RowVectorXd jump(2 * n), avg_dx(2 * n), jump_dxx(2 * n);
    jump << -basis.trace_right[0], basis.trace_left[0];
    avg_dx << (1.0 / hm) * basis.trace_right[1], (1.0 / hp) * basis.trace_left[1];
    jump_dxx << -(4.0 / (hm * hm)) * basis.trace_right[2], (4.0 / (hp * hp)) * basis.trace_left[2];
    const Eigen::RowVectorXd flux_row = (flux.beta0 / hf) * jump + avg_dx + flux.beta1 * hf * jump_dxx;
    dense.block(k * n, k * n, 2 * n, 2 * n) -= jump.transpose() * flux_row + avg_dx.transpose() * jump;
  }

  const double pen = ops.boundary_penalty;
  ops.b_left = Eigen::VectorXd::Zero(ndof);
  ops.b_right = Eigen::VectorXd::Zero(ndof);
  {
    const double h = mesh.h(0);
    const Eigen::RowVectorXd v = basis.trace_left[0];
    const Eigen::RowVectorXd d = (2.0 / h) * basis.trace_left[1];
    dense.block(0, 0, n, n) -= (pen / h) * v.transpose() * v + v.transpose() * d + d.transpose() * v;
    ops.b_left.segment(0, n) = ((pen / h) * v + d).transpose();
  }
  {
    const int k = mesh.K - 1;
    const double h = mesh.h(k);
    const Eigen::RowVectorXd v = basis.trace_right[0];
    const Eigen::RowVectorXd d = (2.0 / h) * basis.trace_right[1];
    dense.block(k * n, k * n, n, n) += -(pen / h) * v.transpose() * v + v.transpose() * d + d.transpose() * v;
    ops.b_right.segment(k * n, n) = ((pen / h) * v - d).transpose();
  }
  ops.A = dense.sparseView(0.0, 0.0);
  ops.A.makeCompressed();
  return ops;
}

/// M q = A u + boundary terms.
inline FieldVector weak_second_derivative(const FieldVector& u, const DdgOperators& ops, const GlobalMass& mass,
                                          double g_left = 0.0, double g_right = 0.0) {
  require_same_layout(u.layout, ops.layout, "weak_second_derivative");
  return FieldVector(u.layout, mass.solve(ops.weak_q(u.values, g_left, g_right)));
}

/// eps * p with M p = B q, M q = A u (+ boundary terms). Without a fractional
/// operator this is the classical alpha = 2 limit eps * q.
inline FieldVector fractional_diffusion_rhs(const FieldVector& u, const DdgOperators& ops, const FracOperator* fop,
                                            const GlobalMass& mass, double eps, double g_left = 0.0,
                                            double g_right = 0.0) {
  const FieldVector q = weak_second_derivative(u, ops, mass, g_left, g_right);
  if (fop == nullptr) return eps * q;
  return eps * apply_frac(*fop, mass, q);
}

/// Precomputed linear operator u -> p (+ affine boundary part), i.e. the
/// discrete -(-Delta)^{alpha/2}. Used by the time-dependent models so that
/// one right-hand side costs a single dense mat-vec.
class FracLaplacian {
 public:
  FracLaplacian(const DdgOperators& ops, const FracOperator* fop, const GlobalMass& mass) : layout_(ops.layout) {
    // C = M^{-1} A is block tridiagonal; form B C column-block by column-block.
    const Eigen::MatrixXd c = mass.solve(Eigen::MatrixXd(ops.A));
    const Eigen::VectorXd cl = mass.solve(ops.b_left);
    const Eigen::VectorXd cr = mass.solve(ops.b_right);
    if (fop == nullptr) {
      g_ = c;
      gl_ = cl;
      gr_ = cr;
    } else {
      require_same_layout(fop->layout, ops.layout, "FracLaplacian");
      const Eigen::SparseMatrix<double> cs = c.sparseView(0.0, 0.0);
      g_ = mass.solve(Eigen::MatrixXd(fop->B * cs));
      gl_ = mass.solve(Eigen::VectorXd(fop->B * cl));
      gr_ = mass.solve(Eigen::VectorXd(fop->B * cr));
    }
  }

  const Layout& layout() const { return layout_; }
  const Eigen::MatrixXd& matrix() const { return g_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u, double g_left = 0.0, double g_right = 0.0) const {
    Eigen::VectorXd r = g_ * u;
    if (g_left != 0.0) r += g_left * gl_;
    if (g_right != 0.0) r += g_right * gr_;
    return r;
  }

  /// Applies the operator to every column; column c uses boundary data
  /// (g_left[c], g_right[c]).
  Eigen::MatrixXd apply_columns(const Eigen::MatrixXd& u, const std::vector<double>& g_left,
                                const std::vector<double>& g_right) const {
    if (static_cast<Eigen::Index>(g_left.size()) != u.cols() || static_cast<Eigen::Index>(g_right.size()) != u.cols()) {
      throw ParameterError("FracLaplacian::apply_columns: one boundary pair per column required");
    }
    Eigen::MatrixXd r = g_ * u;
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      if (g_left[c] != 0.0) r.col(c) += g_left[c] * gl_;
      if (g_right[c] != 0.0) r.col(c) += g_right[c] * gr_;
    }
    return r;
  }

 private:
  Layout layout_;
  Eigen::MatrixXd g_;
  Eigen::VectorXd gl_;
  Eigen::VectorXd gr_;
};

/// Scalar conservation-law flux with derivative.
struct ConvectiveFlux {
  std::function<double(double)> f;
  std::function<double(double)> df;
};

inline ConvectiveFlux burgers_flux() {
  return {[](double u) { return 0.5 * u * u; }, [](double u) { return u; }};
}

inline double lax_friedrichs(const ConvectiveFlux& flux, double minus, double plus, double c) {
  return 0.5 * (flux.f(minus) + flux.f(plus)) - 0.5 * c * (plus - minus);
}

/// Discrete -d_x f(u): volume term by Gauss-Legendre quadrature, interfaces by
/// global Lax-Friedrichs. Boundary faces pair the interior trace with the
/// Dirichlet value.
inline FieldVector convection_rhs(const FieldVector& u, const ConvectiveFlux& flux, const Mesh1D& mesh,
                                  const ElementBasis& basis, const GlobalMass& mass, double g_left = 0.0,
                                  double g_right = 0.0) {
  require_same_layout(u.layout, layout_of(mesh, basis), "convection_rhs");
  const int n = basis.n();
  const int K = mesh.K;
  const QuadRule gl = gauss_legendre(basis.N + 2 + basis.N / 2);
  const Eigen::MatrixXd vq = basis.eval_matrix(gl.nodes);
  const Eigen::MatrixXd dvq = vq * basis.diff;

  std::vector<double> left_tr(K), right_tr(K);
  double c = std::max(std::abs(flux.df(g_left)), std::abs(flux.df(g_right)));
  for (int k = 0; k < K; ++k) {
    left_tr[k] = basis.trace_left[0].dot(u.cell(k));
    right_tr[k] = basis.trace_right[0].dot(u.cell(k));
    c = std::max({c, std::abs(flux.df(left_tr[k])), std::abs(flux.df(right_tr[k]))});
  }

  Eigen::VectorXd r(u.values.size());
  Eigen::VectorXd fq(gl.size());
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd uq = vq * u.cell(k);
    for (std::size_t q = 0; q < gl.size(); ++q) fq(q) = gl.weights[q] * flux.f(uq(static_cast<Eigen::Index>(q)));
    // (f, v_x): the Jacobian h/2 cancels the 2/h of the derivative.
    Eigen::VectorXd cell = dvq.transpose() * fq;
    const double fl = k == 0 ? lax_friedrichs(flux, g_left, left_tr[0], c)
                             : lax_friedrichs(flux, right_tr[k - 1], left_tr[k], c);
    const double fr = k == K - 1 ? lax_friedrichs(flux, right_tr[K - 1], g_right, c)
                                 : lax_friedrichs(flux, right_tr[k], left_tr[k + 1], c);
    cell += fl * basis.trace_left[0].transpose() - fr * basis.trace_right[0].transpose();
    r.segment(k * n, n) = cell;
  }
  return FieldVector(u.layout, mass.solve(r));
}

// ---------------------------------------------------------------------------
// Admissibility of the flux on one interior interface.

/// Two cells [-1,0] and [0,1]; coefficients of (x - center)^j per cell.
struct AdmissibilityWitness {
  std::vector<double> left_coeffs;
  std::vector<double> right_coeffs;
};

struct AdmissibilityReport {
  double min_ratio = 0.0;
  bool admissible = false;
  int samples = 0;
  std::optional<AdmissibilityWitness> witness;
};

namespace detail {

// Quadratic forms on R^{2(N+1)}: Q = gamma |u_x|^2 + 2{u_x}[u] + (beta0 - mu)[u]^2/h
// + beta1 h [u_xx][u]; D = |u_x|^2 + [u]^2/h. Monomials about the cell centers.
struct InterfaceForms {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd D;
};

inline InterfaceForms interface_forms(const FluxParams& flux, int N, double gamma, double mu_pen) {
  const int n = N + 1;
  const double h = 1.0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  // int_{-1/2}^{1/2} (i x^{i-1})(j x^{j-1}) dx
  for (int cell = 0; cell < 2; ++cell) {
    for (int i = 1; i < n; ++i) {
      for (int j = 1; j < n; ++j) {
        const int p = i + j - 2;
        if (p % 2 == 1) continue;
        grad(cell * n + i, cell * n + j) = i * j * 2.0 * std::pow(0.5, p + 1) / (p + 1);
      }
    }
  }
  // Traces at the interface x = 0: right end of the left cell (y = 1/2),
  // left end of the right cell (y = -1/2).
  Eigen::RowVectorXd jump = Eigen::RowVectorXd::Zero(2 * n);
  Eigen::RowVectorXd avg_dx = Eigen::RowVectorXd::Zero(2 * n);
  Eigen::RowVectorXd jump_dxx = Eigen::RowVectorXd::Zero(2 * n);
  for (int j = 0; j < n; ++j) {
    const double ym = 0.5;
    const double yp = -0.5;
    jump(j) = -std::pow(ym, j);
    jump(n + j) = std::pow(yp, j);
    if (j >= 1) {
      avg_dx(j) = 0.5 * j * std::pow(ym, j - 1);
      avg_dx(n + j) = 0.5 * j * std::pow(yp, j - 1);
    }
    if (j >= 2) {
      jump_dxx(j) = -j * (j - 1) * std::pow(ym, j - 2);
      jump_dxx(n + j) = j * (j - 1) * std::pow(yp, j - 2);
    }
  }
  const Eigen::MatrixXd jj = jump.transpose() * jump;
  const Eigen::MatrixXd avg_jump = avg_dx.transpose() * jump;
  const Eigen::MatrixXd dxx_jump = jump_dxx.transpose() * jump;
  InterfaceForms forms;
  // (u_x)*[u] + {u_x}[u] = 2{u_x}[u] + beta0 [u]^2/h + beta1 h [u_xx][u]
  forms.Q = gamma * grad + (avg_jump + avg_jump.transpose()) +
            0.5 * flux.beta1 * h * (dxx_jump + dxx_jump.transpose()) + ((flux.beta0 - mu_pen) / h) * jj;
  forms.D = grad + jj / h;
  return forms;
}

}  // namespace detail

/// Sampled falsifier: evaluates Q/D over random two-cell polynomials, then
/// refines the best one by gradient descent on the Rayleigh quotient.
inline AdmissibilityReport check_admissibility(const FluxParams& flux, int N, int samples, double gamma,
                                               double mu_pen, std::uint64_t seed = 0x5eed) {
  if (N < 0 || N > kMaxDegree) throw ParameterError("check_admissibility: N out of range");
  if (samples < 1000) throw ParameterError("check_admissibility: need at least 1000 samples");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("check_admissibility: gamma must lie in (0,1)");
  if (!(mu_pen > 0.0 && mu_pen <= 1.0)) throw ParameterError("check_admissibility: mu must lie in (0,1]");
  const auto forms = detail::interface_forms(flux, N, gamma, mu_pen);
  const Eigen::Index m = forms.Q.rows();

  auto ratio = [&forms](const Eigen::VectorXd& x, double& den) {
    den = x.dot(forms.D * x);
    return x.dot(forms.Q * x) / den;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd best(m);
  double best_ratio = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(m);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) x(i) = normal(rng);
    double den = 0.0;
    const double r = ratio(x, den);
    if (den < 1e-12 * x.squaredNorm()) continue;
    if (r < best_ratio) {
      best_ratio = r;
      best = x;
    }
  }

  // Descent on the quotient, normalized so that x^T D x = 1.
  double den = 0.0;
  double r = ratio(best, den);
  best /= std::sqrt(den);
  double step = 0.1;
  for (int it = 0; it < 2000 && step > 1e-14; ++it) {
    const Eigen::VectorXd g = 2.0 * (forms.Q * best - r * (forms.D * best));
    if (g.norm() < 1e-13) break;
    Eigen::VectorXd trial = best - step * g;
    double tden = 0.0;
    const double tr = ratio(trial, tden);
    if (tden > 1e-12 * trial.squaredNorm() && tr < r) {
      best = trial / std::sqrt(tden);
      r = tr;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  best_ratio = std::min(best_ratio, r);

  AdmissibilityReport report;
  report.min_ratio = best_ratio;
  report.admissible = best_ratio >= -1e-10;
  report.samples = samples;
  if (!report.admissible) {
    const int n = N + 1;
    AdmissibilityWitness w;
    w.left_coeffs.assign(best.data(), best.data() + n);
    w.right_coeffs.assign(best.data() + n, best.data() + 2 * n);
    report.witness = w;
  }
  return report;
}

}  // namespace fracddg

#endif  // FRACDDG_DDG_HPP_
