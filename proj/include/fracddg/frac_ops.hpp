#ifndef FRACDDG_FRAC_OPS_HPP_
#define FRACDDG_FRAC_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracddg/errors.hpp"
#include "fracddg/mesh_basis.hpp"
#include "fracddg/specfun.hpp"

namespace fracddg {

/// Galerkin matrix of the Riesz fractional integral of order mu = 2 - alpha:
/// B[(k,i),(l,j)] = int_{D^k} phi_{k,i} * riesz_scale * (I_left^mu + I_right^mu) phi_{l,j} dx,
/// with both integrals truncated to [a,b].
struct FracOperator {
  double mu = 0.5;
  double riesz_scale = 0.0;
  Layout layout;
  Eigen::MatrixXd B;
};

inline double riesz_scale_for(double mu) { return 1.0 / (2.0 * std::cos(0.5 * std::numbers::pi * mu)); }

enum class Side { kLeft, kRight };

namespace detail {

inline void check_mu(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw ParameterError("fractional integral order must lie in (0,1)");
}

// (1/Gamma(mu)) int_c^x (x-s)^{mu-1} p(s) ds for c <= x, by Gauss-Jacobi with
// weight (1-t)^{mu-1}; exact for polynomial p.
inline double rl_from(double mu, const ShiftedPoly& p, double c, double x) {
  if (x <= c) return 0.0;
  const int n = std::max(1, (p.degree() + 2) / 2);
  const QuadRule gj = gauss_jacobi(n, mu - 1.0, 0.0);
  const double half = 0.5 * (x - c);
  double acc = 0.0;
  for (std::size_t i = 0; i < gj.size(); ++i) acc += gj.weights[i] * p(c + half * (1.0 + gj.nodes[i]));
  return std::pow(half, mu) * acc / gamma_fn(mu);
}

inline ShiftedPoly mirror(const ShiftedPoly& p) {
  // q(y) = p(-y)
  ShiftedPoly q{-p.center, p.coeffs};
  for (std::size_t j = 1; j < q.coeffs.size(); j += 2) q.coeffs[j] = -q.coeffs[j];
  return q;
}

}  // namespace detail

/// Riemann-Liouville integral of order mu of a polynomial supported on one
/// cell [cell_left, cell_right], evaluated at x. The left variant integrates
/// over s < x, the right variant over s > x; an empty range gives 0.
inline double frac_integral_element(double mu, const ShiftedPoly& p, double cell_left, double cell_right,
                                    double x, Side side = Side::kLeft) {
  detail::check_mu(mu);
  if (side == Side::kRight) {
    return frac_integral_element(mu, detail::mirror(p), -cell_right, -cell_left, -x, Side::kLeft);
  }
  if (x <= cell_left) return 0.0;
  if (x <= cell_right) return detail::rl_from(mu, p, cell_left, x);
  const double width = cell_right - cell_left;
  if (x - cell_right < width) {
    // Near field: difference of two exact singular integrals.
    return detail::rl_from(mu, p, cell_left, x) - detail::rl_from(mu, p, cell_right, x);
  }
  // Far field: smooth kernel.
  const int exact_deg = p.degree() + static_cast<int>(std::ceil(1.0 / mu)) + 4;
  const int n = std::clamp((exact_deg + 2) / 2, 12, kMaxQuadPoints);
  const QuadRule gl = gauss_legendre(n);
  const double half = 0.5 * width;
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double s = cell_left + half * (1.0 + gl.nodes[i]);
    acc += gl.weights[i] * std::pow(x - s, mu - 1.0) * p(s);
  }
  return half * acc / gamma_fn(mu);
}

namespace detail {

// Physical-coordinate monomial coefficients of each basis function about the
// left edge of a cell of width h. Row j belongs to l_j.
inline Eigen::MatrixXd physical_coeffs(const ElementBasis& basis, double h) {
  Eigen::MatrixXd c = basis.eta_coeffs;
  double scale = 1.0;
  for (int m = 0; m < basis.n(); ++m, scale /= h) c.col(m) *= scale;
  return c;
}

inline Eigen::MatrixXd recenter_rows(const Eigen::MatrixXd& c, double shift) {
  Eigen::MatrixXd out(c.rows(), c.cols());
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    std::vector<double> row(c.cols());
    for (Eigen::Index m = 0; m < c.cols(); ++m) row[m] = c(j, m);
    const auto r = shifted_monomial_coeffs(row, 0.0, shift);
    for (Eigen::Index m = 0; m < c.cols(); ++m) out(j, m) = r[m];
  }
  return out;
}

// L block for target cell == source cell (width h), exact:
// sum_{m,n} a_im c_jn n!/Gamma(n+1+mu) h^{m+n+mu+1}/(m+n+mu+1).
inline Eigen::MatrixXd left_block_same(const ElementBasis& basis, double h, double mu) {
  const int n = basis.n();
  const Eigen::MatrixXd c = physical_coeffs(basis, h);
  Eigen::MatrixXd s(n, n);
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < n; ++j) {
      const double p = m + j + mu;
      s(m, j) = std::exp(std::lgamma(j + 1.0) - std::lgamma(j + 1.0 + mu)) * std::pow(h, p + 1.0) / (p + 1.0);
    }
  }
  return c * s * c.transpose();
}

// Target cell [f, f+hk] immediately right of source cell [e, f], e = f - hl.
inline Eigen::MatrixXd left_block_adjacent(const ElementBasis& basis, double hl, double hk, double mu) {
  const int n = basis.n();
  const Eigen::MatrixXd src_e = physical_coeffs(basis, hl);           // about e
  const Eigen::MatrixXd src_f = recenter_rows(src_e, hl);             // about f
  const Eigen::MatrixXd tgt_f = physical_coeffs(basis, hk);           // about f
  const Eigen::MatrixXd tgt_e = recenter_rows(tgt_f, -hl);            // about e
  Eigen::MatrixXd s_far(n, n), s_near(n, n);
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < n; ++j) {
      const double g = std::exp(std::lgamma(j + 1.0) - std::lgamma(j + 1.0 + mu));
      const double p = m + j + mu + 1.0;
      s_far(m, j) = g * (std::pow(hl + hk, p) - std::pow(hl, p)) / p;
      s_near(m, j) = g * std::pow(hk, p) / p;
    }
  }
  return tgt_e * s_far * src_e.transpose() - tgt_f * s_near * src_f.transpose();
}

// Separated cells: tensor Gauss-Legendre on the smooth kernel.
inline Eigen::MatrixXd left_block_far(const ElementBasis& basis, double src_left, double hl, double tgt_left,
                                      double hk, double mu, const QuadRule& gl, const Eigen::MatrixXd& vq) {
  const Eigen::Index nq = static_cast<Eigen::Index>(gl.size());
  Eigen::MatrixXd kern(nq, nq);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const double x = tgt_left + 0.5 * hk * (1.0 + gl.nodes[q]);
    for (Eigen::Index r = 0; r < nq; ++r) {
      const double s = src_left + 0.5 * hl * (1.0 + gl.nodes[r]);
      kern(q, r) = gl.weights[q] * gl.weights[r] * std::pow(x - s, mu - 1.0);
    }
  }
  (void)basis;
  return (0.25 * hk * hl / gamma_fn(mu)) * (vq.transpose() * kern * vq);
}

inline bool is_uniform(const Mesh1D& mesh) {
  const double h0 = mesh.h(0);
  for (int k = 1; k < mesh.K; ++k) {
    if (std::abs(mesh.h(k) - h0) > 1e-12 * h0) return false;
  }
  return true;
}

}  // namespace detail

inline constexpr int kFarFieldPoints = 14;

/// Assembles the dense Galerkin matrix of the Riesz fractional integral with
/// mu = 2 - alpha. Near-field blocks (same and adjacent cells) are integrated
/// in closed form; separated blocks use tensor Gauss-Legendre. The left-integral
/// matrix L is formed and B = riesz_scale (L + L^T), since the right integral
/// is the adjoint of the left one.
inline FracOperator assemble_frac_operator(const Mesh1D& mesh, const ElementBasis& basis, double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw ParameterError("assemble_frac_operator: alpha must lie in (1,2)");
  const double mu = 2.0 - alpha;
  FracOperator op;
  op.mu = mu;
  op.riesz_scale = riesz_scale_for(mu);
  op.layout = layout_of(mesh, basis);
  const int n = basis.n();
  const Eigen::Index ndof = op.layout.size();
  Eigen::MatrixXd lmat = Eigen::MatrixXd::Zero(ndof, ndof);

  const QuadRule gl = gauss_legendre(std::max(kFarFieldPoints, n + 2));
  const Eigen::MatrixXd vq = basis.eval_matrix(gl.nodes);
  const bool uniform = detail::is_uniform(mesh);
  std::map<int, Eigen::MatrixXd> by_gap;

  for (int k = 0; k < mesh.K; ++k) {
    for (int l = 0; l <= k; ++l) {
      const int gap = k - l;
      Eigen::MatrixXd blk;
      if (uniform) {
        auto it = by_gap.find(gap);
        if (it != by_gap.end()) {
          lmat.block(k * n, l * n, n, n) = it->second;
          continue;
        }
      }
      if (gap == 0) {
        blk = detail::left_block_same(basis, mesh.h(k), mu);
      } else if (gap == 1) {
        blk = detail::left_block_adjacent(basis, mesh.h(l), mesh.h(k), mu);
      } else {
        blk = detail::left_block_far(basis, mesh.left(l), mesh.h(l), mesh.left(k), mesh.h(k), mu, gl, vq);
      }
      if (uniform) by_gap.emplace(gap, blk);
      lmat.block(k * n, l * n, n, n) = blk;
    }
  }
  op.B = op.riesz_scale * (lmat + lmat.transpose());
  return op;
}

/// p with M p = B q.
inline FieldVector apply_frac(const FracOperator& op, const GlobalMass& mass, const FieldVector& q) {
  require_same_layout(op.layout, q.layout, "apply_frac");
  require_same_layout(op.layout, mass.layout(), "apply_frac");
  return FieldVector(q.layout, mass.solve(Eigen::VectorXd(op.B * q.values)));
}

namespace detail {

inline void check_poly_args(double alpha, std::span<const double> coeffs, double a, double b, double x) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw ParameterError("Caputo derivative: alpha must lie in (1,2)");
  if (coeffs.size() > 13) throw ParameterError("Caputo derivative: degree must be <= 12");
  if (!(x >= a && x <= b)) throw DomainError("Caputo derivative: x outside [a,b]");
}

}  // namespace detail

/// Left Caputo derivative of order alpha in (1,2) on [a,b] of the polynomial
/// sum_j coeffs[j] x^j, by the power rule about x = a.
inline double caputo_left_poly(double alpha, std::span<const double> coeffs, double a, double b, double x) {
  detail::check_poly_args(alpha, coeffs, a, b, x);
  const auto about_a = shifted_monomial_coeffs(coeffs, 0.0, a);
  double acc = 0.0;
  for (std::size_t j = 2; j < coeffs.size(); ++j) {
    const double g = std::exp(std::lgamma(j + 1.0) - std::lgamma(j + 1.0 - alpha));
    acc += about_a[j] * g * std::pow(x - a, static_cast<double>(j) - alpha);
  }
  return acc;
}

/// Right Caputo derivative of order alpha in (1,2) on [a,b].
inline double caputo_right_poly(double alpha, std::span<const double> coeffs, double a, double b, double x) {
  detail::check_poly_args(alpha, coeffs, a, b, x);
  const auto about_b = shifted_monomial_coeffs(coeffs, 0.0, b);
  double acc = 0.0;
  for (std::size_t j = 2; j < coeffs.size(); ++j) {
    const double g = std::exp(std::lgamma(j + 1.0) - std::lgamma(j + 1.0 - alpha));
    // (x-b)^j = (-1)^j (b-x)^j; the right derivative carries (-1)^2 = 1.
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sign * about_b[j] * g * std::pow(b - x, static_cast<double>(j) - alpha);
  }
  return acc;
}

/// (-Delta)^{alpha/2} p(x) for a global polynomial p on [a,b]:
/// [C_left p + C_right p] / (2 cos(pi alpha / 2)). alpha = 2 returns -p''(x).
inline double riesz_frac_deriv_poly(double alpha, std::span<const double> coeffs, double a, double b, double x) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ParameterError("riesz_frac_deriv_poly: alpha must lie in (1,2]");
  if (alpha == 2.0) {
    if (!(x >= a && x <= b)) throw DomainError("riesz_frac_deriv_poly: x outside [a,b]");
    double acc = 0.0;
    for (std::size_t j = 2; j < coeffs.size(); ++j) {
      acc += coeffs[j] * static_cast<double>(j * (j - 1)) * std::pow(x, static_cast<double>(j) - 2.0);
    }
    return -acc;
  }
  return (caputo_left_poly(alpha, coeffs, a, b, x) + caputo_right_poly(alpha, coeffs, a, b, x)) /
         (2.0 * std::cos(0.5 * std::numbers::pi * alpha));
}

// ---------------------------------------------------------------------------
// Binary cache of B: "FDGB" magic, u32 version, key (a, b, K, N, alpha),
// u64 key hash, u64 n_dof, then n_dof^2 row-major little-endian doubles.

struct FracCacheKey {
  double a = 0.0;
  double b = 0.0;
  std::uint32_t K = 0;
  std::uint32_t N = 0;
  double alpha = 0.0;

  bool operator==(const FracCacheKey&) const = default;

  std::uint64_t hash() const {
    // FNV-1a over the packed fields.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t len) {
      const auto* bytes = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
      }
    };
    mix(&a, sizeof a);
    mix(&b, sizeof b);
    mix(&K, sizeof K);
    mix(&N, sizeof N);
    mix(&alpha, sizeof alpha);
    return h;
  }

  std::string file_name() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "frac_%016llx.bin", static_cast<unsigned long long>(hash()));
    return buf;
  }
};

inline constexpr char kFracCacheMagic[4] = {'F', 'D', 'G', 'B'};
inline constexpr std::uint32_t kFracCacheVersion = 1;

inline void write_frac_cache(const std::string& path, const FracCacheKey& key, const FracOperator& op) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  const std::uint64_t h = key.hash();
  const std::uint64_t n = static_cast<std::uint64_t>(op.B.rows());
  out.write(kFracCacheMagic, 4);
  out.write(reinterpret_cast<const char*>(&kFracCacheVersion), sizeof kFracCacheVersion);
  out.write(reinterpret_cast<const char*>(&key.a), sizeof key.a);
  out.write(reinterpret_cast<const char*>(&key.b), sizeof key.b);
  out.write(reinterpret_cast<const char*>(&key.K), sizeof key.K);
  out.write(reinterpret_cast<const char*>(&key.N), sizeof key.N);
  out.write(reinterpret_cast<const char*>(&key.alpha), sizeof key.alpha);
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  // Eigen is column-major; B is symmetric but write rows explicitly anyway.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = op.B;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(n * n * sizeof(double)));
}

/// Returns nullopt if the file is missing, malformed, or keyed differently.
inline std::optional<FracOperator> read_frac_cache(const std::string& path, const FracCacheKey& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  FracCacheKey stored;
  std::uint64_t h = 0, n = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&stored.a), sizeof stored.a);
  in.read(reinterpret_cast<char*>(&stored.b), sizeof stored.b);
  in.read(reinterpret_cast<char*>(&stored.K), sizeof stored.K);
  in.read(reinterpret_cast<char*>(&stored.N), sizeof stored.N);
  in.read(reinterpret_cast<char*>(&stored.alpha), sizeof stored.alpha);
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kFracCacheMagic, 4) != 0 || version != kFracCacheVersion) return std::nullopt;
  if (!(stored == key) || h != key.hash()) return std::nullopt;
  if (n != static_cast<std::uint64_t>(key.K) * (key.N + 1)) return std::nullopt;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, n);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(n * n * sizeof(double)));
  if (!in) return std::nullopt;
  FracOperator op;
  op.mu = 2.0 - key.alpha;
  op.riesz_scale = riesz_scale_for(op.mu);
  op.layout = {static_cast<int>(key.K), static_cast<int>(key.N), key.a, key.b};
  op.B = rm;
  return op;
}

/// Loads B from cache_dir when present, otherwise assembles and stores it.
/// An empty cache_dir disables caching.
inline FracOperator cached_frac_operator(const Mesh1D& mesh, const ElementBasis& basis, double alpha,
                                         const std::string& cache_dir) {
  if (cache_dir.empty()) return assemble_frac_operator(mesh, basis, alpha);
  const FracCacheKey key{mesh.a, mesh.b, static_cast<std::uint32_t>(mesh.K), static_cast<std::uint32_t>(basis.N),
                         alpha};
  const std::string path = cache_dir + "/" + key.file_name();
  if (auto op = read_frac_cache(path, key)) return *op;
  FracOperator op = assemble_frac_operator(mesh, basis, alpha);
  write_frac_cache(path, key, op);
  return op;
}

}  // namespace fracddg

#endif  // FRACDDG_FRAC_OPS_HPP_
