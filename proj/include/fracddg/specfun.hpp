#ifndef FRACDDG_SPECFUN_HPP_
#define FRACDDG_SPECFUN_HPP_

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracddg/errors.hpp"

namespace fracddg {

/// Euler Gamma function for positive real arguments.
inline double gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("gamma_fn: argument must be positive and finite, got " +
                      std::to_string(x));
  }
  return std::tgamma(x);
}

enum class QuadKind { kLegendre, kJacobi };

/// Gauss rule on [-1,1] for the weight (1-t)^a_exp (1+t)^b_exp.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  QuadKind kind = QuadKind::kLegendre;
  double a_exp = 0.0;
  double b_exp = 0.0;

  std::size_t size() const { return nodes.size(); }

  /// Sum of w_i f(t_i).
  template <class F>
  auto apply(F&& f) const -> decltype(f(0.0)) {
    decltype(f(0.0)) acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Integral of (1-t)^a (1+t)^b over [-1,1].
inline double jacobi_weight_mass(double a, double b) {
  return std::exp((a + b + 1.0) * std::numbers::ln2 + std::lgamma(a + 1.0) +
                  std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
}

/// Jacobi polynomial P_n^{(a,b)}(x) and its derivative, by the three-term
/// recurrence.
inline std::pair<double, double> jacobi_poly(int n, double a, double b, double x) {
  auto value = [a, b, x](int m) {
    if (m == 0) return 1.0;
    double p0 = 1.0;
    double p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    for (int k = 2; k <= m; ++k) {
      const double s = 2.0 * k + a + b;
      const double c1 = 2.0 * k * (k + a + b) * (s - 2.0);
      const double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
      const double c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
      const double p2 = (c2 * p1 - c3 * p0) / c1;
      p0 = p1;
      p1 = p2;
    }
    return p1;
  };
  const double p = value(n);
  if (n == 0) return {p, 0.0};
  // d/dx P_n^{(a,b)} = (n+a+b+1)/2 P_{n-1}^{(a+1,b+1)}
  auto shifted = jacobi_poly(n - 1, a + 1.0, b + 1.0, x);
  return {p, 0.5 * (n + a + b + 1.0) * shifted.first};
}

namespace detail {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix, nodes then
// polished by Newton on P_n^{(a,b)}.
inline QuadRule golub_welsch(int n, double a, double b) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  const double ab = a + b;
  for (int k = 0; k < n; ++k) {
    double diag;
    if (k == 0) {
      diag = (b - a) / (ab + 2.0);
    } else {
      const double s = 2.0 * k + ab;
      diag = (b * b - a * a) / (s * (s + 2.0));
    }
    jac(k, k) = diag;
    if (k + 1 < n) {
      const int m = k + 1;
      double beta;
      if (m == 1) {
        beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
      } else {
        const double s = 2.0 * m + ab;
        beta = 4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0));
      }
      jac(k, k + 1) = jac(k + 1, k) = std::sqrt(beta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  const Eigen::VectorXd& lam = eig.eigenvalues();

  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double log_const = (ab + 1.0) * std::numbers::ln2 + std::lgamma(n + a + 1.0) +
                           std::lgamma(n + b + 1.0) - std::lgamma(n + ab + 1.0) -
                           std::lgamma(n + 1.0);
  for (int i = 0; i < n; ++i) {
    double x = lam(i);
    for (int it = 0; it < 8; ++it) {
      auto [p, dp] = jacobi_poly(n, a, b, x);
      if (dp == 0.0) break;
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = jacobi_poly(n, a, b, x).second;
    rule.nodes[i] = x;
    rule.weights[i] = std::exp(log_const) / ((1.0 - x * x) * dp * dp);
  }
  // Eigenvalues come back ascending; Newton keeps them in their brackets.
  return rule;
}

}  // namespace detail

inline constexpr int kMaxQuadPoints = 64;

/// n-point Gauss-Legendre rule, exact for polynomials of degree <= 2n-1.
inline QuadRule gauss_legendre(int n) {
  if (n < 1 || n > kMaxQuadPoints) {
    throw ParameterError("gauss_legendre: n must be in [1, 64], got " + std::to_string(n));
  }
  QuadRule rule = detail::golub_welsch(n, 0.0, 0.0);
  // Enforce exact symmetry of the Legendre rule.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  rule.kind = QuadKind::kLegendre;
  return rule;
}

/// n-point Gauss-Jacobi rule for the weight (1-t)^a_exp (1+t)^b_exp.
inline QuadRule gauss_jacobi(int n, double a_exp, double b_exp) {
  if (n < 1 || n > kMaxQuadPoints) {
    throw ParameterError("gauss_jacobi: n must be in [1, 64], got " + std::to_string(n));
  }
  if (!(a_exp > -1.0) || !(b_exp > -1.0)) {
    throw ParameterError("gauss_jacobi: exponents must exceed -1");
  }
  if (a_exp == 0.0 && b_exp == 0.0) return gauss_legendre(n);
  QuadRule rule = detail::golub_welsch(n, a_exp, b_exp);
  rule.kind = QuadKind::kJacobi;
  rule.a_exp = a_exp;
  rule.b_exp = b_exp;
  return rule;
}

/// Polynomial sum_j coeffs[j] (x - center)^j.
struct ShiftedPoly {
  double center = 0.0;
  std::vector<double> coeffs;

  double operator()(double x) const {
    double acc = 0.0;
    const double y = x - center;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * y + *it;
    return acc;
  }
  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Re-expands coefficients given in powers of (x - old_center) into powers of
/// (x - new_center) by exact binomial expansion (Horner-style synthetic
/// division, no explicit binomials).
inline std::vector<double> shifted_monomial_coeffs(std::span<const double> coeffs,
                                                   double old_center, double new_center) {
  std::vector<double> c(coeffs.begin(), coeffs.end());
  const double shift = new_center - old_center;
  const std::size_t n = c.size();
  // p(x) = sum c_j y^j with y = z + shift, z = x - new_center.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (std::size_t j = n - 1; j > k; --j) c[j - 1] += shift * c[j];
  }
  return c;
}

inline ShiftedPoly recenter(const ShiftedPoly& p, double new_center) {
  return {new_center, shifted_monomial_coeffs(p.coeffs, p.center, new_center)};
}

}  // namespace fracddg

#endif  // FRACDDG_SPECFUN_HPP_
