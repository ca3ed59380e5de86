#ifndef FRACDDG_MODELS_HPP_
#define FRACDDG_MODELS_HPP_

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracddg/ddg.hpp"
#include "fracddg/errors.hpp"
#include "fracddg/frac_ops.hpp"
#include "fracddg/mesh_basis.hpp"

namespace fracddg {

enum class Family { kDiffusion, kConvectionDiffusion, kNls, kCoupledNls };

inline int component_count(Family f) {
  switch (f) {
    case Family::kDiffusion:
    case Family::kConvectionDiffusion:
      return 1;
    case Family::kNls:
      return 2;
    case Family::kCoupledNls:
      return 4;
  }
  return 1;
}

inline std::vector<std::string> component_roles(Family f) {
  switch (f) {
    case Family::kNls:
      return {"p_real", "q_imag"};
    case Family::kCoupledNls:
      return {"p", "q", "upsilon", "theta"};
    default:
      return {"u"};
  }
}

/// Coefficient that may depend on alpha: value, or scale * Gamma(m - alpha) / Gamma(m)
/// when gamma_m > 0.
struct Coef {
  double value = 1.0;
  double gamma_m = 0.0;
  double scale = 1.0;

  static Coef constant(double v) { return {v, 0.0, 1.0}; }
  static Coef gamma_ratio(double m, double scale = 1.0) { return {0.0, m, scale}; }

  double at(double alpha) const {
    if (gamma_m <= 0.0) return value;
    return scale * std::exp(std::lgamma(gamma_m - alpha) - std::lgamma(gamma_m));
  }
};

/// Full description of one simulation. Names refer to the libraries below.
struct ProblemSpec {
  Family family = Family::kDiffusion;
  double alpha = 1.5;
  Coef eps;
  Coef eps1, eps2, eps3, eps4;
  double varpi1 = 0.0;
  double varpi2 = 0.0;
  double beta = 1.0;
  std::string nonlinearity = "none";
  double a = -1.0;
  double b = 1.0;
  int K = 16;
  int N = 1;
  FluxOverride flux;
  std::string ic = "zero";
  std::string forcing = "none";
  std::string exact;
  bool exact_boundary = false;
  double T = 0.5;
  double cfl = 0.1;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  /// Schroedinger families drop the second-derivative jump term: with a
  /// symmetric interface form the linear operator has a real spectrum and the
  /// discrete mass is conserved.
  FluxParams flux_or_default() const {
    FluxParams f = default_flux(N);
    if (family == Family::kNls || family == Family::kCoupledNls) f.beta1 = 0.0;
    if (flux.beta0) f.beta0 = *flux.beta0;
    if (flux.beta1) f.beta1 = *flux.beta1;
    return f;
  }
};

inline void validate_spec(const ProblemSpec& s) {
  if (!(s.alpha > 1.0 && s.alpha <= 2.0)) throw ParameterError("alpha must lie in (1,2]");
  if (!(s.a < s.b)) throw DomainError("domain requires a < b");
  if (s.K < 1) throw ParameterError("K must be >= 1");
  if (s.N < 0 || s.N > kMaxDegree) throw ParameterError("N must lie in [0,8]");
  if (!(s.T > 0.0)) throw ParameterError("T must be positive");
  if (!(s.cfl > 0.0 && s.cfl < 1.0)) throw ParameterError("cfl must lie in (0,1)");
  validate_flux(s.flux_or_default());
}

// ---------------------------------------------------------------------------
// State

/// Components of the semi-discrete state with role labels.
struct StateStack {
  std::vector<FieldVector> comps;
  std::vector<std::string> roles;

  std::size_t size() const { return comps.size(); }
  FieldVector& operator[](std::size_t i) { return comps[i]; }
  const FieldVector& operator[](std::size_t i) const { return comps[i]; }

  StateStack zeros_like() const {
    StateStack z = *this;
    for (auto& c : z.comps) c.values.setZero();
    return z;
  }
  bool all_finite() const {
    for (const auto& c : comps) {
      if (!c.values.allFinite()) return false;
    }
    return true;
  }
  StateStack& operator+=(const StateStack& o) {
    for (std::size_t i = 0; i < comps.size(); ++i) comps[i] += o.comps[i];
    return *this;
  }
  StateStack& operator*=(double s) {
    for (auto& c : comps) c *= s;
    return *this;
  }
  /// this += s * o
  StateStack& axpy(double s, const StateStack& o) {
    for (std::size_t i = 0; i < comps.size(); ++i) comps[i].values += s * o.comps[i].values;
    return *this;
  }
  friend StateStack operator+(StateStack x, const StateStack& y) { return x += y; }
  friend StateStack operator*(double s, StateStack x) { return x *= s; }
};

// ---------------------------------------------------------------------------
// Discretization shared by all models of one (mesh, basis, alpha, flux).

struct Discretization {
  Mesh1D mesh;
  ElementBasis basis;
  GlobalMass mass;
  DdgOperators ops;
  std::optional<FracOperator> fop;
  FracLaplacian lap;
  CellQuadrature quad;
  double alpha;

  Discretization(Mesh1D m, ElementBasis bs, double alpha_, const FluxParams& flux, const std::string& cache_dir)
      : mesh(std::move(m)),
        basis(std::move(bs)),
        mass(mesh, basis),
        ops(assemble_q_operator(mesh, basis, flux)),
        fop(alpha_ < 2.0 ? std::optional<FracOperator>(cached_frac_operator(mesh, basis, alpha_, cache_dir))
                         : std::nullopt),
        lap(ops, fop ? &*fop : nullptr, mass),
        quad(mesh, basis, 2 * basis.N + 2),
        alpha(alpha_) {}

  Layout layout() const { return layout_of(mesh, basis); }
};

inline std::shared_ptr<const Discretization> build_discretization(const ProblemSpec& s,
                                                                  const std::string& cache_dir = "") {
  validate_spec(s);
  return std::make_shared<const Discretization>(build_mesh(s.a, s.b, s.K), build_basis(s.N), s.alpha,
                                                s.flux_or_default(), cache_dir);
}

// ---------------------------------------------------------------------------
// Polynomials used by the manufactured solutions (coefficients of x^j).

namespace poly {

inline std::vector<double> monomial(int degree, double scale = 1.0) {
  std::vector<double> c(degree + 1, 0.0);
  c[degree] = scale;
  return c;
}

/// scale * (x^2 - 1)^m
inline std::vector<double> bump(int m, double scale = 1.0) {
  std::vector<double> c(2 * m + 1, 0.0);
  double binom = 1.0;
  for (int j = 0; j <= m; ++j) {
    // (x^2)^j (-1)^{m-j} C(m,j)
    c[2 * j] = scale * binom * (((m - j) % 2 == 0) ? 1.0 : -1.0);
    binom = binom * (m - j) / (j + 1);
  }
  return c;
}

inline double eval(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

inline std::vector<double> derivative(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t j = 1; j < c.size(); ++j) d[j - 1] = static_cast<double>(j) * c[j];
  return d;
}

}  // namespace poly

// ---------------------------------------------------------------------------
// Exact solutions

using ComplexFn = std::function<std::complex<double>(double x, double t)>;

/// One complex-valued function per physical component (u, or u1 and u2).
struct ExactSolution {
  std::vector<ComplexFn> fields;
  bool classical_only = false;  // valid only at alpha = 2
};

namespace detail {

inline std::vector<double> manufactured_profile(const std::string& name) {
  if (name == "ex1") return poly::bump(4);
  if (name == "ex2") return poly::monomial(11);
  if (name == "ex3") return poly::bump(4, 0.01);
  if (name == "ex4") return poly::monomial(4, 0.01);
  if (name == "ex7") return poly::bump(5);
  if (name == "ex8") return poly::monomial(5);
  throw ParameterError("unknown manufactured solution '" + name + "'");
}

inline double sech(double x) { return 1.0 / std::cosh(x); }

// Bright soliton of i u_t + u_xx + |u|^2 u = 0 centred at x = -shift/r at t = 0,
// moving with speed 2v.
inline std::complex<double> bright_soliton(double r, double v, double shift, double x, double t) {
  const double amp = std::sqrt(2.0) * r * sech(r * (x - 2.0 * v * t) + shift);
  const double phase = v * x + (r * r - v * v) * t;
  return std::polar(amp, phase);
}

}  // namespace detail

inline ExactSolution exact_solution_library(const std::string& name, const ProblemSpec& spec) {
  ExactSolution ex;
  if (name == "ex1" || name == "ex2" || name == "ex3" || name == "ex4") {
    auto c = detail::manufactured_profile(name);
    ex.fields.push_back([c](double x, double t) { return std::complex<double>(std::exp(-t) * poly::eval(c, x), 0.0); });
    return ex;
  }
  if (name == "ex7" || name == "ex8") {
    auto c = detail::manufactured_profile(name);
    ComplexFn f = [c](double x, double t) { return std::polar(1.0, -t) * poly::eval(c, x); };
    ex.fields.push_back(f);
    if (name == "ex8") ex.fields.push_back(f);
    return ex;
  }
  if (name == "manakov") {
    const double r1 = spec.param("r1", 1.0);
    const double r2 = spec.param("r2", 1.0);
    const double v0 = spec.param("V0", 0.4);
    const double d = spec.param("D", 10.0);
    ex.fields.push_back([=](double x, double t) { return detail::bright_soliton(r1, v0, d, x, t); });
    ex.fields.push_back([=](double x, double t) { return detail::bright_soliton(r2, -v0, -d, x, t); });
    ex.classical_only = true;
    return ex;
  }
  throw ParameterError("unknown exact solution '" + name + "'");
}

// ---------------------------------------------------------------------------
// Initial data

/// Returns one complex function of x per physical component.
inline std::vector<std::function<std::complex<double>(double)>> initial_condition_library(const std::string& name,
                                                                                        const ProblemSpec& spec) {
  using Fn = std::function<std::complex<double>(double)>;
  const int physical = spec.family == Family::kCoupledNls ? 2 : 1;
  if (name == "zero") return std::vector<Fn>(physical, [](double) { return std::complex<double>(0.0); });
  if (name == "step") {
    return {[](double x) {
      if (x >= -1.0 && x < 0.0) return std::complex<double>(x + 1.0);
      if (x >= 0.0 && x <= 1.0) return std::complex<double>(2.0 * x);
      return std::complex<double>(0.0);
    }};
  }
  if (name == "gaussian") return {[](double x) { return std::complex<double>(std::exp(-2.0 * x * x)); }};
  if (name == "soliton") {
    const double x0 = spec.param("x0", 0.0);
    return {[x0](double x) { return std::polar(detail::sech(x - x0), 2.0 * (x - x0)); }};
  }
  if (name == "two_soliton") {
    const double c1 = spec.param("c1", 4.0), x1 = spec.param("x1", -10.0);
    const double c2 = spec.param("c2", -4.0), x2 = spec.param("x2", 10.0);
    return {[=](double x) {
      return std::polar(detail::sech(x - x1), 0.5 * c1 * (x - x1)) +
             std::polar(detail::sech(x - x2), 0.5 * c2 * (x - x2));
    }};
  }
  if (name == "coupled_solitons") {
    // u1 enters from the left moving right, u2 from the right moving left.
    const double r1 = spec.param("r1", 1.0), r2 = spec.param("r2", 1.0);
    const double v0 = spec.param("V0", 0.4), d = spec.param("D", 10.0);
    return {[=](double x) { return detail::bright_soliton(r1, v0, d, x, 0.0); },
            [=](double x) { return detail::bright_soliton(r2, -v0, -d, x, 0.0); }};
  }
  // Manufactured and exact solutions at t = 0.
  const ExactSolution ex = exact_solution_library(name, spec);
  std::vector<Fn> out;
  for (const auto& f : ex.fields) out.push_back([f](double x) { return f(x, 0.0); });
  return out;
}

/// L2 projection of complex initial data into the split real state.
inline StateStack initial_state(const ProblemSpec& spec, const Discretization& disc) {
  StateStack s;
  s.roles = component_roles(spec.family);
  if (spec.ic == "random") {
    std::mt19937_64 rng(static_cast<std::uint64_t>(spec.param("seed", 1.0)));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (std::size_t c = 0; c < s.roles.size(); ++c) {
      FieldVector v(disc.layout());
      for (Eigen::Index i = 0; i < v.values.size(); ++i) v.values(i) = uni(rng);
      s.comps.push_back(v);
    }
    return s;
  }
  const auto ics = initial_condition_library(spec.ic, spec);
  const bool complex_state = spec.family == Family::kNls || spec.family == Family::kCoupledNls;
  for (const auto& f : ics) {
    s.comps.push_back(project([&f](double x) { return f(x).real(); }, disc.mesh, disc.basis));
    if (complex_state) s.comps.push_back(project([&f](double x) { return f(x).imag(); }, disc.mesh, disc.basis));
  }
  if (static_cast<int>(s.comps.size()) != component_count(spec.family)) {
    throw ParameterError("initial condition '" + spec.ic + "' does not match the problem family");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Forcing: sources in the evolution form d/dt(state) = L(state) + s(x,t), each a
// sum of separable terms time(t) * shape(x) acting on one real component.

struct SourceTerm {
  int component = 0;
  std::function<double(double)> time;
  std::function<double(double)> shape;
};

struct Forcing {
  std::vector<SourceTerm> terms;

  double value(int component, double x, double t) const {
    double acc = 0.0;
    for (const auto& term : terms) {
      if (term.component == component) acc += term.time(t) * term.shape(x);
    }
    return acc;
  }
};

namespace detail {

inline std::function<double(double)> riesz_of(const std::vector<double>& c, const ProblemSpec& spec) {
  const double alpha = spec.alpha, a = spec.a, b = spec.b;
  return [c, alpha, a, b](double x) { return riesz_frac_deriv_poly(alpha, c, a, b, x); };
}

}  // namespace detail

/// Manufactured sources for the named problems. For the Schroedinger families
/// the source is -i g where g is the right-hand side of the equation written as
/// i u_t - eps1 (-Delta)^{alpha/2} u + ... = g, computed from the exact solution.
inline Forcing forcing_library(const std::string& name, const ProblemSpec& spec) {
  Forcing fr;
  if (name == "none") return fr;
  const double al = spec.alpha;
  if (name == "ex1" || name == "ex2" || name == "ex3" || name == "ex4") {
    const auto c = detail::manufactured_profile(name);
    const double eps = spec.eps.at(al);
    const auto riesz = detail::riesz_of(c, spec);
    fr.terms.push_back({0, [](double t) { return std::exp(-t); },
                        [c, eps, riesz](double x) { return -poly::eval(c, x) + eps * riesz(x); }});
    if (name == "ex3" || name == "ex4") {
      const auto dc = poly::derivative(c);
      fr.terms.push_back({0, [](double t) { return std::exp(-2.0 * t); },
                          [c, dc](double x) { return poly::eval(c, x) * poly::eval(dc, x); }});
    }
    return fr;
  }
  if (name == "ex7") {
    // g = e^{-it} G, G = u0 - eps1 R u0 + eps2 u0^3; -i g = (-sin t - i cos t) G.
    const auto c = detail::manufactured_profile(name);
    const double e1 = spec.eps1.at(al), e2 = spec.eps2.at(al);
    const auto riesz = detail::riesz_of(c, spec);
    auto shape = [c, e1, e2, riesz](double x) {
      const double u = poly::eval(c, x);
      return u - e1 * riesz(x) + e2 * u * u * u;
    };
    fr.terms.push_back({0, [](double t) { return -std::sin(t); }, shape});
    fr.terms.push_back({1, [](double t) { return -std::cos(t); }, shape});
    return fr;
  }
  if (name == "ex8") {
    // Both components equal e^{-it} x^5 and f = g = |u1|^2 + |u2|^2 = 2 u0^2.
    const auto c = detail::manufactured_profile(name);
    const auto riesz = detail::riesz_of(c, spec);
    const double w = spec.varpi1 + spec.varpi2;
    auto make = [&](double ed, double en) {
      return [c, riesz, w, ed, en](double x) {
        const double u = poly::eval(c, x);
        return u - ed * riesz(x) + w * u + en * 2.0 * u * u * u;
      };
    };
    const auto g1 = make(spec.eps1.at(al), spec.eps2.at(al));
    const auto g2 = make(spec.eps3.at(al), spec.eps4.at(al));
    fr.terms.push_back({0, [](double t) { return -std::sin(t); }, g1});
    fr.terms.push_back({1, [](double t) { return -std::cos(t); }, g1});
    fr.terms.push_back({2, [](double t) { return -std::sin(t); }, g2});
    fr.terms.push_back({3, [](double t) { return -std::cos(t); }, g2});
    return fr;
  }
  throw ParameterError("unknown forcing '" + name + "'");
}

/// Forcing with each spatial shape projected once into the broken space.
class ProjectedForcing {
 public:
  ProjectedForcing() = default;
  ProjectedForcing(const Forcing& f, const Discretization& disc) {
    for (const auto& term : f.terms) {
      comps_.push_back(term.component);
      times_.push_back(term.time);
      shapes_.push_back(project(term.shape, disc.mesh, disc.basis).values);
    }
  }
  bool empty() const { return comps_.empty(); }
  void add_to(double t, StateStack& rhs) const {
    for (std::size_t i = 0; i < comps_.size(); ++i) rhs[comps_[i]].values += times_[i](t) * shapes_[i];
  }

 private:
  std::vector<int> comps_;
  std::vector<std::function<double(double)>> times_;
  std::vector<Eigen::VectorXd> shapes_;
};

/// Dirichlet data per real component: exact traces when requested, else zero.
inline std::vector<BoundarySpec> boundary_library(const ProblemSpec& spec) {
  const int n = component_count(spec.family);
  std::vector<BoundarySpec> bcs(n);
  if (!spec.exact_boundary) return bcs;
  if (spec.exact.empty()) throw ParameterError("exact boundary data requested without an exact solution");
  const ExactSolution ex = exact_solution_library(spec.exact, spec);
  const bool complex_state = spec.family == Family::kNls || spec.family == Family::kCoupledNls;
  const double a = spec.a, b = spec.b;
  for (std::size_t f = 0; f < ex.fields.size(); ++f) {
    const ComplexFn u = ex.fields[f];
    if (complex_state) {
      bcs[2 * f] = {[u, a](double t) { return u(a, t).real(); }, [u, b](double t) { return u(b, t).real(); }};
      bcs[2 * f + 1] = {[u, a](double t) { return u(a, t).imag(); }, [u, b](double t) { return u(b, t).imag(); }};
    } else {
      bcs[f] = {[u, a](double t) { return u(a, t).real(); }, [u, b](double t) { return u(b, t).real(); }};
    }
  }
  return bcs;
}

// ---------------------------------------------------------------------------
// Right-hand sides

using ScalarNonlinearity = std::function<double(double rho)>;
using PairNonlinearity = std::function<double(double rho1, double rho2)>;

inline ScalarNonlinearity nls_nonlinearity(const std::string& name) {
  if (name == "cubic") return [](double rho) { return rho; };
  if (name == "linear") return [](double) { return 1.0; };
  if (name == "none") return [](double) { return 0.0; };
  throw ParameterError("unknown NLS nonlinearity '" + name + "'");
}

/// f and g of the coupled system.
inline std::pair<PairNonlinearity, PairNonlinearity> coupled_nonlinearity(const std::string& name, double beta) {
  if (name == "sum") {
    auto f = [](double r1, double r2) { return r1 + r2; };
    return {f, f};
  }
  if (name == "manakov") {
    return {[beta](double r1, double r2) { return r1 + beta * r2; },
            [beta](double r1, double r2) { return beta * r1 + r2; }};
  }
  if (name == "none") {
    auto z = [](double, double) { return 0.0; };
    return {z, z};
  }
  throw ParameterError("unknown coupled nonlinearity '" + name + "'");
}

/// u_t = eps p - d_x f(u) + g.
class DiffusionModel {
 public:
  DiffusionModel(std::shared_ptr<const Discretization> disc, const ProblemSpec& spec)
      : disc_(std::move(disc)),
        eps_(spec.eps.at(spec.alpha)),
        bc_(boundary_library(spec)[0]),
        forcing_(forcing_library(spec.forcing, spec), *disc_) {
    if (spec.family == Family::kConvectionDiffusion) {
      if (spec.nonlinearity == "burgers") {
        conv_ = burgers_flux();
      } else if (spec.nonlinearity != "none") {
        throw ParameterError("unknown convective flux '" + spec.nonlinearity + "'");
      }
    }
  }

  StateStack operator()(double t, const StateStack& s) const {
    const double gl = bc_.left_at(t), gr = bc_.right_at(t);
    StateStack r = s.zeros_like();
    r[0].values = eps_ * disc_->lap.apply(s[0].values, gl, gr);
    if (conv_) r[0] += convection_rhs(s[0], *conv_, disc_->mesh, disc_->basis, disc_->mass, gl, gr);
    forcing_.add_to(t, r);
    return r;
  }

  const Discretization& disc() const { return *disc_; }

 private:
  std::shared_ptr<const Discretization> disc_;
  double eps_;
  BoundarySpec bc_;
  std::optional<ConvectiveFlux> conv_;
  ProjectedForcing forcing_;
};

/// Single Schroedinger equation i u_t - eps1 (-Delta)^{alpha/2} u + eps2 f(|u|^2) u = g
/// with u = p + i q; F denotes the discrete -(-Delta)^{alpha/2}.
class NlsModel {
 public:
  NlsModel(std::shared_ptr<const Discretization> disc, const ProblemSpec& spec)
      : disc_(std::move(disc)),
        e1_(spec.eps1.at(spec.alpha)),
        e2_(spec.eps2.at(spec.alpha)),
        f_(nls_nonlinearity(spec.nonlinearity)),
        bcs_(boundary_library(spec)),
        forcing_(forcing_library(spec.forcing, spec), *disc_) {}

  StateStack operator()(double t, const StateStack& s) const {
    const auto& p = s[0].values;
    const auto& q = s[1].values;
    StateStack r = s.zeros_like();
    Eigen::MatrixXd u(p.size(), 2);
    u << p, q;
    const Eigen::MatrixXd lap = disc_->lap.apply_columns(u, {bcs_[0].left_at(t), bcs_[1].left_at(t)},
                                                         {bcs_[0].right_at(t), bcs_[1].right_at(t)});
    const auto fp = lap.col(0);
    const auto fq = lap.col(1);
    // Nonlinear terms are L2-projected with a rule exact for cubic products.
    const auto& quad = disc_->quad;
    const Eigen::ArrayXXd pq = quad.values(p), qq = quad.values(q);
    const Eigen::ArrayXXd nl = (pq.square() + qq.square()).unaryExpr(f_);
    r[0].values = -e1_ * fq - e2_ * disc_->mass.solve(quad.load(nl * qq));
    r[1].values = e1_ * fp + e2_ * disc_->mass.solve(quad.load(nl * pq));
    forcing_.add_to(t, r);
    return r;
  }

  const Discretization& disc() const { return *disc_; }

 private:
  std::shared_ptr<const Discretization> disc_;
  double e1_, e2_;
  ScalarNonlinearity f_;
  std::vector<BoundarySpec> bcs_;
  ProjectedForcing forcing_;
};

/// Coupled system
///   i u1_t - eps1 (-Delta)^{alpha/2} u1 + varpi1 u1 + varpi2 u2 + eps2 f u1 = g1,
///   i u2_t - eps3 (-Delta)^{alpha/2} u2 + varpi2 u1 + varpi1 u2 + eps4 g u2 = g2,
/// with u1 = p + i q, u2 = upsilon + i theta.
class CoupledNlsModel {
 public:
  CoupledNlsModel(std::shared_ptr<const Discretization> disc, const ProblemSpec& spec)
      : disc_(std::move(disc)),
        e1_(spec.eps1.at(spec.alpha)),
        e2_(spec.eps2.at(spec.alpha)),
        e3_(spec.eps3.at(spec.alpha)),
        e4_(spec.eps4.at(spec.alpha)),
        w1_(spec.varpi1),
        w2_(spec.varpi2),
        bcs_(boundary_library(spec)),
        forcing_(forcing_library(spec.forcing, spec), *disc_) {
    std::tie(f_, g_) = coupled_nonlinearity(spec.nonlinearity, spec.beta);
  }

  StateStack operator()(double t, const StateStack& s) const {
    Eigen::MatrixXd u(s[0].values.size(), 4);
    std::vector<double> gl(4), gr(4);
    for (int c = 0; c < 4; ++c) {
      u.col(c) = s[c].values;
      gl[c] = bcs_[c].left_at(t);
      gr[c] = bcs_[c].right_at(t);
    }
    const Eigen::MatrixXd lapu = disc_->lap.apply_columns(u, gl, gr);
    auto lap = [&lapu](int c) { return lapu.col(c); };
    const auto& quad = disc_->quad;
    const Eigen::ArrayXXd pq = quad.values(s[0].values), qq = quad.values(s[1].values);
    const Eigen::ArrayXXd vq = quad.values(s[2].values), tq = quad.values(s[3].values);
    const Eigen::ArrayXXd rho1 = pq.square() + qq.square();
    const Eigen::ArrayXXd rho2 = vq.square() + tq.square();
    Eigen::ArrayXXd fa(rho1.rows(), rho1.cols()), ga(rho1.rows(), rho1.cols());
    for (Eigen::Index i = 0; i < rho1.size(); ++i) {
      fa(i) = f_(rho1(i), rho2(i));
      ga(i) = g_(rho1(i), rho2(i));
    }
    auto proj = [&](const Eigen::ArrayXXd& g) { return disc_->mass.solve(quad.load(g)); };
    const auto& p = s[0].values;
    const auto& q = s[1].values;
    const auto& v = s[2].values;
    const auto& th = s[3].values;
    StateStack r = s.zeros_like();
    r[0].values = -e1_ * lap(1) - w1_ * q - w2_ * th - e2_ * proj(fa * qq);
    r[1].values = e1_ * lap(0) + w1_ * p + w2_ * v + e2_ * proj(fa * pq);
    r[2].values = -e3_ * lap(3) - w2_ * q - w1_ * th - e4_ * proj(ga * tq);
    r[3].values = e3_ * lap(2) + w2_ * p + w1_ * v + e4_ * proj(ga * vq);
    forcing_.add_to(t, r);
    return r;
  }

  const Discretization& disc() const { return *disc_; }

 private:
  std::shared_ptr<const Discretization> disc_;
  double e1_, e2_, e3_, e4_, w1_, w2_;
  PairNonlinearity f_, g_;
  std::vector<BoundarySpec> bcs_;
  ProjectedForcing forcing_;
};

/// Type-erased right-hand side for the integrator.
using Rhs = std::function<StateStack(double, const StateStack&)>;

inline Rhs make_rhs(std::shared_ptr<const Discretization> disc, const ProblemSpec& spec) {
  switch (spec.family) {
    case Family::kDiffusion:
    case Family::kConvectionDiffusion:
      return DiffusionModel(std::move(disc), spec);
    case Family::kNls:
      return NlsModel(std::move(disc), spec);
    case Family::kCoupledNls:
      return CoupledNlsModel(std::move(disc), spec);
  }
  throw ParameterError("unknown family");
}

/// L2 error per physical component: sqrt(|Re - p|^2 + |Im - q|^2) for complex fields.
inline std::vector<double> component_errors(const StateStack& s, const ExactSolution& ex, const ProblemSpec& spec,
                                            const Discretization& disc, double t) {
  std::vector<double> errs;
  const bool complex_state = spec.family == Family::kNls || spec.family == Family::kCoupledNls;
  for (std::size_t f = 0; f < ex.fields.size(); ++f) {
    const ComplexFn u = ex.fields[f];
    if (complex_state) {
      const double er = l2_error(s[2 * f], [&](double x) { return u(x, t).real(); }, disc.mesh, disc.basis);
      const double ei = l2_error(s[2 * f + 1], [&](double x) { return u(x, t).imag(); }, disc.mesh, disc.basis);
      errs.push_back(std::hypot(er, ei));
    } else {
      errs.push_back(l2_error(s[f], [&](double x) { return u(x, t).real(); }, disc.mesh, disc.basis));
    }
  }
  return errs;
}

/// sum over components of ||c||^2.
inline double squared_norm(const StateStack& s, const Discretization& disc) {
  double acc = 0.0;
  for (const auto& c : s.comps) acc += disc.mass.inner(c.values, c.values);
  return acc;
}

// ---------------------------------------------------------------------------
// Named configurations of the numerical examples.

inline ProblemSpec problem_preset(const std::string& name) {
  ProblemSpec s;
  if (name == "ex1") {
    s.family = Family::kDiffusion;
    s.eps = Coef::gamma_ratio(9.0);
    s.a = -1.0, s.b = 1.0, s.T = 0.5;
    s.ic = s.forcing = s.exact = "ex1";
  } else if (name == "ex2") {
    s.family = Family::kDiffusion;
    s.alpha = 1.1;
    s.eps = Coef::gamma_ratio(12.0);
    s.a = 0.0, s.b = 1.0, s.T = 0.5;
    s.ic = s.forcing = s.exact = "ex2";
    s.exact_boundary = true;
  } else if (name == "ex3" || name == "ex4") {
    s.family = Family::kConvectionDiffusion;
    s.nonlinearity = "burgers";
    s.eps = Coef::gamma_ratio(name == "ex3" ? 9.0 : 5.0);
    s.a = name == "ex3" ? -1.0 : 0.0;
    s.b = 1.0, s.T = 1.0;
    s.ic = s.forcing = s.exact = name;
    s.exact_boundary = name == "ex4";
  } else if (name == "ex5" || name == "ex6") {
    s.family = Family::kConvectionDiffusion;
    s.nonlinearity = "burgers";
    s.eps = Coef::constant(1.0);
    s.a = -10.0, s.b = 10.0, s.T = 3.0;
    s.N = 2;
    s.K = name == "ex5" ? 100 : 50;
    s.ic = name == "ex5" ? "step" : "gaussian";
  } else if (name == "ex7") {
    s.family = Family::kNls;
    s.nonlinearity = "cubic";
    s.eps1 = Coef::gamma_ratio(11.0);
    s.eps2 = Coef::constant(1.0);
    s.a = -1.0, s.b = 1.0, s.T = 0.5;
    s.cfl = 0.05;
    s.ic = s.forcing = s.exact = "ex7";
  } else if (name == "ex8") {
    s.family = Family::kCoupledNls;
    s.alpha = 1.1;
    s.nonlinearity = "sum";
    s.eps1 = s.eps3 = Coef::gamma_ratio(6.0, 0.5);
    s.eps2 = s.eps4 = Coef::constant(1.0);
    s.varpi1 = s.varpi2 = 1.0;
    s.a = 0.0, s.b = 1.0, s.T = 0.5;
    s.cfl = 0.05;
    s.ic = s.forcing = s.exact = "ex8";
    s.exact_boundary = true;
  } else if (name == "soliton" || name == "two_soliton") {
    s.family = Family::kNls;
    s.nonlinearity = "cubic";
    s.eps1 = Coef::constant(name == "soliton" ? 2.0 : 1.0);
    s.eps2 = Coef::constant(2.0);
    s.a = -25.0, s.b = 25.0;
    s.K = 200, s.N = 2;
    s.T = name == "soliton" ? 1.0 : 5.0;
    s.cfl = 0.05;
    s.ic = name;
  } else if (name == "ex9" || name == "ex10") {
    s.family = Family::kCoupledNls;
    s.a = -40.0, s.b = 40.0;
    s.K = 200, s.N = 2;
    s.T = 25.0;
    s.cfl = 0.05;
    s.eps1 = s.eps2 = s.eps3 = s.eps4 = Coef::constant(1.0);
    s.ic = "coupled_solitons";
    if (name == "ex9") {
      s.nonlinearity = "sum";
      s.varpi1 = 1.0;
      s.varpi2 = 1.0;
    } else {
      s.nonlinearity = "manakov";
      s.beta = 1.0;
      s.exact = "manakov";
    }
  } else {
    throw ParameterError("unknown problem preset '" + name + "'");
  }
  return s;
}

}  // namespace fracddg

#endif  // FRACDDG_MODELS_HPP_
