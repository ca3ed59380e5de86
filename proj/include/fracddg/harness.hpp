#ifndef FRACDDG_HARNESS_HPP_
#define FRACDDG_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fracddg/ddg.hpp"
#include "fracddg/errors.hpp"
#include "fracddg/models.hpp"
#include "fracddg/timestep.hpp"

namespace fracddg {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Orders and tables

/// order_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i), one entry per successive pair.
inline std::vector<double> compute_order(const std::vector<double>& errors, const std::vector<double>& h) {
  if (errors.size() != h.size()) throw DataError("compute_order: errors and h differ in length");
  if (errors.size() < 2) throw DataError("compute_order: need at least two entries");
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) throw DataError("compute_order: errors must be positive");
    if (!(h[i] > 0.0) || !std::isfinite(h[i])) throw DataError("compute_order: h must be positive");
  }
  std::vector<double> out;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (h[i] == h[i - 1]) throw DataError("compute_order: successive h values coincide");
    out.push_back(std::log(errors[i - 1] / errors[i]) / std::log(h[i - 1] / h[i]));
  }
  return out;
}

struct ConvergenceRow {
  double alpha = 0.0;
  int N = 0;
  int K = 0;
  double dt = 0.0;
  double l2_error = 0.0;
  std::optional<double> order;
  double wall_time_ms = 0.0;
};

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kConvergenceHeader = "alpha,N,K,dt,l2_error,order,wall_time_ms";

inline void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << kConvergenceHeader << '\n';
  for (const auto& r : rows) {
    out << format_g17(r.alpha) << ',' << r.N << ',' << r.K << ',' << format_g17(r.dt) << ','
        << format_g17(r.l2_error) << ',' << (r.order ? format_g17(*r.order) : std::string()) << ','
        << format_g17(r.wall_time_ms) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::string name = "run";
  std::string problem;
  ProblemSpec spec;
  std::vector<double> alpha_list;
  std::vector<int> N_list;
  std::vector<int> K_list;
  std::vector<double> snapshot_times;
  std::optional<double> dt;
  std::uint64_t seed = 0;
  std::string cache_dir;
  bool stability_cap = true;
  bool wall_time = true;
  int history_points = 200;
};

struct AdmissibilityConfig {
  std::string name = "admissibility";
  int N = 1;
  FluxParams flux;
  int samples = 100000;
  double gamma = 0.5;
  double mu = 0.25;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

inline const std::set<std::string>& run_config_keys() {
  static const std::set<std::string> keys = {
      "name",   "problem",  "family",  "alpha",          "alpha_list", "eps",       "eps1",          "eps2",
      "eps3",   "eps4",     "varpi1",  "varpi2",         "beta",       "nonlinearity", "a",          "b",
      "K",      "N",        "K_list",  "N_list",         "flux",       "ic",        "forcing",       "exact",
      "exact_boundary",     "T",       "cfl",            "dt",         "snapshot_times", "params",   "seed",
      "cache_dir",          "stability_cap",             "wall_time",  "history_points"};
  return keys;
}

inline void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline double get_number(const Json& j, const std::string& key) {
  if (!j.at(key).is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline int get_int(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v.get<int>();
}

inline std::string get_string(const Json& j, const std::string& key) {
  if (!j.at(key).is_string()) throw ConfigError("'" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

inline bool get_bool(const Json& j, const std::string& key) {
  if (!j.at(key).is_boolean()) throw ConfigError("'" + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

inline std::uint64_t get_u64(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

template <class T, class Get>
std::vector<T> get_list(const Json& j, const std::string& key, Get get_one) {
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError("'" + key + "' must be an array");
  if (v.empty()) throw ConfigError("'" + key + "' must not be empty");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Json wrapped = {{key, v[i]}};
    out.push_back(get_one(wrapped, key));
  }
  return out;
}

inline Coef get_coef(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (v.is_number()) return Coef::constant(v.get<double>());
  if (v.is_object()) {
    reject_unknown(v, {"gamma_m", "scale"}, "'" + key + "'");
    if (!v.contains("gamma_m")) throw ConfigError("'" + key + "' needs gamma_m");
    const double m = get_number(v, "gamma_m");
    const double scale = v.contains("scale") ? get_number(v, "scale") : 1.0;
    if (!(m > 2.0)) throw ConfigError("'" + key + "': gamma_m must exceed 2");
    return Coef::gamma_ratio(m, scale);
  }
  throw ConfigError("'" + key + "' must be a number or {gamma_m, scale}");
}

inline Family parse_family(const std::string& s) {
  if (s == "diffusion") return Family::kDiffusion;
  if (s == "convection_diffusion") return Family::kConvectionDiffusion;
  if (s == "nls") return Family::kNls;
  if (s == "coupled_nls") return Family::kCoupledNls;
  throw ConfigError("unknown family '" + s + "'");
}

}  // namespace detail

inline std::string family_name(Family f) {
  switch (f) {
    case Family::kDiffusion:
      return "diffusion";
    case Family::kConvectionDiffusion:
      return "convection_diffusion";
    case Family::kNls:
      return "nls";
    case Family::kCoupledNls:
      return "coupled_nls";
  }
  return "unknown";
}

/// Checks that every named ingredient resolves for the given spec.
inline void validate_names(const ProblemSpec& s) {
  validate_spec(s);
  switch (s.family) {
    case Family::kDiffusion:
      if (s.nonlinearity != "none") throw ParameterError("diffusion problems take no nonlinearity");
      break;
    case Family::kConvectionDiffusion:
      if (s.nonlinearity != "burgers" && s.nonlinearity != "none") {
        throw ParameterError("unknown convective flux '" + s.nonlinearity + "'");
      }
      break;
    case Family::kNls:
      (void)nls_nonlinearity(s.nonlinearity);
      break;
    case Family::kCoupledNls:
      (void)coupled_nonlinearity(s.nonlinearity, s.beta);
      break;
  }
  if (s.ic != "random") {
    const auto ics = initial_condition_library(s.ic, s);
    const int per_field = (s.family == Family::kNls || s.family == Family::kCoupledNls) ? 2 : 1;
    if (static_cast<int>(ics.size()) * per_field != component_count(s.family)) {
      throw ParameterError("initial condition '" + s.ic + "' does not match the problem family");
    }
  }
  const Forcing fr = forcing_library(s.forcing, s);
  for (const auto& term : fr.terms) {
    if (term.component >= component_count(s.family)) {
      throw ParameterError("forcing '" + s.forcing + "' does not match the problem family");
    }
  }
  if (!s.exact.empty()) {
    const ExactSolution ex = exact_solution_library(s.exact, s);
    const int per_field = (s.family == Family::kNls || s.family == Family::kCoupledNls) ? 2 : 1;
    if (static_cast<int>(ex.fields.size()) * per_field != component_count(s.family)) {
      throw ParameterError("exact solution '" + s.exact + "' does not match the problem family");
    }
  }
  if (s.exact_boundary && s.exact.empty()) throw ParameterError("exact_boundary requires an exact solution");
}

/// Builds a RunConfig from JSON: a named preset (key "problem") or an explicit
/// "family", then field-by-field overrides. Unknown keys are rejected.
inline RunConfig parse_run_config(const Json& j) {
  using namespace detail;
  reject_unknown(j, run_config_keys(), "config");
  RunConfig cfg;
  try {
    if (j.contains("problem")) {
      cfg.problem = get_string(j, "problem");
      try {
        cfg.spec = problem_preset(cfg.problem);
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
      cfg.name = cfg.problem;
    } else if (!j.contains("family")) {
      throw ConfigError("config needs 'problem' or 'family'");
    }
    ProblemSpec& s = cfg.spec;
    if (j.contains("family")) s.family = parse_family(get_string(j, "family"));
    if (j.contains("name")) cfg.name = get_string(j, "name");
    if (cfg.name.empty() || cfg.name.find('/') != std::string::npos) throw ConfigError("'name' must be a plain file stem");
    if (j.contains("alpha")) s.alpha = get_number(j, "alpha");
    for (const char* key : {"eps", "eps1", "eps2", "eps3", "eps4"}) {
      if (!j.contains(key)) continue;
      const Coef c = get_coef(j, key);
      const std::string k = key;
      if (k == "eps") s.eps = c;
      if (k == "eps1") s.eps1 = c;
      if (k == "eps2") s.eps2 = c;
      if (k == "eps3") s.eps3 = c;
      if (k == "eps4") s.eps4 = c;
    }
    if (j.contains("varpi1")) s.varpi1 = get_number(j, "varpi1");
    if (j.contains("varpi2")) s.varpi2 = get_number(j, "varpi2");
    if (j.contains("beta")) s.beta = get_number(j, "beta");
    if (j.contains("nonlinearity")) s.nonlinearity = get_string(j, "nonlinearity");
    if (j.contains("a")) s.a = get_number(j, "a");
    if (j.contains("b")) s.b = get_number(j, "b");
    if (j.contains("K")) s.K = get_int(j, "K");
    if (j.contains("N")) s.N = get_int(j, "N");
    if (j.contains("flux")) {
      const Json& f = j.at("flux");
      reject_unknown(f, {"beta0", "beta1"}, "'flux'");
      if (f.contains("beta0")) s.flux.beta0 = get_number(f, "beta0");
      if (f.contains("beta1")) s.flux.beta1 = get_number(f, "beta1");
    }
    if (j.contains("ic")) s.ic = get_string(j, "ic");
    if (j.contains("forcing")) s.forcing = get_string(j, "forcing");
    if (j.contains("exact")) s.exact = get_string(j, "exact");
    if (j.contains("exact_boundary")) s.exact_boundary = get_bool(j, "exact_boundary");
    if (j.contains("T")) s.T = get_number(j, "T");
    if (j.contains("cfl")) s.cfl = get_number(j, "cfl");
    if (j.contains("params")) {
      const Json& p = j.at("params");
      if (!p.is_object()) throw ConfigError("'params' must be an object");
      for (const auto& [key, value] : p.items()) {
        if (!value.is_number()) throw ConfigError("params." + key + " must be a number");
        s.params[key] = value.get<double>();
      }
    }
    cfg.alpha_list = j.contains("alpha_list") ? get_list<double>(j, "alpha_list", get_number)
                                              : std::vector<double>{s.alpha};
    cfg.N_list = j.contains("N_list") ? get_list<int>(j, "N_list", get_int) : std::vector<int>{s.N};
    cfg.K_list = j.contains("K_list") ? get_list<int>(j, "K_list", get_int) : std::vector<int>{s.K};
    if (j.contains("snapshot_times")) {
      const Json& v = j.at("snapshot_times");
      if (!v.is_array()) throw ConfigError("'snapshot_times' must be an array");
      for (const auto& t : v) {
        if (!t.is_number()) throw ConfigError("'snapshot_times' entries must be numbers");
        const double tv = t.get<double>();
        if (!(tv >= 0.0 && tv <= s.T)) throw ConfigError("snapshot time outside [0, T]");
        cfg.snapshot_times.push_back(tv);
      }
    }
    if (j.contains("dt")) {
      cfg.dt = get_number(j, "dt");
      if (!(*cfg.dt > 0.0)) throw ConfigError("'dt' must be positive");
    }
    if (j.contains("seed")) cfg.seed = get_u64(j, "seed");
    if (j.contains("cache_dir")) cfg.cache_dir = get_string(j, "cache_dir");
    if (j.contains("stability_cap")) cfg.stability_cap = get_bool(j, "stability_cap");
    if (j.contains("wall_time")) cfg.wall_time = get_bool(j, "wall_time");
    if (j.contains("history_points")) {
      cfg.history_points = get_int(j, "history_points");
      if (cfg.history_points < 1) throw ConfigError("'history_points' must be >= 1");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  ProblemSpec probe = cfg.spec;
  try {
    for (double a : cfg.alpha_list) {
      for (int n : cfg.N_list) {
        for (int k : cfg.K_list) {
          probe.alpha = a;
          probe.N = n;
          probe.K = k;
          validate_names(probe);
        }
      }
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

inline AdmissibilityConfig parse_admissibility_config(const Json& j) {
  using namespace detail;
  reject_unknown(j, {"name", "N", "beta0", "beta1", "samples", "gamma", "mu", "seed"}, "admissibility config");
  AdmissibilityConfig c;
  try {
    if (!j.contains("N") || !j.contains("beta0") || !j.contains("beta1")) {
      throw ConfigError("admissibility config needs N, beta0 and beta1");
    }
    if (j.contains("name")) c.name = get_string(j, "name");
    c.N = get_int(j, "N");
    c.flux.beta0 = get_number(j, "beta0");
    c.flux.beta1 = get_number(j, "beta1");
    if (j.contains("samples")) c.samples = get_int(j, "samples");
    if (j.contains("gamma")) c.gamma = get_number(j, "gamma");
    if (j.contains("mu")) c.mu = get_number(j, "mu");
    if (j.contains("seed")) c.seed = get_u64(j, "seed");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("admissibility config: ") + e.what());
  }
  if (c.N < 0 || c.N > kMaxDegree) throw ConfigError("N must lie in [0,8]");
  if (c.samples < 1000) throw ConfigError("samples must be >= 1000");
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (!(c.mu > 0.0 && c.mu <= 1.0)) throw ConfigError("mu must lie in (0,1]");
  if (!(c.flux.beta0 >= 0.0) || !std::isfinite(c.flux.beta1)) throw ConfigError("invalid flux parameters");
  return c;
}

// ---------------------------------------------------------------------------
// Single runs

struct ExecOptions {
  std::optional<double> dt;
  std::vector<double> snapshot_times;
  bool stability_cap = true;
  std::string cache_dir;
  int history_points = 200;
};

struct RunOutcome {
  ProblemSpec spec;
  std::shared_ptr<const Discretization> disc;
  double dt = 0.0;
  bool dt_capped = false;
  long steps = 0;
  double t_final = 0.0;
  double wall_time_ms = 0.0;
  std::vector<double> errors;
  std::vector<std::pair<double, double>> norm_history;
  StateStack final_state;
  std::vector<std::pair<double, StateStack>> snapshots;
};

/// Largest step keeping RK4 inside its stability region, from a power-iteration
/// estimate of the linear operator plus the convective and coupling rates.
inline double stable_dt(const ProblemSpec& spec, const Discretization& disc, const StateStack& u0) {
  const double rho = spectral_radius_estimate([&](const Eigen::VectorXd& x) { return disc.lap.apply(x); },
                                              disc.layout().size());
  double rate = 0.0;
  double limit = kRk4ImagLimit;
  const double al = spec.alpha;
  switch (spec.family) {
    case Family::kDiffusion:
      rate = std::abs(spec.eps.at(al)) * rho;
      limit = kRk4RealLimit;
      break;
    case Family::kConvectionDiffusion: {
      rate = std::abs(spec.eps.at(al)) * rho;
      limit = kRk4RealLimit;
      if (spec.nonlinearity == "burgers") {
        const double speed = u0[0].values.cwiseAbs().maxCoeff();
        const int n = disc.basis.N + 1;
        rate += speed * n * n / disc.mesh.dx_min;
      }
      break;
    }
    case Family::kNls:
      rate = std::abs(spec.eps1.at(al)) * rho;
      break;
    case Family::kCoupledNls:
      rate = std::max(std::abs(spec.eps1.at(al)), std::abs(spec.eps3.at(al))) * rho + std::abs(spec.varpi1) +
             std::abs(spec.varpi2);
      break;
  }
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return 0.9 * limit / rate;
}

inline RunOutcome execute(const ProblemSpec& spec, const ExecOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  out.spec = spec;
  out.disc = build_discretization(spec, opt.cache_dir);
  const Discretization& disc = *out.disc;
  const Rhs rhs = make_rhs(out.disc, spec);
  StateStack s0 = initial_state(spec, disc);

  RunControl control;
  control.T = spec.T;
  control.cfl = spec.cfl;
  control.dt_override = opt.dt;
  control.snapshot_times = opt.snapshot_times;
  const double dt_plain = time_step(control, disc.mesh.dx_min, spec.alpha);
  if (opt.stability_cap && !opt.dt) {
    const double cap = stable_dt(spec, disc, s0);
    if (std::isfinite(cap) && cap < dt_plain) {
      control.dt_cap = cap;
      out.dt_capped = true;
    }
  }
  const double dt = time_step(control, disc.mesh.dx_min, spec.alpha);
  const long expected = static_cast<long>(std::ceil(spec.T / dt));
  const long stride = std::max<long>(1, expected / std::max(1, opt.history_points));

  out.norm_history.emplace_back(0.0, squared_norm(s0, disc));
  long count = 0;
  StepObserver<StateStack> observer = [&](double t, const StateStack& s) {
    ++count;
    if (count % stride == 0 || t >= spec.T) out.norm_history.emplace_back(t, squared_norm(s, disc));
  };
  auto res = integrate(rhs, std::move(s0), control, disc.mesh.dx_min, spec.alpha, observer);
  if (out.norm_history.back().first != res.t_final) {
    out.norm_history.emplace_back(res.t_final, squared_norm(res.final_state, disc));
  }
  out.dt = res.dt;
  out.steps = res.steps;
  out.t_final = res.t_final;
  out.snapshots = std::move(res.snapshots);
  out.final_state = std::move(res.final_state);
  if (!spec.exact.empty()) {
    out.errors = component_errors(out.final_state, exact_solution_library(spec.exact, spec), spec, disc, out.t_final);
  }
  out.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots and profile diagnostics

inline constexpr int kSamplesPerCell = 8;

/// Sample abscissae: kSamplesPerCell interior points per cell, cell-centred.
inline std::vector<double> sample_points(const Mesh1D& mesh) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(mesh.K) * kSamplesPerCell);
  for (int k = 0; k < mesh.K; ++k) {
    for (int i = 0; i < kSamplesPerCell; ++i) xs.push_back(mesh.left(k) + (i + 0.5) / kSamplesPerCell * mesh.h(k));
  }
  return xs;
}

inline bool is_complex_family(Family f) { return f == Family::kNls || f == Family::kCoupledNls; }

inline int field_count(Family f) { return is_complex_family(f) ? component_count(f) / 2 : component_count(f); }

/// Writes field `f` of the state as "x value" or "x re im" lines.
inline void write_snapshot(std::ostream& out, const StateStack& s, const Discretization& disc, Family family, int f) {
  const auto xs = sample_points(disc.mesh);
  if (is_complex_family(family)) {
    const auto re = eval_field(s[2 * f], disc.mesh, disc.basis, xs);
    const auto im = eval_field(s[2 * f + 1], disc.mesh, disc.basis, xs);
    out << "# x re im\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out << format_g17(xs[i]) << ' ' << format_g17(re[i]) << ' ' << format_g17(im[i]) << '\n';
    }
  } else {
    const auto v = eval_field(s[f], disc.mesh, disc.basis, xs);
    out << "# x u\n";
    for (std::size_t i = 0; i < xs.size(); ++i) out << format_g17(xs[i]) << ' ' << format_g17(v[i]) << '\n';
  }
}

/// Total variation of |field f| (or of the real field) over the sample points.
inline double total_variation(const StateStack& s, const Discretization& disc, Family family, int f) {
  const auto xs = sample_points(disc.mesh);
  std::vector<double> v;
  if (is_complex_family(family)) {
    const auto re = eval_field(s[2 * f], disc.mesh, disc.basis, xs);
    const auto im = eval_field(s[2 * f + 1], disc.mesh, disc.basis, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) v.push_back(std::hypot(re[i], im[i]));
  } else {
    v = eval_field(s[f], disc.mesh, disc.basis, xs);
  }
  double tv = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
  return tv;
}

// ---------------------------------------------------------------------------
// Worker pool

/// Runs task(i) for i in [0, n) on up to `threads` workers. Results are stored
/// by index by the caller; the first failure (lowest index) is rethrown.
inline void parallel_for(int n, int threads, const std::function<void(int)>& task) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Subcommands

inline std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", alpha);
  return buf;
}

inline std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

inline std::string field_suffix(Family family, int f) {
  return field_count(family) > 1 ? "_u" + std::to_string(f + 1) : std::string();
}

inline ExecOptions exec_options(const RunConfig& cfg) {
  ExecOptions opt;
  opt.dt = cfg.dt;
  opt.snapshot_times = cfg.snapshot_times;
  opt.stability_cap = cfg.stability_cap;
  opt.cache_dir = cfg.cache_dir;
  opt.history_points = cfg.history_points;
  return opt;
}

inline ProblemSpec seeded(ProblemSpec s, std::uint64_t seed) {
  if (s.ic == "random" && !s.params.count("seed")) s.params["seed"] = static_cast<double>(seed);
  return s;
}

struct RunReport {
  std::vector<RunOutcome> outcomes;
  Json diagnostics;
  std::vector<std::string> files;
};

/// One simulation per alpha in the config's list (first N and K). Writes final
/// and requested snapshots per field, plus a diagnostics JSON document.
inline RunReport cli_run(const RunConfig& cfg, const std::string& out_dir, int threads) {
  std::filesystem::create_directories(out_dir);
  RunReport rep;
  const int n = static_cast<int>(cfg.alpha_list.size());
  rep.outcomes.resize(n);
  parallel_for(n, threads, [&](int i) {
    ProblemSpec s = seeded(cfg.spec, cfg.seed);
    s.alpha = cfg.alpha_list[i];
    s.N = cfg.N_list.front();
    s.K = cfg.K_list.front();
    rep.outcomes[i] = execute(s, exec_options(cfg));
  });

  Json runs = Json::array();
  for (const auto& o : rep.outcomes) {
    const Family fam = o.spec.family;
    const std::string stem = out_dir + "/" + cfg.name + "_alpha" + alpha_tag(o.spec.alpha);
    Json files = Json::array();
    Json tv = Json::array();
    for (int f = 0; f < field_count(fam); ++f) {
      const std::string path = stem + field_suffix(fam, f) + "_final.txt";
      std::ofstream out(path);
      if (!out) throw ConfigError("cannot write " + path);
      write_snapshot(out, o.final_state, *o.disc, fam, f);
      files.push_back(path);
      rep.files.push_back(path);
      tv.push_back(total_variation(o.final_state, *o.disc, fam, f));
      for (const auto& [t, state] : o.snapshots) {
        const std::string sp = stem + field_suffix(fam, f) + "_t" + time_tag(t) + ".txt";
        std::ofstream so(sp);
        if (!so) throw ConfigError("cannot write " + sp);
        write_snapshot(so, state, *o.disc, fam, f);
        files.push_back(sp);
        rep.files.push_back(sp);
      }
    }
    Json history = Json::array();
    for (const auto& [t, v] : o.norm_history) history.push_back({t, v});
    Json run = {{"alpha", o.spec.alpha},
                {"N", o.spec.N},
                {"K", o.spec.K},
                {"dt", o.dt},
                {"dt_capped", o.dt_capped},
                {"steps", o.steps},
                {"t_final", o.t_final},
                {"norm_history", history},
                {"total_variation", tv},
                {"files", files}};
    if (cfg.wall_time) run["wall_time_ms"] = o.wall_time_ms;
    if (!o.errors.empty()) run["l2_errors"] = o.errors;
    runs.push_back(run);
  }
  rep.diagnostics = {{"name", cfg.name}, {"family", family_name(cfg.spec.family)}, {"runs", runs}};
  const std::string dpath = out_dir + "/" + cfg.name + "_diagnostics.json";
  std::ofstream d(dpath);
  if (!d) throw ConfigError("cannot write " + dpath);
  d << rep.diagnostics.dump(2) << '\n';
  rep.files.push_back(dpath);
  return rep;
}

struct ConvergenceReport {
  /// One table per exact field (u, or u1 and u2).
  std::vector<std::vector<ConvergenceRow>> tables;
  std::vector<std::string> files;
};

/// Runs the alpha x N x K grid and tabulates errors and orders between
/// successive K of each (alpha, N) block.
inline ConvergenceReport cli_converge(const RunConfig& cfg, const std::string& out_dir, int threads) {
  if (cfg.spec.exact.empty()) throw ConfigError("converge needs a problem with an exact solution");
  std::filesystem::create_directories(out_dir);
  struct Cell {
    double alpha;
    int N, K;
  };
  std::vector<Cell> cells;
  for (double a : cfg.alpha_list) {
    for (int n : cfg.N_list) {
      for (int k : cfg.K_list) cells.push_back({a, n, k});
    }
  }
  std::vector<RunOutcome> results(cells.size());
  ExecOptions opt = exec_options(cfg);
  opt.snapshot_times.clear();
  opt.history_points = 1;
  parallel_for(static_cast<int>(cells.size()), threads, [&](int i) {
    ProblemSpec s = seeded(cfg.spec, cfg.seed);
    s.alpha = cells[i].alpha;
    s.N = cells[i].N;
    s.K = cells[i].K;
    RunOutcome o = execute(s, opt);
    o.final_state = StateStack{};
    o.disc.reset();
    results[i] = std::move(o);
  });

  ConvergenceReport rep;
  const int fields = field_count(cfg.spec.family);
  rep.tables.resize(fields);
  const std::size_t block = cfg.K_list.size();
  for (int f = 0; f < fields; ++f) {
    for (std::size_t start = 0; start < cells.size(); start += block) {
      std::vector<double> errs, hs;
      for (std::size_t i = start; i < start + block; ++i) {
        errs.push_back(results[i].errors.at(f));
        hs.push_back((cfg.spec.b - cfg.spec.a) / cells[i].K);
      }
      const std::vector<double> orders = block >= 2 ? compute_order(errs, hs) : std::vector<double>{};
      for (std::size_t i = start; i < start + block; ++i) {
        ConvergenceRow r;
        r.alpha = cells[i].alpha;
        r.N = cells[i].N;
        r.K = cells[i].K;
        r.dt = results[i].dt;
        r.l2_error = errs[i - start];
        if (i > start) r.order = orders[i - start - 1];
        r.wall_time_ms = cfg.wall_time ? results[i].wall_time_ms : 0.0;
        rep.tables[f].push_back(r);
      }
    }
    const std::string path = out_dir + "/" + cfg.name + "_convergence" + field_suffix(cfg.spec.family, f) + ".csv";
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    write_convergence_csv(out, rep.tables[f]);
    rep.files.push_back(path);
  }
  return rep;
}

inline Json admissibility_json(const AdmissibilityConfig& c, const AdmissibilityReport& r) {
  Json j = {{"N", c.N},
            {"beta0", c.flux.beta0},
            {"beta1", c.flux.beta1},
            {"gamma", c.gamma},
            {"mu", c.mu},
            {"samples", r.samples},
            {"min_ratio", r.min_ratio},
            {"admissible", r.admissible}};
  if (r.witness) j["witness"] = {{"left_coeffs", r.witness->left_coeffs}, {"right_coeffs", r.witness->right_coeffs}};
  return j;
}

/// Sampled admissibility check; writes <name>.json (with a witness when the
/// inequality is violated) into out_dir.
inline AdmissibilityReport cli_admissibility(const AdmissibilityConfig& c, const std::string& out_dir) {
  const AdmissibilityReport r = check_admissibility(c.flux, c.N, c.samples, c.gamma, c.mu, c.seed);
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/" + c.name + ".json";
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << admissibility_json(c, r).dump(2) << '\n';
  return r;
}

}  // namespace fracddg

#endif  // FRACDDG_HARNESS_HPP_
