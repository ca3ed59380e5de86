// Acceptance runner: one PASS/FAIL line per check, one summary line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fracddg/fracddg.hpp"

namespace {

using namespace fracddg;
namespace fs = std::filesystem;

struct Context {
  fs::path root;
  fs::path targets;
  fs::path out;
  int threads = 1;
};

class Criterion {
 public:
  explicit Criterion(int id) : id_(id) {}

  void check(bool pass, const std::string& what) {
    std::printf("[%s] C%d %s\n", pass ? "PASS" : "FAIL", id_, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures_;
  }
  bool finish(const std::string& title) const {
    std::printf("C%d %s: %s\n", id_, title.c_str(), failures_ == 0 ? "PASS" : "FAIL");
    return failures_ == 0;
  }

 private:
  int id_;
  int failures_ = 0;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string tag(double alpha, int N) { return "alpha=" + fmt("%.3g", alpha) + " N=" + std::to_string(N); }

Json load_target(const Context& ctx, const std::string& name) { return read_json_file((ctx.targets / name).string()); }

RunConfig load_config(const Context& ctx, const std::string& rel) { return load_run_config((ctx.root / rel).string()); }

std::vector<ConvergenceRow> block_of(const std::vector<ConvergenceRow>& table, double alpha, int N) {
  std::vector<ConvergenceRow> rows;
  for (const auto& r : table) {
    if (std::abs(r.alpha - alpha) < 1e-12 && r.N == N) rows.push_back(r);
  }
  return rows;
}

double factor(double a, double b) { return std::max(a / b, b / a); }

// Table comparison shared by the diffusion and NLS studies.
void compare_table(Criterion& c, const std::vector<ConvergenceRow>& table, const Json& tgt, bool check_min_order) {
  const double tol = tgt.at("order_tolerance").get<double>();
  const double fac = tgt.at("error_factor").get<double>();
  for (const auto& blk : tgt.at("blocks")) {
    const double alpha = blk.at("alpha").get<double>();
    const int N = blk.at("N").get<int>();
    const auto rows = block_of(table, alpha, N);
    const auto ref_errors = blk.at("errors").get<std::vector<double>>();
    if (rows.size() != ref_errors.size() || !rows.back().order) {
      c.check(false, tag(alpha, N) + " missing rows");
      continue;
    }
    const double order = *rows.back().order;
    const double ref = blk.at("finest_order").get<double>();
    if (check_min_order) {
      const double need = N + tgt.at("order_min_offset").get<double>();
      c.check(order >= need, tag(alpha, N) + " finest order " + fmt("%.3f", order) + " >= " + fmt("%.2f", need));
    }
    c.check(std::abs(order - ref) <= tol, tag(alpha, N) + " finest order " + fmt("%.3f", order) + " vs " +
                                              fmt("%.2f", ref) + " within " + fmt("%.2f", tol));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double f = factor(rows[i].l2_error, ref_errors[i]);
      c.check(f <= fac, tag(alpha, N) + " K=" + std::to_string(rows[i].K) + " error " +
                            fmt("%.3e", rows[i].l2_error) + " vs " + fmt("%.3e", ref_errors[i]) + " factor " +
                            fmt("%.2f", f) + " <= " + fmt("%.0f", fac));
    }
  }
}

bool criterion1(const Context& ctx) {
  Criterion c(1);
  const Json tgt = load_target(ctx, "ex1_diffusion.json");
  const RunConfig cfg = load_config(ctx, tgt.at("config").get<std::string>());
  const auto start = std::chrono::steady_clock::now();
  const auto rep = cli_converge(cfg, (ctx.out / "c1").string(), ctx.threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  compare_table(c, rep.tables[0], tgt, true);
  const double limit = tgt.at("runtime_limit_s").get<double>();
  c.check(secs <= limit, "runtime " + fmt("%.1f", secs) + " s <= " + fmt("%.0f", limit) + " s");
  return c.finish("fractional diffusion convergence");
}

bool criterion2(const Context& ctx) {
  Criterion c(2);
  const Json tgt = load_target(ctx, "burgers.json");
  for (const auto& st : tgt.at("studies")) {
    const RunConfig cfg = load_config(ctx, st.at("config").get<std::string>());
    const auto rep = cli_converge(cfg, (ctx.out / "c2").string(), ctx.threads);
    const int N = st.at("N").get<int>();
    const double need = st.at("order_min").get<double>();
    for (double alpha : st.at("alpha_list").get<std::vector<double>>()) {
      const auto rows = block_of(rep.tables[0], alpha, N);
      const bool have = !rows.empty() && rows.back().order.has_value();
      const double order = have ? *rows.back().order : 0.0;
      c.check(have && order >= need,
              cfg.name + " " + tag(alpha, N) + " finest order " + fmt("%.3f", order) + " >= " + fmt("%.2f", need));
    }
  }
  return c.finish("fractional Burgers convergence");
}

bool criterion3(const Context& ctx) {
  Criterion c(3);
  const Json tgt = load_target(ctx, "ex7_nls.json");
  const RunConfig cfg = load_config(ctx, tgt.at("config").get<std::string>());
  const auto rep = cli_converge(cfg, (ctx.out / "c3").string(), ctx.threads);
  compare_table(c, rep.tables[0], tgt, false);
  return c.finish("nonlinear Schroedinger convergence");
}

bool criterion4(const Context& ctx) {
  Criterion c(4);
  const Json tgt = load_target(ctx, "ex8_coupled.json");
  const RunConfig cfg = load_config(ctx, tgt.at("config").get<std::string>());
  const auto rep = cli_converge(cfg, (ctx.out / "c4").string(), ctx.threads);
  const double off = tgt.at("order_min_offset").get<double>();
  for (std::size_t f = 0; f < rep.tables.size(); ++f) {
    for (int N : cfg.N_list) {
      const auto rows = block_of(rep.tables[f], cfg.alpha_list.front(), N);
      const bool have = !rows.empty() && rows.back().order.has_value();
      const double order = have ? *rows.back().order : 0.0;
      c.check(have && order >= N + off, "u" + std::to_string(f + 1) + " " + tag(cfg.alpha_list.front(), N) +
                                            " finest order " + fmt("%.3f", order) + " >= " + fmt("%.2f", N + off));
    }
  }
  return c.finish("coupled NLS convergence");
}

// Step the harness would take: CFL rule capped by the RK4 stability bound.
double default_dt(const ProblemSpec& s) {
  const auto disc = build_discretization(s);
  const StateStack u0 = initial_state(s, *disc);
  RunControl control;
  control.T = s.T;
  control.cfl = s.cfl;
  const double cap = stable_dt(s, *disc, u0);
  if (std::isfinite(cap)) control.dt_cap = cap;
  return time_step(control, disc->mesh.dx_min, s.alpha);
}

bool criterion5(const Context& ctx) {
  Criterion c(5);
  const Json tgt = load_target(ctx, "properties.json").at("stability");
  const RunConfig cfg = load_config(ctx, tgt.at("config").get<std::string>());
  const int steps = tgt.at("steps").get<int>();
  const double tol = tgt.at("relative_tolerance").get<double>();
  for (double alpha : cfg.alpha_list) {
    ProblemSpec s = seeded(cfg.spec, cfg.seed);
    s.alpha = alpha;
    const double dt = default_dt(s);
    s.T = steps * dt;
    ExecOptions opt;
    opt.dt = dt;
    opt.history_points = steps;
    const RunOutcome o = execute(s, opt);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < o.norm_history.size(); ++i) {
      const double prev = o.norm_history[i - 1].second;
      worst = std::max(worst, (o.norm_history[i].second - prev) / prev);
    }
    const bool every_step = static_cast<long>(o.norm_history.size()) == o.steps + 1;
    c.check(o.steps >= steps && every_step && worst <= tol,
            "alpha=" + fmt("%.3g", alpha) + " steps=" + std::to_string(o.steps) + " max relative growth of ||u||^2 " +
                fmt("%.3e", worst) + " <= " + fmt("%.0e", tol));
  }
  return c.finish("L2 stability of unforced fractional diffusion");
}

bool criterion6(const Context& ctx) {
  Criterion c(6);
  const Json tgt = load_target(ctx, "properties.json").at("conservation");
  const RunConfig cfg = load_config(ctx, tgt.at("config").get<std::string>());
  ProblemSpec s = cfg.spec;
  s.alpha = tgt.at("alpha").get<double>();
  s.T = tgt.at("T").get<double>();
  ExecOptions opt;
  opt.dt = tgt.at("dt_fraction").get<double>() * default_dt(s);
  const RunOutcome o = execute(s, opt);
  const double n0 = o.norm_history.front().second;
  const double drift = std::abs(o.norm_history.back().second - n0) / n0;
  const double lim = tgt.at("drift_max").get<double>();
  c.check(o.t_final == s.T && drift <= lim,
          "soliton alpha=" + fmt("%.3g", s.alpha) + " T=" + fmt("%.3g", o.t_final) + " dt=" + fmt("%.3e", *opt.dt) +
              " mass drift " + fmt("%.3e", drift) + " <= " + fmt("%.0e", lim));
  return c.finish("NLS mass conservation");
}

bool criterion7(const Context& ctx) {
  Criterion c(7);
  const Json tgt = load_target(ctx, "properties.json").at("operator");
  std::mt19937 rng(tgt.at("seed").get<unsigned>());
  std::uniform_int_distribution<int> kdist(2, 12), ndist(0, 4);
  std::uniform_real_distribution<double> adist(1.05, 1.95), edist(-2.0, 2.0), ldist(0.5, 4.0);
  const double sym_tol = tgt.at("symmetry_tol").get<double>();
  const double psd_tol = tgt.at("psd_tol").get<double>();
  const int triples = tgt.at("triples").get<int>();
  for (int i = 0; i < triples; ++i) {
    const int K = kdist(rng), N = ndist(rng);
    const double alpha = adist(rng);
    const double a = edist(rng);
    const Mesh1D m = build_mesh(a, a + ldist(rng), K);
    const FracOperator op = assemble_frac_operator(m, build_basis(N), alpha);
    const double asym = (op.B - op.B.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd sym = 0.5 * (op.B + op.B.transpose());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    const double norm2 = ev.cwiseAbs().maxCoeff();
    const std::string id = "K=" + std::to_string(K) + " N=" + std::to_string(N) + " alpha=" + fmt("%.4f", alpha);
    c.check(asym <= sym_tol * std::max(1.0, op.B.cwiseAbs().maxCoeff()),
            id + " asymmetry " + fmt("%.2e", asym) + " <= " + fmt("%.0e", sym_tol));
    c.check(ev.minCoeff() >= -psd_tol * norm2,
            id + " min eigenvalue " + fmt("%.3e", ev.minCoeff()) + " >= " + fmt("%.3e", -psd_tol * norm2));
  }

  // I^mu of (s-lo)^m over [lo,hi]: closed forms at x = hi and, for m = 0, beyond.
  double worst = 0.0;
  for (double mu : {0.05, 0.2, 0.5, 0.77, 0.95}) {
    for (int deg = 0; deg <= 5; ++deg) {
      std::vector<double> coeffs(deg + 1, 0.0);
      coeffs[deg] = 1.0;
      const ShiftedPoly p{0.3, coeffs};
      const double lo = 0.3, hi = 0.9;
      const double at_hi = std::exp(std::lgamma(deg + 1.0) - std::lgamma(deg + mu + 1.0)) * std::pow(hi - lo, deg + mu);
      worst = std::max(worst, std::abs(frac_integral_element(mu, p, lo, hi, hi) - at_hi));
      if (deg == 0) {
        for (double x : {0.5, 0.95, 1.5, 4.0, 30.0}) {
          const double ref =
              (std::pow(x - lo, mu) - std::pow(std::max(x - hi, 0.0), mu)) / std::tgamma(mu + 1.0);
          worst = std::max(worst, std::abs(frac_integral_element(mu, p, lo, hi, x) - ref));
        }
      }
    }
  }
  const double pr_tol = tgt.at("power_rule_tol").get<double>();
  c.check(worst <= pr_tol, "power-rule integrals max error " + fmt("%.2e", worst) + " <= " + fmt("%.0e", pr_tol));

  const double mu = tgt.at("mass_limit_mu").get<double>();
  const double lim_tol = tgt.at("mass_limit_tol").get<double>();
  const Mesh1D m = build_mesh(0.0, 1.0, 8);
  const ElementBasis b = build_basis(2);
  const Eigen::MatrixXd M = GlobalMass(m, b).dense();
  const FracOperator op = assemble_frac_operator(m, b, 2.0 - mu);
  const double rel = (op.B - M).cwiseAbs().maxCoeff() / M.cwiseAbs().maxCoeff();
  c.check(rel <= lim_tol, "mu=" + fmt("%.0e", mu) + " relative distance of B to the mass matrix " + fmt("%.3e", rel) +
                              " <= " + fmt("%.0e", lim_tol));
  return c.finish("fractional operator properties");
}

// Largest modulus of complex field f over the snapshot sample points.
double peak_modulus(const StateStack& s, const Discretization& disc, int f) {
  const auto xs = sample_points(disc.mesh);
  const auto re = eval_field(s[2 * f], disc.mesh, disc.basis, xs);
  const auto im = eval_field(s[2 * f + 1], disc.mesh, disc.basis, xs);
  double peak = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) peak = std::max(peak, std::hypot(re[i], im[i]));
  return peak;
}

bool criterion8(const Context& ctx) {
  Criterion c(8);
  const Json tgt = load_target(ctx, "properties.json").at("manakov");
  {
    const RunConfig cfg = load_config(ctx, tgt.at("config").get<std::string>());
    ProblemSpec s = cfg.spec;
    s.alpha = cfg.alpha_list.front();
    s.K = cfg.K_list.front();
    s.N = cfg.N_list.front();
    const RunOutcome o = execute(s, ExecOptions{});
    const double err = std::hypot(o.errors.at(0), o.errors.at(1));
    const double lim = tgt.at("l2_max").get<double>();
    c.check(err <= lim, "Manakov two-soliton T=" + fmt("%.3g", o.t_final) + " K=" + std::to_string(s.K) + " N=" +
                            std::to_string(s.N) + " L2 error " + fmt("%.3e", err) + " <= " + fmt("%.0e", lim));
  }
  {
    const RunConfig cfg = load_config(ctx, tgt.at("collision_config").get<std::string>());
    ProblemSpec s = cfg.spec;
    s.alpha = 2.0;
    s.T = tgt.at("collision_T").get<double>();
    const RunOutcome o = execute(s, ExecOptions{});
    const double amp = tgt.at("amplitude").get<double>();
    const double tol = tgt.at("amplitude_tol").get<double>();
    for (int f = 0; f < 2; ++f) {
      const double peak = peak_modulus(o.final_state, *o.disc, f);
      c.check(std::abs(peak - amp) <= tol * amp, "post-collision peak |u" + std::to_string(f + 1) + "| at T=" +
                                                     fmt("%.3g", o.t_final) + " " + fmt("%.5f", peak) +
                                                     " within " + fmt("%.0f", 100 * tol) + "% of sqrt(2)");
    }
  }
  return c.finish("classical-limit Manakov solitons");
}

bool criterion9(const Context& ctx) {
  Criterion c(9);
  const Json tgt = load_target(ctx, "properties.json").at("admissibility");
  const fs::path dir = ctx.out / "c9";
  {
    const auto cfg = parse_admissibility_config(read_json_file((ctx.root / tgt.at("pass").get<std::string>()).string()));
    const auto r = cli_admissibility(cfg, dir.string());
    c.check(r.admissible, "beta0=" + fmt("%.4g", cfg.flux.beta0) + " beta1=" + fmt("%.4g", cfg.flux.beta1) +
                              " N=" + std::to_string(cfg.N) + " admissible (min ratio " + fmt("%.6f", r.min_ratio) + ")");
  }
  {
    const auto cfg = parse_admissibility_config(read_json_file((ctx.root / tgt.at("fail").get<std::string>()).string()));
    const auto r = cli_admissibility(cfg, dir.string());
    const Json j = read_json_file((dir / (cfg.name + ".json")).string());
    const bool witness = j.contains("witness") && j.at("witness").at("left_coeffs").size() == std::size_t(cfg.N + 1);
    c.check(!r.admissible && witness, "beta0=" + fmt("%.4g", cfg.flux.beta0) + " beta1=" + fmt("%.4g", cfg.flux.beta1) +
                                          " N=" + std::to_string(cfg.N) + " rejected with serialized witness (min ratio " +
                                          fmt("%.6f", r.min_ratio) + ")");
  }
  return c.finish("flux admissibility diagnostics");
}

bool criterion10(const Context& ctx) {
  Criterion c(10);
  const Json tgt = load_target(ctx, "properties.json").at("figures");
  const std::string tv_config = tgt.at("tv_config").get<std::string>();
  for (const auto& rel : tgt.at("configs")) {
    const RunConfig cfg = load_config(ctx, rel.get<std::string>());
    const fs::path dir = ctx.out / "c10";
    const auto rep = cli_run(cfg, dir.string(), ctx.threads);
    const Family fam = cfg.spec.family;
    for (const auto& o : rep.outcomes) {
      int missing = 0, expected = 0;
      for (int f = 0; f < field_count(fam); ++f) {
        const std::string stem = (dir / (cfg.name + "_alpha" + alpha_tag(o.spec.alpha))).string() + field_suffix(fam, f);
        std::vector<std::string> names = {stem + "_final.txt"};
        for (double t : cfg.snapshot_times) {
          if (t <= o.spec.T) names.push_back(stem + "_t" + time_tag(t) + ".txt");
        }
        for (const auto& n : names) {
          ++expected;
          if (!fs::exists(n) || fs::file_size(n) == 0) ++missing;
        }
      }
      c.check(missing == 0, cfg.name + " alpha=" + fmt("%.3g", o.spec.alpha) + " " +
                                std::to_string(expected - missing) + "/" + std::to_string(expected) +
                                " snapshot files written");
    }
    if (rel.get<std::string>() != tv_config) continue;
    std::vector<std::pair<double, double>> tv;
    for (const auto& o : rep.outcomes) tv.emplace_back(o.spec.alpha, total_variation(o.final_state, *o.disc, fam, 0));
    std::sort(tv.begin(), tv.end());
    std::string listing;
    bool decreasing = true;
    for (std::size_t i = 0; i < tv.size(); ++i) {
      listing += " " + fmt("%.3g", tv[i].first) + ":" + fmt("%.6f", tv[i].second);
      if (i > 0 && !(tv[i].second < tv[i - 1].second)) decreasing = false;
    }
    const double T = tgt.at("tv_T").get<double>();
    const bool at_T = std::all_of(rep.outcomes.begin(), rep.outcomes.end(),
                                  [T](const RunOutcome& o) { return std::abs(o.t_final - T) < 1e-12; });
    c.check(at_T && decreasing, cfg.name + " total variation at T=" + fmt("%.3g", T) +
                                    " strictly decreasing in alpha:" + listing);
  }
  return c.finish("figure data and dissipation ordering");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracddg acceptance checks"};
  std::string targets = "targets";
  std::string out = "acceptance_out";
  int criterion = 0;
  int threads = 1;
  app.add_option("--targets", targets, "directory holding the target JSON files")->check(CLI::ExistingDirectory);
  app.add_option("--out", out, "scratch output directory");
  app.add_option("--criterion", criterion, "run a single criterion (1-10); default all")->check(CLI::Range(0, 10));
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.targets = fs::absolute(targets);
  ctx.root = ctx.targets.parent_path();
  ctx.out = fs::absolute(out);
  ctx.threads = threads;
  fs::create_directories(ctx.out);

  const std::vector<std::function<bool(const Context&)>> all = {criterion1, criterion2, criterion3, criterion4,
                                                                criterion5, criterion6, criterion7, criterion8,
                                                                criterion9, criterion10};
  bool ok = true;
  for (int i = 1; i <= 10; ++i) {
    if (criterion != 0 && criterion != i) continue;
    try {
      ok = all[i - 1](ctx) && ok;
    } catch (const std::exception& e) {
      std::printf("[FAIL] C%d aborted: %s\nC%d: FAIL\n", i, e.what(), i);
      ok = false;
    }
  }
  return ok ? 0 : 1;
}
