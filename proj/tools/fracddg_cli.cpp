#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fracddg/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumeric = 3, kViolation = 4 };

struct Flags {
  std::string config;
  std::string out = "out";
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->required();
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads for independent runs")->check(CLI::Range(1, 256));
  cmd->add_option("--seed", f.seed, "seed for random initial data and sampling");
}

int do_run(const Flags& f) {
  fracddg::RunConfig cfg = fracddg::load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  const auto rep = fracddg::cli_run(cfg, f.out, f.threads);
  for (const auto& o : rep.outcomes) {
    std::printf("alpha=%.6g N=%d K=%d dt=%.6g steps=%ld%s", o.spec.alpha, o.spec.N, o.spec.K, o.dt, o.steps,
                o.dt_capped ? " (dt capped)" : "");
    for (std::size_t i = 0; i < o.errors.size(); ++i) std::printf(" l2_error[%zu]=%.6e", i, o.errors[i]);
    std::printf("\n");
  }
  for (const auto& file : rep.files) std::printf("wrote %s\n", file.c_str());
  return kOk;
}

int do_converge(const Flags& f) {
  fracddg::RunConfig cfg = fracddg::load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  const auto rep = fracddg::cli_converge(cfg, f.out, f.threads);
  for (std::size_t t = 0; t < rep.tables.size(); ++t) {
    if (rep.tables.size() > 1) std::printf("# field u%zu\n", t + 1);
    fracddg::write_convergence_csv(std::cout, rep.tables[t]);
  }
  for (const auto& file : rep.files) std::printf("wrote %s\n", file.c_str());
  return kOk;
}

int do_admissibility(const Flags& f) {
  fracddg::AdmissibilityConfig cfg = fracddg::parse_admissibility_config(fracddg::read_json_file(f.config));
  if (f.seed) cfg.seed = *f.seed;
  const auto r = fracddg::cli_admissibility(cfg, f.out);
  std::printf("N=%d beta0=%.17g beta1=%.17g samples=%d\n", cfg.N, cfg.flux.beta0, cfg.flux.beta1, r.samples);
  std::printf("min_ratio=%.17g\n", r.min_ratio);
  std::printf("verdict=%s\n", r.admissible ? "admissible" : "violation");
  if (r.witness) std::printf("witness=%s\n", fracddg::admissibility_json(cfg, r)["witness"].dump().c_str());
  return r.admissible ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct discontinuous Galerkin solver for fractional diffusion and Schroedinger problems"};
  app.require_subcommand(1);
  Flags flags;
  auto* run = app.add_subcommand("run", "single simulation per alpha, with snapshots and diagnostics");
  auto* converge = app.add_subcommand("converge", "convergence study over the N and K lists");
  auto* admiss = app.add_subcommand("admissibility", "sampled check of the flux admissibility inequality");
  for (auto* cmd : {run, converge, admiss}) add_common(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (run->parsed()) return do_run(flags);
    if (converge->parsed()) return do_converge(flags);
    return do_admissibility(flags);
  } catch (const fracddg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const fracddg::ParameterError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const fracddg::DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const fracddg::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumeric;
  } catch (const fracddg::DataError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  }
}
