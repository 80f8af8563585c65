// Command-line front end: solve | grid | metrics | oracle.
// Exit codes: 0 success, 1 every run failed (or a runtime error), 2 config error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgeig/error.hpp"
#include "cgeig/harness.hpp"

using namespace cgeig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAllFailed = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::string method;
  std::string oracle;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--seed", o.seed, "run only this seed");
  cmd->add_option("--tol", o.tol, "residual tolerance for every solver");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap for every solver");
  cmd->add_option("--method", o.method, "keep only solvers with this label or method name");
  cmd->add_option("--oracle", o.oracle, "dense oracle reference")->check(CLI::IsMember({"on", "off"}));
}

RunConfig apply(const Overrides& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.workers) {
    if (*o.workers < 1) throw Error(ErrorCode::kConfig, "--workers must be >= 1");
    cfg.workers = *o.workers;
  }
  if (!o.oracle.empty()) cfg.oracle = o.oracle == "on";
  if (!o.method.empty()) {
    std::erase_if(cfg.solvers, [&](const SolverEntry& e) {
      return e.label != o.method && to_string(e.config.method) != o.method;
    });
    if (cfg.solvers.empty()) throw Error(ErrorCode::kConfig, "no solver matches --method " + o.method);
  }
  for (auto& e : cfg.solvers) {
    if (o.tol) e.config.tol_residual = *o.tol;
    if (o.max_iters) e.config.max_iters = *o.max_iters;
    try {
      SolverConfig check = e.config;
      if (check.method == Method::kPcgHeuristic && !check.lambda1_input && cfg.oracle) check.lambda1_input = 0.0;
      check.validate();
    } catch (const Error& err) {
      throw Error(ErrorCode::kConfig, "solver '" + e.label + "': " + err.what());
    }
  }
  return cfg;
}

int report(const RunConfig& cfg, const GridResult& grid) {
  write_grid_outputs(cfg, grid);
  for (const auto& r : grid.runs) {
    if (r.ok) {
      std::printf("%-16s seed=%-4llu steps=%-6d converged=%d theta=%.16e nu=%.3e A=%lld M=%lld T=%lld wall=%.3fs\n",
                  r.label.c_str(), static_cast<unsigned long long>(r.seed), r.result.iterations,
                  r.result.converged ? 1 : 0, r.result.theta_final, r.result.nu_final,
                  static_cast<long long>(r.result.matvecs.a), static_cast<long long>(r.result.matvecs.m),
                  static_cast<long long>(r.result.matvecs.t), r.wall_seconds);
    } else {
      std::printf("%-16s seed=%-4llu FAILED: %s\n", r.label.c_str(), static_cast<unsigned long long>(r.seed),
                  r.error.c_str());
    }
  }
  if (grid.runs.size() > 1) {
    for (const auto& m : grid.medians) {
      std::printf("median %-16s %d/%d converged, median steps %.1f\n", m.label.c_str(), m.converged, m.runs,
                  m.median_steps);
    }
  }
  std::printf("outputs in %s\n", cfg.out_dir.string().c_str());
  return grid.all_failed() ? kExitAllFailed : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preconditioned conjugate-gradient eigensolvers for Hermitian definite pencils"};
  app.require_subcommand(1);

  Overrides solve_o, grid_o, metrics_o, oracle_o;
  auto* solve_cmd = app.add_subcommand("solve", "run one solver on one seed");
  add_common(solve_cmd, solve_o);

  auto* grid_cmd = app.add_subcommand("grid", "run every solver on every seed");
  add_common(grid_cmd, grid_o);
  grid_cmd->add_option("--workers", grid_o.workers, "parallel workers");

  std::optional<double> sigma;
  auto* metrics_cmd = app.add_subcommand("metrics", "preconditioner quality (kappa, eta, ...) as JSON");
  metrics_cmd->add_option("--config", metrics_o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--sigma", sigma, "shift below lambda1 (default: 0 if lambda1 > 0)");

  int count = 0;
  auto* oracle_cmd = app.add_subcommand("oracle", "dense spectrum of the configured pencil");
  oracle_cmd->add_option("--config", oracle_o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--out", oracle_o.out, "write oracle.csv into this directory instead of stdout");
  oracle_cmd->add_option("--count", count, "number of leading eigenvalues (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve_cmd) {
      RunConfig cfg = apply(solve_o);
      cfg.solvers.resize(1);
      cfg.seeds.resize(1);
      cfg.workers = 1;
      return report(cfg, run_grid(cfg));
    }
    if (*grid_cmd) {
      const RunConfig cfg = apply(grid_o);
      return report(cfg, run_grid(cfg));
    }
    if (*metrics_cmd) {
      const RunConfig cfg = load_config(metrics_o.config);
      const BuiltProblem p = build_problem(cfg.problem, true);
      const Preconditioner<double> t = build_preconditioner(cfg.preconditioner, p.pencil);
      double s = 0.0;
      if (sigma) {
        s = *sigma;
      } else if (!p.lambda1 || *p.lambda1 <= 0.0) {
        throw Error(ErrorCode::kConfig, "pass --sigma below lambda1");
      }
      const PrecondQuality q = quality_metrics(p.pencil, t, s);
      nlohmann::ordered_json j;
      j["problem"] = p.name;
      j["preconditioner"] = t.describe();
      j["sigma"] = q.sigma;
      j["kappa"] = q.kappa;
      j["eta"] = q.eta;
      j["beta_min"] = q.beta_min;
      j["beta_max"] = q.beta_max;
      j["mu1"] = q.mu1;
      j["lambda1"] = q.lambda1;
      j["lambda2"] = q.lambda2;
      j["lambdan"] = q.lambdan;
      std::cout << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*oracle_cmd) {
      const RunConfig cfg = load_config(oracle_o.config);
      const BuiltProblem p = build_problem(cfg.problem, false);
      const auto spec = dense_oracle(p.pencil, 4096, false);
      const Eigen::Index k = count > 0 ? std::min<Eigen::Index>(count, spec.values.size()) : spec.values.size();
      std::string text = "index,lambda\n";
      char buf[64];
      for (Eigen::Index i = 0; i < k; ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.16e\n", static_cast<long long>(i + 1), spec.values[i]);
        text += buf;
      }
      if (oracle_o.out.empty()) {
        std::cout << text;
      } else {
        std::filesystem::create_directories(oracle_o.out);
        const auto path = std::filesystem::path(oracle_o.out) / "oracle.csv";
        std::ofstream(path, std::ios::binary) << text;
        std::printf("wrote %s\n", path.string().c_str());
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitAllFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitAllFailed;
  }
  return kExitOk;
}
