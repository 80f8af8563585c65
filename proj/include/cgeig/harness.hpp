#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cgeig/history.hpp"
#include "cgeig/precond.hpp"
#include "cgeig/problems.hpp"
#include "cgeig/solvers.hpp"

namespace cgeig {

inline constexpr int kConfigVersion = 1;

enum class TransformKind { kNone, kShiftDefinite, kInteriorFolded, kDefinitePencil, kLinearResponse };

struct TransformSpec {
  TransformKind kind = TransformKind::kNone;
  double sigma = 0.0;
  int sign_split = 0;  // interior-folded only
  LinearResponseForm form = LinearResponseForm::kInversePair;
};

struct ProblemSpec {
  // diag | cluster | laplace1d | laplace2d | slit2d | files
  std::string kind = "laplace1d";
  std::vector<double> spectrum;  // diag
  double cluster_gap = 1e-6;     // cluster
  int cluster_top = 1000;
  Eigen::Index n = 100;  // laplace1d
  Eigen::Index nx = 0, ny = 0;
  SlitSpec slit;
  std::filesystem::path a_path, m_path;  // files; m_path empty means M = I
  TransformSpec transform;
};

struct PrecondSpec {
  // identity | jacobi | ichol | shifted-inverse
  std::string kind = "identity";
  double droptol = 0.1;
  double sigma = 0.0;
};

enum class InitStyle { kOnes, kRandomNormal };

struct SolverEntry {
  std::string label;  // unique within a grid; defaults to the method name
  SolverConfig config;
};

struct RunConfig {
  int version = kConfigVersion;
  ProblemSpec problem;
  PrecondSpec preconditioner;
  std::vector<SolverEntry> solvers;
  std::vector<std::uint64_t> seeds{0};
  InitStyle init = InitStyle::kRandomNormal;
  bool oracle = true;
  int workers = 1;
  std::filesystem::path out_dir = "out";
};

// JSON config (format documented in the README). Relative file paths resolve
// against `base_dir`. Throws Error(kConfig) on any schema or value problem.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

// Canonical pencil plus what the harness needs to report on it.
struct BuiltProblem {
  std::string name;
  HermitianPencil<double> pencil;
  std::optional<EigenvalueMap> map;    // set when a transform was applied
  std::optional<double> lambda1;       // canonical lambda1 from a closed form or the dense oracle
};

BuiltProblem build_problem(const ProblemSpec& spec, bool oracle);
Preconditioner<double> build_preconditioner(const PrecondSpec& spec, const HermitianPencil<double>& pencil);

// Deterministic in (n, seed, style); unit M-norm.
Vec<double> initial_guess(const HermitianOperator<double>& m, std::uint64_t seed, InitStyle style);

struct RunRecord {
  std::string label;
  Method method = Method::kLopcg;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SolveResult<double> result;  // empty unless ok
  double wall_seconds = 0.0;
};

struct MedianRow {
  std::string label;
  int runs = 0;
  int converged = 0;
  double median_steps = 0.0;  // over converged runs; NaN when none converged
};

struct GridResult {
  std::vector<RunRecord> runs;  // solver-major, then seed, in config order
  std::vector<MedianRow> medians;
  std::optional<double> lambda1;
  bool all_failed() const;
};

// Runs every (solver, seed) cell on a pool of cfg.workers threads. Each cell is
// single-threaded and deterministic. Failures are recorded, not thrown.
GridResult run_grid(const RunConfig& cfg);

// Writes one trace CSV per cell plus summary.csv and medians.csv into cfg.out_dir.
void write_grid_outputs(const RunConfig& cfg, const GridResult& grid);

std::string trace_filename(const RunRecord& run);

std::string format_csv(const ConvergenceHistory& history);
ConvergenceHistory parse_csv(std::string_view text);
void emit_csv(const ConvergenceHistory& history, const std::filesystem::path& path);

std::string format_summary_csv(const GridResult& grid);

std::string_view to_string(InitStyle s);
InitStyle parse_init_style(std::string_view name);

}  // namespace cgeig
