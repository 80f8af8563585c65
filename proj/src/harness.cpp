#include "cgeig/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cgeig/error.hpp"
#include "cgeig/matrix_market.hpp"

namespace cgeig {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfig, what); }

// Typed access to a JSON object that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_ + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(j_.at(key), path_ + "." + key);
  }

  template <class T>
  std::optional<T> maybe(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as<T>(j_.at(key), path_ + "." + key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) config_error("unknown key " + path_ + "." + key);
    }
  }

  const std::string& path() const { return path_; }

  template <class T>
  static T as(const json& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) config_error(where + " must be a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) config_error(where + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) config_error(where + " must be non-negative");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) config_error(where + " must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) config_error(where + " must be a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      config_error(where + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto rethrow_as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    config_error(where + ": " + e.what());
  }
}

TransformSpec parse_transform(Section s) {
  TransformSpec t;
  const auto kind = s.get<std::string>("kind", "none");
  if (kind == "none") t.kind = TransformKind::kNone;
  else if (kind == "shift-definite") t.kind = TransformKind::kShiftDefinite;
  else if (kind == "interior-folded") t.kind = TransformKind::kInteriorFolded;
  else if (kind == "definite-pencil") t.kind = TransformKind::kDefinitePencil;
  else if (kind == "linear-response") t.kind = TransformKind::kLinearResponse;
  else config_error("unknown transform kind '" + kind + "'");
  t.sigma = s.get<double>("sigma", 0.0);
  t.sign_split = s.get<int>("sign_split", 0);
  const auto form = s.get<std::string>("form", "inverse-pair");
  if (form == "inverse-pair") t.form = LinearResponseForm::kInversePair;
  else if (form == "block-pencil") t.form = LinearResponseForm::kBlockPencil;
  else config_error("unknown linear-response form '" + form + "'");
  s.finish();
  return t;
}

ProblemSpec parse_problem(Section s, const std::filesystem::path& base) {
  ProblemSpec p;
  p.kind = s.get<std::string>("kind", p.kind);
  static const std::set<std::string> kinds{"diag", "cluster", "laplace1d", "laplace2d", "slit2d", "files"};
  if (!kinds.count(p.kind)) config_error("unknown problem kind '" + p.kind + "'");
  if (s.has("spectrum")) {
    const json& arr = s.raw("spectrum");
    if (!arr.is_array()) config_error("problem.spectrum must be an array");
    for (const auto& v : arr) p.spectrum.push_back(Section::as<double>(v, "problem.spectrum[]"));
  }
  p.cluster_gap = s.get<double>("gap", p.cluster_gap);
  p.cluster_top = s.get<int>("top", p.cluster_top);
  p.n = s.get<std::int64_t>("n", p.n);
  p.nx = s.get<std::int64_t>("nx", p.nx);
  p.ny = s.get<std::int64_t>("ny", p.ny);
  if (s.has("slit")) {
    const json& arr = s.raw("slit");
    if (!arr.is_array() || arr.size() != 2) config_error("problem.slit must be [y_lo, y_hi]");
    p.slit = {Section::as<double>(arr[0], "problem.slit[0]"), Section::as<double>(arr[1], "problem.slit[1]")};
  }
  auto resolve = [&](const std::string& key) -> std::filesystem::path {
    auto v = s.maybe<std::string>(key);
    if (!v) return {};
    std::filesystem::path path(*v);
    if (path.is_relative()) path = base / path;
    if (!std::filesystem::exists(path)) config_error("problem." + key + ": file not found: " + path.string());
    return path;
  };
  p.a_path = resolve("a");
  p.m_path = resolve("m");
  if (p.kind == "files" && p.a_path.empty()) config_error("problem kind 'files' needs problem.a");
  if (p.kind == "diag" && p.spectrum.empty()) config_error("problem kind 'diag' needs problem.spectrum");
  if (p.kind == "laplace2d" || p.kind == "slit2d") {
    if (p.nx <= 0 || p.ny <= 0) config_error("problem kind '" + p.kind + "' needs nx and ny");
  }
  if (s.has("transform")) p.transform = parse_transform(Section(s.raw("transform"), "problem.transform"));
  s.finish();
  return p;
}

PrecondSpec parse_precond(Section s) {
  PrecondSpec p;
  p.kind = s.get<std::string>("kind", p.kind);
  static const std::set<std::string> kinds{"identity", "jacobi", "ichol", "shifted-inverse"};
  if (!kinds.count(p.kind)) config_error("unknown preconditioner kind '" + p.kind + "'");
  p.droptol = s.get<double>("droptol", p.droptol);
  p.sigma = s.get<double>("sigma", p.sigma);
  s.finish();
  return p;
}

SolverEntry parse_solver(Section s) {
  SolverEntry e;
  SolverConfig& c = e.config;
  const auto method = s.maybe<std::string>("method");
  if (!method) config_error(s.path() + ".method is required");
  c.method = rethrow_as_config(s.path(), [&] { return parse_method(*method); });
  e.label = s.get<std::string>("label", std::string(to_string(c.method)));
  if (auto v = s.maybe<std::string>("family")) c.tpcg_family = rethrow_as_config(s.path(), [&] { return parse_tpcg_family(*v); });
  if (auto v = s.maybe<std::string>("variant")) c.tpcg_variant = rethrow_as_config(s.path(), [&] { return parse_tpcg_variant(*v); });
  if (auto v = s.maybe<std::string>("beta_rule")) c.beta_rule = rethrow_as_config(s.path(), [&] { return parse_beta_rule(*v); });
  c.tpcg_alpha = s.get<double>("alpha", c.tpcg_alpha);
  c.tau_angle = s.get<double>("tau", c.tau_angle);
  c.gamma_gram = s.get<double>("gamma", c.gamma_gram);
  c.peak_factor = s.get<double>("peak_factor", c.peak_factor);
  c.peak_decrease_window = s.get<int>("peak_window", c.peak_decrease_window);
  c.peak_activation = s.get<double>("peak_activation", c.peak_activation);
  c.tol_residual = s.get<double>("tol", c.tol_residual);
  c.max_iters = s.get<int>("max_iters", c.max_iters);
  c.sigma_guess = s.maybe<double>("sigma_guess");
  c.normalize_every = s.get<int>("normalize_every", c.normalize_every);
  c.lambda1_input = s.maybe<double>("lambda1");
  c.lambda1_final_update = s.get<bool>("lambda1_final_update", c.lambda1_final_update);
  c.lambda1_update_nu = s.get<double>("lambda1_update_nu", c.lambda1_update_nu);
  c.gd_max_dim = s.get<int>("gd_max_dim", c.gd_max_dim);
  s.finish();
  return e;
}

void validate_solver(const SolverEntry& e, bool oracle) {
  SolverConfig c = e.config;
  // The heuristic method may take lambda1 from the oracle at run time.
  if (c.method == Method::kPcgHeuristic && !c.lambda1_input && oracle) c.lambda1_input = 0.0;
  rethrow_as_config("solver '" + e.label + "'", [&] {
    c.validate();
    return 0;
  });
}

HermitianPencil<double> load_files(const ProblemSpec& p) {
  HermitianOperator<double> a = load_matrix_market<double>(p.a_path);
  HermitianOperator<double> m =
      p.m_path.empty() ? HermitianOperator<double>::identity(a.n()) : load_matrix_market<double>(p.m_path);
  return HermitianPencil<double>(std::move(a), std::move(m));
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

double parse_double(std::string_view s, int line) {
  std::string tmp(s);  // strtod handles inf/nan spellings that from_chars variants disagree on
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": bad number '" + tmp + "'");
  }
  return v;
}

std::optional<double> parse_opt(std::string_view s, int line) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

constexpr std::string_view kTraceHeader = "iter,theta,theta_err,nu,phi,delta_lambda,delta_phi,event";

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

SolveResult<double> run_cell(const BuiltProblem& problem, const Preconditioner<double>& t, const SolverEntry& entry,
                             std::uint64_t seed, InitStyle init) {
  SolverConfig c = entry.config;
  c.seed = seed;
  if (problem.lambda1) c.lambda1_reference = problem.lambda1;
  const Vec<double> x0 = initial_guess(problem.pencil.m(), seed, init);
  if (c.method == Method::kPcgHeuristic) {
    if (!c.lambda1_input) {
      if (!problem.lambda1) throw Error(ErrorCode::kConfig, "pcg-heuristic needs lambda1 or the oracle");
      c.lambda1_input = problem.lambda1;
    }
  }
  return solve(problem.pencil, t, x0, c);
}

}  // namespace

std::string_view to_string(InitStyle s) { return s == InitStyle::kOnes ? "ones" : "random-normal"; }

InitStyle parse_init_style(std::string_view name) {
  if (name == "ones") return InitStyle::kOnes;
  if (name == "random-normal") return InitStyle::kRandomNormal;
  throw Error(ErrorCode::kConfig, "unknown initial guess style '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  Section s(root, "config");
  RunConfig cfg;
  const auto version = s.maybe<int>("version");
  if (!version) config_error("config.version is required");
  if (*version != kConfigVersion) {
    config_error("unsupported config version " + std::to_string(*version) + " (expected " +
                 std::to_string(kConfigVersion) + ")");
  }
  cfg.version = *version;
  if (!s.has("problem")) config_error("config.problem is required");
  cfg.problem = parse_problem(Section(s.raw("problem"), "problem"), base_dir);
  if (s.has("preconditioner")) cfg.preconditioner = parse_precond(Section(s.raw("preconditioner"), "preconditioner"));
  if (!s.has("solvers")) config_error("config.solvers is required");
  const json& solvers = s.raw("solvers");
  if (!solvers.is_array() || solvers.empty()) config_error("config.solvers must be a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < solvers.size(); ++i) {
    SolverEntry e = parse_solver(Section(solvers[i], "solvers[" + std::to_string(i) + "]"));
    if (!labels.insert(e.label).second) config_error("duplicate solver label '" + e.label + "'");
    cfg.solvers.push_back(std::move(e));
  }
  if (s.has("seeds")) {
    const json& seeds = s.raw("seeds");
    if (!seeds.is_array() || seeds.empty()) config_error("config.seeds must be a non-empty array");
    cfg.seeds.clear();
    for (const auto& v : seeds) cfg.seeds.push_back(Section::as<std::uint64_t>(v, "config.seeds[]"));
  }
  if (auto v = s.maybe<std::string>("initial_guess")) cfg.init = parse_init_style(*v);
  if (s.has("oracle")) {
    const json& o = s.raw("oracle");
    if (o.is_boolean()) cfg.oracle = o.get<bool>();
    else if (o == "on") cfg.oracle = true;
    else if (o == "off") cfg.oracle = false;
    else config_error("config.oracle must be true/false or \"on\"/\"off\"");
  }
  cfg.workers = s.get<int>("workers", cfg.workers);
  if (cfg.workers < 1) config_error("config.workers must be >= 1");
  if (auto v = s.maybe<std::string>("out")) {
    cfg.out_dir = *v;
    if (cfg.out_dir.is_relative()) cfg.out_dir = base_dir / cfg.out_dir;
  }
  s.finish();
  for (const auto& e : cfg.solvers) validate_solver(e, cfg.oracle);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

BuiltProblem build_problem(const ProblemSpec& spec, bool oracle) {
  Problem base;
  if (spec.kind == "diag") base = gen_diag(spec.spectrum);
  else if (spec.kind == "cluster") base = gen_diag(cluster_spectrum(spec.cluster_gap, spec.cluster_top));
  else if (spec.kind == "laplace1d") base = gen_laplace1d(spec.n);
  else if (spec.kind == "laplace2d") base = gen_laplace2d(spec.nx, spec.ny);
  else if (spec.kind == "slit2d") base = gen_slit2d(spec.nx, spec.ny, spec.slit);
  else if (spec.kind == "files") {
    base.name = spec.a_path.filename().string();
    base.pencil = load_files(spec);
  } else {
    throw Error(ErrorCode::kConfig, "unknown problem kind '" + spec.kind + "'");
  }

  BuiltProblem out;
  out.name = base.name;
  const TransformSpec& t = spec.transform;
  if (t.kind == TransformKind::kNone) {
    out.pencil = base.pencil;
    if (!base.exact_eigenvalues.empty()) out.lambda1 = base.exact_eigenvalues.front();
  } else {
    const auto& l = base.pencil.a();
    const auto& s = base.pencil.m();
    Transformed tr;
    switch (t.kind) {
      case TransformKind::kShiftDefinite: tr = transform_shift_definite(l, s, t.sigma); break;
      case TransformKind::kInteriorFolded: tr = transform_interior_folded(l, s, t.sigma, t.sign_split); break;
      case TransformKind::kDefinitePencil: tr = transform_definite_pencil(l, s, t.sigma); break;
      case TransformKind::kLinearResponse: tr = transform_linear_response(l, s, t.form); break;
      case TransformKind::kNone: break;
    }
    out.pencil = tr.pencil;
    out.map = tr.map;
    out.name += " [" + tr.map.describe() + "]";
  }
  if (oracle && !out.lambda1 && out.pencil.n() <= 512) {
    out.lambda1 = dense_oracle(out.pencil, 512, false).values[0];
  }
  return out;
}

Preconditioner<double> build_preconditioner(const PrecondSpec& spec, const HermitianPencil<double>& pencil) {
  if (spec.kind == "identity") return Preconditioner<double>::identity(pencil.n());
  if (spec.kind == "jacobi") return Preconditioner<double>::jacobi(pencil.a());
  if (spec.kind == "ichol") return Preconditioner<double>::incomplete_cholesky(pencil, spec.droptol, spec.sigma);
  if (spec.kind == "shifted-inverse") return Preconditioner<double>::dense_shifted_inverse(pencil, spec.sigma);
  throw Error(ErrorCode::kConfig, "unknown preconditioner kind '" + spec.kind + "'");
}

Vec<double> initial_guess(const HermitianOperator<double>& m, std::uint64_t seed, InitStyle style) {
  const Eigen::Index n = m.n();
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "initial guess needs n >= 1");
  Vec<double> x(n);
  if (style == InitStyle::kOnes) {
    x.setOnes();
  } else {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d;
    for (Eigen::Index i = 0; i < n; ++i) x[i] = d(gen);
  }
  const double mnorm = std::sqrt(x.dot(m.apply(x)));
  return x / mnorm;
}

bool GridResult::all_failed() const {
  return std::none_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok; });
}

GridResult run_grid(const RunConfig& cfg) {
  if (cfg.solvers.empty()) throw Error(ErrorCode::kConfig, "no solvers configured");
  if (cfg.seeds.empty()) throw Error(ErrorCode::kConfig, "no seeds configured");
  const BuiltProblem problem = build_problem(cfg.problem, cfg.oracle);
  const Preconditioner<double> t = build_preconditioner(cfg.preconditioner, problem.pencil);

  GridResult grid;
  grid.lambda1 = problem.lambda1;
  for (const auto& s : cfg.solvers) {
    for (std::uint64_t seed : cfg.seeds) {
      RunRecord r;
      r.label = s.label;
      r.method = s.config.method;
      r.seed = seed;
      grid.runs.push_back(std::move(r));
    }
  }

  // Cells are claimed through a shared counter; each writes only its own slot.
  std::atomic<std::size_t> next{0};
  const std::size_t seeds = cfg.seeds.size();
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.runs.size(); k = next++) {
      RunRecord& r = grid.runs[k];
      const auto start = std::chrono::steady_clock::now();
      try {
        r.result = run_cell(problem, t, cfg.solvers[k / seeds], r.seed, cfg.init);
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(grid.runs.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  for (const auto& s : cfg.solvers) {
    MedianRow row;
    row.label = s.label;
    std::vector<double> steps;
    for (const auto& r : grid.runs) {
      if (r.label != s.label) continue;
      ++row.runs;
      if (r.ok && r.result.converged) {
        ++row.converged;
        steps.push_back(r.result.iterations);
      }
    }
    if (steps.empty()) {
      row.median_steps = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::sort(steps.begin(), steps.end());
      const std::size_t h = steps.size() / 2;
      row.median_steps = steps.size() % 2 ? steps[h] : 0.5 * (steps[h - 1] + steps[h]);
    }
    grid.medians.push_back(row);
  }
  return grid;
}

std::string trace_filename(const RunRecord& run) {
  std::string safe;
  for (char c : run.label) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return safe + "_seed" + std::to_string(run.seed) + ".csv";
}

std::string format_csv(const ConvergenceHistory& history) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : history) {
    out += std::to_string(r.iter);
    out += ',' + fmt_double(r.theta);
    out += ',' + fmt_opt(r.theta_err);
    out += ',' + fmt_double(r.nu);
    out += ',' + fmt_opt(r.phi);
    out += ',' + fmt_opt(r.delta_lambda);
    out += ',' + fmt_opt(r.delta_phi);
    out += ',' + r.event;
    out += '\n';
  }
  return out;
}

ConvergenceHistory parse_csv(std::string_view text) {
  ConvergenceHistory out;
  int line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kTraceHeader) throw Error(ErrorCode::kParse, "unexpected trace header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 8 fields");
    IterationRecord r;
    const auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.iter);
    if (ec != std::errc() || ptr != f[0].data() + f[0].size()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad iteration index");
    }
    r.theta = parse_double(f[1], line_no);
    r.theta_err = parse_opt(f[2], line_no);
    r.nu = parse_double(f[3], line_no);
    r.phi = parse_opt(f[4], line_no);
    r.delta_lambda = parse_opt(f[5], line_no);
    r.delta_phi = parse_opt(f[6], line_no);
    r.event = std::string(f[7]);
    out.push_back(std::move(r));
  }
  if (header) throw Error(ErrorCode::kParse, "empty trace");
  return out;
}

void emit_csv(const ConvergenceHistory& history, const std::filesystem::path& path) {
  write_text(path, format_csv(history));
}

// Wall-clock time stays out of the file so reruns are byte-identical.
std::string format_summary_csv(const GridResult& grid) {
  std::string out =
      "solver,method,seed,status,steps,rows,converged,theta_final,theta_err,nu_final,a_applies,m_applies,"
      "t_applies,error\n";
  for (const auto& r : grid.runs) {
    out += r.label + ',' + std::string(to_string(r.method)) + ',' + std::to_string(r.seed) + ',';
    if (!r.ok) {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out += "failed,,,,,,,,,," + msg + '\n';
      continue;
    }
    const auto& s = r.result;
    out += "ok," + std::to_string(s.iterations) + ',' + std::to_string(s.history.size()) + ',' +
           (s.converged ? "1" : "0") + ',' + fmt_double(s.theta_final) + ',';
    out += (grid.lambda1 ? fmt_double(s.theta_final - *grid.lambda1) : std::string()) + ',';
    out += fmt_double(s.nu_final) + ',' + std::to_string(s.matvecs.a) + ',' + std::to_string(s.matvecs.m) + ',' +
           std::to_string(s.matvecs.t) + ",\n";
  }
  return out;
}

void write_grid_outputs(const RunConfig& cfg, const GridResult& grid) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + cfg.out_dir.string() + ": " + ec.message());
  for (const auto& r : grid.runs) {
    if (r.ok) emit_csv(r.result.history, cfg.out_dir / trace_filename(r));
  }
  write_text(cfg.out_dir / "summary.csv", format_summary_csv(grid));
  std::string med = "solver,runs,converged,median_steps\n";
  for (const auto& m : grid.medians) {
    med += m.label + ',' + std::to_string(m.runs) + ',' + std::to_string(m.converged) + ',' +
           (std::isnan(m.median_steps) ? std::string() : fmt_double(m.median_steps)) + '\n';
  }
  write_text(cfg.out_dir / "medians.csv", med);
}

}  // namespace cgeig
