// Python bindings for the core operations.

#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cgeig/error.hpp"
#include "cgeig/estimates.hpp"
#include "cgeig/harness.hpp"
#include "cgeig/matrix_market.hpp"
#include "cgeig/precond.hpp"
#include "cgeig/problems.hpp"
#include "cgeig/rayleigh_ritz.hpp"
#include "cgeig/solvers.hpp"

namespace py = pybind11;
using namespace cgeig;
using P = Preconditioner<double>;
using Pencil = HermitianPencil<double>;

namespace {

HermitianOperator<double> op_dense(const DenseMat<double>& a) { return HermitianOperator<double>::from_dense(a); }
HermitianOperator<double> op_sparse(const SparseMat<double>& a) { return HermitianOperator<double>::from_sparse(a); }

py::dict history_dict(const ConvergenceHistory& h) {
  std::vector<int> iter;
  std::vector<double> theta, nu;
  std::vector<std::optional<double>> err, phi;
  std::vector<std::string> ev;
  for (const auto& r : h) {
    iter.push_back(r.iter);
    theta.push_back(r.theta);
    nu.push_back(r.nu);
    err.push_back(r.theta_err);
    phi.push_back(r.phi);
    ev.push_back(r.event);
  }
  py::dict d;
  d["iter"] = iter;
  d["theta"] = theta;
  d["theta_err"] = err;
  d["nu"] = nu;
  d["phi"] = phi;
  d["event"] = ev;
  return d;
}

SolverConfig make_config(const std::string& method, double tol, int max_iters, std::optional<double> lambda1,
                         std::optional<double> lambda1_reference, const std::string& family, double tau,
                         double peak_factor, int peak_window, bool retain_iterates) {
  SolverConfig c;
  c.method = parse_method(method);
  c.tol_residual = tol;
  c.max_iters = max_iters;
  c.lambda1_input = lambda1;
  c.lambda1_reference = lambda1_reference;
  c.tpcg_family = parse_tpcg_family(family);
  c.tau_angle = tau;
  c.peak_factor = peak_factor;
  c.peak_decrease_window = peak_window;
  c.retain_iterates = retain_iterates;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_cgeig, m) {
  m.doc() = "Preconditioned conjugate-gradient eigensolvers for Hermitian definite pencils";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<Pencil>(m, "Pencil", "Pair (A, M) with M positive definite; M defaults to the identity.")
      .def(py::init([](const DenseMat<double>& a, std::optional<DenseMat<double>> mm) {
             return Pencil(op_dense(a), mm ? op_dense(*mm) : HermitianOperator<double>::identity(a.rows()));
           }),
           py::arg("a"), py::arg("m") = py::none())
      .def(py::init([](const SparseMat<double>& a, std::optional<SparseMat<double>> mm) {
             return Pencil(op_sparse(a), mm ? op_sparse(*mm) : HermitianOperator<double>::identity(a.rows()));
           }),
           py::arg("a"), py::arg("m") = py::none())
      .def_property_readonly("n", &Pencil::n)
      .def("a_dense", [](const Pencil& p) { return p.a().to_dense(); })
      .def("m_dense", [](const Pencil& p) { return p.m().to_dense(); })
      .def("rayleigh_quotient", [](const Pencil& p, const Vec<double>& x) { return rayleigh_quotient(p, x); })
      .def("residual", [](const Pencil& p, const Vec<double>& x, double theta) { return residual(p, x, theta); });

  m.def("load_matrix_market", [](const std::filesystem::path& a, std::optional<std::filesystem::path> mm) {
    auto aop = load_matrix_market<double>(a);
    auto mop = mm ? load_matrix_market<double>(*mm) : HermitianOperator<double>::identity(aop.n());
    return Pencil(std::move(aop), std::move(mop));
  }, py::arg("a_path"), py::arg("m_path") = py::none());

  py::class_<Problem>(m, "Problem")
      .def_readonly("name", &Problem::name)
      .def_readonly("pencil", &Problem::pencil)
      .def_readonly("exact_eigenvalues", &Problem::exact_eigenvalues);
  m.def("gen_diag", &gen_diag, py::arg("spectrum"));
  m.def("cluster_spectrum", &cluster_spectrum, py::arg("gap") = 1e-6, py::arg("top") = 1000);
  m.def("gen_laplace1d", &gen_laplace1d, py::arg("n"));
  m.def("gen_laplace2d", &gen_laplace2d, py::arg("nx"), py::arg("ny"));
  m.def("gen_slit2d", [](Eigen::Index nx, Eigen::Index ny, double y_lo, double y_hi) {
    return gen_slit2d(nx, ny, SlitSpec{y_lo, y_hi});
  }, py::arg("nx"), py::arg("ny"), py::arg("y_lo") = 0.1, py::arg("y_hi") = 0.9);

  m.def("dense_oracle", [](const Pencil& p, Eigen::Index max_n) {
    auto s = dense_oracle(p, max_n, true);
    return py::make_tuple(s.values, s.vectors);
  }, py::arg("pencil"), py::arg("max_n") = 512, "Ascending eigenvalues and M-orthonormal eigenvectors.");

  py::class_<P>(m, "Preconditioner")
      .def_static("identity", &P::identity, py::arg("n"))
      .def_static("jacobi", [](const Pencil& p) { return P::jacobi(p.a()); }, py::arg("pencil"))
      .def_static("ichol", &P::incomplete_cholesky, py::arg("pencil"), py::arg("droptol") = 0.1,
                  py::arg("sigma") = 0.0)
      .def_static("shifted_inverse", &P::dense_shifted_inverse, py::arg("pencil"), py::arg("sigma"),
                  py::arg("max_n") = 2048)
      .def_static("user", &P::user, py::arg("t"))
      .def("apply", [](const P& t, const Vec<double>& r) { return t.apply(r); })
      .def("to_dense", &P::to_dense)
      .def("__repr__", &P::describe);

  m.def("quality_metrics", [](const Pencil& p, const P& t, double sigma) {
    const PrecondQuality q = quality_metrics(p, t, sigma);
    py::dict d;
    d["sigma"] = q.sigma;
    d["kappa"] = q.kappa;
    d["eta"] = q.eta;
    d["beta_min"] = q.beta_min;
    d["beta_max"] = q.beta_max;
    d["mu1"] = q.mu1;
    d["lambda1"] = q.lambda1;
    d["lambda2"] = q.lambda2;
    d["lambdan"] = q.lambdan;
    return d;
  }, py::arg("pencil"), py::arg("t"), py::arg("sigma"));

  m.def("rrw", [](const Pencil& p, const std::vector<Vec<double>>& basis, double gamma) {
    static constexpr BasisRole roles[] = {BasisRole::kCurrentIterate, BasisRole::kPrecondResidual,
                                          BasisRole::kDirection, BasisRole::kAuxiliary,
                                          BasisRole::kStoredMinResidual};
    TrialBasis<double> b;
    for (std::size_t j = 0; j < basis.size(); ++j) b.push(basis[j], roles[std::min<std::size_t>(j, 4)]);
    RrwOptions opt;
    opt.gamma = gamma;
    const auto out = rrw(p, b, opt);
    return py::make_tuple(out.theta_next, out.x_next, out.ritz_values);
  }, py::arg("pencil"), py::arg("basis"), py::arg("gamma") = 1e26,
        "Minimizes the Rayleigh quotient over span(basis) keeping the coefficient of basis[0] at 1. "
        "Returns (theta, x, ritz_values).");

  py::class_<SolveResult<double>>(m, "SolveResult")
      .def_readonly("theta", &SolveResult<double>::theta_final)
      .def_readonly("x", &SolveResult<double>::x_final)
      .def_readonly("iterations", &SolveResult<double>::iterations)
      .def_readonly("converged", &SolveResult<double>::converged)
      .def_readonly("nu", &SolveResult<double>::nu_final)
      .def_readonly("iterates", &SolveResult<double>::iterates)
      .def_property_readonly("history", [](const SolveResult<double>& r) { return history_dict(r.history); })
      .def_property_readonly("matvecs", [](const SolveResult<double>& r) {
        return py::make_tuple(r.matvecs.a, r.matvecs.m, r.matvecs.t);
      })
      .def("csv", [](const SolveResult<double>& r) { return format_csv(r.history); });

  m.def("solve",
        [](const Pencil& p, const P& t, const Vec<double>& x0, const std::string& method, double tol, int max_iters,
           std::optional<double> lambda1, std::optional<double> lambda1_reference, const std::string& family,
           double tau, double peak_factor, int peak_window, bool retain_iterates) {
          const SolverConfig c = make_config(method, tol, max_iters, lambda1, lambda1_reference, family, tau,
                                             peak_factor, peak_window, retain_iterates);
          py::gil_scoped_release release;
          return solve(p, t, x0, c);
        },
        py::arg("pencil"), py::arg("t"), py::arg("x0"), py::arg("method") = "lopcg", py::arg("tol") = 1e-10,
        py::arg("max_iters") = 1000, py::arg("lambda1") = py::none(), py::arg("lambda1_reference") = py::none(),
        py::arg("family") = "jacobi-shift", py::arg("tau") = 0.7, py::arg("peak_factor") = 1.5,
        py::arg("peak_window") = 1, py::arg("retain_iterates") = false);

  m.def("psd_step_value", [](const Pencil& p, const P& t, const Vec<double>& x) { return psd_step_value(p, t, x); },
        py::arg("pencil"), py::arg("t"), py::arg("x"));

  m.def("initial_guess", [](const Pencil& p, std::uint64_t seed, const std::string& style) {
    return initial_guess(p.m(), seed, parse_init_style(style));
  }, py::arg("pencil"), py::arg("seed") = 0, py::arg("style") = "random-normal");

  m.def("chebyshev", &chebyshev, py::arg("i"), py::arg("phi"));
  m.def("eta", [](double l1, double l2, double ln, double sigma, double kappa) {
    return eta(BoundInputs{l1, l2, ln, sigma, kappa});
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("lambdan"), py::arg("sigma"), py::arg("kappa"));
  m.def("pcg_bound", [](double l1, double l2, double ln, double sigma, double kappa, int i, double e0, double ratio) {
    return pcg_bound(BoundInputs{l1, l2, ln, sigma, kappa}, i, e0, ratio);
  }, py::arg("lambda1"), py::arg("lambda2"), py::arg("lambdan"), py::arg("sigma"), py::arg("kappa"), py::arg("i"),
        py::arg("lam0_err"), py::arg("norm_ratio") = 1.0);
  m.def("psd_factor", [](double lj, double lj1, double ln, double sigma, double kappa) {
    return psd_factor(InteriorBoundInputs{lj, lj1, ln, sigma, kappa});
  }, py::arg("lambda_j"), py::arg("lambda_j1"), py::arg("lambdan"), py::arg("sigma"), py::arg("kappa"));
  m.def("average_factor_psi2", &average_factor_psi2, py::arg("eta"));
  m.def("chebyshev_inverse_square_via_psi", &chebyshev_inverse_square_via_psi, py::arg("eta"), py::arg("m"));

  m.def("run_config", [](const std::string& json_text, const std::filesystem::path& base_dir,
                         std::optional<std::filesystem::path> out_dir) {
    RunConfig cfg = parse_config(json_text, base_dir);
    GridResult g;
    {
      py::gil_scoped_release release;
      g = run_grid(cfg);
    }
    if (out_dir) {
      cfg.out_dir = *out_dir;
      write_grid_outputs(cfg, g);
    }
    py::list runs;
    for (const auto& r : g.runs) {
      py::dict d;
      d["label"] = r.label;
      d["method"] = std::string(to_string(r.method));
      d["seed"] = r.seed;
      d["ok"] = r.ok;
      d["error"] = r.error;
      d["iterations"] = r.result.iterations;
      d["converged"] = r.result.converged;
      d["theta"] = r.result.theta_final;
      d["nu"] = r.result.nu_final;
      d["csv"] = format_csv(r.result.history);
      runs.append(d);
    }
    return runs;
  }, py::arg("config_json"), py::arg("base_dir") = ".", py::arg("out_dir") = py::none(),
        "Runs a JSON grid configuration; writes CSV outputs when out_dir is given.");
}
