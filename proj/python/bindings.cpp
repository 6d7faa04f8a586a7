#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "branchpde/harness.hpp"
#include "branchpde/metrics.hpp"
#include "branchpde/models.hpp"
#include "branchpde/run_record.hpp"
#include "branchpde/sampling.hpp"
#include "branchpde/solver.hpp"
#include "branchpde/spectral_field.hpp"

namespace py = pybind11;
using namespace branchpde;

namespace {

DensityFn wrap_density(const std::function<double(std::vector<double>)>& f, int dim) {
  return [f, dim](const double* x) { return f(std::vector<double>(x, x + dim)); };
}

SolverConfig config_from_kwargs(const py::kwargs& kwargs) {
  SolverConfig cfg;
  for (auto item : kwargs) {
    const auto key = item.first.cast<std::string>();
    if (key == "tau")
      cfg.tau = item.second.cast<double>();
    else if (key == "t_end")
      cfg.t_end = item.second.cast<double>();
    else if (key == "n")
      cfg.n = item.second.cast<std::int64_t>();
    else if (key == "n_u")
      cfg.n_u = item.second.cast<std::int64_t>();
    else if (key == "n_v")
      cfg.n_v = item.second.cast<std::int64_t>();
    else if (key == "modes")
      cfg.modes = item.second.cast<int>();
    else if (key == "seed")
      cfg.seed = item.second.cast<std::uint64_t>();
    else if (key == "workers")
      cfg.workers = item.second.cast<int>();
    else if (key == "grid")
      cfg.eval_grid = item.second.cast<std::size_t>();
    else if (key == "snapshot_times")
      cfg.snapshot_times = item.second.cast<std::vector<double>>();
    else if (key == "density_floor")
      cfg.density_floor = item.second.cast<double>();
    else if (key == "drift_cap")
      cfg.drift_cap = item.second.cast<double>();
    else if (key == "rate_cap")
      cfg.rate_cap = item.second.cast<double>();
    else
      throw ConfigError("unknown run option '" + key + "'");
  }
  return cfg;
}

py::dict result_to_dict(const RunResult& result) {
  py::dict out;
  out["completed"] = result.status.completed;
  if (!result.status.completed) {
    out["failed_step"] = result.status.failed_step;
    out["reason"] = result.status.reason;
  }
  out["z_u"] = result.z_u;
  out["z_v"] = result.z_v;
  py::list t, count_u, count_v, mass_u, mass_v, floor_hits, cap_hits;
  for (const auto& row : result.series) {
    t.append(row.t);
    count_u.append(row.count_u);
    count_v.append(row.count_v);
    mass_u.append(row.mass_u);
    mass_v.append(row.mass_v);
    floor_hits.append(row.floor_hits);
    cap_hits.append(row.cap_hits);
  }
  py::dict series;
  series["t"] = t;
  series["count_u"] = count_u;
  series["count_v"] = count_v;
  series["mass_u"] = mass_u;
  series["mass_v"] = mass_v;
  series["floor_hits"] = floor_hits;
  series["cap_hits"] = cap_hits;
  out["series"] = series;
  py::list snaps;
  for (const auto& snap : result.snapshots) {
    py::dict s;
    s["step"] = snap.step;
    s["t"] = snap.t;
    s["u"] = snap.u;
    if (snap.v) s["v"] = *snap.v;
    snaps.append(s);
  }
  out["snapshots"] = snaps;
  return out;
}

}  // namespace

PYBIND11_MODULE(_branchpde, m) {
  m.doc() = "Stochastic branching particle solver for advection-diffusion-reaction "
            "PDEs on periodic domains";
  m.attr("__version__") = artifact_version();

  py::register_exception<ConfigError>(m, "BranchpdeConfigError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "BranchpdeModelError", PyExc_ValueError);
  py::register_exception<BlowupError>(m, "BranchpdeBlowupError", PyExc_RuntimeError);

  py::class_<TorusDomain>(m, "TorusDomain")
      .def(py::init<int, double, double>(), py::arg("dim"), py::arg("length") = kTwoPi,
           py::arg("origin") = 0.0)
      .def_property_readonly("dim", &TorusDomain::dim)
      .def_property_readonly("length", &TorusDomain::length)
      .def_property_readonly("origin", &TorusDomain::origin)
      .def("wrap",
           [](const TorusDomain& d, std::vector<double> x) {
             if (static_cast<int>(x.size()) != d.dim())
               throw std::invalid_argument("wrap: point has wrong dimension");
             d.wrap(x.data());
             return x;
           })
      .def("uniform_grid", [](const TorusDomain& d, std::size_t n) { return d.uniform_grid(n); });

  py::class_<SpectralField>(m, "SpectralField")
      .def_property_readonly("truncation", &SpectralField::truncation)
      .def_property_readonly("domain", &SpectralField::domain)
      .def("coeffs",
           [](const SpectralField& f) {
             return std::vector<double>(f.coeffs().begin(), f.coeffs().end());
           })
      .def("coeff", [](const SpectralField& f, std::vector<int> k) { return f.coeff(k); })
      .def("evaluate",
           [](const SpectralField& f, std::vector<double> x) {
             return f.evaluate(std::span<const double>(x));
           })
      .def("gradient",
           [](const SpectralField& f, std::vector<double> x) {
             return f.gradient(std::span<const double>(x));
           })
      .def("mass", &SpectralField::mass)
      .def("sobolev_norm_sq", &SpectralField::sobolev_norm_sq)
      .def("sample_grid", &SpectralField::sample_grid,
           py::call_guard<py::gil_scoped_release>());

  py::class_<ParticleSet>(m, "ParticleSet")
      .def_property_readonly("size", &ParticleSet::size)
      .def_property_readonly("n_initial", &ParticleSet::n_initial)
      .def("positions",
           [](const ParticleSet& s) {
             return std::vector<double>(s.positions().begin(), s.positions().end());
           })
      .def("total_mass_estimate", &ParticleSet::total_mass_estimate);

  m.def(
      "sample_initial",
      [](const TorusDomain& domain, const std::function<double(std::vector<double>)>& rho0,
         std::int64_t n, std::uint64_t seed, double step_scale, int burn_in) {
        MhParams params{step_scale, burn_in};
        return sample_initial(domain, wrap_density(rho0, domain.dim()), n, params, seed);
      },
      py::arg("domain"), py::arg("rho0"), py::arg("n"), py::arg("seed") = 0,
      py::arg("step_scale") = 0.8, py::arg("burn_in") = 200,
      py::call_guard<py::gil_scoped_release>(),
      "Metropolis-Hastings sampling of n particles from an unnormalized density");

  m.def(
      "compute_z",
      [](const TorusDomain& domain, const std::function<double(std::vector<double>)>& u0,
         std::size_t quadrature) {
        return compute_z(domain, wrap_density(u0, domain.dim()), quadrature);
      },
      py::arg("domain"), py::arg("u0"), py::arg("quadrature") = 256,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "project_particles",
      [](const ParticleSet& particles, std::int64_t n_initial, int truncation) {
        return project_particles(particles, n_initial, truncation);
      },
      py::arg("particles"), py::arg("n_initial"), py::arg("truncation"),
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "project_function",
      [](const TorusDomain& domain, const std::function<double(std::vector<double>)>& f,
         int truncation, std::size_t quadrature) {
        return project_function(domain, wrap_density(f, domain.dim()), truncation, quadrature);
      },
      py::arg("domain"), py::arg("f"), py::arg("truncation"), py::arg("quadrature"),
      py::call_guard<py::gil_scoped_release>());

  m.def("preset_names", &preset_names);

  m.def(
      "run_scalar",
      [](const std::string& preset, const py::kwargs& kwargs) {
        const SolverConfig cfg = config_from_kwargs(kwargs);
        RunResult result = [&] {
          py::gil_scoped_release release;
          return run_scalar(make_scalar_preset(preset), cfg);
        }();
        return result_to_dict(result);
      },
      py::arg("preset"), "Run the scalar branching solver for a named preset");

  m.def(
      "run_ks",
      [](const std::string& preset, const py::kwargs& kwargs) {
        const SolverConfig cfg = config_from_kwargs(kwargs);
        RunResult result = [&] {
          py::gil_scoped_release release;
          return run_ks(make_ks_preset(preset), cfg);
        }();
        return result_to_dict(result);
      },
      py::arg("preset"), "Run the two-field Keller-Segel branching solver for a named preset");

  m.def(
      "run_to_directory",
      [](const std::string& command, const std::string& preset, const std::string& out_dir,
         const py::kwargs& kwargs) {
        RunInvocation inv;
        inv.command = command;
        inv.preset = preset;
        inv.out_dir = out_dir;
        for (auto item : kwargs) {
          const auto key = item.first.cast<std::string>();
          if (key == "seed")
            inv.seed = item.second.cast<std::uint64_t>();
          else if (key == "tau")
            inv.tau = item.second.cast<double>();
          else if (key == "t_end")
            inv.t_end = item.second.cast<double>();
          else if (key == "n")
            inv.n = item.second.cast<std::int64_t>();
          else if (key == "n_u")
            inv.n_u = item.second.cast<std::int64_t>();
          else if (key == "n_v")
            inv.n_v = item.second.cast<std::int64_t>();
          else if (key == "modes")
            inv.modes = item.second.cast<int>();
          else if (key == "grid")
            inv.grid = item.second.cast<std::size_t>();
          else if (key == "workers")
            inv.workers = item.second.cast<int>();
          else
            throw ConfigError("unknown run option '" + key + "'");
        }
        py::gil_scoped_release release;
        return execute_run(inv);
      },
      py::arg("command"), py::arg("preset"), py::arg("out_dir"),
      "Execute a run and persist run.json / series.csv / snapshots; returns the run directory");

  m.def("exact_mass_case2", &exact_mass_case2);
  m.def(
      "rel_l2",
      [](std::vector<double> a, std::vector<double> b) { return rel_l2(a, b); },
      py::arg("values"), py::arg("reference"));
  m.def(
      "h_minus_s_distance",
      [](const SpectralField& f, const SpectralField& g, double s) {
        return h_minus_s_distance(f, g, s);
      },
      py::arg("f"), py::arg("g"), py::arg("s"));
  m.def(
      "fit_convergence_slope",
      [](std::vector<std::pair<double, double>> pairs) {
        const auto fit = fit_convergence_slope(pairs);
        return py::make_tuple(fit.slope, fit.intercept, fit.residual);
      },
      py::arg("pairs"));
  m.def("read_coef_file", &read_coef_file, py::arg("path"));
}
