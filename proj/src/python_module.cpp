#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kinexch/core_model.hpp"
#include "kinexch/error.hpp"
#include "kinexch/experiments.hpp"
#include "kinexch/inequality_metrics.hpp"
#include "kinexch/particle_sim.hpp"
#include "kinexch/pde_solver.hpp"

namespace py = pybind11;
using namespace kinexch;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

py::dict record_dict(const ExperimentRecord& r) {
  py::dict d;
  d["source"] = r.source;
  d["t"] = r.t;
  d["mass"] = r.mass;
  d["mean"] = r.mean;
  d["variance"] = r.variance;
  d["gini"] = r.gini;
  d["w1"] = r.w1;
  d["h"] = r.h;
  d["variance_target"] = r.variance_target;
  d["variance_std_err"] = r.variance_std_err;
  d["n_agents"] = r.n_agents;
  d["replicas"] = r.replicas;
  d["seed"] = r.seed;
  return d;
}

py::list trajectory_list(const Trajectory& traj) {
  py::list out;
  for (const auto& rec : traj.records) {
    py::dict d;
    d["t"] = rec.t;
    d["sum"] = rec.summary.sum;
    d["mean"] = rec.summary.mean;
    d["variance"] = rec.summary.variance;
    d["gini"] = rec.summary.gini;
    if (rec.snapshot) d["wealths"] = to_vector(rec.snapshot->values());
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Repeated-averaging wealth exchange model";

  py::register_exception<Error>(m, "KinexchError", PyExc_ValueError);

  py::enum_<ConvBackend>(m, "ConvBackend").value("Direct", ConvBackend::Direct).value("Fft", ConvBackend::Fft);
  py::enum_<DissipationEstimator>(m, "DissipationEstimator")
      .value("Quadrature3D", DissipationEstimator::Quadrature3D)
      .value("MonteCarlo", DissipationEstimator::MonteCarlo);

  py::class_<DistributionSpec>(m, "DistributionSpec")
      .def_static("parse", &DistributionSpec::parse)
      .def_static("gamma", &DistributionSpec::gamma, py::arg("shape"), py::arg("rate") = 1.0)
      .def_static("exponential", &DistributionSpec::exponential, py::arg("rate") = 1.0)
      .def_static("uniform", &DistributionSpec::uniform)
      .def_static("two_atom", &DistributionSpec::two_atom)
      .def("mean", &DistributionSpec::mean)
      .def("variance", &DistributionSpec::variance)
      .def("pdf", &DistributionSpec::pdf)
      .def("cdf", &DistributionSpec::cdf)
      .def("quantile", &DistributionSpec::quantile)
      .def("__str__", &DistributionSpec::to_string)
      .def("__repr__", [](const DistributionSpec& s) { return "DistributionSpec('" + s.to_string() + "')"; });

  py::class_<GridSpec>(m, "GridSpec")
      .def_static("make", &GridSpec::make, py::arg("x_max"), py::arg("dx"), py::arg("x_min") = 0.0)
      .def_static("default_for", &GridSpec::default_for)
      .def_property_readonly("dx", &GridSpec::dx)
      .def_property_readonly("x_min", &GridSpec::x_min)
      .def_property_readonly("x_max", &GridSpec::x_max)
      .def_property_readonly("cells", &GridSpec::cells)
      .def("node", &GridSpec::node);

  py::class_<GridDensity>(m, "GridDensity")
      .def(py::init<GridSpec, std::vector<double>, double>(), py::arg("grid"), py::arg("values"),
           py::arg("truncated_mass") = 0.0)
      .def_property_readonly("grid", &GridDensity::grid)
      .def_property_readonly("values", [](const GridDensity& d) { return to_vector(d.values()); })
      .def("mass", &GridDensity::mass)
      .def("normalized", &GridDensity::normalized)
      .def("__len__", &GridDensity::size);

  m.def("make_grid_density", &make_grid_density);
  m.def("moments", [](const GridDensity& d) {
    const Moments mo = moments(d);
    return py::make_tuple(mo.mass, mo.mean, mo.variance);
  });

  m.def("q_plus", &q_plus, py::arg("density"), py::arg("backend") = ConvBackend::Fft);
  m.def("euler_step", [](const GridDensity& d, double dt, ConvBackend backend) {
    return euler_step(d, dt, true, backend);
  }, py::arg("density"), py::arg("dt"), py::arg("backend") = ConvBackend::Fft);
  m.def(
      "evolve",
      [](const GridDensity& d0, double dt, double t_end, std::vector<double> record_times, ConvBackend backend) {
        const EvolveResult res = evolve(d0, PdeConfig{dt, t_end, std::move(record_times), backend, true});
        py::list out;
        for (const auto& s : res.snapshots) {
          py::dict d;
          d["t"] = s.t;
          d["density"] = s.density;
          d["mass"] = s.mass;
          d["mean"] = s.mean;
          d["variance"] = s.variance;
          d["gini"] = s.gini;
          out.append(d);
        }
        return out;
      },
      py::arg("density"), py::arg("dt"), py::arg("t_end"), py::arg("record_times") = std::vector<double>{},
      py::arg("backend") = ConvBackend::Fft);

  m.def("gini_density", &gini_density);
  m.def("gini_sample", [](const std::vector<double>& w) { return gini_sample(w); });
  m.def("gini_atoms", [](const std::vector<double>& x, const std::vector<double>& p) { return gini_atoms(x, p); });
  m.def("gamma_gini_closed_form", &gamma_gini_closed_form);
  m.def("w1", [](const std::vector<double>& emp, const GridDensity& d) { return w1(emp, d); });
  m.def(
      "gini_dissipation",
      [](const GridDensity& d, DissipationEstimator est, std::size_t samples, std::uint64_t seed) {
        const GiniDissipation h = gini_dissipation(d, est, samples, RngSeed{seed});
        return py::make_tuple(h.value, h.std_err);
      },
      py::arg("density"), py::arg("estimator") = DissipationEstimator::MonteCarlo, py::arg("samples") = 1'000'000,
      py::arg("seed") = 1);
  m.def("gini_dissipation_atoms",
        [](const std::vector<double>& x, const std::vector<double>& p) { return gini_dissipation_atoms(x, p); });
  m.def("log_concavity_violation", &log_concavity_violation, py::arg("density"), py::arg("floor_rel") = 1e-12);
  m.def("build_envelope", [](const GridDensity& d) {
    const Envelope e = build_envelope(d);
    py::dict out;
    out["rho_star"] = e.rho_star;
    out["a"] = e.a;
    out["b"] = e.b;
    out["c"] = e.c;
    out["majorant_slack"] = e.majorant_slack;
    out["mollify_width"] = e.mollify_width;
    return out;
  });
  m.def("envelope_ratio_constant", &envelope_ratio_constant);

  m.def("sample", [](const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
    return to_vector(sample(spec, n, RngSeed{seed}).values());
  });
  m.def(
      "simulate_exchange",
      [](const std::vector<double>& w0, double t_end, std::vector<double> times, std::uint64_t seed) {
        return trajectory_list(simulate_exchange(WealthVector(w0), SimConfig{w0.size(), t_end, std::move(times), RngSeed{seed}}));
      },
      py::arg("wealths"), py::arg("t_end"), py::arg("record_times"), py::arg("seed") = 1);
  m.def(
      "simulate_nanbu",
      [](const std::vector<double>& w0, double t_end, std::vector<double> times, std::uint64_t seed) {
        return trajectory_list(simulate_nanbu(WealthVector(w0), SimConfig{w0.size(), t_end, std::move(times), RngSeed{seed}}));
      },
      py::arg("wealths"), py::arg("t_end"), py::arg("record_times"), py::arg("seed") = 1);

  m.def(
      "run_variance_experiment",
      [](const DistributionSpec& spec, std::size_t n_agents, std::size_t replicas, std::uint64_t seed,
         std::size_t workers) {
        VarianceExperimentConfig cfg;
        cfg.n_agents = n_agents;
        cfg.replicas = replicas;
        cfg.seed = RngSeed{seed};
        cfg.workers = workers;
        py::list out;
        for (const auto& r : run_variance_experiment(spec, cfg)) out.append(record_dict(r));
        return out;
      },
      py::arg("spec"), py::arg("n_agents") = 10'000, py::arg("replicas") = 32, py::arg("seed") = 1,
      py::arg("workers") = 1);
  m.def(
      "run_gini_experiment",
      [](const DistributionSpec& spec, double dx, double dt, double t_end) {
        GiniExperimentConfig cfg;
        cfg.dx = dx;
        cfg.dt = dt;
        cfg.t_end = t_end;
        const GiniExperimentResult res = run_gini_experiment(spec, cfg);
        py::dict out;
        py::list records;
        for (const auto& r : res.records) records.append(record_dict(r));
        out["records"] = records;
        out["closed_form"] = res.closed_form;
        out["initial_grid_gini"] = res.initial_grid_gini;
        out["monotone"] = res.monotone;
        out["fitted_rate"] = res.fitted_rate;
        out["theorem_floor_holds"] = res.theorem_floor_holds;
        return out;
      },
      py::arg("spec"), py::arg("dx") = 0.01, py::arg("dt") = 0.05, py::arg("t_end") = 5.0);
}
