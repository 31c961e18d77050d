#include "kinexch/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinexch/error.hpp"
#include "kinexch/inequality_metrics.hpp"
#include "kinexch/particle_sim.hpp"
#include "kinexch/pde_solver.hpp"
#include "kinexch/worker_pool.hpp"

namespace kinexch {

namespace {

GridSpec grid_for(const DistributionSpec& spec, double dx, double x_max) {
  return x_max > 0.0 ? GridSpec::make(x_max, dx) : GridSpec::default_for(spec, dx);
}

struct MeanAndError {
  double mean = 0.0;
  double std_err = 0.0;
};

MeanAndError mean_and_error(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidArgument, "fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorKind::InvalidArgument, "fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// ---------------------------------------------------------------------------
// Particle ensembles
// ---------------------------------------------------------------------------

std::vector<ExperimentRecord> run_particle_ensemble(const DistributionSpec& spec, const EnsembleConfig& cfg) {
  if (cfg.replicas == 0) throw Error(ErrorKind::ConfigError, "replicas must be positive");
  if (cfg.times.empty()) throw Error(ErrorKind::ConfigError, "ensemble needs record times");
  const double t_end = cfg.times.back();
  const std::size_t reps = cfg.replicas;
  const std::size_t n_times = cfg.times.size();

  std::optional<EvolveResult> reference;
  if (cfg.w1_reference) {
    const GridDensity d0 = make_grid_density(spec, GridSpec::default_for(spec, cfg.reference_dx));
    reference = evolve(d0, PdeConfig{cfg.reference_dt, t_end, cfg.times, cfg.backend, true});
    if (reference->snapshots.size() != n_times)
      throw Error(ErrorKind::ConfigError, "record times must be distinct multiples of the reference dt");
  }

  struct ReplicaOut {
    std::vector<WealthSummary> summaries;
    std::vector<double> w1;
  };
  std::vector<ReplicaOut> runs(reps);
  parallel_for(reps, cfg.workers, [&](std::size_t r) {
    const std::uint64_t base = mix_seed(cfg.seed.value, r);
    const WealthVector w0 = sample(spec, cfg.n_agents, RngSeed{mix_seed(base, 0)});
    const SimConfig sim{cfg.n_agents, t_end, cfg.times, RngSeed{mix_seed(base, 1)}};
    const Trajectory traj =
        cfg.method == ParticleMethod::Exchange ? simulate_exchange(w0, sim) : simulate_nanbu(w0, sim);
    ReplicaOut& o = runs[r];
    for (std::size_t k = 0; k < n_times; ++k) {
      o.summaries.push_back(traj.records[k].summary);
      if (reference) {
        if (!traj.records[k].snapshot) throw Error(ErrorKind::ConfigError, "ensemble too large to keep snapshots");
        o.w1.push_back(w1(*traj.records[k].snapshot, reference->snapshots[k].density));
      }
    }
  });

  std::vector<ExperimentRecord> out;
  double v0 = 0.0;
  for (std::size_t k = 0; k < n_times; ++k) {
    std::vector<double> var(reps), gini(reps), mean(reps), mass(reps), dist;
    for (std::size_t r = 0; r < reps; ++r) {
      const WealthSummary& s = runs[r].summaries[k];
      var[r] = s.variance;
      gini[r] = s.gini;
      mean[r] = s.mean;
      mass[r] = s.sum / runs[r].summaries.front().sum;
      if (reference) dist.push_back(runs[r].w1[k]);
    }
    const MeanAndError v = mean_and_error(var);
    if (k == 0) v0 = v.mean;
    ExperimentRecord rec;
    rec.source = cfg.method == ParticleMethod::Exchange ? "particles" : "nanbu";
    rec.t = cfg.times[k];
    rec.mass = mean_and_error(mass).mean;
    rec.mean = mean_and_error(mean).mean;
    rec.variance = v.mean;
    rec.variance_std_err = v.std_err;
    rec.gini = mean_and_error(gini).mean;
    if (reference) rec.w1 = mean_and_error(dist).mean;
    rec.variance_target = k == 0 ? v0 : v0 * std::exp(-0.5 * rec.t);
    rec.n_agents = cfg.n_agents;
    rec.replicas = reps;
    rec.seed = cfg.seed.value;
    if (reference) {
      rec.dx = cfg.reference_dx;
      rec.dt = cfg.reference_dt;
    }
    out.push_back(rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variance decay
// ---------------------------------------------------------------------------

std::vector<ExperimentRecord> run_variance_experiment(const DistributionSpec& spec,
                                                      const VarianceExperimentConfig& cfg) {
  if (!std::isfinite(spec.variance())) throw Error(ErrorKind::InvalidArgument, "spec needs a finite variance");
  if (cfg.times.empty()) throw Error(ErrorKind::ConfigError, "variance experiment needs record times");
  const double t_end = cfg.times.back();
  std::vector<ExperimentRecord> out;

  if (cfg.run_pde) {
    const GridDensity d0 = make_grid_density(spec, grid_for(spec, cfg.dx, cfg.x_max));
    PdeConfig pde{cfg.dt, t_end, cfg.times, cfg.backend, true};
    const EvolveResult res = evolve(d0, pde);
    const double v0 = res.snapshots.front().variance;
    for (const auto& s : res.snapshots) {
      ExperimentRecord r;
      r.source = "pde";
      r.t = s.t;
      r.mass = s.mass;
      r.mean = s.mean;
      r.variance = s.variance;
      r.gini = s.gini;
      r.variance_target = s.t == 0.0 ? v0 : v0 * std::exp(-0.5 * s.t);
      r.dx = cfg.dx;
      r.dt = cfg.dt;
      out.push_back(r);
    }
  }

  if (cfg.run_particles) {
    EnsembleConfig ens;
    ens.n_agents = cfg.n_agents;
    ens.replicas = cfg.replicas;
    ens.times = cfg.times;
    ens.seed = cfg.seed;
    ens.workers = cfg.workers;
    for (auto& r : run_particle_ensemble(spec, ens)) out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gini decay
// ---------------------------------------------------------------------------

GiniExperimentResult run_gini_experiment(const DistributionSpec& spec, const GiniExperimentConfig& cfg) {
  GiniExperimentResult result;
  if (const auto* g = std::get_if<GammaDist>(&spec.kind())) result.closed_form = gamma_gini_closed_form(g->shape);

  const GridDensity d0 = make_grid_density(spec, grid_for(spec, cfg.dx, cfg.x_max));
  PdeConfig pde{cfg.dt, cfg.t_end, {}, cfg.backend, true};
  const EvolveResult res = evolve(d0, pde);

  const double g0 = res.snapshots.front().gini;
  result.initial_grid_gini = g0;
  std::vector<double> fit_t, fit_log_g;
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& s : res.snapshots) {
    ExperimentRecord r;
    r.source = "pde";
    r.t = s.t;
    r.mass = s.mass;
    r.mean = s.mean;
    r.variance = s.variance;
    r.gini = s.gini;
    r.dx = cfg.dx;
    r.dt = cfg.dt;
    result.records.push_back(r);

    if (std::isfinite(previous)) {
      const double increase = s.gini - previous;
      result.max_step_increase = std::max(result.max_step_increase, increase);
      if (increase > cfg.monotone_tolerance) result.monotone = false;
    }
    previous = s.gini;
    if (s.gini > g0 * std::exp(-s.t / kTheoremRateDenominator)) result.theorem_floor_holds = false;
    if (s.t >= cfg.fit_from - 1e-12 && s.gini > 0.0) {
      fit_t.push_back(s.t);
      fit_log_g.push_back(std::log(s.gini));
    }
  }
  if (fit_t.size() >= 2) {
    const LineFit fit = least_squares(fit_t, fit_log_g);
    result.fitted_rate = -fit.slope;
    result.fitted_log_intercept = fit.intercept;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Propagation of chaos
// ---------------------------------------------------------------------------

const PocRow& PocReport::row(std::size_t n, double t) const {
  for (const auto& r : rows)
    if (r.n_agents == n && std::abs(r.t - t) < 1e-12) return r;
  throw Error(ErrorKind::InvalidArgument, "no PoC row for the requested (N, t)");
}

double PocReport::slope_at(double t) const {
  for (const auto& s : slopes)
    if (std::abs(s.t - t) < 1e-12) return s.slope;
  throw Error(ErrorKind::InvalidArgument, "no PoC slope at the requested t");
}

PocReport run_poc_experiment(const DistributionSpec& spec, const PocConfig& cfg) {
  if (cfg.n_agents.empty() || cfg.times.empty()) throw Error(ErrorKind::ConfigError, "PoC needs N values and times");
  for (std::size_t k = 0; k < cfg.n_agents.size(); ++k) {
    if (cfg.n_agents[k] < 16) throw Error(ErrorKind::ConfigError, "PoC needs N >= 16");
    if (k > 0 && cfg.n_agents[k] <= cfg.n_agents[k - 1])
      throw Error(ErrorKind::ConfigError, "PoC N values must be increasing");
  }
  for (std::size_t n : cfg.n_agents)
    if (cfg.replicas_for(n) < 8) throw Error(ErrorKind::ConfigError, "PoC needs at least 8 replicas per cell");

  const double t_end = cfg.times.back();
  const GridDensity d0 = make_grid_density(spec, GridSpec::default_for(spec, cfg.reference_dx));
  const EvolveResult reference = evolve(d0, PdeConfig{cfg.reference_dt, t_end, cfg.times, cfg.backend, true});
  if (reference.snapshots.size() != cfg.times.size())
    throw Error(ErrorKind::ConfigError, "PoC times must be distinct multiples of the reference dt");

  // Flatten (N, replica) into one job list so the pool stays busy.
  struct Job {
    std::size_t n_index;
    std::size_t replica;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cfg.n_agents.size(); ++i)
    for (std::size_t r = 0; r < cfg.replicas_for(cfg.n_agents[i]); ++r) jobs.push_back({i, r});

  std::vector<std::vector<double>> distances(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    const std::size_t n = cfg.n_agents[jobs[j].n_index];
    const std::uint64_t base = mix_seed(mix_seed(cfg.seed.value, n), jobs[j].replica);
    const WealthVector w0 = sample(spec, n, RngSeed{mix_seed(base, 0)});
    const Trajectory traj = simulate_exchange(w0, SimConfig{n, t_end, cfg.times, RngSeed{mix_seed(base, 1)}});
    std::vector<double> d(cfg.times.size());
    for (std::size_t k = 0; k < cfg.times.size(); ++k) d[k] = w1(*traj.records[k].snapshot, reference.snapshots[k].density);
    distances[j] = std::move(d);
  });

  PocReport report;
  for (std::size_t i = 0; i < cfg.n_agents.size(); ++i) {
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
      std::vector<double> xs;
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j].n_index == i) xs.push_back(distances[j][k]);
      const MeanAndError m = mean_and_error(xs);
      report.rows.push_back({cfg.n_agents[i], cfg.times[k], m.mean, m.std_err, xs.size()});
    }
  }
  if (cfg.n_agents.size() >= 2) {
    for (double t : cfg.times) {
      std::vector<double> log_n, log_w;
      for (std::size_t n : cfg.n_agents) {
        log_n.push_back(std::log(static_cast<double>(n)));
        log_w.push_back(std::log(report.row(n, t).mean_w1));
      }
      report.slopes.push_back({t, least_squares(log_n, log_w).slope});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Envelope survey
// ---------------------------------------------------------------------------

EnvelopeSurvey run_envelope_survey(const std::vector<DistributionSpec>& specs, const EnvelopeSurveyConfig& cfg) {
  EnvelopeSurvey survey;
  survey.rows.resize(specs.size());
  parallel_for(specs.size(), cfg.workers, [&](std::size_t k) {
    const DistributionSpec& spec = specs[k];
    EnvelopeSurveyRow& row = survey.rows[k];
    row.spec = spec.to_string();

    if (const auto* atoms = std::get_if<TwoAtomDist>(&spec.kind())) {
      const double xs[] = {atoms->x0, atoms->x1};
      const double ws[] = {atoms->p, 1.0 - atoms->p};
      row.status = "counterexample";
      row.gini = gini_atoms(xs, ws);
      row.h = gini_dissipation_atoms(xs, ws);
      return;
    }

    const GridDensity d = make_grid_density(spec, GridSpec::default_for(spec, cfg.dx));
    const double violation = log_concavity_violation(d);
    if (violation > kLogConcavityTolerance) {
      row.status = "skipped: not log-concave";
      return;
    }
    const Envelope env = build_envelope(d);
    const double mu = moments(d).mean;
    const EnvelopeBounds bounds = envelope_bounds(env, mu);
    const auto estimator = d.size() <= kQuadrature3DMaxCells ? DissipationEstimator::Quadrature3D
                                                              : DissipationEstimator::MonteCarlo;
    const GiniDissipation h = gini_dissipation(d, estimator, cfg.mc_samples, RngSeed{mix_seed(cfg.seed.value, k)});

    row.status = "ok";
    row.gini = gini_density(d);
    row.h = h.value;
    row.h_std_err = h.std_err;
    row.a = env.a;
    row.b = env.b;
    row.c = env.c;
    row.g_upper = bounds.g_upper;
    row.h_lower = bounds.h_lower;
    row.gini_upper = bounds.gini_upper;
    row.dissipation_lower = bounds.dissipation_lower;
    row.majorant_slack = env.majorant_slack;
    row.theorem_ratio = row.h * kTheoremRateDenominator / row.gini;
    row.theorem_holds = row.theorem_ratio >= 1.0;
  });

  survey.min_h_over_g = std::numeric_limits<double>::infinity();
  for (const auto& r : survey.rows)
    if (r.status == "ok") survey.min_h_over_g = std::min(survey.min_h_over_g, r.h / r.gini);
  return survey;
}

}  // namespace kinexch
