#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kinexch/convolution.hpp"
#include "kinexch/core_model.hpp"
#include "kinexch/rng.hpp"

namespace kinexch {

struct ExperimentRecord {
  std::string source;  // "pde", "particles", "nanbu"
  double t = 0.0;
  double mass = 1.0;
  double mean = 0.0;
  double variance = 0.0;
  double gini = 0.0;
  std::optional<double> w1;
  std::optional<double> h;
  // V(0) exp(-t/2) with V(0) measured by the same source.
  std::optional<double> variance_target;
  std::optional<double> variance_std_err;
  std::size_t n_agents = 0;
  std::size_t replicas = 1;
  double dx = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------

enum class ParticleMethod { Exchange, Nanbu };

struct EnsembleConfig {
  ParticleMethod method = ParticleMethod::Exchange;
  std::size_t n_agents = 10'000;
  std::size_t replicas = 32;
  std::vector<double> times{0.0, 1.0, 2.0, 4.0};
  RngSeed seed{1};
  std::size_t workers = 1;
  // Adds the replica-mean W1 distance to a PDE reference at every time.
  bool w1_reference = false;
  double reference_dx = 0.005;
  double reference_dt = 0.01;
  ConvBackend backend = ConvBackend::Fft;
};

// Replica-averaged summaries of independent particle runs, one record per
// time. Replica r draws its initial sample and its dynamics from seeds
// derived from (seed, r), so results do not depend on the worker count.
std::vector<ExperimentRecord> run_particle_ensemble(const DistributionSpec& spec, const EnsembleConfig& cfg);

// ---------------------------------------------------------------------------

struct VarianceExperimentConfig {
  std::vector<double> times{0.0, 1.0, 2.0, 4.0};
  bool run_pde = true;
  double dx = 0.01;
  double x_max = 0.0;  // 0 selects the default grid
  double dt = 0.05;
  ConvBackend backend = ConvBackend::Fft;
  bool run_particles = true;
  std::size_t n_agents = 10'000;
  std::size_t replicas = 32;
  RngSeed seed{1};
  std::size_t workers = 1;
};

std::vector<ExperimentRecord> run_variance_experiment(const DistributionSpec& spec,
                                                      const VarianceExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct GiniExperimentConfig {
  double dx = 0.01;
  double x_max = 0.0;
  double dt = 0.05;
  double t_end = 5.0;
  ConvBackend backend = ConvBackend::Fft;
  // Least-squares window for log G(t) = log G0 - rate * t.
  double fit_from = 0.5;
  double monotone_tolerance = 1e-8;
};

struct GiniExperimentResult {
  std::vector<ExperimentRecord> records;  // one per Euler step
  std::optional<double> closed_form;      // gamma initial data only
  double initial_grid_gini = 0.0;
  bool monotone = true;
  double max_step_increase = 0.0;
  double fitted_rate = 0.0;
  double fitted_log_intercept = 0.0;
  // G(t) <= G(0) exp(-t / 14434) at every record
  bool theorem_floor_holds = true;
};

GiniExperimentResult run_gini_experiment(const DistributionSpec& spec, const GiniExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct PocConfig {
  std::vector<std::size_t> n_agents{64, 256, 1024, 4096};
  std::vector<double> times{0.0, 1.0};
  std::size_t replicas_small = 100;  // N <= 1024
  std::size_t replicas_large = 16;
  RngSeed seed{1};
  std::size_t workers = 1;
  double reference_dx = 0.005;
  double reference_dt = 0.01;
  ConvBackend backend = ConvBackend::Fft;

  std::size_t replicas_for(std::size_t n) const { return n <= 1024 ? replicas_small : replicas_large; }
};

struct PocRow {
  std::size_t n_agents = 0;
  double t = 0.0;
  double mean_w1 = 0.0;
  double std_err = 0.0;
  std::size_t replicas = 0;
};

struct PocSlope {
  double t = 0.0;
  double slope = 0.0;  // d log(mean_w1) / d log(N)
};

struct PocReport {
  std::vector<PocRow> rows;  // ordered by N, then t
  std::vector<PocSlope> slopes;

  const PocRow& row(std::size_t n, double t) const;
  double slope_at(double t) const;
};

PocReport run_poc_experiment(const DistributionSpec& spec, const PocConfig& cfg);

// ---------------------------------------------------------------------------

struct EnvelopeSurveyConfig {
  double dx = 0.01;
  std::size_t mc_samples = 1'000'000;
  RngSeed seed{1};
  std::size_t workers = 1;
};

struct EnvelopeSurveyRow {
  std::string spec;
  // "ok", "counterexample" (atomic law, recorded but excluded from the
  // decay check) or "skipped: <reason>"
  std::string status;
  double gini = 0.0;
  double h = 0.0;
  double h_std_err = 0.0;
  double a = 0.0, b = 0.0, c = 0.0;
  double g_upper = 0.0, h_lower = 0.0;
  double gini_upper = 0.0, dissipation_lower = 0.0;
  double majorant_slack = 0.0;
  // H * 14434 / G; >= 1 when the theorem's rate holds for this density.
  double theorem_ratio = 0.0;
  bool theorem_holds = false;
};

struct EnvelopeSurvey {
  std::vector<EnvelopeSurveyRow> rows;
  double min_h_over_g = 0.0;  // over "ok" rows
};

EnvelopeSurvey run_envelope_survey(const std::vector<DistributionSpec>& specs, const EnvelopeSurveyConfig& cfg);

// Ordinary least squares y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kinexch
