#include "kinexch/pde_solver.hpp"

#include <algorithm>
#include <cmath>

#include "kinexch/error.hpp"
#include "kinexch/inequality_metrics.hpp"

namespace kinexch {

namespace {

constexpr double kClipWarnMass = 1e-8;

std::size_t snap_to_step(double t, double dt) { return static_cast<std::size_t>(std::llround(t / dt)); }

}  // namespace

void PdeConfig::validate() const {
  if (!(dt > 0.0 && dt <= kMaxPdeStep))
    throw Error(ErrorKind::ConfigError, "dt must lie in (0, 0.5]");
  if (!(t_end >= 0.0 && std::isfinite(t_end))) throw Error(ErrorKind::ConfigError, "t_end must be >= 0");
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    const double t = record_times[i];
    if (!(t >= 0.0 && t <= t_end + 1e-12)) throw Error(ErrorKind::ConfigError, "record time outside [0, t_end]");
    if (i > 0 && !(t > record_times[i - 1]))
      throw Error(ErrorKind::ConfigError, "record times must be sorted and distinct");
  }
}

double GeneratorOutput::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.dx();
}

PdeStepper::PdeStepper(const GridSpec& grid, ConvBackend backend)
    : grid_(grid), conv_(grid.cells(), backend), conv_buf_(2 * grid.cells() - 1), q_buf_(grid.cells()) {}

void PdeStepper::q_plus_values(const GridDensity& d, std::vector<double>& out) {
  if (!(d.grid() == grid_)) throw Error(ErrorKind::InvalidArgument, "density grid differs from stepper grid");
  conv_.convolve(d.values(), conv_buf_);
  const std::size_t m = grid_.cells();
  const std::size_t last = conv_buf_.size();
  const double dx = grid_.dx();
  out.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double even = conv_buf_[2 * k];
    const double left = k > 0 ? conv_buf_[2 * k - 1] : 0.0;
    const double right = 2 * k + 1 < last ? conv_buf_[2 * k + 1] : 0.0;
    // FFT round-off can leave values of order -1e-17.
    out[k] = std::max(0.0, dx * (even + 0.5 * (left + right)));
  }
}

GridDensity PdeStepper::q_plus(const GridDensity& d) {
  std::vector<double> q;
  q_plus_values(d, q);
  return GridDensity(grid_, std::move(q));
}

GridDensity PdeStepper::euler_step(const GridDensity& d, double dt, bool renormalize, StepReport* report) {
  if (!(dt >= 0.0 && dt <= kMaxPdeStep)) throw Error(ErrorKind::InvalidArgument, "dt must lie in [0, 0.5]");
  StepReport local;
  if (dt == 0.0) {
    if (report) *report = local;
    return d;
  }
  q_plus_values(d, q_buf_);
  std::vector<double> next(d.size());
  double clipped = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < next.size(); ++k) {
    double v = (1.0 - dt) * d[k] + dt * q_buf_[k];
    if (v < 0.0) {
      clipped -= v;
      v = 0.0;
    }
    next[k] = v;
    sum += v;
  }
  local.clipped_mass = clipped * grid_.dx();
  local.negative_density_warning = local.clipped_mass > kClipWarnMass;
  local.mass_before_normalization = sum * grid_.dx();
  local.mass_drift = local.mass_before_normalization - d.mass();
  if (report) *report = local;
  if (renormalize && local.mass_before_normalization > 0.0) {
    const double inv = 1.0 / local.mass_before_normalization;
    for (double& v : next) v *= inv;
  }
  return GridDensity(grid_, std::move(next), d.truncated_mass());
}

GridDensity q_plus(const GridDensity& d, ConvBackend backend) {
  return PdeStepper(d.grid(), backend).q_plus(d);
}

GeneratorOutput generator(const GridDensity& d, ConvBackend backend) {
  const GridDensity q = q_plus(d, backend);
  GeneratorOutput out{d.grid(), std::vector<double>(d.size())};
  for (std::size_t k = 0; k < d.size(); ++k) out.values[k] = q[k] - d[k];
  return out;
}

GridDensity euler_step(const GridDensity& d, double dt, bool renormalize, ConvBackend backend, StepReport* report) {
  return PdeStepper(d.grid(), backend).euler_step(d, dt, renormalize, report);
}

EvolveResult evolve(const GridDensity& d0, const PdeConfig& cfg) {
  cfg.validate();
  const std::size_t n_steps = snap_to_step(cfg.t_end, cfg.dt);

  std::vector<std::size_t> record_steps;
  if (cfg.record_times.empty()) {
    for (std::size_t s = 0; s <= n_steps; ++s) record_steps.push_back(s);
  } else {
    for (double t : cfg.record_times) {
      const std::size_t s = std::min(snap_to_step(t, cfg.dt), n_steps);
      if (record_steps.empty() || record_steps.back() != s) record_steps.push_back(s);
    }
  }

  const double mean0 = moments(d0).mean;
  EvolveResult result;
  double drift_since_snapshot = 0.0;

  auto record = [&](std::size_t step, const GridDensity& d) {
    const Moments m = moments(d);
    PdeSnapshot snap{static_cast<double>(step) * cfg.dt, d};
    snap.mass = m.mass;
    snap.mean = m.mean;
    snap.variance = m.variance;
    snap.gini = gini_density(d);
    snap.mass_drift = drift_since_snapshot;
    snap.mean_drift = m.mean - mean0;
    result.snapshots.push_back(std::move(snap));
    drift_since_snapshot = 0.0;
  };

  auto next_record = record_steps.begin();
  GridDensity current = d0;
  if (next_record != record_steps.end() && *next_record == 0) {
    record(0, current);
    ++next_record;
  }
  if (next_record == record_steps.end()) return result;

  PdeStepper stepper(d0.grid(), cfg.backend);
  const std::size_t final_step = record_steps.back();
  for (std::size_t step = 1; step <= final_step; ++step) {
    StepReport report;
    current = stepper.euler_step(current, cfg.dt, cfg.renormalize_each_step, &report);
    ++result.steps;
    if (report.negative_density_warning) ++result.negative_density_warnings;
    drift_since_snapshot = std::max(drift_since_snapshot, std::abs(report.mass_drift));
    if (step == *next_record) {
      record(step, current);
      ++next_record;
    }
  }
  return result;
}

}  // namespace kinexch
