#pragma once

#include <cstddef>
#include <vector>

#include "kinexch/convolution.hpp"
#include "kinexch/core_model.hpp"

namespace kinexch {

// Forward-Euler solver for d/dt rho = Q+[rho] - rho on a fixed grid.

inline constexpr double kMaxPdeStep = 0.5;

struct PdeConfig {
  double dt = 0.05;
  double t_end = 0.0;
  // Snapped to multiples of dt. Empty means "every step".
  std::vector<double> record_times;
  ConvBackend backend = ConvBackend::Fft;
  bool renormalize_each_step = true;

  void validate() const;
};

// Q+[rho] - rho; integrates to zero up to rounding.
struct GeneratorOutput {
  GridSpec grid;
  std::vector<double> values;

  double integral() const;
};

struct StepReport {
  double mass_before_normalization = 1.0;
  // mass_before_normalization minus the input mass
  double mass_drift = 0.0;
  double clipped_mass = 0.0;
  bool negative_density_warning = false;
};

// Density of (X + Y) / 2 for X, Y i.i.d. from d, on d's grid. Cells i, j
// average to cell (i+j)/2 when i+j is even and split evenly over the two
// neighbouring cells otherwise, which conserves mass and mean exactly.
GridDensity q_plus(const GridDensity& d, ConvBackend backend = ConvBackend::Fft);

GeneratorOutput generator(const GridDensity& d, ConvBackend backend = ConvBackend::Fft);

GridDensity euler_step(const GridDensity& d, double dt, bool renormalize = true,
                       ConvBackend backend = ConvBackend::Fft, StepReport* report = nullptr);

// Reusable state for repeated steps on one grid.
class PdeStepper {
 public:
  PdeStepper(const GridSpec& grid, ConvBackend backend);

  GridDensity q_plus(const GridDensity& d);
  GridDensity euler_step(const GridDensity& d, double dt, bool renormalize, StepReport* report = nullptr);

 private:
  void q_plus_values(const GridDensity& d, std::vector<double>& out);

  GridSpec grid_;
  SelfConvolver conv_;
  std::vector<double> conv_buf_;
  std::vector<double> q_buf_;
};

struct PdeSnapshot {
  double t = 0.0;
  GridDensity density;
  double mass = 1.0;
  double mean = 0.0;
  double variance = 0.0;
  double gini = 0.0;
  // Largest |pre-normalization mass - 1| over the steps since the previous snapshot.
  double mass_drift = 0.0;
  // mean(t) - mean(0)
  double mean_drift = 0.0;
};

struct EvolveResult {
  std::vector<PdeSnapshot> snapshots;
  std::size_t steps = 0;
  std::size_t negative_density_warnings = 0;
};

EvolveResult evolve(const GridDensity& d0, const PdeConfig& cfg);

}  // namespace kinexch
