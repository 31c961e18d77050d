#pragma once

#include <cstddef>
#include <span>

#include "kinexch/core_model.hpp"

namespace kinexch {

// Decay-rate denominators K for G(t) <= G(0) exp(-t / K): the headline
// constant and the slightly sharper one the envelope bounds give.
inline constexpr double kTheoremRateDenominator = 14434.0;
inline constexpr double kProofRateDenominator = 14334.0;

// ---------------------------------------------------------------------------
// Gini index
// ---------------------------------------------------------------------------

// G = E|X - Y| / (2 mu), evaluated as (1/mu) * int F (1 - F) dx with the
// histogram CDF (exact per cell). Throws ZeroMean when mu <= 1e-12.
double gini_density(const GridDensity& d);

// Empirical-law Gini with N^2 denominator (pairs drawn with replacement),
// computed from the sorted sample in O(N log N).
double gini_sample(const WealthVector& w);
double gini_sample(std::span<const double> wealths);

// Gini of a finite discrete law sum_k weights[k] delta(atoms[k]).
double gini_atoms(std::span<const double> atoms, std::span<const double> weights);

// Closed-form Gini of a gamma law (rate-free), via log-gamma.
double gamma_gini_closed_form(double shape);

// ---------------------------------------------------------------------------
// Wasserstein-1 between an empirical measure and a gridded density
// ---------------------------------------------------------------------------

// int |F_emp - F_d| dx, exact over the merged breakpoints. Throws
// SupportExceeded when a wealth lies outside [x_min, x_max] of d's grid.
double w1(const WealthVector& emp, const GridDensity& d);
double w1(std::span<const double> emp, const GridDensity& d);

// ---------------------------------------------------------------------------
// Gini dissipation H = -dG/dt
// ---------------------------------------------------------------------------

enum class DissipationEstimator { Quadrature3D, MonteCarlo };

inline constexpr std::size_t kQuadrature3DMaxCells = 512;

struct GiniDissipation {
  double value = 0.0;
  DissipationEstimator estimator = DissipationEstimator::MonteCarlo;
  double std_err = 0.0;  // MonteCarlo only
};

// H = (1/mu) E[(|V-Y| + |W-Y|)/2 - |(V+W)/2 - Y|] with V, W, Y i.i.d. from d.
// Quadrature3D sums over cell centers (GridTooLarge above 512 cells);
// MonteCarlo draws triples by inverse CDF and reports a standard error.
GiniDissipation gini_dissipation(const GridDensity& d, DissipationEstimator estimator,
                                 std::size_t mc_samples = 1'000'000, RngSeed seed = {});

// Exact dissipation of a finite discrete law, O(K^3) in the number of atoms.
double gini_dissipation_atoms(std::span<const double> atoms, std::span<const double> weights);

// Dissipation of the empirical law of w (equal weights, ties merged).
double gini_dissipation_sample(const WealthVector& w);

// ---------------------------------------------------------------------------
// Log-concavity and the piecewise log-linear envelope
// ---------------------------------------------------------------------------

// Largest positive part of the discrete second derivative of log rho over
// interior nodes whose three-point stencil stays above floor_rel * max(rho).
// Zero means log-concave at grid resolution.
double log_concavity_violation(const GridDensity& d, double floor_rel = 1e-12);

inline constexpr double kLogConcavityTolerance = 1e-6;

struct EnvelopeOptions {
  // Normal kernel standard deviation used when the density touches zero
  // inside the envelope's reach; 0 selects 2 dx.
  double mollify_width = 0.0;
  bool force_mollify = false;
};

// q(x) = rho* exp(-(x-c)/(a-c)) for x < a, rho* on [a, b), and
// rho* exp(-(x-c)/(b-c)) for x >= b, with rho(a) = rho(b) = rho*/e.
struct Envelope {
  double rho_star = 0.0;
  double c = 0.0;
  double a = 0.0;
  double b = 0.0;
  double mollify_width = 0.0;  // 0 when no mollification was applied
  GridDensity density;         // the density the envelope was extracted from
  // min over nodes of (q - rho) / rho*; nonnegative when q majorizes rho.
  double majorant_slack = 0.0;

  double q(double x) const;
};

Envelope build_envelope(const GridDensity& d, const EnvelopeOptions& options = {});

// Gaussian smoothing on a grid extended on both sides far enough to hold
// the kernel's reach.
GridDensity mollify(const GridDensity& d, double width);

struct EnvelopeBounds {
  // Raw bounds in units of the envelope width b - a:
  // E|X-Y| <= g_upper and mu * H >= h_lower.
  double g_upper = 0.0;
  double h_lower = 0.0;
  double ratio_constant = 0.0;  // g_upper / h_lower
  // Same bounds with the 1/(2 mu) and 1/mu prefactors restored:
  // G <= gini_upper and H >= dissipation_lower.
  double gini_upper = 0.0;
  double dissipation_lower = 0.0;
};

// 24 (e+1)^3 (1 + 3e + e^2/3)
double envelope_ratio_constant();

EnvelopeBounds envelope_bounds(const Envelope& e, double mu);

}  // namespace kinexch
