#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kinexch/rng.hpp"

namespace kinexch {

// ---------------------------------------------------------------------------
// Initial-condition descriptors
// ---------------------------------------------------------------------------

struct GammaDist {
  double shape = 1.0;
  double rate = 1.0;
};

struct ExponentialDist {
  double rate = 1.0;
};

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};

// p * delta(x0) + (1 - p) * delta(x1)
struct TwoAtomDist {
  double p = 0.5;
  double x0 = 0.0;
  double x1 = 1.0;
};

// Piecewise-linear density through (xs[i], densities[i]), zero outside
// [xs.front(), xs.back()]. Normalized to unit mass on construction.
struct TableDist {
  std::vector<double> xs;
  std::vector<double> densities;
  std::vector<double> cumulative;  // mass on [xs[0], xs[i]]
};

class DistributionSpec {
 public:
  using Kind = std::variant<GammaDist, ExponentialDist, UniformDist, TwoAtomDist, TableDist>;

  static DistributionSpec gamma(double shape, double rate);
  static DistributionSpec exponential(double rate);
  static DistributionSpec uniform(double lo, double hi);
  static DistributionSpec two_atom(double p, double x0, double x1);
  static DistributionSpec table(std::vector<std::pair<double, double>> points);

  // Shorthand used by the CLI: "gamma:5:1", "exponential:1", "uniform:0:1",
  // "twoatom:0.5:0:10".
  static DistributionSpec parse(const std::string& text);

  const Kind& kind() const { return kind_; }
  bool is_atomic() const { return std::holds_alternative<TwoAtomDist>(kind_); }

  double mean() const;
  double variance() const;
  // Density; throws UnsupportedSpec for atomic kinds.
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;

  std::string to_string() const;

 private:
  explicit DistributionSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Grids and gridded densities
// ---------------------------------------------------------------------------

// Uniform cell-centered grid on [x_min, x_min + cells * dx]. Node k sits at
// the center x_min + (k + 1/2) dx of cell k.
class GridSpec {
 public:
  static constexpr std::size_t kMinCells = 16;
  static constexpr std::size_t kMaxCells = std::size_t{1} << 24;

  // x_max - x_min must be an integer multiple of dx (relative slack 1e-9).
  static GridSpec make(double x_max, double dx, double x_min = 0.0);
  static GridSpec from_cells(std::size_t cells, double dx, double x_min = 0.0);

  // mean + 20 std rounded up to a multiple of dx.
  static GridSpec default_for(const DistributionSpec& spec, double dx);

  double dx() const { return dx_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_min_ + static_cast<double>(cells_) * dx_; }
  std::size_t cells() const { return cells_; }
  double node(std::size_t k) const { return x_min_ + (static_cast<double>(k) + 0.5) * dx_; }
  double boundary(std::size_t k) const { return x_min_ + static_cast<double>(k) * dx_; }

  bool operator==(const GridSpec&) const = default;

 private:
  GridSpec(double x_min, double dx, std::size_t cells) : x_min_(x_min), dx_(dx), cells_(cells) {}
  double x_min_;
  double dx_;
  std::size_t cells_;
};

struct Moments {
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

class GridDensity {
 public:
  // Values must be finite and nonnegative; no renormalization is applied.
  GridDensity(GridSpec grid, std::vector<double> values, double truncated_mass = 0.0);

  // Samples f at cell centers and rescales to unit quadrature mass.
  template <typename F>
  static GridDensity from_function(const GridSpec& grid, F&& f) {
    std::vector<double> v(grid.cells());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(grid.node(k));
    return GridDensity(grid, std::move(v)).normalized();
  }

  // Single-cell spike of unit mass at the cell containing x.
  static GridDensity spike(const GridSpec& grid, double x);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }
  double truncated_mass() const { return truncated_mass_; }

  double mass() const;
  GridDensity normalized() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
  double truncated_mass_;
};

inline constexpr double kMaxTailMass = 1e-6;

// Gridded density for a continuous spec, renormalized to unit mass.
// Throws UnsupportedSpec for TwoAtom, TailMassTooLarge when the mass outside
// the grid exceeds kMaxTailMass.
GridDensity make_grid_density(const DistributionSpec& spec, const GridSpec& grid);

// Composite midpoint rule.
Moments moments(const GridDensity& d);

// ---------------------------------------------------------------------------
// CDF of a gridded density (histogram reading: F is linear inside cells)
// ---------------------------------------------------------------------------

class CdfTable {
 public:
  explicit CdfTable(const GridDensity& d);

  const GridSpec& grid() const { return grid_; }
  // F at cell boundaries, size cells + 1, F[0] = 0.
  std::span<const double> at_boundaries() const { return f_; }

  double operator()(double x) const;
  // Inverse by binary search over the boundary table, linear inside a cell.
  double quantile(double u) const;

 private:
  GridSpec grid_;
  std::vector<double> f_;
};

CdfTable cdf(const GridDensity& d);

// ---------------------------------------------------------------------------
// Agent wealths
// ---------------------------------------------------------------------------

class WealthVector {
 public:
  explicit WealthVector(std::vector<double> wealths);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }
  double sum() const;

  // In-place repeated-averaging exchange; throws IndexError on i == j or
  // out-of-range indices.
  void average_pair(std::size_t i, std::size_t j);

  bool operator==(const WealthVector&) const = default;

 private:
  std::vector<double> w_;
};

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // population variance, divisor N
};

SampleMoments sample_moments(const WealthVector& w);

// n i.i.d. inverse-CDF draws; bit-identical for identical (spec, n, seed).
WealthVector sample(const DistributionSpec& spec, std::size_t n, RngSeed seed);

// n i.i.d. draws from the histogram reading of a gridded density.
WealthVector sample(const GridDensity& d, std::size_t n, RngSeed seed);

}  // namespace kinexch
