#include "kinexch/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "kinexch/error.hpp"

namespace kinexch {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TailMassTooLarge: return "TailMassTooLarge";
    case ErrorKind::UnsupportedSpec: return "UnsupportedSpec";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::ZeroMean: return "ZeroMean";
    case ErrorKind::SupportExceeded: return "SupportExceeded";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
    case ErrorKind::NotLogConcave: return "NotLogConcave";
    case ErrorKind::CrossingNotFound: return "CrossingNotFound";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Integral of x^p * d(x) over one linear segment, exact by Simpson's rule
// because the integrand is at most cubic.
double segment_moment(double x0, double d0, double x1, double d1, int p) {
  const double xm = 0.5 * (x0 + x1);
  const double dm = 0.5 * (d0 + d1);
  return (x1 - x0) / 6.0 * (std::pow(x0, p) * d0 + 4.0 * std::pow(xm, p) * dm + std::pow(x1, p) * d1);
}

}  // namespace

// ---------------------------------------------------------------------------
// DistributionSpec
// ---------------------------------------------------------------------------

DistributionSpec DistributionSpec::gamma(double shape, double rate) {
  require(finite_positive(shape) && finite_positive(rate), "gamma needs positive shape and rate");
  return DistributionSpec(GammaDist{shape, rate});
}

DistributionSpec DistributionSpec::exponential(double rate) {
  require(finite_positive(rate), "exponential needs a positive rate");
  return DistributionSpec(ExponentialDist{rate});
}

DistributionSpec DistributionSpec::uniform(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && lo < hi,
          "uniform needs 0 <= lo < hi");
  return DistributionSpec(UniformDist{lo, hi});
}

DistributionSpec DistributionSpec::two_atom(double p, double x0, double x1) {
  require(p >= 0.0 && p <= 1.0, "two-atom weight must lie in [0, 1]");
  require(std::isfinite(x0) && std::isfinite(x1) && x0 >= 0.0 && x1 >= 0.0,
          "two-atom locations must be nonnegative");
  return DistributionSpec(TwoAtomDist{p, x0, x1});
}

DistributionSpec DistributionSpec::table(std::vector<std::pair<double, double>> points) {
  require(points.size() >= 2, "table needs at least two points");
  TableDist t;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [x, d] = points[i];
    require(std::isfinite(x) && x >= 0.0, "table support must be nonnegative");
    require(std::isfinite(d) && d >= 0.0, "table densities must be nonnegative");
    require(i == 0 || x > points[i - 1].first, "table abscissae must be strictly increasing");
    t.xs.push_back(x);
    t.densities.push_back(d);
  }
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < t.xs.size(); ++i)
    mass += 0.5 * (t.densities[i] + t.densities[i + 1]) * (t.xs[i + 1] - t.xs[i]);
  require(finite_positive(mass), "table has zero mass");
  for (double& d : t.densities) d /= mass;
  t.cumulative.assign(t.xs.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.xs.size(); ++i)
    t.cumulative[i + 1] =
        t.cumulative[i] + 0.5 * (t.densities[i] + t.densities[i + 1]) * (t.xs[i + 1] - t.xs[i]);
  return DistributionSpec(std::move(t));
}

DistributionSpec DistributionSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto bad = [&]() { return Error(ErrorKind::ConfigError, "cannot parse distribution '" + text + "'"); };
  if (parts.empty()) throw bad();
  std::vector<double> nums;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    double v = 0.0;
    const char* first = parts[i].data();
    const char* last = first + parts[i].size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw bad();
    nums.push_back(v);
  }
  const std::string& name = parts[0];
  try {
    if (name == "gamma" && nums.size() == 2) return gamma(nums[0], nums[1]);
    if (name == "gamma" && nums.size() == 1) return gamma(nums[0], 1.0);
    if ((name == "exponential" || name == "exp") && nums.size() == 1) return exponential(nums[0]);
    if (name == "uniform" && nums.size() == 2) return uniform(nums[0], nums[1]);
    if (name == "twoatom" && nums.size() == 3) return two_atom(nums[0], nums[1], nums[2]);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("invalid distribution '") + text + "': " + e.what());
  }
  throw bad();
}

double DistributionSpec::mean() const {
  return std::visit(
      overloaded{
          [](const GammaDist& g) { return g.shape / g.rate; },
          [](const ExponentialDist& e) { return 1.0 / e.rate; },
          [](const UniformDist& u) { return 0.5 * (u.lo + u.hi); },
          [](const TwoAtomDist& t) { return t.p * t.x0 + (1.0 - t.p) * t.x1; },
          [](const TableDist& t) {
            double m = 0.0;
            for (std::size_t i = 0; i + 1 < t.xs.size(); ++i)
              m += segment_moment(t.xs[i], t.densities[i], t.xs[i + 1], t.densities[i + 1], 1);
            return m;
          },
      },
      kind_);
}

double DistributionSpec::variance() const {
  return std::visit(
      overloaded{
          [](const GammaDist& g) { return g.shape / (g.rate * g.rate); },
          [](const ExponentialDist& e) { return 1.0 / (e.rate * e.rate); },
          [](const UniformDist& u) { return (u.hi - u.lo) * (u.hi - u.lo) / 12.0; },
          [](const TwoAtomDist& t) { return t.p * (1.0 - t.p) * (t.x1 - t.x0) * (t.x1 - t.x0); },
          [this](const TableDist& t) {
            double m2 = 0.0;
            for (std::size_t i = 0; i + 1 < t.xs.size(); ++i)
              m2 += segment_moment(t.xs[i], t.densities[i], t.xs[i + 1], t.densities[i + 1], 2);
            const double mu = mean();
            return m2 - mu * mu;
          },
      },
      kind_);
}

double DistributionSpec::pdf(double x) const {
  return std::visit(
      overloaded{
          [x](const GammaDist& g) {
            if (x < 0.0) return 0.0;
            if (x == 0.0) {
              if (g.shape < 1.0) return std::numeric_limits<double>::infinity();
              return g.shape == 1.0 ? g.rate : 0.0;
            }
            return g.rate * boost::math::gamma_p_derivative(g.shape, g.rate * x);
          },
          [x](const ExponentialDist& e) { return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
          [x](const UniformDist& u) { return (x >= u.lo && x < u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
          [](const TwoAtomDist&) -> double {
            throw Error(ErrorKind::UnsupportedSpec, "two-atom law has no density");
          },
          [x](const TableDist& t) {
            if (x < t.xs.front() || x > t.xs.back()) return 0.0;
            auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
            std::size_t i = it == t.xs.end() ? t.xs.size() - 2
                                             : static_cast<std::size_t>(it - t.xs.begin()) - 1;
            const double s = (x - t.xs[i]) / (t.xs[i + 1] - t.xs[i]);
            return (1.0 - s) * t.densities[i] + s * t.densities[i + 1];
          },
      },
      kind_);
}

double DistributionSpec::cdf(double x) const {
  return std::visit(
      overloaded{
          [x](const GammaDist& g) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(g.shape, g.rate * x); },
          [x](const ExponentialDist& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
          [x](const UniformDist& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
          [x](const TwoAtomDist& t) {
            double f = 0.0;
            if (x >= t.x0) f += t.p;
            if (x >= t.x1) f += 1.0 - t.p;
            return f;
          },
          [x](const TableDist& t) {
            if (x <= t.xs.front()) return 0.0;
            if (x >= t.xs.back()) return 1.0;
            auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - t.xs.begin()) - 1;
            const double h = x - t.xs[i];
            const double slope = (t.densities[i + 1] - t.densities[i]) / (t.xs[i + 1] - t.xs[i]);
            return t.cumulative[i] + t.densities[i] * h + 0.5 * slope * h * h;
          },
      },
      kind_);
}

double DistributionSpec::quantile(double u) const {
  require(u >= 0.0 && u < 1.0, "quantile level must lie in [0, 1)");
  return std::visit(
      overloaded{
          [u](const GammaDist& g) { return u == 0.0 ? 0.0 : boost::math::gamma_p_inv(g.shape, u) / g.rate; },
          [u](const ExponentialDist& e) { return -std::log1p(-u) / e.rate; },
          [u](const UniformDist& d) { return d.lo + u * (d.hi - d.lo); },
          [u](const TwoAtomDist& t) { return u < t.p ? t.x0 : t.x1; },
          [u](const TableDist& t) {
            auto it = std::upper_bound(t.cumulative.begin(), t.cumulative.end(), u);
            if (it == t.cumulative.end()) return t.xs.back();
            const std::size_t i = static_cast<std::size_t>(it - t.cumulative.begin()) - 1;
            const double r = u - t.cumulative[i];
            const double d0 = t.densities[i];
            const double slope = (t.densities[i + 1] - d0) / (t.xs[i + 1] - t.xs[i]);
            // Root of slope/2 h^2 + d0 h - r = 0 in the cancellation-free form.
            const double h = 2.0 * r / (d0 + std::sqrt(std::max(0.0, d0 * d0 + 2.0 * slope * r)));
            return std::min(t.xs[i] + h, t.xs[i + 1]);
          },
      },
      kind_);
}

std::string DistributionSpec::to_string() const {
  return std::visit(
      overloaded{
          [](const GammaDist& g) { return "gamma:" + shortest(g.shape) + ":" + shortest(g.rate); },
          [](const ExponentialDist& e) { return "exponential:" + shortest(e.rate); },
          [](const UniformDist& u) { return "uniform:" + shortest(u.lo) + ":" + shortest(u.hi); },
          [](const TwoAtomDist& t) {
            return "twoatom:" + shortest(t.p) + ":" + shortest(t.x0) + ":" + shortest(t.x1);
          },
          [](const TableDist& t) { return "table:" + std::to_string(t.xs.size()) + "pts"; },
      },
      kind_);
}

// ---------------------------------------------------------------------------
// GridSpec / GridDensity
// ---------------------------------------------------------------------------

GridSpec GridSpec::make(double x_max, double dx, double x_min) {
  require(finite_positive(dx), "grid step must be positive");
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min, "grid needs x_max > x_min");
  const double n = (x_max - x_min) / dx;
  const double cells = std::round(n);
  if (cells > static_cast<double>(kMaxCells))
    throw Error(ErrorKind::GridTooLarge, "grid of " + std::to_string(cells) + " cells");
  require(std::abs(n - cells) <= 1e-9 * std::max(1.0, n), "grid length must be a multiple of dx");
  return from_cells(static_cast<std::size_t>(cells), dx, x_min);
}

GridSpec GridSpec::from_cells(std::size_t cells, double dx, double x_min) {
  require(finite_positive(dx), "grid step must be positive");
  require(std::isfinite(x_min), "grid origin must be finite");
  require(cells >= kMinCells, "grid needs at least 16 cells");
  if (cells > kMaxCells) throw Error(ErrorKind::GridTooLarge, "grid of " + std::to_string(cells) + " cells");
  return GridSpec(x_min, dx, cells);
}

GridSpec GridSpec::default_for(const DistributionSpec& spec, double dx) {
  require(finite_positive(dx), "grid step must be positive");
  double x_max = spec.mean() + 20.0 * std::sqrt(spec.variance());
  if (const auto* u = std::get_if<UniformDist>(&spec.kind())) x_max = std::max(x_max, u->hi);
  if (const auto* t = std::get_if<TableDist>(&spec.kind())) x_max = std::max(x_max, t->xs.back());
  const double n = std::ceil(x_max / dx - 1e-9);
  if (n > static_cast<double>(kMaxCells)) throw Error(ErrorKind::GridTooLarge, "grid of " + std::to_string(n) + " cells");
  const auto cells = static_cast<std::size_t>(n);
  return from_cells(std::max(cells, kMinCells), dx);
}

GridDensity::GridDensity(GridSpec grid, std::vector<double> values, double truncated_mass)
    : grid_(grid), values_(std::move(values)), truncated_mass_(truncated_mass) {
  require(values_.size() == grid_.cells(), "density size does not match the grid");
  for (double v : values_) require(std::isfinite(v) && v >= 0.0, "density values must be finite and nonnegative");
}

GridDensity GridDensity::spike(const GridSpec& grid, double x) {
  const double pos = (x - grid.x_min()) / grid.dx();
  require(pos >= 0.0 && pos < static_cast<double>(grid.cells()), "spike location outside the grid");
  std::vector<double> v(grid.cells(), 0.0);
  v[static_cast<std::size_t>(pos)] = 1.0 / grid.dx();
  return GridDensity(grid, std::move(v));
}

double GridDensity::mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.dx();
}

GridDensity GridDensity::normalized() const {
  const double m = mass();
  if (!finite_positive(m)) throw Error(ErrorKind::InvalidArgument, "cannot normalize a zero-mass density");
  std::vector<double> v(values_);
  for (double& x : v) x /= m;
  return GridDensity(grid_, std::move(v), truncated_mass_);
}

GridDensity make_grid_density(const DistributionSpec& spec, const GridSpec& grid) {
  if (spec.is_atomic()) throw Error(ErrorKind::UnsupportedSpec, "atoms are not grid densities");
  const double tail = spec.cdf(grid.x_min()) + (1.0 - spec.cdf(grid.x_max()));
  if (tail > kMaxTailMass) {
    throw Error(ErrorKind::TailMassTooLarge,
                "mass outside [" + shortest(grid.x_min()) + ", " + shortest(grid.x_max()) + "] is " + shortest(tail));
  }
  std::vector<double> v(grid.cells());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = spec.pdf(grid.node(k));
  return GridDensity(grid, std::move(v), tail).normalized();
}

Moments moments(const GridDensity& d) {
  const auto& g = d.grid();
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    m0 += d[k];
    m1 += d[k] * g.node(k);
  }
  m0 *= g.dx();
  m1 *= g.dx();
  const double mean = m1 / m0;
  // Central second moment avoids cancellation against mean^2.
  double m2 = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double c = g.node(k) - mean;
    m2 += d[k] * c * c;
  }
  m2 *= g.dx();
  return {m0, mean, m2 / m0};
}

// ---------------------------------------------------------------------------
// CdfTable
// ---------------------------------------------------------------------------

CdfTable::CdfTable(const GridDensity& d) : grid_(d.grid()), f_(d.size() + 1, 0.0) {
  const double m = d.mass();
  double acc = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    acc += d[k];
    f_[k + 1] = acc * grid_.dx() / m;
  }
  f_.back() = 1.0;
}

double CdfTable::operator()(double x) const {
  if (x <= grid_.x_min()) return 0.0;
  if (x >= grid_.x_max()) return 1.0;
  const double pos = (x - grid_.x_min()) / grid_.dx();
  const auto k = std::min(static_cast<std::size_t>(pos), grid_.cells() - 1);
  const double s = pos - static_cast<double>(k);
  return f_[k] + s * (f_[k + 1] - f_[k]);
}

double CdfTable::quantile(double u) const {
  require(u >= 0.0 && u <= 1.0, "quantile level must lie in [0, 1]");
  auto it = std::upper_bound(f_.begin(), f_.end(), u);
  if (it == f_.end()) return grid_.x_max();
  const std::size_t k = static_cast<std::size_t>(it - f_.begin()) - 1;
  const double s = (u - f_[k]) / (f_[k + 1] - f_[k]);
  return grid_.boundary(k) + s * grid_.dx();
}

CdfTable cdf(const GridDensity& d) { return CdfTable(d); }

// ---------------------------------------------------------------------------
// WealthVector
// ---------------------------------------------------------------------------

WealthVector::WealthVector(std::vector<double> wealths) : w_(std::move(wealths)) {
  require(w_.size() >= 2, "need at least two agents");
  for (double v : w_) require(std::isfinite(v) && v >= 0.0, "wealths must be finite and nonnegative");
}

double WealthVector::sum() const {
  // Neumaier summation; conservation checks compare sums at the 1e-9 level.
  double s = 0.0, c = 0.0;
  for (double v : w_) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  return s + c;
}

void WealthVector::average_pair(std::size_t i, std::size_t j) {
  if (i == j || i >= w_.size() || j >= w_.size()) {
    throw Error(ErrorKind::IndexError, "exchange needs two distinct valid agents, got (" + std::to_string(i) +
                                           ", " + std::to_string(j) + ")");
  }
  const double avg = 0.5 * (w_[i] + w_[j]);
  w_[i] = avg;
  w_[j] = avg;
}

SampleMoments sample_moments(const WealthVector& w) {
  const double n = static_cast<double>(w.size());
  const double mean = w.sum() / n;
  double ss = 0.0;
  for (double v : w.values()) ss += (v - mean) * (v - mean);
  return {mean, ss / n};
}

WealthVector sample(const DistributionSpec& spec, std::size_t n, RngSeed seed) {
  require(n >= 2, "need at least two draws");
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = spec.quantile(rng.uniform01());
  return WealthVector(std::move(out));
}

WealthVector sample(const GridDensity& d, std::size_t n, RngSeed seed) {
  require(n >= 2, "need at least two draws");
  require(d.grid().x_min() >= 0.0, "wealth samples need a grid on [0, inf)");
  const CdfTable table(d);
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = table.quantile(rng.uniform01());
  return WealthVector(std::move(out));
}

}  // namespace kinexch
