#include "kinexch/inequality_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "kinexch/error.hpp"

namespace kinexch {

namespace {

constexpr double kMinMean = 1e-12;

double triple_integrand(double v, double w, double y) {
  return 0.5 * (std::abs(v - y) + std::abs(w - y)) - std::abs(0.5 * (v + w) - y);
}

// int_p^q |g(x)| dx for g linear with g(p) = g0, g(q) = g1.
double abs_linear_integral(double g0, double g1, double h) {
  if ((g0 >= 0.0 && g1 >= 0.0) || (g0 <= 0.0 && g1 <= 0.0)) return 0.5 * (std::abs(g0) + std::abs(g1)) * h;
  return 0.5 * h * (g0 * g0 + g1 * g1) / (std::abs(g0) + std::abs(g1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Gini
// ---------------------------------------------------------------------------

double gini_density(const GridDensity& d) {
  const double mu = moments(d).mean;
  if (!(mu > kMinMean)) throw Error(ErrorKind::ZeroMean, "Gini index needs a positive mean");
  const CdfTable table(d);
  const auto f = table.at_boundaries();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    const double f0 = f[k], f1 = f[k + 1];
    acc += 0.5 * (f0 + f1) - (f0 * f0 + f0 * f1 + f1 * f1) / 3.0;
  }
  return acc * d.grid().dx() / mu;
}

double gini_sample(std::span<const double> wealths) {
  std::vector<double> s(wealths.begin(), wealths.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    total += s[i];
    weighted += (2.0 * static_cast<double>(i) - n + 1.0) * s[i];
  }
  const double mean = total / n;
  if (!(mean > 0.0)) throw Error(ErrorKind::ZeroMean, "Gini index needs a positive mean");
  return weighted / (n * n * mean);
}

double gini_sample(const WealthVector& w) { return gini_sample(w.values()); }

double gini_atoms(std::span<const double> atoms, std::span<const double> weights) {
  if (atoms.size() != weights.size() || atoms.empty())
    throw Error(ErrorKind::InvalidArgument, "atoms and weights must have equal nonzero length");
  double total = 0.0, mu = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    total += weights[i];
    mu += weights[i] * atoms[i];
  }
  mu /= total;
  if (!(mu > 0.0)) throw Error(ErrorKind::ZeroMean, "Gini index needs a positive mean");
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = 0; j < atoms.size(); ++j) acc += weights[i] * weights[j] * std::abs(atoms[i] - atoms[j]);
  return acc / (total * total) / (2.0 * mu);
}

double gamma_gini_closed_form(double shape) {
  if (!(shape > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma shape must be positive");
  // Integer shape k: G = C(2k, k) / 4^k, exact in doubles while C(2k, k) < 2^53.
  if (shape == std::floor(shape) && shape <= 26.0) {
    const auto k = static_cast<unsigned>(shape);
    std::uint64_t binom = 1;
    for (unsigned i = 1; i <= k; ++i) binom = binom * (k + i) / i;
    return std::ldexp(static_cast<double>(binom), -2 * static_cast<int>(k));
  }
  using boost::math::lgamma;
  const double log_g = (1.0 - 2.0 * shape) * std::numbers::ln2 + lgamma(2.0 * shape) - std::log(shape) -
                       2.0 * lgamma(shape);
  return std::exp(log_g);
}

// ---------------------------------------------------------------------------
// W1
// ---------------------------------------------------------------------------

double w1(std::span<const double> emp, const GridDensity& d) {
  if (emp.empty()) throw Error(ErrorKind::InvalidArgument, "empty empirical measure");
  const GridSpec& g = d.grid();
  std::vector<double> e(emp.begin(), emp.end());
  std::sort(e.begin(), e.end());
  if (e.front() < g.x_min() || e.back() > g.x_max())
    throw Error(ErrorKind::SupportExceeded, "empirical support leaves the grid");

  const CdfTable table(d);
  const auto f = table.at_boundaries();
  const double n = static_cast<double>(e.size());
  const double dx = g.dx();

  // Sweep cell by cell; inside a cell F_d is linear and F_emp is piecewise
  // constant with jumps at the sample points that fall in the cell.
  double total = 0.0;
  std::size_t next = 0;
  while (next < e.size() && e[next] <= g.x_min()) ++next;
  for (std::size_t k = 0; k < g.cells(); ++k) {
    const double left = g.boundary(k);
    const double right = g.boundary(k + 1);
    const double slope = (f[k + 1] - f[k]) / dx;
    double x = left;
    double fd = f[k];
    while (true) {
      const double stop = (next < e.size() && e[next] < right) ? e[next] : right;
      const double fd_stop = f[k] + slope * (stop - left);
      const double fe = static_cast<double>(next) / n;
      total += abs_linear_integral(fd - fe, fd_stop - fe, stop - x);
      x = stop;
      fd = fd_stop;
      if (stop == right) break;
      while (next < e.size() && e[next] == stop) ++next;
    }
  }
  return total;
}

double w1(const WealthVector& emp, const GridDensity& d) { return w1(emp.values(), d); }

// ---------------------------------------------------------------------------
// Dissipation
// ---------------------------------------------------------------------------

GiniDissipation gini_dissipation(const GridDensity& d, DissipationEstimator estimator, std::size_t mc_samples,
                                 RngSeed seed) {
  const double mu = moments(d).mean;
  if (!(mu > kMinMean)) throw Error(ErrorKind::ZeroMean, "dissipation needs a positive mean");
  const GridSpec& g = d.grid();

  if (estimator == DissipationEstimator::Quadrature3D) {
    const std::size_t m = g.cells();
    if (m > kQuadrature3DMaxCells)
      throw Error(ErrorKind::GridTooLarge, "Quadrature3D is capped at 512 cells, grid has " + std::to_string(m));
    std::vector<double> x(m), p(m);
    const double total = d.mass();
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = g.node(i);
      p[i] = d[i] * g.dx() / total;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (p[i] == 0.0) continue;
      // integrand is symmetric in (v, w)
      for (std::size_t j = i; j < m; ++j) {
        if (p[j] == 0.0) continue;
        double inner = 0.0;
        for (std::size_t l = 0; l < m; ++l) inner += p[l] * triple_integrand(x[i], x[j], x[l]);
        acc += (i == j ? 1.0 : 2.0) * p[i] * p[j] * inner;
      }
    }
    return {acc / mu, estimator, 0.0};
  }

  if (mc_samples < 2) throw Error(ErrorKind::InvalidArgument, "MonteCarlo needs at least two samples");
  const CdfTable table(d);
  Rng rng(seed);
  // Welford running mean / variance
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const double v = table.quantile(rng.uniform01());
    const double w = table.quantile(rng.uniform01());
    const double y = table.quantile(rng.uniform01());
    const double h = triple_integrand(v, w, y);
    const double delta = h - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (h - mean);
  }
  const double n = static_cast<double>(mc_samples);
  const double sd = std::sqrt(m2 / (n - 1.0));
  return {mean / mu, estimator, sd / std::sqrt(n) / mu};
}

double gini_dissipation_atoms(std::span<const double> atoms, std::span<const double> weights) {
  if (atoms.size() != weights.size() || atoms.empty())
    throw Error(ErrorKind::InvalidArgument, "atoms and weights must have equal nonzero length");
  double total = 0.0, mu = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    total += weights[i];
    mu += weights[i] * atoms[i];
  }
  mu /= total;
  if (!(mu > 0.0)) throw Error(ErrorKind::ZeroMean, "dissipation needs a positive mean");
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = 0; j < atoms.size(); ++j)
      for (std::size_t l = 0; l < atoms.size(); ++l)
        acc += weights[i] * weights[j] * weights[l] * triple_integrand(atoms[i], atoms[j], atoms[l]);
  return acc / (total * total * total) / mu;
}

double gini_dissipation_sample(const WealthVector& w) {
  std::vector<double> s(w.values().begin(), w.values().end());
  std::sort(s.begin(), s.end());
  std::vector<double> atoms, weights;
  for (double v : s) {
    if (!atoms.empty() && atoms.back() == v) {
      weights.back() += 1.0;
    } else {
      atoms.push_back(v);
      weights.push_back(1.0);
    }
  }
  if (atoms.size() > kQuadrature3DMaxCells)
    throw Error(ErrorKind::GridTooLarge, "sample dissipation is capped at 512 distinct values");
  return gini_dissipation_atoms(atoms, weights);
}

// ---------------------------------------------------------------------------
// Log-concavity and envelope
// ---------------------------------------------------------------------------

double log_concavity_violation(const GridDensity& d, double floor_rel) {
  const auto v = d.values();
  if (v.size() < 3) return 0.0;
  const double peak = *std::max_element(v.begin(), v.end());
  const double floor = floor_rel * peak;
  const double inv_dx2 = 1.0 / (d.grid().dx() * d.grid().dx());
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    if (!(v[k - 1] > floor && v[k] > floor && v[k + 1] > floor)) continue;
    const double second = (std::log(v[k + 1]) - 2.0 * std::log(v[k]) + std::log(v[k - 1])) * inv_dx2;
    worst = std::max(worst, second);
  }
  return worst;
}

GridDensity mollify(const GridDensity& d, double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::InvalidArgument, "mollification width must be positive");
  const GridSpec& g = d.grid();
  const auto reach = static_cast<std::size_t>(std::ceil(6.0 * width / g.dx()));
  std::vector<double> kernel(2 * reach + 1);
  double ksum = 0.0;
  for (std::size_t j = 0; j < kernel.size(); ++j) {
    const double off = (static_cast<double>(j) - static_cast<double>(reach)) * g.dx() / width;
    kernel[j] = std::exp(-0.5 * off * off);
    ksum += kernel[j];
  }
  for (double& k : kernel) k /= ksum;

  const std::size_t pad = reach + 1;
  const GridSpec ext = GridSpec::from_cells(g.cells() + 2 * pad, g.dx(), g.x_min() - static_cast<double>(pad) * g.dx());
  std::vector<double> out(ext.cells(), 0.0);
  for (std::size_t i = 0; i < g.cells(); ++i) {
    if (d[i] == 0.0) continue;
    // source cell i lands at extended index i + pad, spread over +-reach
    for (std::size_t j = 0; j < kernel.size(); ++j) out[i + pad + j - reach] += d[i] * kernel[j];
  }
  return GridDensity(ext, std::move(out), d.truncated_mass()).normalized();
}

namespace {

struct Crossing {
  bool found = false;
  double x = 0.0;
};

// Walk from the peak in direction step (+1 / -1) to the first node below
// threshold and locate the crossing on the linear interpolant of log rho.
Crossing find_crossing(const GridDensity& d, std::size_t peak, int step, double threshold) {
  const auto v = d.values();
  std::ptrdiff_t k = static_cast<std::ptrdiff_t>(peak);
  const auto size = static_cast<std::ptrdiff_t>(v.size());
  while (k >= 0 && k < size && v[static_cast<std::size_t>(k)] >= threshold) k += step;
  if (k < 0 || k >= size) return {};
  const auto below = static_cast<std::size_t>(k);
  const auto above = static_cast<std::size_t>(k - step);
  const double x_below = d.grid().node(below);
  const double x_above = d.grid().node(above);
  const double log_below = v[below] > 0.0 ? std::log(v[below]) : -std::numeric_limits<double>::infinity();
  const double log_above = std::log(v[above]);
  const double target = std::log(threshold);
  auto interp = [&](double x) {
    if (!std::isfinite(log_below)) return x == x_below ? log_below : log_above;
    const double s = (x - x_above) / (x_below - x_above);
    return log_above + s * (log_below - log_above);
  };
  // interp(lo) >= target > interp(hi), lo on the peak side
  double lo = x_above, hi = x_below;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (interp(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {true, 0.5 * (lo + hi)};
}

}  // namespace

double Envelope::q(double x) const {
  if (x < a) return rho_star * std::exp(-(x - c) / (a - c));
  if (x < b) return rho_star;
  return rho_star * std::exp(-(x - c) / (b - c));
}

namespace {

struct Peak {
  std::size_t index;
  double x;
  double value;
};

// Vertex of the parabola through log rho at the argmax and its neighbours,
// so c and rho* are not pinned to cell centers.
Peak refine_peak(const GridDensity& d, std::size_t k) {
  Peak p{k, d.grid().node(k), d[k]};
  if (k == 0 || k + 1 >= d.size() || d[k - 1] <= 0.0 || d[k + 1] <= 0.0) return p;
  const double lm = std::log(d[k - 1]), l0 = std::log(d[k]), lp = std::log(d[k + 1]);
  const double curv = lm - 2.0 * l0 + lp;
  if (!(curv < 0.0)) return p;
  const double shift = std::clamp(0.5 * (lm - lp) / curv, -0.5, 0.5);
  p.x += shift * d.grid().dx();
  p.value = std::exp(l0 - 0.25 * (lm - lp) * shift);
  return p;
}

}  // namespace

Envelope build_envelope(const GridDensity& d, const EnvelopeOptions& options) {
  const double violation = log_concavity_violation(d);
  if (violation > kLogConcavityTolerance)
    throw Error(ErrorKind::NotLogConcave, "log-concavity violation " + std::to_string(violation));

  auto peak_of = [](const GridDensity& g) {
    const auto v = g.values();
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());  // leftmost
  };

  GridDensity work = d;
  double width = 0.0;
  Peak peak = refine_peak(work, peak_of(work));
  Crossing left = find_crossing(work, peak.index, -1, peak.value / std::numbers::e);
  Crossing right = find_crossing(work, peak.index, +1, peak.value / std::numbers::e);

  if (options.force_mollify || !left.found || !right.found) {
    width = options.mollify_width > 0.0 ? options.mollify_width : 2.0 * d.grid().dx();
    work = mollify(d, width);
    peak = refine_peak(work, peak_of(work));
    left = find_crossing(work, peak.index, -1, peak.value / std::numbers::e);
    right = find_crossing(work, peak.index, +1, peak.value / std::numbers::e);
    if (!left.found || !right.found)
      throw Error(ErrorKind::CrossingNotFound, "density never falls to rho*/e inside the extended grid");
  }

  Envelope env{peak.value, peak.x, left.x, right.x, width, work, 0.0};
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < work.size(); ++k)
    slack = std::min(slack, (env.q(work.grid().node(k)) - work[k]) / env.rho_star);
  env.majorant_slack = slack;
  return env;
}

double envelope_ratio_constant() {
  constexpr double e = std::numbers::e;
  return 24.0 * (e + 1.0) * (e + 1.0) * (e + 1.0) * (1.0 + 3.0 * e + e * e / 3.0);
}

EnvelopeBounds envelope_bounds(const Envelope& env, double mu) {
  if (!(mu > 0.0)) throw Error(ErrorKind::ZeroMean, "envelope bounds need a positive mean");
  constexpr double e = std::numbers::e;
  const double span = env.b - env.a;
  EnvelopeBounds out;
  out.g_upper = (1.0 + 3.0 * e + e * e / 3.0) * span;
  out.h_lower = span / (24.0 * (e + 1.0) * (e + 1.0) * (e + 1.0));
  out.ratio_constant = envelope_ratio_constant();
  out.gini_upper = out.g_upper / (2.0 * mu);
  out.dissipation_lower = out.h_lower / mu;
  return out;
}

}  // namespace kinexch
