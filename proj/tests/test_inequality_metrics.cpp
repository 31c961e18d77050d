#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/lambert_w.hpp>

#include "kinexch/error.hpp"
#include "kinexch/inequality_metrics.hpp"

using namespace kinexch;

namespace {

double brute_gini(const std::vector<double>& w) {
  double num = 0.0, sum = 0.0;
  for (double x : w) {
    sum += x;
    for (double y : w) num += std::abs(x - y);
  }
  const double n = static_cast<double>(w.size());
  return num / (2.0 * n * n * (sum / n));
}

// Brute-force W1 by fine midpoint integration of |F_emp - F|.
double brute_w1(const std::vector<double>& emp, const GridDensity& d) {
  const CdfTable F(d);
  std::vector<double> s(emp);
  std::sort(s.begin(), s.end());
  const double lo = d.grid().x_min(), hi = d.grid().x_max();
  const int steps = 400'000;
  const double h = (hi - lo) / steps;
  double total = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double fe = static_cast<double>(std::upper_bound(s.begin(), s.end(), x) - s.begin()) / s.size();
    total += std::abs(fe - F(x)) * h;
  }
  return total;
}

GridDensity gamma_density(double shape, double dx) {
  const auto spec = DistributionSpec::gamma(shape, 1.0);
  return make_grid_density(spec, GridSpec::default_for(spec, dx));
}

}  // namespace

TEST_CASE("gamma Gini closed form") {
  CHECK(gamma_gini_closed_form(5.0) == 0.24609375);
  CHECK(gamma_gini_closed_form(1.0) == 0.5);
  // Gamma(k+1/2) / (sqrt(pi) Gamma(k+1)) through lgamma for a non-integer shape.
  const double k = 2.5;
  CHECK(gamma_gini_closed_form(k) ==
        doctest::Approx(std::exp(std::lgamma(k + 0.5) - std::lgamma(k + 1.0)) / std::sqrt(std::numbers::pi))
            .epsilon(1e-13));
  CHECK_THROWS_AS(gamma_gini_closed_form(0.0), Error);
}

TEST_CASE("density Gini matches known values") {
  CHECK(gini_density(gamma_density(5.0, 0.01)) == doctest::Approx(0.24609375).epsilon(1e-5));
  CHECK(gini_density(gamma_density(1.0, 0.01)) == doctest::Approx(0.5).epsilon(1e-4));
  const auto u = make_grid_density(DistributionSpec::uniform(0.0, 1.0), GridSpec::make(2.0, 0.01));
  CHECK(gini_density(u) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(gini_density(GridDensity::spike(GridSpec::make(2.0, 0.01), 1.0)) < 0.01);
  const auto centered = GridDensity(GridSpec::from_cells(200, 0.01, -1.0), std::vector<double>(200, 0.5));
  CHECK_THROWS_AS(gini_density(centered), Error);
}

TEST_CASE("sample Gini equals the pairwise definition") {
  std::mt19937_64 gen(9);
  std::exponential_distribution<double> e(1.0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> w(50 + 37 * rep);
    for (double& x : w) x = e(gen);
    CHECK(gini_sample(w) == doctest::Approx(brute_gini(w)).epsilon(1e-12));
    // scale invariance
    std::vector<double> scaled(w);
    for (double& x : scaled) x *= 3.7;
    CHECK(gini_sample(scaled) == doctest::Approx(gini_sample(w)).epsilon(1e-12));
  }
  CHECK(gini_sample(std::vector<double>{2.0, 2.0, 2.0}) == 0.0);
  CHECK(gini_sample(std::vector<double>{0.0, 0.0, 0.0, 4.0}) == doctest::Approx(0.75));
}

TEST_CASE("atomic Gini and dissipation of the two-atom law") {
  const double x[] = {0.0, 2.0}, p[] = {0.5, 0.5};
  CHECK(gini_atoms(x, p) == 0.5);
  CHECK(gini_dissipation_atoms(x, p) == 0.0);
  // Any two-atom law is stuck: the midpoint is equidistant from both atoms.
  const double q[] = {0.3, 0.7};
  CHECK(gini_dissipation_atoms(x, q) == 0.0);
  // A third atom between them breaks this: V=0, W=2, Y=1 contributes 1 / mu.
  const double x3[] = {0.0, 1.0, 2.0}, p3[] = {0.25, 0.5, 0.25};
  CHECK(gini_dissipation_atoms(x3, p3) > 0.0);
  const auto w = WealthVector({0.0, 0.0, 2.0, 2.0});
  CHECK(gini_sample(w) == 0.5);
  CHECK(gini_dissipation_sample(w) == 0.0);
}

TEST_CASE("W1 against brute-force integration") {
  const auto u = make_grid_density(DistributionSpec::uniform(0.0, 1.0), GridSpec::make(1.0, 0.01));
  CHECK(w1(std::vector<double>{0.5, 0.5}, u) == doctest::Approx(0.25).epsilon(1e-12));

  const auto d = gamma_density(5.0, 0.01);
  std::mt19937_64 gen(4);
  std::gamma_distribution<double> g(5.0, 1.0);
  std::vector<double> emp(200);
  for (double& x : emp) x = g(gen);
  const double exact = w1(emp, d);
  CHECK(exact == doctest::Approx(brute_w1(emp, d)).epsilon(1e-4));

  // triangle inequality through a second empirical law on the same grid
  std::vector<double> shifted(emp);
  for (double& x : shifted) x += 0.3;
  CHECK(w1(shifted, d) <= exact + 0.3 + 1e-12);
  CHECK_THROWS_AS(w1(std::vector<double>{1e6, 1.0}, d), Error);
}

TEST_CASE("dissipation of the exponential law is 1/9") {
  // mu = 1: E|V-Y| = 1 and, with Z = (V+W)/2 ~ Gamma(2, 2),
  // E|Z-Y| = 2 - 2 E min(Z, Y) = 2 - 2 * 5/9.
  const double exact = 1.0 - (2.0 - 10.0 / 9.0);
  const auto spec = DistributionSpec::exponential(1.0);
  const auto d = make_grid_density(spec, GridSpec::default_for(spec, 0.01));
  const auto mc = gini_dissipation(d, DissipationEstimator::MonteCarlo, 2'000'000, RngSeed{5});
  CHECK(mc.std_err > 0.0);
  CHECK(std::abs(mc.value - exact) < 4.0 * mc.std_err);

  const auto coarse = make_grid_density(spec, GridSpec::make(25.0, 0.05));
  const auto quad = gini_dissipation(coarse, DissipationEstimator::Quadrature3D);
  CHECK(quad.value == doctest::Approx(exact).epsilon(0.01));
  CHECK_THROWS_AS(gini_dissipation(d, DissipationEstimator::Quadrature3D), Error);
}

TEST_CASE("sample dissipation matches the atomic formula") {
  const auto w = WealthVector({1.0, 1.0, 2.0, 5.0, 9.0});
  const double x[] = {1.0, 2.0, 5.0, 9.0}, p[] = {0.4, 0.2, 0.2, 0.2};
  CHECK(gini_dissipation_sample(w) == doctest::Approx(gini_dissipation_atoms(x, p)).epsilon(1e-14));
  CHECK(gini_dissipation_sample(w) > 0.0);
}

TEST_CASE("log-concavity check") {
  CHECK(log_concavity_violation(gamma_density(5.0, 0.01)) == 0.0);
  const auto grid = GridSpec::make(20.0, 0.01);
  const auto bimodal = GridDensity::from_function(grid, [](double x) {
    return std::exp(-0.5 * (x - 4.0) * (x - 4.0)) + std::exp(-0.5 * (x - 12.0) * (x - 12.0));
  });
  CHECK(log_concavity_violation(bimodal) > 0.1);
  CHECK_THROWS_AS(build_envelope(bimodal), Error);
}

TEST_CASE("envelope of x exp(-x) hits the Lambert W points") {
  const double a_exact = -boost::math::lambert_w0(-std::exp(-2.0));
  const double b_exact = -boost::math::lambert_wm1(-std::exp(-2.0));
  const auto d = GridDensity::from_function(GridSpec::make(40.0, 0.01), [](double x) { return x * std::exp(-x); });
  const Envelope e = build_envelope(d);
  CHECK(e.a == doctest::Approx(a_exact).epsilon(1e-3));
  CHECK(e.b == doctest::Approx(b_exact).epsilon(1e-4));
  CHECK(std::abs(e.c - 1.0) < 1e-4);
  CHECK(e.rho_star == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
  CHECK(e.mollify_width == 0.0);
  CHECK(e.majorant_slack >= 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(e.q(d.grid().node(k)) >= d[k]);
  CHECK(e.a < e.c);
  CHECK(e.c < e.b);
}

TEST_CASE("uniform needs mollification; envelope still majorizes") {
  const auto u = make_grid_density(DistributionSpec::uniform(0.0, 1.0), GridSpec::make(3.0, 0.01));
  const Envelope e = build_envelope(u);
  CHECK(e.mollify_width == doctest::Approx(0.02));
  CHECK(e.density.grid().x_min() < 0.0);
  CHECK(e.majorant_slack >= 0.0);
  CHECK(e.a < e.c);
  CHECK(e.c < e.b);
}

TEST_CASE("envelope bounds") {
  constexpr double e = std::numbers::e;
  CHECK(envelope_ratio_constant() == doctest::Approx(24.0 * std::pow(e + 1.0, 3) * (1.0 + 3.0 * e + e * e / 3.0)));
  CHECK(envelope_ratio_constant() == doctest::Approx(14333.9026).epsilon(1e-8));

  const auto d = gamma_density(5.0, 0.01);
  const Envelope env = build_envelope(d);
  const EnvelopeBounds bnd = envelope_bounds(env, 5.0);
  CHECK(bnd.g_upper / bnd.h_lower == doctest::Approx(bnd.ratio_constant));
  CHECK(bnd.gini_upper == doctest::Approx(bnd.g_upper / 10.0));
  CHECK(gini_density(d) <= bnd.gini_upper);
  const auto h = gini_dissipation(d, DissipationEstimator::MonteCarlo, 200'000, RngSeed{2});
  CHECK(h.value >= bnd.dissipation_lower);
  CHECK(h.value * kTheoremRateDenominator >= gini_density(d));
  CHECK_THROWS_AS(envelope_bounds(env, 0.0), Error);
}
