#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "kinexch/error.hpp"
#include "kinexch/inequality_metrics.hpp"
#include "kinexch/pde_solver.hpp"

using namespace kinexch;

namespace {

double max_abs_error(const GridDensity& d, const std::function<double(double)>& f) {
  double err = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) err = std::max(err, std::abs(d[k] - f(d.grid().node(k))));
  return err;
}

// Exact draw from the law of the jump process at time t: the last jump
// before t happened an Exp(1) time ago, when the particle averaged with an
// independent copy; before any jump it still holds its initial draw.
double exact_draw(double t, std::mt19937_64& gen, std::gamma_distribution<double>& init) {
  std::exponential_distribution<double> wait(1.0);
  const double tau = wait(gen);
  if (tau >= t) return init(gen);
  const double left = exact_draw(t - tau, gen, init);
  return 0.5 * (left + exact_draw(t - tau, gen, init));
}

}  // namespace

TEST_CASE("gain term of the exponential law is 4x exp(-2x)") {
  const auto spec = DistributionSpec::exponential(1.0);
  double previous = 1.0;
  for (double dx : {0.02, 0.01, 0.005}) {
    const auto d = make_grid_density(spec, GridSpec::make(30.0, dx));
    for (ConvBackend b : {ConvBackend::Direct, ConvBackend::Fft}) {
      const double err = max_abs_error(q_plus(d, b), [](double x) { return 4.0 * x * std::exp(-2.0 * x); });
      CHECK(err < 2.0 * dx);
      if (b == ConvBackend::Direct) {
        CHECK(err < previous);
        previous = err;
      }
    }
  }
}

TEST_CASE("gain term of the uniform law is the tent") {
  const auto d = make_grid_density(DistributionSpec::uniform(0.0, 1.0), GridSpec::make(2.0, 0.001));
  const auto q = q_plus(d, ConvBackend::Fft);
  const double err = max_abs_error(q, [](double x) { return x < 0.5 ? 4.0 * x : (x < 1.0 ? 4.0 * (1.0 - x) : 0.0); });
  CHECK(err < 0.01);
  CHECK(moments(q).mean == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gain term conserves mass and mean and fixes a spike") {
  const auto grid = GridSpec::make(20.0, 0.01);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(grid.cells(), 0.0);
  for (std::size_t k = 0; k < v.size() / 2; ++k) v[k] = u(gen);
  const auto d = GridDensity(grid, v).normalized();
  const auto q = q_plus(d, ConvBackend::Direct);
  CHECK(q.mass() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(moments(q).mean == doctest::Approx(moments(d).mean).epsilon(1e-12));
  const auto g = generator(d, ConvBackend::Fft);
  CHECK(std::abs(g.integral()) < 1e-12);

  const auto spike = GridDensity::spike(grid, 5.0);
  const auto qs = q_plus(spike, ConvBackend::Direct);
  for (std::size_t k = 0; k < qs.size(); ++k) CHECK(qs[k] == doctest::Approx(spike[k]).epsilon(1e-14));
}

TEST_CASE("Euler flow: variance follows the discrete recursion") {
  const auto spec = DistributionSpec::gamma(5.0, 1.0);
  const auto d0 = make_grid_density(spec, GridSpec::default_for(spec, 0.01));
  const double dt = 0.05;
  const auto res = evolve(d0, PdeConfig{dt, 5.0, {0.0, 1.0, 2.5, 5.0}, ConvBackend::Fft, true});
  REQUIRE(res.snapshots.size() == 4);
  const double v0 = res.snapshots[0].variance;
  for (const auto& s : res.snapshots) {
    const double steps = std::round(s.t / dt);
    CHECK(s.variance == doctest::Approx(v0 * std::pow(1.0 - dt / 2.0, steps)).epsilon(1e-4));
    CHECK(s.variance == doctest::Approx(v0 * std::exp(-s.t / 2.0)).epsilon(0.01));
    CHECK(s.mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(s.mean_drift) < 1e-10);
  }
  CHECK(res.negative_density_warnings == 0);
}

TEST_CASE("euler_step edge cases and config validation") {
  const auto d = make_grid_density(DistributionSpec::exponential(1.0), GridSpec::make(30.0, 0.01));
  const auto same = euler_step(d, 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(same[k] == d[k]);
  CHECK_THROWS_AS(euler_step(d, 0.6), Error);
  CHECK_THROWS_AS(euler_step(d, -0.1), Error);
  CHECK_THROWS_AS((PdeConfig{0.05, 1.0, {2.0}, ConvBackend::Fft, true}.validate()), Error);
  CHECK_THROWS_AS((PdeConfig{0.0, 1.0, {}, ConvBackend::Fft, true}.validate()), Error);

  StepReport report;
  euler_step(d, 0.1, true, ConvBackend::Fft, &report);
  CHECK(std::abs(report.mass_drift) < 1e-12);
  CHECK(!report.negative_density_warning);
}

TEST_CASE("evolve records every step by default") {
  const auto d = make_grid_density(DistributionSpec::exponential(1.0), GridSpec::make(30.0, 0.01));
  const auto res = evolve(d, PdeConfig{0.1, 1.0, {}, ConvBackend::Fft, true});
  CHECK(res.snapshots.size() == 11);
  CHECK(res.steps == 10);
  CHECK(res.snapshots.back().t == doctest::Approx(1.0));
}

TEST_CASE("flow does not keep gamma initial data log-concave") {
  // The solution dominates exp(-t) rho0, an untouched copy of the initial law,
  // while the bulk concentrates; their mixture is log-convex on the left.
  const auto spec = DistributionSpec::gamma(5.0, 1.0);
  const auto d0 = make_grid_density(spec, GridSpec::default_for(spec, 0.01));
  const auto res = evolve(d0, PdeConfig{0.01, 5.0, {0.0, 5.0}, ConvBackend::Direct, true});
  CHECK(log_concavity_violation(res.snapshots[0].density) == 0.0);
  CHECK(log_concavity_violation(res.snapshots[1].density) > 0.1);

  const CdfTable F(res.snapshots[1].density);
  const double pde[3] = {F(2.0) - F(1.0), F(3.0) - F(2.0), F(4.0) - F(3.0)};

  std::mt19937_64 gen(2024);
  std::gamma_distribution<double> init(5.0, 1.0);
  const int n = 500'000;
  double counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const double x = exact_draw(5.0, gen, init);
    if (x >= 1.0 && x < 4.0) counts[static_cast<int>(x - 1.0)] += 1.0;
  }
  for (int b = 0; b < 3; ++b) CHECK(std::abs(counts[b] - n * pde[b]) < 5.0 * std::sqrt(n * pde[b]));

  // Log-concave laws give log-concave bin masses, so m1 m3 <= m2^2.
  const double stat = std::log(counts[0] * counts[2] / (counts[1] * counts[1]));
  const double sd = std::sqrt(1.0 / counts[0] + 4.0 / counts[1] + 1.0 / counts[2]);
  CHECK(stat > 4.0 * sd);
  CHECK(std::log(pde[0] * pde[2] / (pde[1] * pde[1])) > 0.4);
}
