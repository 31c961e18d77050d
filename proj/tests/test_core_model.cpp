#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "kinexch/core_model.hpp"
#include "kinexch/error.hpp"

using namespace kinexch;

namespace {

// Regularized lower incomplete gamma by its power series; independent of
// the library's special-function backend.
double gamma_p_series(double a, double x) {
  if (x <= 0.0) return 0.0;
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("gamma spec agrees with series CDF and closed-form pdf") {
  const auto g = DistributionSpec::gamma(5.0, 1.0);
  CHECK(g.mean() == doctest::Approx(5.0));
  CHECK(g.variance() == doctest::Approx(5.0));
  for (double x : {0.3, 1.0, 4.0, 7.5, 15.0}) {
    CHECK(g.pdf(x) == doctest::Approx(std::pow(x, 4) * std::exp(-x) / 24.0).epsilon(1e-13));
    CHECK(g.cdf(x) == doctest::Approx(gamma_p_series(5.0, x)).epsilon(1e-12));
  }
  for (double u : {1e-6, 0.1, 0.5, 0.9, 1 - 1e-9}) CHECK(g.cdf(g.quantile(u)) == doctest::Approx(u).epsilon(1e-10));

  const auto g2 = DistributionSpec::gamma(3.0, 2.0);
  CHECK(g2.mean() == doctest::Approx(1.5));
  CHECK(g2.variance() == doctest::Approx(0.75));
  CHECK(g2.cdf(1.2) == doctest::Approx(gamma_p_series(3.0, 2.4)).epsilon(1e-12));
}

TEST_CASE("parse accepts shorthand and rejects garbage") {
  CHECK(DistributionSpec::parse("gamma:5:1").mean() == doctest::Approx(5.0));
  CHECK(DistributionSpec::parse("exp:2").mean() == doctest::Approx(0.5));
  CHECK(DistributionSpec::parse("uniform:0:1").variance() == doctest::Approx(1.0 / 12.0));
  const auto two = DistributionSpec::parse("twoatom:0.5:0:10");
  CHECK(two.is_atomic());
  CHECK(two.mean() == doctest::Approx(5.0));
  CHECK(DistributionSpec::parse(DistributionSpec::gamma(2.5, 0.3).to_string()).mean() ==
        DistributionSpec::gamma(2.5, 0.3).mean());
  for (const char* bad : {"", "gamma", "gamma:x:1", "gamma:-1:1", "uniform:1:0", "twoatom:2:0:1", "lognormal:1:1"})
    CHECK(kind_of([&] { DistributionSpec::parse(bad); }) == ErrorKind::ConfigError);
}

TEST_CASE("grid construction") {
  const auto g = GridSpec::make(40.0, 0.01);
  CHECK(g.cells() == 4000);
  CHECK(g.node(0) == doctest::Approx(0.005));
  CHECK(g.x_max() == doctest::Approx(40.0));
  CHECK(kind_of([] { GridSpec::make(1.0, 0.3); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { GridSpec::make(0.1, 0.01); }) == ErrorKind::InvalidArgument);
  const auto d = GridSpec::default_for(DistributionSpec::gamma(5.0, 1.0), 0.01);
  CHECK(d.x_max() >= 5.0 + 20.0 * std::sqrt(5.0));
  CHECK(d.x_max() < 5.0 + 20.0 * std::sqrt(5.0) + 0.01 + 1e-9);
}

TEST_CASE("gridded densities") {
  const auto spec = DistributionSpec::uniform(0.0, 1.0);
  const double dx = 0.01;
  const auto d = make_grid_density(spec, GridSpec::make(2.0, dx));
  const Moments m = moments(d);
  CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-13));
  // midpoint rule on exact cell masses: 1/12 - dx^2/12
  CHECK(m.variance == doctest::Approx(1.0 / 12.0 - dx * dx / 12.0).epsilon(1e-10));

  CHECK(kind_of([] { make_grid_density(DistributionSpec::gamma(5, 1), GridSpec::make(10.0, 0.01)); }) ==
        ErrorKind::TailMassTooLarge);
  CHECK(kind_of([] { make_grid_density(DistributionSpec::two_atom(0.5, 0, 1), GridSpec::make(10.0, 0.01)); }) ==
        ErrorKind::UnsupportedSpec);
  CHECK(kind_of([] { GridDensity(GridSpec::make(1.0, 0.01), std::vector<double>(100, -1.0)); }) ==
        ErrorKind::InvalidArgument);

  const auto s = GridDensity::spike(GridSpec::make(1.0, 0.01), 0.503);
  CHECK(s.mass() == doctest::Approx(1.0));
  CHECK(moments(s).mean == doctest::Approx(0.505));
}

TEST_CASE("histogram CDF and its inverse") {
  const auto d = make_grid_density(DistributionSpec::exponential(1.0), GridSpec::make(30.0, 0.01));
  const CdfTable F(d);
  CHECK(F.at_boundaries().size() == d.size() + 1);
  CHECK(F(0.0) == 0.0);
  CHECK(F(30.0) == doctest::Approx(1.0));
  for (double x : {0.1, 1.0, 3.3}) CHECK(F(x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-4));
  for (double u : {0.01, 0.5, 0.99}) CHECK(F(F.quantile(u)) == doctest::Approx(u).epsilon(1e-12));
}

TEST_CASE("wealth vectors") {
  CHECK(kind_of([] { WealthVector({1.0}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { WealthVector({1.0, -0.5}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { WealthVector({1.0, NAN}); }) == ErrorKind::InvalidArgument);

  WealthVector w({1.0, 3.0, 8.0});
  w.average_pair(0, 2);
  CHECK(w[0] == 4.5);
  CHECK(w[2] == 4.5);
  CHECK(w.sum() == 12.0);
  CHECK(kind_of([&] { w.average_pair(1, 1); }) == ErrorKind::IndexError);
  CHECK(kind_of([&] { w.average_pair(0, 3); }) == ErrorKind::IndexError);

  const SampleMoments m = sample_moments(WealthVector({1.0, 2.0, 3.0, 4.0}));
  CHECK(m.mean == 2.5);
  CHECK(m.variance == doctest::Approx(1.25));
}

TEST_CASE("sampling is deterministic and matches the law") {
  const auto spec = DistributionSpec::gamma(5.0, 1.0);
  const auto a = sample(spec, 20000, RngSeed{7});
  const auto b = sample(spec, 20000, RngSeed{7});
  const auto c = sample(spec, 20000, RngSeed{8});
  CHECK(a == b);
  CHECK(!(a == c));

  // Kolmogorov-Smirnov distance; the 0.1% critical value is 1.95/sqrt(n).
  std::vector<double> v(a.values().begin(), a.values().end());
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double F = gamma_p_series(5.0, v[i]);
    ks = std::max({ks, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
  }
  CHECK(ks < 1.95 / std::sqrt(n));

  const auto grid = make_grid_density(spec, GridSpec::default_for(spec, 0.01));
  const auto g = sample(grid, 20000, RngSeed{3});
  CHECK(sample_moments(g).mean == doctest::Approx(5.0).epsilon(0.02));

  const auto atoms = sample(DistributionSpec::two_atom(0.25, 0.0, 2.0), 4000, RngSeed{1});
  std::set<double> values(atoms.values().begin(), atoms.values().end());
  CHECK(values == std::set<double>{0.0, 2.0});
  const double zeros = static_cast<double>(std::count(atoms.values().begin(), atoms.values().end(), 0.0));
  CHECK(zeros / 4000.0 == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("rng helpers") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(mix_seed(42, s));
  CHECK(seeds.size() == 1000);

  Rng rng(RngSeed{5});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += rng.exponential(2.0);
  CHECK(mean / 100000.0 == doctest::Approx(0.5).epsilon(0.02));
}
