#include "kinexch/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "kinexch/error.hpp"
#include "kinexch/inequality_metrics.hpp"

namespace kinexch {

void SimConfig::validate() const {
  if (!(t_end >= 0.0 && std::isfinite(t_end))) throw Error(ErrorKind::ConfigError, "t_end must be >= 0");
  for (std::size_t k = 0; k < record_times.size(); ++k) {
    const double t = record_times[k];
    if (!(t >= 0.0 && t <= t_end)) throw Error(ErrorKind::ConfigError, "record time outside [0, t_end]");
    if (k > 0 && !(t > record_times[k - 1]))
      throw Error(ErrorKind::ConfigError, "record times must be sorted and distinct");
  }
}

WealthSummary summarize(const WealthVector& w) {
  WealthSummary s;
  const SampleMoments m = sample_moments(w);
  s.sum = w.sum();
  s.mean = m.mean;
  s.variance = m.variance;
  s.gini = s.mean > 0.0 ? gini_sample(w) : 0.0;
  std::vector<double> sorted(w.values().begin(), w.values().end());
  std::sort(sorted.begin(), sorted.end());
  s.quantiles.resize(101);
  const double last = static_cast<double>(sorted.size() - 1);
  for (std::size_t q = 0; q <= 100; ++q) {
    const double pos = last * static_cast<double>(q) / 100.0;
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    s.quantiles[q] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
  return s;
}

PairClock::PairClock(std::size_t n_agents, RngSeed seed)
    : n_(n_agents), rate_(0.5 * static_cast<double>(n_agents - 1)), rng_(seed) {
  if (n_agents < 2) throw Error(ErrorKind::InvalidArgument, "pair clock needs at least two agents");
}

ExchangeEvent PairClock::next() {
  t_ += rng_.exponential(rate_);
  const std::size_t i = rng_.index(n_);
  std::size_t j = rng_.index(n_ - 1);
  if (j >= i) ++j;
  return {t_, i, j};
}

WealthVector exchange_step(const WealthVector& w, std::size_t i, std::size_t j) {
  WealthVector out = w;
  out.average_pair(i, j);
  return out;
}

namespace {

class Recorder {
 public:
  Recorder(const SimConfig& cfg, std::size_t n)
      : times_(cfg.record_times), keep_full_(n * cfg.record_times.size() <= kMaxSnapshotEntries) {}

  // Records every pending time strictly before `until`.
  void flush_before(double until, std::span<const double> w) {
    while (next_ < times_.size() && times_[next_] < until) emit(w);
  }
  void flush_all(std::span<const double> w) {
    while (next_ < times_.size()) emit(w);
  }
  bool done() const { return next_ >= times_.size(); }

  Trajectory take(std::uint64_t events) {
    Trajectory t{std::move(records_), events};
    return t;
  }

 private:
  void emit(std::span<const double> values) {
    WealthVector w(std::vector<double>(values.begin(), values.end()));
    TrajectoryRecord r{times_[next_], summarize(w), std::nullopt};
    if (keep_full_) r.snapshot = std::move(w);
    records_.push_back(std::move(r));
    ++next_;
  }

  const std::vector<double>& times_;
  bool keep_full_;
  std::size_t next_ = 0;
  std::vector<TrajectoryRecord> records_;
};

}  // namespace

Trajectory simulate_exchange(const WealthVector& w0, const SimConfig& cfg) {
  cfg.validate();
  if (w0.size() != cfg.n_agents)
    throw Error(ErrorKind::ConfigError, "initial wealth has " + std::to_string(w0.size()) + " agents, config says " +
                                            std::to_string(cfg.n_agents));
  WealthVector w = w0;
  Recorder rec(cfg, w.size());
  PairClock clock(w.size(), cfg.seed);
  std::uint64_t events = 0;
  while (!rec.done()) {
    const ExchangeEvent ev = clock.next();
    rec.flush_before(ev.t, w.values());
    if (ev.t > cfg.t_end) break;
    w.average_pair(ev.i, ev.j);
    ++events;
  }
  rec.flush_all(w.values());
  return rec.take(events);
}

Trajectory simulate_nanbu(const WealthVector& initial, const SimConfig& cfg) {
  cfg.validate();
  const std::size_t m = initial.size();
  std::vector<double> x(initial.values().begin(), initial.values().end());
  Recorder rec(cfg, m);
  Rng rng(cfg.seed);
  const double rate = static_cast<double>(m);
  double t = 0.0;
  std::uint64_t events = 0;
  while (!rec.done()) {
    t += rng.exponential(rate);
    rec.flush_before(t, x);
    if (t > cfg.t_end) break;
    const std::size_t i = rng.index(m);
    std::size_t j = rng.index(m - 1);
    if (j >= i) ++j;
    x[i] = 0.5 * (x[i] + x[j]);
    ++events;
  }
  rec.flush_all(x);
  return rec.take(events);
}

Trajectory simulate_nanbu(const GridDensity& d0, std::size_t ensemble_size, const SimConfig& cfg) {
  if (ensemble_size < 2) throw Error(ErrorKind::InvalidArgument, "ensemble needs at least two particles");
  const WealthVector initial = sample(d0, ensemble_size, RngSeed{mix_seed(cfg.seed.value, 0)});
  SimConfig run = cfg;
  run.seed = RngSeed{mix_seed(cfg.seed.value, 1)};
  return simulate_nanbu(initial, run);
}

}  // namespace kinexch
