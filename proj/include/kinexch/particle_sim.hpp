#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "kinexch/core_model.hpp"
#include "kinexch/rng.hpp"

namespace kinexch {

struct SimConfig {
  std::size_t n_agents = 2;
  double t_end = 0.0;
  // Sorted, distinct, inside [0, t_end].
  std::vector<double> record_times;
  RngSeed seed;

  void validate() const;
};

// Full snapshots are kept only while n_agents * |record_times| stays under
// this many entries; summaries are always kept.
inline constexpr std::size_t kMaxSnapshotEntries = 10'000'000;

struct WealthSummary {
  double sum = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double gini = 0.0;
  // Sorted-sample quantiles at levels 0, 0.01, ..., 1.
  std::vector<double> quantiles;
};

WealthSummary summarize(const WealthVector& w);

struct TrajectoryRecord {
  double t = 0.0;
  WealthSummary summary;
  std::optional<WealthVector> snapshot;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::uint64_t event_count = 0;
};

// One interaction of the N-agent process.
struct ExchangeEvent {
  double t = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
};

// Single Poisson clock of total rate (N-1)/2; each event picks an unordered
// pair uniformly (i uniform, then j uniform among the other N-1).
class PairClock {
 public:
  PairClock(std::size_t n_agents, RngSeed seed);

  double rate() const { return rate_; }
  ExchangeEvent next();

 private:
  std::size_t n_;
  double rate_;
  double t_ = 0.0;
  Rng rng_;
};

// Replaces agents i and j by their average. Throws IndexError on i == j or
// out-of-range indices.
WealthVector exchange_step(const WealthVector& w, std::size_t i, std::size_t j);

// Exact event-driven simulation of the repeated-averaging N-agent system.
Trajectory simulate_exchange(const WealthVector& w0, const SimConfig& cfg);

// Mean-field sampler of the limit jump process: every particle carries a
// unit-rate clock; at a jump it moves to (X + Y)/2 with Y read from a
// uniformly chosen other particle, which is left untouched.
// cfg.n_agents is ignored; the ensemble size is initial.size().
Trajectory simulate_nanbu(const WealthVector& initial, const SimConfig& cfg);

// Draws ensemble_size particles from d0 (stream derived from cfg.seed) and
// runs the sampler.
Trajectory simulate_nanbu(const GridDensity& d0, std::size_t ensemble_size, const SimConfig& cfg);

}  // namespace kinexch
