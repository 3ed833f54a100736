#pragma once

// Dynamic-world harness: seeded perturbations, a virtual clock driven by the
// work counters, the three episode drivers and the experiment sweeps.

#include <chrono>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dynplan/counters.hpp"
#include "dynplan/domain.hpp"
#include "dynplan/planner.hpp"
#include "dynplan/recovery.hpp"

namespace dynplan {

enum class ClockMode { counted, wall };
enum class Strategy { on_the_fly, at_the_end, replan };

const char* to_string(ClockMode mode);
const char* to_string(Strategy strategy);
std::optional<ClockMode> parse_clock_mode(std::string_view text);
std::optional<Strategy> parse_strategy(std::string_view text);

/// Uniform double in [0, 1) from the top 53 bits; identical on every
/// standard library.
double uniform01(std::mt19937_64& rng);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct PerturbationModel {
  std::uint64_t seed = 1;
  /// Events per baseline planning time.
  double frequency = 0.0;
  /// x in the factor range [1 - x/100, 1 + x/100].
  double max_deviation = 10.0;
  /// Numeric fluents only; Boolean fluents are flipped when disabled.
  bool numeric_only = true;
  /// Fluents changed per event.
  std::size_t batch_size = 1;
};

/// Produces events from its own copy of the world state.
class EventGenerator {
 public:
  EventGenerator(const DomainTheory& theory, const PerturbationModel& model, State world);

  Event next();
  const State& world() const { return world_; }

  /// Factor drawn from [1 - x/100, 1 + x/100], re-drawn while it would make
  /// a positive-only fluent non-positive.
  static double draw_factor(std::mt19937_64& rng, double max_deviation, double value, bool positive);

 private:
  const DomainTheory& theory_;
  PerturbationModel model_;
  State world_;
  std::vector<FluentId> candidates_;
  std::mt19937_64 rng_;
};

/// FIFO channel between the event source and the planning loop.
class EventInbox {
 public:
  void push(Event e);
  std::vector<Event> drain();
  bool empty() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::deque<Event> queue_;
};

class VirtualClock {
 public:
  VirtualClock(ClockMode mode, const WorkCounters& counters, ClockWeights weights = {});

  /// Counted mode: weighted work units. Wall mode: seconds since construction.
  double now() const;
  ClockMode mode() const { return mode_; }

 private:
  ClockMode mode_;
  const WorkCounters& counters_;
  ClockWeights weights_;
  std::chrono::steady_clock::time_point start_;
};

struct EpisodeConfig {
  Strategy strategy = Strategy::on_the_fly;
  PerturbationModel model;
  ClockMode clock = ClockMode::counted;
  ClockWeights weights;
  /// Time for solving the original problem with the conventional planner,
  /// in clock units.
  double baseline_time = 0.0;
  double limit_mult = 30.0;
  PlannerConfig planner;
};

struct EpisodeReport {
  std::string strategy;
  std::uint64_t seed = 0;
  double frequency = 0.0;
  double deviation = 0.0;
  bool converged = false;
  std::string cause;  // converged, timeout, unsolvable, exhausted
  double time = 0.0;  // clock units at the end of the run
  double limit = 0.0;
  double baseline_time = 0.0;
  std::size_t recovery_episodes = 0;
  std::size_t events_injected = 0;
  std::size_t events_consumed = 0;
  std::size_t events_pending = 0;
  std::optional<double> final_cost;
  std::vector<std::string> final_plan;
  std::vector<double> recovery_work;  // clock units of each recover call
  WorkCounters work;
  State final_state;

  double mean_recovery_work() const;
  std::string to_json(int indent = -1) const;
};

/// Baseline planning time of `state` in the given clock mode.
double measure_baseline_time(const DomainTheory& theory, const State& state, ClockMode mode,
                             ClockWeights weights = {});

EpisodeReport run_episode(const DomainTheory& theory, const EpisodeConfig& config);
EpisodeReport run_on_the_fly(const DomainTheory& theory, EpisodeConfig config);
EpisodeReport run_at_the_end(const DomainTheory& theory, EpisodeConfig config);
EpisodeReport run_replan_baseline(const DomainTheory& theory, EpisodeConfig config);

// --- Experiments ------------------------------------------------------------

struct SweepConfig {
  std::vector<Strategy> strategies{Strategy::on_the_fly, Strategy::at_the_end, Strategy::replan};
  std::vector<double> frequencies{3, 5, 10};
  std::vector<double> deviations{5, 10, 20, 40, 80};
  std::vector<std::uint64_t> seeds;
  double limit_mult = 30.0;
  ClockMode clock = ClockMode::counted;
  ClockWeights weights;
  bool numeric_only = true;
  std::size_t batch_size = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct SweepCell {
  Strategy strategy = Strategy::on_the_fly;
  double frequency = 0.0;
  double deviation = 0.0;
  std::size_t seeds = 0;
  double converged_pct = 0.0;
  double mean_recovery_work = 0.0;
  double mean_episodes = 0.0;
};

struct SweepResult {
  std::string domain;
  double baseline_time = 0.0;
  std::vector<SweepCell> cells;
  std::vector<EpisodeReport> runs;  // cell-major, then seed order
};

SweepResult sweep(const DomainTheory& theory, const SweepConfig& config);

/// One single-event experiment: plan in s1, change one fluent, then compare
/// recover plus continued search against replanning from scratch.
struct TrialSample {
  std::uint64_t seed = 0;
  double deviation = 0.0;  // requested deviation in percent
  std::string fluent;
  double old_value = 0.0;
  double new_value = 0.0;
  double recover_work = 0.0;   // recover call only
  double continue_work = 0.0;  // search after recover until the head is a goal
  double replan_work = 0.0;    // conventional planner from scratch in s2
  bool continued = false;      // at least one expansion after recover
  bool head_changed = false;
  std::optional<double> cost_before;
  std::optional<double> cost_after;

  double recovery_total() const { return recover_work + continue_work; }
  double ratio() const;
};

struct StudyConfig {
  std::vector<std::uint64_t> seeds;
  ClockWeights weights;
  unsigned threads = 0;
};

/// Deviation study: each seed picks a relevant numeric fluent and scales it
/// by exactly 1 + x/100 or 1 - x/100 (random sign) for every x.
std::vector<TrialSample> deviation_study(const DomainTheory& theory, const std::vector<double>& deviations,
                                         const StudyConfig& config);

/// Paired comparison: each seed changes one relevant numeric fluent by a
/// factor uniform in [1 - x/100, 1 + x/100].
std::vector<TrialSample> compare_study(const DomainTheory& theory, double max_deviation,
                                       const StudyConfig& config);

/// Run one trial from an already planned search space.
TrialSample single_event_trial(const DomainTheory& theory, const SearchSpace& planned, const State& s1,
                               const Event& event, ClockWeights weights = {});

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> values);

void write_sweep_tsv(std::ostream& os, const SweepResult& result);
void write_runs_tsv(std::ostream& os, const SweepResult& result);
void write_trials_tsv(std::ostream& os, const std::vector<TrialSample>& samples);

}  // namespace dynplan
