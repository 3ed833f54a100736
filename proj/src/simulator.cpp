#include "dynplan/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <thread>

#include "json.hpp"

namespace dynplan {

const char* to_string(ClockMode mode) { return mode == ClockMode::counted ? "counted" : "wall"; }

const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::on_the_fly: return "on-the-fly";
    case Strategy::at_the_end: return "at-the-end";
    case Strategy::replan: return "replan";
  }
  return "?";
}

std::optional<ClockMode> parse_clock_mode(std::string_view text) {
  if (text == "counted") return ClockMode::counted;
  if (text == "wall") return ClockMode::wall;
  return std::nullopt;
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "on-the-fly") return Strategy::on_the_fly;
  if (text == "at-the-end") return Strategy::at_the_end;
  if (text == "replan") return Strategy::replan;
  return std::nullopt;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over a combined word
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// --- EventGenerator ---------------------------------------------------------

EventGenerator::EventGenerator(const DomainTheory& theory, const PerturbationModel& model, State world)
    : theory_(theory), model_(model), world_(std::move(world)), rng_(model.seed) {
  for (FluentId f = 0; f < theory.fluent_count(); ++f) {
    if (f == theory.goal_reached_fluent()) continue;
    if (model.numeric_only && theory.fluent(f).sort != Sort::numeric) continue;
    candidates_.push_back(f);
  }
  if (model_.batch_size == 0) model_.batch_size = 1;
}

double EventGenerator::draw_factor(std::mt19937_64& rng, double max_deviation, double value, bool positive) {
  const double x = max_deviation / 100.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double factor = 1.0 - x + 2.0 * x * uniform01(rng);
    if (!positive || value * factor > 0.0) return factor;
  }
  return 1.0;
}

Event EventGenerator::next() {
  std::vector<std::pair<FluentId, double>> changes;
  for (std::size_t i = 0; i < model_.batch_size && !candidates_.empty(); ++i) {
    const FluentId f = candidates_[static_cast<std::size_t>(uniform01(rng_) * candidates_.size())];
    const FluentDecl& decl = theory_.fluent(f);
    double value = world_[f];
    if (decl.sort == Sort::numeric) {
      value *= draw_factor(rng_, model_.max_deviation, value, decl.positive);
    } else {
      value = value != 0.0 ? 0.0 : 1.0;
    }
    changes.emplace_back(f, value);
  }
  if (changes.empty()) changes.emplace_back(theory_.goal_reached_fluent(), world_[theory_.goal_reached_fluent()]);
  Event e(std::move(changes));
  world_ = apply_event(theory_, world_, e);
  return e;
}

// --- EventInbox / VirtualClock ---------------------------------------------

void EventInbox::push(Event e) {
  std::lock_guard lock(mutex_);
  queue_.push_back(std::move(e));
}

std::vector<Event> EventInbox::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Event> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

bool EventInbox::empty() const {
  std::lock_guard lock(mutex_);
  return queue_.empty();
}

std::size_t EventInbox::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

VirtualClock::VirtualClock(ClockMode mode, const WorkCounters& counters, ClockWeights weights)
    : mode_(mode), counters_(counters), weights_(weights), start_(std::chrono::steady_clock::now()) {}

double VirtualClock::now() const {
  if (mode_ == ClockMode::counted) return work_units(counters_, weights_);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

// --- Episodes ---------------------------------------------------------------

double EpisodeReport::mean_recovery_work() const {
  if (recovery_work.empty()) return 0.0;
  double sum = 0.0;
  for (double w : recovery_work) sum += w;
  return sum / static_cast<double>(recovery_work.size());
}

std::string EpisodeReport::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  j["seed"] = seed;
  j["frequency"] = frequency;
  j["deviation"] = deviation;
  j["converged"] = converged;
  j["cause"] = cause;
  j["time"] = time;
  j["limit"] = limit;
  j["baseline_time"] = baseline_time;
  j["recovery_episodes"] = recovery_episodes;
  j["events_injected"] = events_injected;
  j["events_consumed"] = events_consumed;
  j["events_pending"] = events_pending;
  j["final_cost"] = final_cost ? nlohmann::ordered_json(*final_cost) : nlohmann::ordered_json(nullptr);
  j["final_plan"] = final_plan;
  j["recovery_work"] = recovery_work;
  j["work"] = {{"expansions", work.expansions},   {"generations", work.generations},
               {"evaluations", work.evaluations}, {"regressions", work.regressions},
               {"comparisons", work.comparisons}};
  std::vector<double> values(final_state.values().begin(), final_state.values().end());
  j["final_state"] = values;
  return j.dump(indent);
}

double measure_baseline_time(const DomainTheory& theory, const State& state, ClockMode mode,
                             ClockWeights weights) {
  if (mode == ClockMode::counted) {
    WorkCounters c;
    plan_baseline(theory, state, c);
    return work_units(c, weights);
  }
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    WorkCounters c;
    const auto t0 = std::chrono::steady_clock::now();
    plan_baseline(theory, state, c);
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

namespace {

/// Event source plus bookkeeping for one run.
class Episode {
 public:
  Episode(const DomainTheory& theory, const EpisodeConfig& config)
      : theory_(theory),
        config_(config),
        clock_(config.clock, counters_, config.weights),
        generator_(theory, config.model, theory.initial()),
        assumed_(theory.initial()) {
    if (!(config.baseline_time > 0.0)) throw DomainError("baseline planning time must be positive");
    limit_ = config.limit_mult * config.baseline_time;
    period_ = config.model.frequency > 0.0 ? config.baseline_time / config.model.frequency
                                           : std::numeric_limits<double>::infinity();
    next_time_ = period_;
    report_.strategy = to_string(config.strategy);
    report_.seed = config.model.seed;
    report_.frequency = config.model.frequency;
    report_.deviation = config.model.max_deviation;
    report_.limit = limit_;
    report_.baseline_time = config.baseline_time;
    if (config.clock == ClockMode::wall && std::isfinite(period_)) {
      producer_ = std::thread([this] { produce(); });
    }
  }

  ~Episode() { stop(); }

  void pump() {
    if (config_.clock != ClockMode::counted) return;
    const double now = clock_.now();
    while (next_time_ <= now && next_time_ <= limit_) {
      inbox_.push(generator_.next());
      ++injected_;
      next_time_ += period_;
    }
  }

  bool timed_out() const { return clock_.now() > limit_; }
  bool pending() const { return !inbox_.empty(); }

  /// Applies every queued event to the assumed state; returns the new state.
  State take_events() {
    State next = assumed_;
    for (const Event& e : inbox_.drain()) {
      next = apply_event(theory_, next, e);
      ++report_.events_consumed;
    }
    return next;
  }

  EpisodeReport finish(const char* cause, const PlanResult* result) {
    stop();
    report_.cause = cause;
    report_.converged = std::string_view(cause) == "converged";
    report_.time = clock_.now();
    report_.events_injected = injected_;
    report_.events_pending = inbox_.size();
    report_.work = counters_;
    report_.final_state = assumed_;
    if (report_.converged && result && result->plan) {
      report_.final_cost = result->cost;
      for (ActionId a : *result->plan) report_.final_plan.push_back(theory_.action(a).name);
    }
    return report_;
  }

  const DomainTheory& theory_;
  const EpisodeConfig& config_;
  WorkCounters counters_;
  VirtualClock clock_;
  EventGenerator generator_;
  EventInbox inbox_;
  State assumed_;
  EpisodeReport report_;
  double limit_ = 0.0;
  double period_ = 0.0;
  double next_time_ = 0.0;
  std::atomic<std::size_t> injected_{0};

 private:
  void produce() {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t k = 1;; ++k) {
      const double at = period_ * static_cast<double>(k);
      if (at > limit_) return;
      const auto when = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(at));
      std::unique_lock lock(stop_mutex_);
      if (stop_cv_.wait_until(lock, when, [this] { return stopping_; })) return;
      lock.unlock();
      inbox_.push(generator_.next());
      ++injected_;
    }
  }

  void stop() {
    if (!producer_.joinable()) return;
    {
      std::lock_guard lock(stop_mutex_);
      stopping_ = true;
    }
    stop_cv_.notify_all();
    producer_.join();
  }

  std::thread producer_;
  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
};

const char* cause_of(PlanStatus status) {
  switch (status) {
    case PlanStatus::found: return "converged";
    case PlanStatus::unsolvable: return "unsolvable";
    case PlanStatus::exhausted: return "exhausted";
    case PlanStatus::suspended: return "timeout";
  }
  return "?";
}

EpisodeReport drive_regression(const DomainTheory& theory, const EpisodeConfig& config, bool interrupt) {
  Episode ep(theory, config);
  RegressionPlanner planner(theory, config.planner);
  SearchSpace space = SearchSpace::fresh();
  const CheckpointHook hook = [&] {
    ep.pump();
    if (ep.timed_out()) return HookAction::suspend;
    if (interrupt && ep.pending()) return HookAction::suspend;
    return HookAction::proceed;
  };
  for (;;) {
    PlanResult r = planner.plan(ep.assumed_, space, ep.counters_, hook);
    ep.pump();
    if (ep.timed_out()) return ep.finish("timeout", nullptr);
    if (r.status == PlanStatus::exhausted) return ep.finish("exhausted", nullptr);
    if (!ep.pending()) {
      if (r.status == PlanStatus::suspended) continue;  // nothing arrived after all
      return ep.finish(cause_of(r.status), &r);
    }
    const WorkCounters before = ep.counters_;
    State next = ep.take_events();
    recover(theory, ep.assumed_, next, space, ep.counters_);
    ep.assumed_ = std::move(next);
    ++ep.report_.recovery_episodes;
    ep.report_.recovery_work.push_back(work_units(ep.counters_ - before, config.weights));
  }
}

}  // namespace

EpisodeReport run_on_the_fly(const DomainTheory& theory, EpisodeConfig config) {
  config.strategy = Strategy::on_the_fly;
  return drive_regression(theory, config, true);
}

EpisodeReport run_at_the_end(const DomainTheory& theory, EpisodeConfig config) {
  config.strategy = Strategy::at_the_end;
  return drive_regression(theory, config, false);
}

EpisodeReport run_replan_baseline(const DomainTheory& theory, EpisodeConfig config) {
  config.strategy = Strategy::replan;
  Episode ep(theory, config);
  BaselineConfig base;
  base.expansion_cap = config.planner.expansion_cap;
  const CheckpointHook hook = [&] {
    ep.pump();
    return ep.timed_out() || ep.pending() ? HookAction::suspend : HookAction::proceed;
  };
  for (;;) {
    PlanResult r = plan_baseline(theory, ep.assumed_, ep.counters_, base, hook);
    ep.pump();
    if (ep.timed_out()) return ep.finish("timeout", nullptr);
    if (r.status == PlanStatus::exhausted) return ep.finish("exhausted", nullptr);
    if (!ep.pending()) {
      if (r.status == PlanStatus::suspended) continue;
      return ep.finish(cause_of(r.status), &r);
    }
    ep.assumed_ = ep.take_events();
    ++ep.report_.recovery_episodes;
  }
}

EpisodeReport run_episode(const DomainTheory& theory, const EpisodeConfig& config) {
  switch (config.strategy) {
    case Strategy::on_the_fly: return run_on_the_fly(theory, config);
    case Strategy::at_the_end: return run_at_the_end(theory, config);
    case Strategy::replan: return run_replan_baseline(theory, config);
  }
  throw InternalError("unknown strategy");
}

}  // namespace dynplan
