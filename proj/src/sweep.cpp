#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "dynplan/regression.hpp"
#include "dynplan/simulator.hpp"

namespace dynplan {

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

/// Numeric fluents that some annotation of the planned tree mentions and whose
/// value is non-zero (scaling zero changes nothing).
std::vector<FluentId> relevant_numeric(const DomainTheory& theory, const SearchSpace& space, const State& s) {
  std::vector<FluentId> out;
  for (FluentId f : space.index.keys()) {
    if (theory.fluent(f).sort == Sort::numeric && s[f] != 0.0) out.push_back(f);
  }
  return out;
}

struct Planned {
  SearchSpace space;
  State state;
};

Planned plan_initial(const DomainTheory& theory) {
  Planned p{SearchSpace::fresh(), theory.initial()};
  WorkCounters c;
  PlanResult r = RegressionPlanner(theory).plan(p.state, p.space, c);
  if (r.status != PlanStatus::found) throw DomainError("initial problem has no plan");
  return p;
}

}  // namespace

SweepResult sweep(const DomainTheory& theory, const SweepConfig& config) {
  SweepResult result;
  result.domain = theory.name();
  result.baseline_time = measure_baseline_time(theory, theory.initial(), config.clock, config.weights);

  struct Job {
    Strategy strategy;
    double frequency;
    double deviation;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Strategy s : config.strategies) {
    for (double f : config.frequencies) {
      for (double d : config.deviations) {
        SweepCell cell;
        cell.strategy = s;
        cell.frequency = f;
        cell.deviation = d;
        cell.seeds = config.seeds.size();
        result.cells.push_back(cell);
        for (std::uint64_t seed : config.seeds) jobs.push_back({s, f, d, seed});
      }
    }
  }

  result.runs.resize(jobs.size());
  const unsigned threads = config.clock == ClockMode::wall ? 1u : config.threads;
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    EpisodeConfig ec;
    ec.strategy = job.strategy;
    ec.clock = config.clock;
    ec.weights = config.weights;
    ec.baseline_time = result.baseline_time;
    ec.limit_mult = config.limit_mult;
    // The event stream depends on (seed, frequency, deviation) only, so the
    // strategies see identical worlds.
    ec.model.seed = mix_seed(mix_seed(job.seed, bits(job.frequency)), bits(job.deviation));
    ec.model.frequency = job.frequency;
    ec.model.max_deviation = job.deviation;
    ec.model.numeric_only = config.numeric_only;
    ec.model.batch_size = config.batch_size;
    EpisodeReport r = run_episode(theory, ec);
    r.seed = job.seed;
    result.runs[i] = std::move(r);
  });

  const std::size_t per_cell = config.seeds.size();
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    SweepCell& cell = result.cells[c];
    if (per_cell == 0) continue;
    std::size_t converged = 0;
    double episodes = 0.0;
    double work = 0.0;
    std::size_t work_runs = 0;
    for (std::size_t k = 0; k < per_cell; ++k) {
      const EpisodeReport& r = result.runs[c * per_cell + k];
      converged += r.converged ? 1 : 0;
      episodes += static_cast<double>(r.recovery_episodes);
      if (!r.recovery_work.empty()) {
        work += r.mean_recovery_work();
        ++work_runs;
      }
    }
    cell.converged_pct = 100.0 * static_cast<double>(converged) / static_cast<double>(per_cell);
    cell.mean_episodes = episodes / static_cast<double>(per_cell);
    cell.mean_recovery_work = work_runs ? work / static_cast<double>(work_runs) : 0.0;
  }
  return result;
}

// --- Single-event studies ---------------------------------------------------

double TrialSample::ratio() const {
  const double d = recovery_total();
  return d > 0.0 ? replan_work / d : std::numeric_limits<double>::infinity();
}

TrialSample single_event_trial(const DomainTheory& theory, const SearchSpace& planned, const State& s1,
                               const Event& event, ClockWeights weights) {
  TrialSample t;
  SearchSpace space = planned;
  const State s2 = apply_event(theory, s1, event);
  if (!event.assignments().empty()) {
    const auto [f, v] = event.assignments().front();
    t.fluent = theory.fluent_name(f);
    t.old_value = s1[f];
    t.new_value = v;
  }
  std::optional<Sequence> head_before;
  if (!space.open.empty()) {
    head_before = space.open.front().seq;
    t.cost_before = space.open.front().g;
  }

  WorkCounters rc;
  recover(theory, s1, s2, space, rc);
  t.recover_work = work_units(rc, weights);

  // Unsolvable changed states would otherwise grow the tree without bound.
  PlannerConfig capped;
  capped.expansion_cap = 20000;
  WorkCounters cc;
  PlanResult r = RegressionPlanner(theory, capped).plan(s2, space, cc);
  t.continue_work = work_units(cc, weights);
  t.continued = cc.expansions > 0;
  if (r.plan) t.cost_after = r.cost;
  t.head_changed = r.plan != head_before;

  WorkCounters bc;
  plan_baseline(theory, s2, bc);
  t.replan_work = work_units(bc, weights);
  return t;
}

std::vector<TrialSample> deviation_study(const DomainTheory& theory, const std::vector<double>& deviations,
                                         const StudyConfig& config) {
  const Planned planned = plan_initial(theory);
  const std::vector<FluentId> candidates = relevant_numeric(theory, planned.space, planned.state);
  if (candidates.empty()) throw DomainError("no relevant numeric fluent to perturb");
  const std::size_t per_seed = deviations.size();
  std::vector<TrialSample> out(config.seeds.size() * per_seed);
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(config.seeds[i], 0xde71a7e));
    const FluentId f = candidates[static_cast<std::size_t>(uniform01(rng) * candidates.size())];
    const bool up = (rng() & 1) != 0;
    for (std::size_t k = 0; k < per_seed; ++k) {
      const double x = deviations[k] / 100.0;
      double factor = up ? 1.0 + x : 1.0 - x;
      if (theory.fluent(f).positive && !(planned.state[f] * factor > 0.0)) factor = 1.0 + x;
      const Event e({{f, planned.state[f] * factor}});
      TrialSample t = single_event_trial(theory, planned.space, planned.state, e, config.weights);
      t.seed = config.seeds[i];
      t.deviation = deviations[k];
      out[i * per_seed + k] = std::move(t);
    }
  });
  return out;
}

std::vector<TrialSample> compare_study(const DomainTheory& theory, double max_deviation,
                                       const StudyConfig& config) {
  const Planned planned = plan_initial(theory);
  const std::vector<FluentId> candidates = relevant_numeric(theory, planned.space, planned.state);
  if (candidates.empty()) throw DomainError("no relevant numeric fluent to perturb");
  std::vector<TrialSample> out(config.seeds.size());
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(config.seeds[i], 0xc0397e));
    const FluentId f = candidates[static_cast<std::size_t>(uniform01(rng) * candidates.size())];
    const double v = planned.state[f];
    const double factor = EventGenerator::draw_factor(rng, max_deviation, v, theory.fluent(f).positive);
    const Event e({{f, v * factor}});
    TrialSample t = single_event_trial(theory, planned.space, planned.state, e, config.weights);
    t.seed = config.seeds[i];
    t.deviation = std::fabs(factor - 1.0) * 100.0;
    out[i] = std::move(t);
  });
  return out;
}

// --- Statistics and output --------------------------------------------------

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

void write_sweep_tsv(std::ostream& os, const SweepResult& result) {
  os << "strategy\tfrequency-multiplier\tdeviation-pct\tseeds\tconverged-pct\tmean-recovery-work\tmean-episodes\n";
  for (const SweepCell& c : result.cells) {
    os << to_string(c.strategy) << '\t' << num(c.frequency) << '\t' << num(c.deviation) << '\t' << c.seeds
       << '\t' << num(c.converged_pct) << '\t' << num(c.mean_recovery_work) << '\t' << num(c.mean_episodes)
       << '\n';
  }
}

void write_runs_tsv(std::ostream& os, const SweepResult& result) {
  os << "strategy\tfrequency-multiplier\tdeviation-pct\tseed\tconverged\tcause\ttime\tlimit\tepisodes\t"
        "events-injected\tevents-consumed\tfinal-cost\tmean-recovery-work\n";
  for (const EpisodeReport& r : result.runs) {
    os << r.strategy << '\t' << num(r.frequency) << '\t' << num(r.deviation) << '\t' << r.seed << '\t'
       << (r.converged ? 1 : 0) << '\t' << r.cause << '\t' << num(r.time) << '\t' << num(r.limit) << '\t'
       << r.recovery_episodes << '\t' << r.events_injected << '\t' << r.events_consumed << '\t'
       << (r.final_cost ? num(*r.final_cost) : "-") << '\t' << num(r.mean_recovery_work()) << '\n';
  }
}

void write_trials_tsv(std::ostream& os, const std::vector<TrialSample>& samples) {
  os << "seed\tdeviation-pct\tfluent\told-value\tnew-value\trecover-work\tcontinue-work\treplan-work\t"
        "continued\thead-changed\tratio\n";
  for (const TrialSample& t : samples) {
    os << t.seed << '\t' << num(t.deviation) << '\t' << t.fluent << '\t' << num(t.old_value) << '\t'
       << num(t.new_value) << '\t' << num(t.recover_work) << '\t' << num(t.continue_work) << '\t'
       << num(t.replan_work) << '\t' << (t.continued ? 1 : 0) << '\t' << (t.head_changed ? 1 : 0) << '\t'
       << num(t.ratio()) << '\n';
  }
}

}  // namespace dynplan
