#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dynplan/parser.hpp"
#include "dynplan/planner.hpp"
#include "dynplan/recovery.hpp"
#include "dynplan/simulator.hpp"
#include "json.hpp"

namespace dynplan::cli {

namespace {

using json = nlohmann::json;

struct RunConfig {
  std::string domain;
  std::string command = "plan";
  std::vector<std::string> strategies;
  std::vector<double> freqs{3, 5, 10};
  std::vector<double> devs{5, 10, 20, 40, 80};
  std::string seeds = "30";
  double limit_mult = 30.0;
  std::string clock = "counted";
  std::string out = ".";
  std::string planner = "regression";
  std::vector<std::string> events;
  double max_dev = 50.0;
  unsigned threads = 0;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void print_stats(std::ostream& out, const WorkCounters& w) {
  out << "expansions: " << w.expansions << "\ngenerations: " << w.generations
      << "\nevaluations: " << w.evaluations << "\nregressions: " << w.regressions
      << "\nwork-units: " << number(work_units(w)) << "\n";
}

template <typename T>
T json_get(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InputError("config field '" + key + "' has the wrong type");
  }
}

template <typename T>
std::vector<T> json_list(const json& j, const std::string& key) {
  if (j.is_array()) return json_get<std::vector<T>>(j, key);
  return {json_get<T>(j, key)};
}

/// Applies config-file values for every option not given on the command line.
void merge_config(const std::string& path, RunConfig& cfg, const CLI::App& app) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw InputError("config file must hold a JSON object");
  auto given = [&](const std::string& flag) { return app.get_option("--" + flag)->count() > 0; };
  for (const auto& [key, value] : j.items()) {
    if (key == "domain") {
      if (!given(key)) cfg.domain = json_get<std::string>(value, key);
    } else if (key == "command") {
      if (!given(key)) cfg.command = json_get<std::string>(value, key);
    } else if (key == "strategy") {
      if (!given(key)) cfg.strategies = json_list<std::string>(value, key);
    } else if (key == "freq") {
      if (!given(key)) cfg.freqs = json_list<double>(value, key);
    } else if (key == "dev") {
      if (!given(key)) cfg.devs = json_list<double>(value, key);
    } else if (key == "seeds") {
      if (!given(key)) cfg.seeds = value.is_number() ? std::to_string(json_get<long long>(value, key))
                                                      : json_get<std::string>(value, key);
    } else if (key == "limit-mult") {
      if (!given(key)) cfg.limit_mult = json_get<double>(value, key);
    } else if (key == "clock") {
      if (!given(key)) cfg.clock = json_get<std::string>(value, key);
    } else if (key == "out") {
      if (!given(key)) cfg.out = json_get<std::string>(value, key);
    } else if (key == "planner") {
      if (!given(key)) cfg.planner = json_get<std::string>(value, key);
    } else if (key == "event") {
      if (!given(key)) cfg.events = json_list<std::string>(value, key);
    } else if (key == "max-dev") {
      if (!given(key)) cfg.max_dev = json_get<double>(value, key);
    } else if (key == "threads") {
      if (!given(key)) cfg.threads = json_get<unsigned>(value, key);
    } else {
      throw InputError("unknown config field '" + key + "'");
    }
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.domain.empty()) throw InputError("--domain is required");
  for (double f : cfg.freqs) {
    if (!(f >= 0.0)) throw InputError("frequency multipliers must be non-negative");
  }
  for (double d : cfg.devs) {
    if (!(d >= 0.0)) throw InputError("deviations must be non-negative");
  }
  if (!(cfg.limit_mult > 0.0)) throw InputError("--limit-mult must be positive");
  if (!(cfg.max_dev >= 0.0)) throw InputError("--max-dev must be non-negative");
  if (!parse_clock_mode(cfg.clock)) throw InputError("unknown clock mode '" + cfg.clock + "'");
  for (const std::string& s : cfg.strategies) {
    if (!parse_strategy(s)) throw InputError("unknown strategy '" + s + "'");
  }
  if (cfg.planner != "regression" && cfg.planner != "baseline") {
    throw InputError("unknown planner '" + cfg.planner + "'");
  }
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream os(dir / name);
  if (!os) throw InputError("cannot write '" + (dir / name).string() + "'");
  return os;
}

std::string plan_text(const DomainTheory& theory, const std::optional<Sequence>& plan) {
  return plan ? theory.format(*plan) : std::string("none");
}

int cmd_plan(const RunConfig& cfg, const DomainTheory& theory, std::ostream& out) {
  WorkCounters counters;
  PlanResult r;
  if (cfg.planner == "baseline") {
    r = plan_baseline(theory, theory.initial(), counters);
  } else {
    SearchSpace space = SearchSpace::fresh();
    r = RegressionPlanner(theory).plan(theory.initial(), space, counters);
  }
  out << "domain: " << theory.name() << "\nplanner: " << cfg.planner << "\nstatus: " << to_string(r.status)
      << "\nplan: " << plan_text(theory, r.plan) << "\n";
  if (r.plan) out << "cost: " << number(r.cost) << "\n";
  print_stats(out, counters);
  if (r.status == PlanStatus::found) return kOk;
  return r.status == PlanStatus::unsolvable ? kUnsolvable : kNotConverged;
}

Event parse_events(const DomainTheory& theory, const std::vector<std::string>& specs) {
  std::vector<std::pair<FluentId, double>> changes;
  for (const std::string& spec : specs) {
    const auto eq = spec.rfind('=');
    if (eq == std::string::npos) throw InputError("event '" + spec + "' is not of the form fluent=value");
    const std::string name = spec.substr(0, eq);
    const std::string text = spec.substr(eq + 1);
    auto f = theory.find_fluent(name);
    if (!f) throw InputError("event names unknown fluent '" + name + "'");
    double value = 0.0;
    if (text == "true") {
      value = 1.0;
    } else if (text == "false") {
      value = 0.0;
    } else {
      try {
        std::size_t used = 0;
        value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw InputError("event value '" + text + "' is not a number");
      }
    }
    check_value(theory, *f, value);
    changes.emplace_back(*f, value);
  }
  if (changes.empty()) throw InputError("recover-demo needs at least one --event");
  return Event(std::move(changes));
}

int cmd_recover_demo(const RunConfig& cfg, const DomainTheory& theory, std::ostream& out) {
  const Event event = parse_events(theory, cfg.events);
  const State s1 = theory.initial();
  const State s2 = apply_event(theory, s1, event);
  RegressionPlanner planner(theory);
  SearchSpace space = SearchSpace::fresh();
  WorkCounters plan_work;
  PlanResult before = planner.plan(s1, space, plan_work);
  out << "plan: " << plan_text(theory, before.plan) << "\n";
  if (before.plan) out << "cost: " << number(before.cost) << "\n";
  out << "tree-nodes: " << space.tree.size() << "\nopen-entries: " << space.open.size()
      << "\nindex-entries: " << space.index.entry_count() << "\n";

  WorkCounters rc;
  RecoveryStats rs = recover(theory, s1, s2, space, rc);
  out << "event:";
  for (const auto& [f, v] : event.assignments()) {
    out << " " << theory.fluent_name(f) << " " << number(s1[f]) << "->" << number(v);
  }
  out << "\nchanged-indexed-fluents: " << rs.changed_fluents << "\naffected-annotations: " << rs.affected
      << "\nbecame-impossible: " << rs.became_impossible << "\nbecame-possible: " << rs.became_possible
      << "\nopen-removed: " << rs.open_removed << "\ncost-changes: " << rs.cost_changes
      << "\nheuristic-updates: " << rs.heuristic_updates << "\nrecover-work: " << number(work_units(rc))
      << "\n";

  WorkCounters cc;
  PlanResult after = planner.plan(s2, space, cc);
  out << "continued-expansions: " << cc.expansions << "\ncontinue-work: " << number(work_units(cc))
      << "\nnew-plan: " << plan_text(theory, after.plan) << "\n";
  if (after.plan) out << "new-cost: " << number(after.cost) << "\n";
  out << "plan-changed: " << (after.plan != before.plan ? "yes" : "no") << "\n";

  WorkCounters bc;
  PlanResult scratch = plan_baseline(theory, s2, bc);
  out << "replan-work: " << number(work_units(bc)) << "\n";
  if (scratch.plan) out << "replan-cost: " << number(scratch.cost) << "\n";
  if (after.status == PlanStatus::found) return kOk;
  return after.status == PlanStatus::unsolvable ? kUnsolvable : kNotConverged;
}

int cmd_sweep(const RunConfig& cfg, const DomainTheory& theory, std::ostream& out) {
  SweepConfig sc;
  if (!cfg.strategies.empty()) {
    sc.strategies.clear();
    for (const std::string& s : cfg.strategies) sc.strategies.push_back(*parse_strategy(s));
  }
  sc.frequencies = cfg.freqs;
  sc.deviations = cfg.devs;
  for (auto s : parse_seeds(cfg.seeds)) sc.seeds.push_back(s);
  sc.limit_mult = cfg.limit_mult;
  sc.clock = *parse_clock_mode(cfg.clock);
  sc.threads = cfg.threads;

  const std::filesystem::path dir(cfg.out);
  std::ofstream table = open_output(dir, "sweep.tsv");
  std::ofstream runs = open_output(dir, "runs.tsv");
  std::ofstream reports = open_output(dir, "runs.jsonl");
  std::ofstream trend = open_output(dir, "deviation.tsv");

  SweepResult result = sweep(theory, sc);
  write_sweep_tsv(table, result);
  write_runs_tsv(runs, result);
  for (const EpisodeReport& r : result.runs) reports << r.to_json() << "\n";

  StudyConfig study;
  study.seeds = sc.seeds;
  study.threads = cfg.threads;
  write_trials_tsv(trend, deviation_study(theory, sc.deviations, study));

  out << "domain: " << theory.name() << "\nbaseline-time: " << number(result.baseline_time) << " ("
      << to_string(sc.clock) << ")\n";
  out << "strategy\tfreq\tdev\tconverged-pct\n";
  std::size_t converged = 0;
  for (const SweepCell& c : result.cells) {
    out << to_string(c.strategy) << "\t" << number(c.frequency) << "\t" << number(c.deviation) << "\t"
        << number(c.converged_pct) << "\n";
  }
  for (const EpisodeReport& r : result.runs) converged += r.converged ? 1 : 0;
  out << "outputs: " << (dir / "sweep.tsv").string() << ", runs.tsv, runs.jsonl, deviation.tsv\n";
  return converged > 0 || result.runs.empty() ? kOk : kNotConverged;
}

int cmd_compare(const RunConfig& cfg, const DomainTheory& theory, std::ostream& out) {
  StudyConfig study;
  for (auto s : parse_seeds(cfg.seeds)) study.seeds.push_back(s);
  study.threads = cfg.threads;
  std::ofstream os = open_output(cfg.out, "compare.tsv");
  std::vector<TrialSample> samples = compare_study(theory, cfg.max_dev, study);
  write_trials_tsv(os, samples);
  std::vector<double> all, quiet, searched;
  for (const TrialSample& t : samples) {
    all.push_back(t.ratio());
    (t.continued ? searched : quiet).push_back(t.ratio());
  }
  out << "trials: " << samples.size() << "\nmedian-ratio: " << number(median(all))
      << "\nmedian-ratio-no-continued-search: " << number(median(quiet)) << " (" << quiet.size() << ")"
      << "\nmedian-ratio-continued-search: " << number(median(searched)) << " (" << searched.size() << ")"
      << "\noutput: " << (std::filesystem::path(cfg.out) / "compare.tsv").string() << "\n";
  return kOk;
}

}  // namespace

std::vector<unsigned long long> parse_seeds(const std::string& text) {
  auto to_int = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad seed list '" + text + "'");
    }
    return std::stoull(s);
  };
  std::vector<unsigned long long> out;
  if (text.find(',') != std::string::npos) {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(to_int(part));
  } else if (auto dash = text.find('-'); dash != std::string::npos) {
    const auto lo = to_int(text.substr(0, dash));
    const auto hi = to_int(text.substr(dash + 1));
    if (hi < lo) throw std::invalid_argument("bad seed range '" + text + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  } else {
    const auto n = to_int(text);
    for (unsigned long long s = 1; s <= n; ++s) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("empty seed list '" + text + "'");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string config_path;
  CLI::App app{"Optimal planning with recovery from exogenous events", "dynplan"};
  app.add_option("--domain", cfg.domain, "Domain file");
  app.add_option("--command", cfg.command, "plan | recover-demo | sweep | compare")
      ->check(CLI::IsMember({"plan", "recover-demo", "sweep", "compare"}));
  app.add_option("--strategy", cfg.strategies, "on-the-fly | at-the-end | replan (repeatable)");
  app.add_option("--freq", cfg.freqs, "Event frequency multipliers (repeatable)");
  app.add_option("--dev", cfg.devs, "Maximum deviation in percent (repeatable)");
  app.add_option("--seeds", cfg.seeds, "Seed count N (1..N), range A-B or list a,b,c");
  app.add_option("--limit-mult", cfg.limit_mult, "Time limit as a multiple of baseline planning time");
  app.add_option("--clock", cfg.clock, "counted | wall");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--planner", cfg.planner, "regression | baseline (plan command)");
  app.add_option("--event", cfg.events, "fluent=value assignment for recover-demo (repeatable)");
  app.add_option("--max-dev", cfg.max_dev, "Maximum deviation for compare, percent");
  app.add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
  app.add_option("--config", config_path, "JSON config file; flags take precedence");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (!config_path.empty()) merge_config(config_path, cfg, app);
    validate(cfg);
    if (cfg.command != "plan" && cfg.command != "recover-demo" && cfg.command != "sweep" &&
        cfg.command != "compare") {
      throw InputError("unknown command '" + cfg.command + "'");
    }
    const DomainTheory theory = load_domain(cfg.domain);
    if (cfg.command == "plan") return cmd_plan(cfg, theory, out);
    if (cfg.command == "recover-demo") return cmd_recover_demo(cfg, theory, out);
    if (cfg.command == "sweep") return cmd_sweep(cfg, theory, out);
    return cmd_compare(cfg, theory, out);
  } catch (const ParseError& e) {
    err << cfg.domain << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
    return kInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace dynplan::cli
