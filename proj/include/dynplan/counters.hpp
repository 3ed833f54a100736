#pragma once

#include <cstdint>

namespace dynplan {

/// Instrumentation shared by the planners and recovery. The virtual clock is
/// driven from these counts.
struct WorkCounters {
  std::uint64_t expansions = 0;
  std::uint64_t generations = 0;
  std::uint64_t evaluations = 0;   // formula / expression evaluations
  std::uint64_t regressions = 0;   // one-step regressions and annotation builds
  std::uint64_t comparisons = 0;   // fluent value comparisons while diffing states

  WorkCounters& operator+=(const WorkCounters& o) {
    expansions += o.expansions;
    generations += o.generations;
    evaluations += o.evaluations;
    regressions += o.regressions;
    comparisons += o.comparisons;
    return *this;
  }
  friend WorkCounters operator-(WorkCounters a, const WorkCounters& b) {
    a.expansions -= b.expansions;
    a.generations -= b.generations;
    a.evaluations -= b.evaluations;
    a.regressions -= b.regressions;
    a.comparisons -= b.comparisons;
    return a;
  }
  friend bool operator==(const WorkCounters&, const WorkCounters&) = default;
};

/// Weights converting counts into virtual time units. Diff comparisons are
/// charged like evaluations.
struct ClockWeights {
  double expansion = 10.0;
  double evaluation = 1.0;
  double regression = 2.0;
};

inline double work_units(const WorkCounters& c, const ClockWeights& w = {}) {
  return w.expansion * static_cast<double>(c.expansions) +
         w.evaluation * static_cast<double>(c.evaluations + c.comparisons) +
         w.regression * static_cast<double>(c.regressions);
}

}  // namespace dynplan
