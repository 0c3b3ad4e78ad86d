#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "sbmre/detection.hpp"

namespace sbmre {

/// Pilot-count controller settings.
struct AdaptiveConfig {
  double target = 1e-4;  ///< target SER
  double delta1 = 2.0;   ///< step multiplier while above target
  int np_min = 10;       ///< also the starting point
  int np_max = 246;
  int max_iter = 200;
  double tol = 0.1;      ///< convergence band on |loss|, in decades

  void validate() const;
};

struct AdaptiveStep {
  int np = 0;  ///< pilot count the SER was measured at
  double ser = 0.0;
  double loss = 0.0;
};

struct AdaptiveState {
  double np_real = 0.0;
  int np_effective = 0;
  int iter = 0;
  std::vector<AdaptiveStep> history;
  bool converged = false;
};

/// log10(ser) - log10(target).
double ser_loss(double ser, double target);

/// ceil(np_real) clamped to [np_min, np_max].
int effective_pilot_count(double np_real, const AdaptiveConfig& cfg);

/// One controller step: np_real += delta * loss, where delta = 1 below
/// target (loss < 0) and delta1 otherwise. Records `measured` in the history.
AdaptiveState update_pilot_count(AdaptiveState state, const AdaptiveStep& measured,
                                 const AdaptiveConfig& cfg);

using SerOracle = std::function<SerEstimate(int np)>;

/// Runs the feedback loop from np_min until |loss| <= tol on three
/// consecutive measurements or max_iter measurements have been made.
AdaptiveState run_adaptive(const SerOracle& oracle, const AdaptiveConfig& cfg);

/// CSV with header `iter,np,ser,loss`, one row per measurement.
void write_trace_csv(std::ostream& out, const AdaptiveState& state);

}  // namespace sbmre
