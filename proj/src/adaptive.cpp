#include "sbmre/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "sbmre/errors.hpp"

namespace sbmre {

void AdaptiveConfig::validate() const {
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("adaptive: target must lie in (0, 1)");
  if (!(delta1 >= 1.0) || !std::isfinite(delta1)) throw ConfigError("adaptive: delta1 must be >= 1");
  if (np_min < 1 || np_min > np_max) throw ConfigError("adaptive: need 1 <= np_min <= np_max");
  if (max_iter < 1) throw ConfigError("adaptive: max_iter must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("adaptive: tol must be > 0");
}

double ser_loss(double ser, double target) {
  if (!(ser > 0.0) || !(target > 0.0)) {
    throw DomainError("ser_loss: SER and target must be positive (ser=" + std::to_string(ser) +
                      ", target=" + std::to_string(target) + ")");
  }
  return std::log10(ser) - std::log10(target);
}

int effective_pilot_count(double np_real, const AdaptiveConfig& cfg) {
  const double up = std::ceil(np_real);
  return static_cast<int>(std::clamp(up, static_cast<double>(cfg.np_min), static_cast<double>(cfg.np_max)));
}

AdaptiveState update_pilot_count(AdaptiveState state, const AdaptiveStep& measured,
                                  const AdaptiveConfig& cfg) {
  const double delta = measured.loss < 0.0 ? 1.0 : cfg.delta1;
  state.np_real += delta * measured.loss;
  state.np_effective = effective_pilot_count(state.np_real, cfg);
  state.history.push_back(measured);
  ++state.iter;
  return state;
}

AdaptiveState run_adaptive(const SerOracle& oracle, const AdaptiveConfig& cfg) {
  cfg.validate();
  AdaptiveState state;
  state.np_real = cfg.np_min;
  state.np_effective = cfg.np_min;

  int in_band = 0;
  while (state.iter < cfg.max_iter) {
    const int np = state.np_effective;
    const SerEstimate est = oracle(np);
    if (est.total < 1) throw DomainError("run_adaptive: oracle returned no symbols");
    const double ser = est.floored_ser();
    const double loss = ser_loss(ser, cfg.target);
    state = update_pilot_count(std::move(state), {np, ser, loss}, cfg);
    in_band = std::abs(loss) <= cfg.tol ? in_band + 1 : 0;
    if (in_band >= 3) {
      state.converged = true;
      break;
    }
  }
  return state;
}

void write_trace_csv(std::ostream& out, const AdaptiveState& state) {
  out << "iter,np,ser,loss\n";
  char line[128];
  for (std::size_t i = 0; i < state.history.size(); ++i) {
    const auto& h = state.history[i];
    std::snprintf(line, sizeof line, "%zu,%d,%.15g,%.15g\n", i + 1, h.np, h.ser, h.loss);
    out << line;
  }
}

}  // namespace sbmre
