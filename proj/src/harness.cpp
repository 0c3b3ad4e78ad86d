#include "sbmre/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sbmre/detection.hpp"
#include "sbmre/equalizers.hpp"
#include "sbmre/errors.hpp"

namespace sbmre {
namespace {

constexpr std::pair<Algorithm, std::string_view> kAlgorithmNames[] = {
    {Algorithm::ZF, "ZF"},         {Algorithm::MMSE, "MMSE"},   {Algorithm::BMRE, "BMRE"},
    {Algorithm::BMRE_RC, "BMRE_RC"}, {Algorithm::SBMRE, "SBMRE"}, {Algorithm::SBMRE_RC, "SBMRE_RC"},
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text) {
  const std::string s = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("not a finite number: '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Rethrows the in-flight exception with the frame seed appended, keeping its type.
[[noreturn]] void rethrow_with_seed(std::uint64_t seed) {
  const std::string where = " [frame seed " + std::to_string(seed) + "]";
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(e.what() + where);
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError(e.what() + where);
  } catch (const DomainError& e) {
    throw DomainError(e.what() + where);
  } catch (const DimensionError& e) {
    throw DimensionError(e.what() + where);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what() + where);
  } catch (...) {
    throw;
  }
}

// Lazily built per-frame intermediates shared between algorithms.
class FrameContext {
 public:
  FrameContext(const SystemConfig& cfg, std::uint64_t seed, std::optional<double> sigma2_override)
      : cfg_(cfg), rng_(seed) {
    channel_ = draw_channel(cfg_, rng_);
    frame_ = generate_frame(cfg_, rng_);
    sigma2_ = sigma2_override ? *sigma2_override : noise_variance_from_snr(cfg_);
    rx_ = simulate_reception(channel_, frame_, cfg_.N, sigma2_, rng_);
    region_ = data_region(cfg_);
  }

  Tally run(Algorithm algo) {
    switch (algo) {
      case Algorithm::ZF:
        return score(zf_equalizer(stacked()));
      case Algorithm::MMSE:
        return score(mmse_equalizer(stacked(), sigma2_));
      case Algorithm::BMRE:
        return score_blind(EqMode::Full);
      case Algorithm::BMRE_RC:
        return score_blind(EqMode::Reduced);
      case Algorithm::SBMRE:
        return score(sb_mre(pilot_ops(EqMode::Full), quadratic(EqMode::Full), cfg_.lambda, cfg_));
      case Algorithm::SBMRE_RC:
        return score(sb_mre(pilot_ops(EqMode::Reduced), quadratic(EqMode::Reduced), cfg_.lambda, cfg_));
    }
    throw ConfigError("unknown algorithm");
  }

 private:
  const StackedChannel& stacked() {
    if (!stacked_) stacked_ = build_stacked_channel(channel_, cfg_.N);
    return *stacked_;
  }
  const MreQuadratic& quadratic(EqMode mode) {
    auto& slot = mode == EqMode::Full ? r_full_ : r_reduced_;
    if (!slot) slot = estimate_R(rx_, cfg_, mode);
    return *slot;
  }
  const PilotNormalOps& pilot_ops(EqMode mode) {
    auto& slot = mode == EqMode::Full ? ops_full_ : ops_reduced_;
    if (!slot) slot = pilot_normal_ops(rx_, frame_, cfg_, mode);
    return *slot;
  }

  Tally tally(const CMatrix& estimates) const {
    const SerEstimate est = compute_ser(qpsk_detect(estimates), frame_.symbols, region_);
    return {est.errors, est.total};
  }
  Tally score(const EqualizerBank& bank) const { return tally(apply_bank(bank, rx_, 0).values); }
  Tally score_blind(EqMode mode) {
    const BlindMre blind = blind_mre(quadratic(mode), cfg_);
    const Streams streams = apply_bank(blind.bank, rx_, 0);
    return tally(genie_align(streams.values, frame_.symbols, region_).aligned);
  }

  SystemConfig cfg_;
  Rng rng_;
  ChannelSet channel_;
  Frame frame_;
  double sigma2_ = 0.0;
  ReceivedWindows rx_;
  IndexRange region_;
  std::optional<StackedChannel> stacked_;
  std::optional<MreQuadratic> r_full_, r_reduced_;
  std::optional<PilotNormalOps> ops_full_, ops_reduced_;
};

}  // namespace

std::string_view algorithm_name(Algorithm algo) {
  for (const auto& [a, name] : kAlgorithmNames) {
    if (a == algo) return name;
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string key = trim(name);
  for (const auto& [a, n] : kAlgorithmNames) {
    if (n == key) return a;
  }
  throw ConfigError("unknown algorithm '" + key + "' (expected ZF, MMSE, BMRE, BMRE_RC, SBMRE, SBMRE_RC)");
}

std::vector<Algorithm> parse_algorithm_list(std::string_view list) {
  std::vector<Algorithm> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!trim(item).empty()) out.push_back(parse_algorithm(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty algorithm list");
  return out;
}

std::vector<double> parse_range(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = text.find(':', pos);
    parts.push_back(text.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos));
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (parts.size() == 1) return {parse_double(parts[0])};
  if (parts.size() != 3) throw ConfigError("range must be 'a:b:step', got '" + std::string(text) + "'");
  const double a = parse_double(parts[0]);
  const double b = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0.0) || b < a) throw ConfigError("range '" + std::string(text) + "' needs a <= b and step > 0");
  std::vector<double> values;
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long i = 0; i <= count; ++i) values.push_back(a + static_cast<double>(i) * step);
  return values;
}

void ExperimentSpec::validate() const {
  base.validate();
  if (algorithms.empty()) throw ConfigError("experiment: no algorithms requested");
  if (frames < 1) throw ConfigError("experiment: frames must be >= 1");
  if (threads < 1) throw ConfigError("experiment: threads must be >= 1");
  if (sigma2_override && !(*sigma2_override >= 0.0)) throw ConfigError("experiment: noise variance must be >= 0");
  if (sweep && sweep->values.empty()) throw ConfigError("experiment: empty sweep");
  for (const auto& point : sweep_grid(*this)) {
    const SystemConfig cfg = config_at(*this, point);
    if (cfg.Np >= cfg.Ns) throw ConfigError("experiment: N_p must leave data symbols (N_p < N_s)");
  }
}

GridPoint base_point(const ExperimentSpec& spec) {
  return {spec.base.snr_db, spec.base.Np, spec.base.lambda, 0};
}

SystemConfig config_at(const ExperimentSpec& spec, const GridPoint& point) {
  SystemConfig cfg = spec.base;
  cfg.snr_db = point.snr_db;
  cfg.Np = point.np;
  cfg.lambda = point.lambda;
  cfg.validate();
  return cfg;
}

std::vector<GridPoint> sweep_grid(const ExperimentSpec& spec) {
  const GridPoint base = base_point(spec);
  if (!spec.sweep) return {base};
  std::vector<GridPoint> grid;
  for (double v : spec.sweep->values) {
    GridPoint p = base;
    switch (spec.sweep->axis) {
      case SweepAxis::Snr:
        p.snr_db = v;
        break;
      case SweepAxis::Pilots:
        if (v != std::round(v)) throw ConfigError("pilot sweep values must be integers");
        p.np = static_cast<int>(v);
        break;
      case SweepAxis::Lambda:
        if (!(v >= 0.0)) throw ConfigError("lambda sweep values must be >= 0");
        p.lambda = v;
        break;
    }
    grid.push_back(p);
  }
  return grid;
}

std::uint64_t frame_seed(std::uint64_t master_seed, std::uint64_t frame, const GridPoint& point) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ frame);
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(point.snr_db));
  h = splitmix64(h ^ static_cast<std::uint64_t>(point.np));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(point.lambda));
  return splitmix64(h ^ point.epoch);
}

std::vector<Tally> evaluate_frame(const SystemConfig& cfg, const std::vector<Algorithm>& algorithms,
                                  std::uint64_t seed, std::optional<double> sigma2_override) {
  std::vector<Tally> out;
  out.reserve(algorithms.size());
  try {
    FrameContext ctx(cfg, seed, sigma2_override);
    for (Algorithm a : algorithms) out.push_back(ctx.run(a));
  } catch (...) {
    rethrow_with_seed(seed);
  }
  return out;
}

std::vector<Tally> run_frames(const ExperimentSpec& spec, const GridPoint& point) {
  if (spec.algorithms.empty()) throw ConfigError("experiment: no algorithms requested");
  if (spec.frames < 1) throw ConfigError("experiment: frames must be >= 1");
  const SystemConfig cfg = config_at(spec, point);
  const int workers = std::clamp(spec.threads, 1, spec.frames);

  struct Partial {
    std::vector<Tally> tallies;
    std::exception_ptr error;
    int error_frame = -1;
  };
  std::vector<Partial> partials(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    Partial& p = partials[static_cast<std::size_t>(w)];
    p.tallies.assign(spec.algorithms.size(), Tally{});
    for (int f = w; f < spec.frames; f += workers) {
      try {
        const auto t = evaluate_frame(cfg, spec.algorithms, frame_seed(spec.master_seed, f, point),
                                      spec.sigma2_override);
        for (std::size_t a = 0; a < t.size(); ++a) p.tallies[a] += t[a];
      } catch (...) {
        p.error = std::current_exception();
        p.error_frame = f;
        return;
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  // Report the failure with the lowest frame index so errors are reproducible too.
  const Partial* failed = nullptr;
  for (const auto& p : partials) {
    if (p.error && (!failed || p.error_frame < failed->error_frame)) failed = &p;
  }
  if (failed) std::rethrow_exception(failed->error);

  std::vector<Tally> total(spec.algorithms.size());
  for (const auto& p : partials) {
    for (std::size_t a = 0; a < total.size(); ++a) total[a] += p.tallies[a];
  }
  return total;
}

ResultRow make_row(Algorithm algo, const GridPoint& point, int frames, const Tally& tally) {
  const SerEstimate est{tally.errors, tally.symbols};
  return {algo, point.snr_db, point.np, point.lambda, frames, tally.symbols, tally.errors, est.floored_ser()};
}

ExperimentResult run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.master_seed = spec.master_seed;
  for (const auto& point : sweep_grid(spec)) {
    const auto tallies = run_frames(spec, point);
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
      result.rows.push_back(make_row(spec.algorithms[a], point, spec.frames, tallies[a]));
    }
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

AdaptiveState run_adaptive_experiment(const ExperimentSpec& spec, Algorithm algo,
                                      const AdaptiveConfig& cfg, const SerOracle& oracle_override) {
  if (spec.sweep) throw ConfigError("adaptive experiment runs at a single grid point");
  if (algo != Algorithm::SBMRE && algo != Algorithm::SBMRE_RC) {
    throw ConfigError("adaptive experiment drives SBMRE or SBMRE_RC, not " + std::string(algorithm_name(algo)));
  }
  cfg.validate();
  if (cfg.np_min < spec.base.N || cfg.np_max >= spec.base.Ns) {
    throw ConfigError("adaptive: pilot bounds must lie in [N, N_s - 1]");
  }
  if (oracle_override) return run_adaptive(oracle_override, cfg);

  ExperimentSpec single = spec;
  single.algorithms = {algo};
  std::uint64_t round = 0;
  const SerOracle oracle = [&](int np) {
    GridPoint point = base_point(single);
    point.np = np;
    point.epoch = ++round;
    const Tally t = run_frames(single, point).front();
    return SerEstimate{t.errors, t.symbols};
  };
  return run_adaptive(oracle, cfg);
}

ExportFormat parse_format(std::string_view name) {
  if (name == "csv") return ExportFormat::Csv;
  if (name == "json") return ExportFormat::Json;
  throw ConfigError("unknown format '" + std::string(name) + "' (expected csv or json)");
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
  out << "algo,snr_db,np,lambda,frames,symbols,errors,ser\n";
  for (const auto& r : result.rows) {
    out << algorithm_name(r.algo) << ',' << format_double(r.snr_db) << ',' << r.np << ','
        << format_double(r.lambda) << ',' << r.frames << ',' << r.symbols << ',' << r.errors << ','
        << format_double(r.ser) << '\n';
  }
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "algo,snr_db,np,lambda,frames,symbols,errors,ser") {
    throw ConfigError("read_csv: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw ConfigError("read_csv: expected 8 fields in '" + line + "'");
    ResultRow r;
    r.algo = parse_algorithm(f[0]);
    r.snr_db = parse_double(f[1]);
    r.np = std::stoi(f[2]);
    r.lambda = parse_double(f[3]);
    r.frames = std::stoi(f[4]);
    r.symbols = std::stoll(f[5]);
    r.errors = std::stoll(f[6]);
    r.ser = parse_double(f[7]);
    rows.push_back(r);
  }
  return rows;
}

void write_json(std::ostream& out, const ExperimentResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"algo", algorithm_name(r.algo)},
                    {"snr_db", r.snr_db},
                    {"np", r.np},
                    {"lambda", r.lambda},
                    {"frames", r.frames},
                    {"symbols", r.symbols},
                    {"errors", r.errors},
                    {"ser", r.ser}});
  }
  const nlohmann::json doc = {
      {"metadata", {{"master_seed", result.master_seed}, {"wall_time", result.wall_time}}},
      {"rows", rows}};
  // nlohmann serializes doubles with round-trip (17 digit) precision.
  out << doc.dump(2) << '\n';
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("error writing '" + path + "'");
}

}  // namespace

void export_result(const ExperimentResult& result, const std::string& path, ExportFormat format) {
  auto out = open_output(path);
  if (format == ExportFormat::Csv) {
    write_csv(out, result);
  } else {
    write_json(out, result);
  }
  finish_output(out, path);
}

void export_trace(const AdaptiveState& state, const std::string& path, ExportFormat format) {
  auto out = open_output(path);
  if (format == ExportFormat::Csv) {
    write_trace_csv(out, state);
  } else {
    nlohmann::json trace = nlohmann::json::array();
    for (std::size_t i = 0; i < state.history.size(); ++i) {
      const auto& h = state.history[i];
      trace.push_back({{"iter", i + 1}, {"np", h.np}, {"ser", h.ser}, {"loss", h.loss}});
    }
    const nlohmann::json doc = {{"converged", state.converged},
                                {"final_np", state.np_effective},
                                {"trace", trace}};
    out << doc.dump(2) << '\n';
  }
  finish_output(out, path);
}

}  // namespace sbmre
