#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbmre/adaptive.hpp"
#include "sbmre/model.hpp"

namespace sbmre {

enum class Algorithm { ZF, MMSE, BMRE, BMRE_RC, SBMRE, SBMRE_RC };

std::string_view algorithm_name(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);
/// Comma-separated names, e.g. "ZF,MMSE,SBMRE". Throws ConfigError on unknown names.
std::vector<Algorithm> parse_algorithm_list(std::string_view list);

enum class SweepAxis { Snr, Pilots, Lambda };

struct Sweep {
  SweepAxis axis = SweepAxis::Snr;
  std::vector<double> values;
};

/// "a:b:step" inclusive of b (within 1e-9 of a step). A single number is a one-point range.
std::vector<double> parse_range(std::string_view text);

struct ExperimentSpec {
  SystemConfig base;
  std::vector<Algorithm> algorithms;
  int frames = 100;
  std::optional<Sweep> sweep;
  std::uint64_t master_seed = 0;
  int threads = 1;
  /// Fixed noise variance instead of the SNR-derived one (0 for noise-free runs).
  std::optional<double> sigma2_override;

  void validate() const;
};

struct GridPoint {
  double snr_db = 0.0;
  int np = 0;
  double lambda = 0.0;
  /// Extra seed component; the adaptive loop bumps it so every feedback
  /// round sees fresh transmissions.
  std::uint64_t epoch = 0;
};

struct Tally {
  std::int64_t errors = 0;
  std::int64_t symbols = 0;

  Tally& operator+=(const Tally& o) {
    errors += o.errors;
    symbols += o.symbols;
    return *this;
  }
  friend bool operator==(const Tally&, const Tally&) = default;
};

/// The base configuration with the grid point's SNR, pilot count and weight.
SystemConfig config_at(const ExperimentSpec& spec, const GridPoint& point);
GridPoint base_point(const ExperimentSpec& spec);
std::vector<GridPoint> sweep_grid(const ExperimentSpec& spec);

std::uint64_t frame_seed(std::uint64_t master_seed, std::uint64_t frame, const GridPoint& point);

/// Runs every requested algorithm on the same realization of one frame.
/// Result is parallel to `algorithms`.
std::vector<Tally> evaluate_frame(const SystemConfig& cfg, const std::vector<Algorithm>& algorithms,
                                  std::uint64_t seed, std::optional<double> sigma2_override = {});

/// Sums evaluate_frame over spec.frames frames. The tallies do not depend on
/// spec.threads.
std::vector<Tally> run_frames(const ExperimentSpec& spec, const GridPoint& point);

struct ResultRow {
  Algorithm algo = Algorithm::ZF;
  double snr_db = 0.0;
  int np = 0;
  double lambda = 0.0;
  int frames = 0;
  std::int64_t symbols = 0;
  std::int64_t errors = 0;
  double ser = 0.0;  ///< errors / symbols, floored at 1 / symbols

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::uint64_t master_seed = 0;
  double wall_time = 0.0;  ///< seconds
};

ResultRow make_row(Algorithm algo, const GridPoint& point, int frames, const Tally& tally);

ExperimentResult run_sweep(const ExperimentSpec& spec);

/// Runs the pilot-count controller on one algorithm; each round measures SER
/// with run_frames at the current pilot count. `oracle_override` replaces
/// the Monte-Carlo measurement.
AdaptiveState run_adaptive_experiment(const ExperimentSpec& spec, Algorithm algo,
                                      const AdaptiveConfig& cfg,
                                      const SerOracle& oracle_override = {});

enum class ExportFormat { Csv, Json };
ExportFormat parse_format(std::string_view name);

/// Header `algo,snr_db,np,lambda,frames,symbols,errors,ser`.
void write_csv(std::ostream& out, const ExperimentResult& result);
std::vector<ResultRow> read_csv(std::istream& in);
void write_json(std::ostream& out, const ExperimentResult& result);
void export_result(const ExperimentResult& result, const std::string& path, ExportFormat format);
void export_trace(const AdaptiveState& state, const std::string& path, ExportFormat format);

}  // namespace sbmre
