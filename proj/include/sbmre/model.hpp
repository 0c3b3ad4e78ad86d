#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sbmre/linalg.hpp"

namespace sbmre {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;
using linalg::Index;

using Rng = std::mt19937_64;

/// Inclusive range of time indices [first, last].
struct IndexRange {
  int first = 0;
  int last = -1;

  [[nodiscard]] int size() const { return last >= first ? last - first + 1 : 0; }
  [[nodiscard]] bool contains(int n) const { return n >= first && n <= last; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Scenario parameters. Defaults are the 2x4 reference scenario
/// (M = 3, N = 10, 256-symbol frames with 32 pilots, lambda = 0.1).
struct SystemConfig {
  int T = 2;          ///< transmitters
  int L = 4;          ///< receivers
  int M = 3;          ///< channel order, M + 1 taps per link
  int N = 10;         ///< window length / equalizer taps per receiver
  int Ns = 256;       ///< frame length in symbols
  int Np = 32;        ///< leading pilot symbols
  double snr_db = 10.0;
  double lambda = 0.1;
  double sigma_h2 = 1.0;
  std::uint64_t seed = 0;

  /// Equalizer delay span, K = M + N.
  [[nodiscard]] int K() const { return M + N; }
  /// Rows of a stacked observation window.
  [[nodiscard]] int LN() const { return L * N; }

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
  /// Only the shape requirements (positive counts, N_p <= N_s). Structural
  /// builders accept under-determined toys that validate() would reject.
  void validate_dimensions() const;
};

/// JSON field names: T, L, M, N, N_s, N_p, snr_db, lambda, sigma_h2, seed.
/// Missing keys keep their defaults; unknown keys are rejected.
SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);
SystemConfig load_config(const std::string& path);

/// Tap h_{t,m}^{(l)} of the link from transmitter t to receiver l.
struct ChannelSet {
  int T = 0;
  int L = 0;
  int M = 0;
  std::vector<Complex> taps;  // [t][l][m], m fastest

  [[nodiscard]] Complex tap(int t, int l, int m) const {
    return taps[static_cast<std::size_t>((t * L + l) * (M + 1) + m)];
  }
  Complex& tap(int t, int l, int m) { return taps[static_cast<std::size_t>((t * L + l) * (M + 1) + m)]; }
};

/// Block-Toeplitz convolution matrices. blocks[t] is H_t (LN x K), full is
/// [H_0 ... H_{T-1}] (LN x KT).
struct StackedChannel {
  int T = 0;
  int K = 0;
  std::vector<CMatrix> blocks;
  CMatrix full;
};

/// One frame per transmitter: symbols(t, n), n in [0, Ns). The first Np
/// symbols are pilots known to the receiver.
struct Frame {
  CMatrix symbols;
  int Np = 0;

  [[nodiscard]] int T() const { return static_cast<int>(symbols.rows()); }
  [[nodiscard]] int Ns() const { return static_cast<int>(symbols.cols()); }
  /// s_t(n) with the zero-prefix convention s_t(n) = 0 for n < 0.
  [[nodiscard]] Complex symbol(int t, int n) const {
    return n < 0 ? Complex{} : symbols(t, n);
  }
};

/// Received scalar streams and their stacked observation windows.
///
/// streams(l, n) is x^{(l)}(n). Column c of `windows` is x(n) for
/// n = N - 1 + c, with row l*N + k holding x^{(l)}(n - k).
struct ReceivedWindows {
  int N = 0;
  double sigma2 = 0.0;
  CMatrix streams;
  CMatrix windows;

  [[nodiscard]] int first() const { return N - 1; }
  [[nodiscard]] int last() const { return static_cast<int>(streams.cols()) - 1; }
  [[nodiscard]] auto window(int n) const { return windows.col(n - (N - 1)); }
};

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
Complex complex_gaussian(Rng& rng, double variance);

/// The unit-energy QPSK alphabet {(+-1 +- j)/sqrt(2)}.
inline constexpr double kQpskAmplitude = 0.70710678118654752440;

ChannelSet draw_channel(const SystemConfig& cfg, Rng& rng);
StackedChannel build_stacked_channel(const ChannelSet& ch, int N);
Frame generate_frame(const SystemConfig& cfg, Rng& rng);

/// sigma^2 = T (M + 1) sigma_h^2 / 10^(snr_db / 10): average received
/// signal power per scalar sample over noise power.
double noise_variance_from_snr(const SystemConfig& cfg);

/// Convolves every transmitter through its links and adds one noise sample
/// per (receiver, time). Overlapping windows share those samples.
ReceivedWindows simulate_reception(const ChannelSet& ch, const Frame& frame, int N, double sigma2,
                                   Rng& rng);

}  // namespace sbmre
