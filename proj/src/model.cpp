#include "sbmre/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sbmre/errors.hpp"

namespace sbmre {

void SystemConfig::validate_dimensions() const {
  auto fail = [](const std::string& why) { throw ConfigError("invalid SystemConfig: " + why); };
  if (T < 1) fail("T must be >= 1");
  if (L < 1) fail("L must be >= 1");
  if (M < 0) fail("M must be >= 0");
  if (N < 1) fail("N must be >= 1");
  if (Ns < N) fail("N_s must be >= N");
  if (Np < 0 || Np > Ns) fail("N_p must lie in [0, N_s]");
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& why) { throw ConfigError("invalid SystemConfig: " + why); };
  validate_dimensions();
  if (L * N < K() * T) {
    fail("L*N = " + std::to_string(L * N) + " < K*T = " + std::to_string(K() * T) +
         " (stacked channel cannot have full column rank)");
  }
  if (Np < N) fail("N_p = " + std::to_string(Np) + " < N = " + std::to_string(N));
  if (Np > Ns) fail("N_p = " + std::to_string(Np) + " > N_s = " + std::to_string(Ns));
  if (!std::isfinite(snr_db)) fail("snr_db must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be finite and >= 0");
  if (!(sigma_h2 > 0.0) || !std::isfinite(sigma_h2)) fail("sigma_h2 must be > 0");
}

SystemConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"T",      "L",      "M",        "N",   "N_s",
                                              "N_p",    "snr_db", "lambda",   "sigma_h2", "seed"};
  if (!j.is_object()) throw ConfigError("SystemConfig JSON must be an object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown SystemConfig key '" + item.key() + "'");
  }
  SystemConfig cfg;
  try {
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("T", cfg.T);
    get("L", cfg.L);
    get("M", cfg.M);
    get("N", cfg.N);
    get("N_s", cfg.Ns);
    get("N_p", cfg.Np);
    get("snr_db", cfg.snr_db);
    get("lambda", cfg.lambda);
    get("sigma_h2", cfg.sigma_h2);
    get("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("SystemConfig JSON: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const SystemConfig& cfg) {
  return {{"T", cfg.T},           {"L", cfg.L},           {"M", cfg.M},
          {"N", cfg.N},           {"N_s", cfg.Ns},        {"N_p", cfg.Np},
          {"snr_db", cfg.snr_db}, {"lambda", cfg.lambda}, {"sigma_h2", cfg.sigma_h2},
          {"seed", cfg.seed}};
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

Complex complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
  const double re = gauss(rng);
  const double im = gauss(rng);
  return {re, im};
}

ChannelSet draw_channel(const SystemConfig& cfg, Rng& rng) {
  cfg.validate_dimensions();
  ChannelSet ch{cfg.T, cfg.L, cfg.M, {}};
  ch.taps.resize(static_cast<std::size_t>(cfg.T * cfg.L * (cfg.M + 1)));
  for (auto& h : ch.taps) h = complex_gaussian(rng, cfg.sigma_h2);
  return ch;
}

StackedChannel build_stacked_channel(const ChannelSet& ch, int N) {
  if (N < 1) throw ConfigError("build_stacked_channel: N must be >= 1");
  const int K = ch.M + N;
  StackedChannel h{ch.T, K, {}, CMatrix::Zero(ch.L * N, K * ch.T)};
  h.blocks.reserve(static_cast<std::size_t>(ch.T));
  for (int t = 0; t < ch.T; ++t) {
    CMatrix block = CMatrix::Zero(ch.L * N, K);
    for (int l = 0; l < ch.L; ++l) {
      for (int r = 0; r < N; ++r) {
        for (int m = 0; m <= ch.M; ++m) block(l * N + r, r + m) = ch.tap(t, l, m);
      }
    }
    h.full.middleCols(t * K, K) = block;
    h.blocks.push_back(std::move(block));
  }
  return h;
}

Frame generate_frame(const SystemConfig& cfg, Rng& rng) {
  cfg.validate_dimensions();
  Frame f{CMatrix(cfg.T, cfg.Ns), cfg.Np};
  for (int t = 0; t < cfg.T; ++t) {
    for (int n = 0; n < cfg.Ns; ++n) {
      const auto bits = rng();
      const double re = (bits & 1U) ? -kQpskAmplitude : kQpskAmplitude;
      const double im = (bits & 2U) ? -kQpskAmplitude : kQpskAmplitude;
      f.symbols(t, n) = {re, im};
    }
  }
  return f;
}

double noise_variance_from_snr(const SystemConfig& cfg) {
  if (!std::isfinite(cfg.snr_db)) throw DomainError("noise_variance_from_snr: snr_db must be finite");
  const double signal = cfg.T * (cfg.M + 1) * cfg.sigma_h2;
  return signal / std::pow(10.0, cfg.snr_db / 10.0);
}

ReceivedWindows simulate_reception(const ChannelSet& ch, const Frame& frame, int N, double sigma2,
                                   Rng& rng) {
  if (frame.T() != ch.T) {
    throw DimensionError("simulate_reception: frame has " + std::to_string(frame.T()) +
                         " transmitters, channel " + std::to_string(ch.T));
  }
  if (N < 1 || frame.Ns() < N) throw DimensionError("simulate_reception: frame shorter than window");
  if (!(sigma2 >= 0.0)) throw DomainError("simulate_reception: sigma2 must be >= 0");

  const int Ns = frame.Ns();
  ReceivedWindows rx{N, sigma2, CMatrix::Zero(ch.L, Ns), CMatrix(ch.L * N, Ns - N + 1)};
  for (int n = 0; n < Ns; ++n) {
    for (int l = 0; l < ch.L; ++l) {
      Complex acc{};
      for (int t = 0; t < ch.T; ++t) {
        for (int m = 0; m <= ch.M; ++m) acc += ch.tap(t, l, m) * frame.symbol(t, n - m);
      }
      // Drawn unconditionally so the random stream does not depend on sigma2.
      acc += complex_gaussian(rng, 1.0) * std::sqrt(sigma2);
      rx.streams(l, n) = acc;
    }
  }
  for (int n = N - 1; n < Ns; ++n) {
    auto col = rx.windows.col(n - (N - 1));
    for (int l = 0; l < ch.L; ++l) {
      for (int k = 0; k < N; ++k) col(l * N + k) = rx.streams(l, n - k);
    }
  }
  return rx;
}

}  // namespace sbmre
