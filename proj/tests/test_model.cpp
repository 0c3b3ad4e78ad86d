#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "sbmre/errors.hpp"
#include "sbmre/model.hpp"

using namespace sbmre;

namespace {

ChannelSet two_tap(Complex h0, Complex h1) {
  ChannelSet ch{1, 1, 1, {h0, h1}};
  return ch;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("default config is the 2x4 reference scenario") {
    const SystemConfig cfg;
    CHECK(cfg.K() == 13);
    CHECK(cfg.LN() == 40);
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("config validation names the broken invariant") {
    SystemConfig cfg;
    cfg.L = 1;  // LN = 10 < KT = 26
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(cfg.validate_dimensions());

    cfg = SystemConfig{};
    cfg.Np = 5;  // fewer pilots than taps
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SystemConfig{};
    cfg.Np = 300;
    CHECK_THROWS_AS(cfg.validate_dimensions(), ConfigError);
    cfg = SystemConfig{};
    cfg.lambda = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SystemConfig{};
    cfg.T = 0;
    CHECK_THROWS_AS(cfg.validate_dimensions(), ConfigError);
    cfg = SystemConfig{};
    cfg.snr_db = std::nan("");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("config JSON round trip and key checking") {
    SystemConfig cfg;
    cfg.snr_db = 12.5;
    cfg.Np = 40;
    cfg.seed = 77;
    const SystemConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.snr_db == 12.5);
    CHECK(back.Np == 40);
    CHECK(back.seed == 77);

    const auto partial = config_from_json(nlohmann::json{{"N_p", 24}});
    CHECK(partial.Np == 24);
    CHECK(partial.L == 4);

    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"Npilots", 24}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"T", 2}, {"L", 1}}), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);
  }

  TEST_CASE("draw_channel tap count and determinism") {
    SystemConfig cfg;
    Rng a(123), b(123);
    const auto ch = draw_channel(cfg, a);
    CHECK(ch.taps.size() == 32);
    CHECK(draw_channel(cfg, b).taps == ch.taps);
  }

  TEST_CASE("channel tap variance over 1e5 draws") {
    SystemConfig cfg;
    cfg.sigma_h2 = 2.0;
    Rng rng(5);
    double power = 0.0, re2 = 0.0;
    std::size_t count = 0;
    while (count < 100000) {
      for (const auto& h : draw_channel(cfg, rng).taps) {
        power += std::norm(h);
        re2 += h.real() * h.real();
        ++count;
      }
    }
    CHECK(std::abs(power / count - 2.0) <= 0.05 * 2.0);
    CHECK(std::abs(re2 / count - 1.0) <= 0.05);
  }

  TEST_CASE("stacked channel: smallest band") {
    const Complex h0(1.0, 2.0), h1(-0.5, 0.25);
    const auto H = build_stacked_channel(two_tap(h0, h1), 2);
    CMatrix expect(2, 3);
    expect << h0, h1, 0.0, 0.0, h0, h1;
    CHECK(H.full == expect);
    CHECK(H.blocks.at(0) == expect);
  }

  TEST_CASE("stacked channel: memoryless unit channel is the identity") {
    ChannelSet ch{1, 1, 0, {Complex(1.0)}};
    const auto H = build_stacked_channel(ch, 5);
    CHECK(H.full == CMatrix::Identity(5, 5));
  }

  TEST_CASE("stacked channel band placement") {
    const SystemConfig cfg;
    Rng rng(11);
    const auto ch = draw_channel(cfg, rng);
    const auto H = build_stacked_channel(ch, cfg.N);
    REQUIRE(H.full.rows() == 40);
    REQUIRE(H.full.cols() == 26);
    for (int t = 0; t < cfg.T; ++t) {
      for (int l = 0; l < cfg.L; ++l) {
        for (int r = 0; r < cfg.N; ++r) {
          for (int c = 0; c < cfg.K(); ++c) {
            const int m = c - r;
            const Complex expect = (m >= 0 && m <= cfg.M) ? ch.tap(t, l, m) : Complex{};
            CHECK(H.blocks[t](l * cfg.N + r, c) == expect);
            CHECK(H.full(l * cfg.N + r, t * cfg.K() + c) == expect);
          }
        }
      }
    }
  }

  TEST_CASE("H times stacked symbols equals direct convolution") {
    SystemConfig cfg;
    Rng rng(11);
    const auto ch = draw_channel(cfg, rng);
    const auto f = generate_frame(cfg, rng);
    const auto H = build_stacked_channel(ch, cfg.N);
    for (int n = cfg.N - 1; n < cfg.Ns; ++n) {
      const CVector x = H.full * oracle::stacked_symbols(f, n, cfg.K());
      for (int l = 0; l < cfg.L; ++l) {
        for (int k = 0; k < cfg.N; ++k) {
          CHECK(std::abs(x(l * cfg.N + k) - oracle::convolve(ch, f, l, n - k)) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("frames are unit-energy QPSK with leading pilots") {
    SystemConfig cfg;
    Rng rng(2);
    const auto f = generate_frame(cfg, rng);
    CHECK(f.T() == 2);
    CHECK(f.Ns() == 256);
    CHECK(f.Np == 32);
    for (Index i = 0; i < f.symbols.size(); ++i) {
      const Complex s = f.symbols.data()[i];
      CHECK(std::abs(std::abs(s) - 1.0) <= 1e-15);
      CHECK(std::abs(std::abs(s.real()) - kQpskAmplitude) <= 1e-15);
      CHECK(std::abs(std::abs(s.imag()) - kQpskAmplitude) <= 1e-15);
    }
    CHECK(f.symbol(0, -1) == Complex{});
    Rng again(2);
    CHECK(generate_frame(cfg, again).symbols == f.symbols);
  }

  TEST_CASE("QPSK symbols are uniform within 3 sigma over 1e5 symbols") {
    SystemConfig cfg;
    cfg.T = 1;
    cfg.Ns = 1000;
    cfg.Np = 0;
    Rng rng(8);
    std::array<int, 4> counts{};
    int total = 0;
    for (int f = 0; f < 100; ++f) {
      const auto frame = generate_frame(cfg, rng);
      for (int n = 0; n < cfg.Ns; ++n) {
        const Complex s = frame.symbols(0, n);
        ++counts[(s.real() > 0 ? 1 : 0) + (s.imag() > 0 ? 2 : 0)];
        ++total;
      }
    }
    const double p = 0.25;
    const double sigma = std::sqrt(total * p * (1 - p));
    for (int c : counts) CHECK(std::abs(c - total * p) <= 3 * sigma);
  }

  TEST_CASE("noise variance from SNR") {
    SystemConfig cfg;
    cfg.snr_db = 0.0;
    CHECK(noise_variance_from_snr(cfg) == doctest::Approx(8.0).epsilon(1e-14));
    cfg.snr_db = 10.0;
    CHECK(noise_variance_from_snr(cfg) == doctest::Approx(0.8).epsilon(1e-14));
    cfg.snr_db = 300.0;
    CHECK(noise_variance_from_snr(cfg) < 1e-29);
  }

  TEST_CASE("identity channel passes symbols through") {
    SystemConfig cfg;
    cfg.T = 1;
    cfg.L = 1;
    cfg.M = 0;
    cfg.N = 4;
    cfg.Ns = 20;
    cfg.Np = 4;
    ChannelSet ch{1, 1, 0, {Complex(1.0)}};
    Rng rng(3);
    const auto f = generate_frame(cfg, rng);
    const auto rx = simulate_reception(ch, f, cfg.N, 0.0, rng);
    CHECK(rx.windows.cols() == cfg.Ns - cfg.N + 1);
    for (int n = rx.first(); n <= rx.last(); ++n) {
      for (int k = 0; k < cfg.N; ++k) CHECK(rx.window(n)(k) == f.symbols(0, n - k));
    }
  }

  TEST_CASE("noise-free windows follow the matrix model") {
    SystemConfig cfg;
    Rng rng(4);
    const auto ch = draw_channel(cfg, rng);
    const auto f = generate_frame(cfg, rng);
    const auto rx = simulate_reception(ch, f, cfg.N, 0.0, rng);
    const auto H = build_stacked_channel(ch, cfg.N);
    for (int n = cfg.K() - 1; n < cfg.Ns; ++n) {
      CVector model = CVector::Zero(cfg.LN());
      for (int t = 0; t < cfg.T; ++t) {
        model += H.blocks[t] * oracle::stacked_symbols(f, n, cfg.K()).segment(t * cfg.K(), cfg.K());
      }
      CHECK((rx.window(n) - model).norm() <= 1e-12 * rx.window(n).norm());
    }
  }

  TEST_CASE("noise power and window/stream consistency") {
    SystemConfig cfg;
    cfg.T = 1;
    cfg.L = 4;
    cfg.M = 0;
    cfg.N = 3;
    cfg.Ns = 25000;
    cfg.Np = 3;
    ChannelSet ch{1, 4, 0, std::vector<Complex>(4, Complex{})};
    Rng rng(6);
    const auto f = generate_frame(cfg, rng);
    const auto rx = simulate_reception(ch, f, cfg.N, 4.0, rng);
    CHECK(rx.streams.size() == 100000);
    const double power = rx.streams.squaredNorm() / static_cast<double>(rx.streams.size());
    CHECK(std::abs(power - 4.0) <= 0.05 * 4.0);
    for (int n = rx.first(); n <= rx.first() + 200; ++n) {
      for (int l = 0; l < cfg.L; ++l) {
        for (int k = 0; k < cfg.N; ++k) CHECK(rx.window(n)(l * cfg.N + k) == rx.streams(l, n - k));
      }
    }
  }

  TEST_CASE("reception is deterministic given the seed") {
    SystemConfig cfg;
    auto run = [&](std::uint64_t seed) {
      Rng rng(seed);
      const auto ch = draw_channel(cfg, rng);
      const auto f = generate_frame(cfg, rng);
      return simulate_reception(ch, f, cfg.N, 0.5, rng).streams;
    };
    CHECK(run(9) == run(9));
    CHECK(run(9) != run(10));
  }
}
