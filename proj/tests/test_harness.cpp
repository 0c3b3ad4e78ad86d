#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "doctest.h"
#include "sbmre/errors.hpp"
#include "sbmre/harness.hpp"
#include "stub_trace.hpp"

using namespace sbmre;

namespace {

ExperimentSpec small_spec(std::vector<Algorithm> algos, int frames) {
  ExperimentSpec spec;
  spec.algorithms = std::move(algos);
  spec.frames = frames;
  spec.master_seed = 2024;
  return spec;
}

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_csv(out, r);
  return out.str();
}

// Tallies and grid coordinates exact; the SER column only to its printed precision.
void check_same_rows(const std::vector<ResultRow>& got, const std::vector<ResultRow>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].algo == want[i].algo);
    CHECK(got[i].np == want[i].np);
    CHECK(got[i].snr_db == want[i].snr_db);
    CHECK(got[i].lambda == want[i].lambda);
    CHECK(got[i].frames == want[i].frames);
    CHECK(got[i].symbols == want[i].symbols);
    CHECK(got[i].errors == want[i].errors);
    CHECK(got[i].ser == doctest::Approx(want[i].ser).epsilon(1e-13));
  }
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sbmre_test_" + name)).string();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("algorithm names") {
    CHECK(parse_algorithm_list("ZF, MMSE,SBMRE_RC") ==
          std::vector<Algorithm>{Algorithm::ZF, Algorithm::MMSE, Algorithm::SBMRE_RC});
    for (auto a : {Algorithm::ZF, Algorithm::MMSE, Algorithm::BMRE, Algorithm::BMRE_RC, Algorithm::SBMRE,
                   Algorithm::SBMRE_RC}) {
      CHECK(parse_algorithm(algorithm_name(a)) == a);
    }
    CHECK_THROWS_AS(parse_algorithm_list(""), ConfigError);
    CHECK_THROWS_AS(parse_algorithm_list("ZF,LMS"), ConfigError);
    CHECK_THROWS_AS(parse_algorithm_list("zf"), ConfigError);
  }

  TEST_CASE("ranges") {
    CHECK(parse_range("0:15:5") == std::vector<double>{0, 5, 10, 15});
    CHECK(parse_range("7") == std::vector<double>{7});
    const auto lam = parse_range("0.01:0.2:0.01");
    CHECK(lam.size() == 20);
    CHECK(lam.back() == doctest::Approx(0.2));
    CHECK_THROWS_AS(parse_range("5:1:1"), ConfigError);
    CHECK_THROWS_AS(parse_range("1:5"), ConfigError);
    CHECK_THROWS_AS(parse_range("1:x:1"), ConfigError);
    CHECK_THROWS_AS(parse_range("1:5:0"), ConfigError);
  }

  TEST_CASE("spec validation") {
    auto spec = small_spec({}, 1);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK_THROWS_AS(run_sweep(spec), ConfigError);
    spec = small_spec({Algorithm::ZF}, 0);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec({Algorithm::ZF}, 1);
    spec.sweep = Sweep{SweepAxis::Pilots, {5}};  // fewer pilots than taps
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.sweep = Sweep{SweepAxis::Pilots, {256}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.sweep = Sweep{SweepAxis::Pilots, {12.5}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.sweep = Sweep{SweepAxis::Lambda, {-0.1}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.sweep = Sweep{SweepAxis::Snr, {}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }

  TEST_CASE("grid and seeds") {
    auto spec = small_spec({Algorithm::ZF}, 1);
    spec.sweep = Sweep{SweepAxis::Pilots, {16, 32, 64}};
    const auto grid = sweep_grid(spec);
    REQUIRE(grid.size() == 3);
    CHECK(grid[2].np == 64);
    CHECK(grid[2].snr_db == spec.base.snr_db);
    CHECK(config_at(spec, grid[0]).Np == 16);
    CHECK(frame_seed(1, 0, grid[0]) == frame_seed(1, 0, grid[0]));
    CHECK(frame_seed(1, 0, grid[0]) != frame_seed(1, 1, grid[0]));
    CHECK(frame_seed(1, 0, grid[0]) != frame_seed(1, 0, grid[1]));
    CHECK(frame_seed(1, 0, grid[0]) != frame_seed(2, 0, grid[0]));
    GridPoint bumped = grid[0];
    bumped.epoch = 1;
    CHECK(frame_seed(1, 0, grid[0]) != frame_seed(1, 0, bumped));
  }

  TEST_CASE("noise-free ZF frame has no errors") {
    auto spec = small_spec({Algorithm::ZF}, 1);
    spec.sigma2_override = 0.0;
    const auto t = run_frames(spec, base_point(spec));
    REQUIRE(t.size() == 1);
    CHECK(t[0].errors == 0);
    CHECK(t[0].symbols == 448);
  }

  TEST_CASE("same spec twice gives identical tallies, and the thread count does not matter") {
    auto spec = small_spec({Algorithm::ZF, Algorithm::MMSE, Algorithm::SBMRE_RC}, 8);
    spec.base.snr_db = 5.0;
    const auto a = run_frames(spec, base_point(spec));
    CHECK(run_frames(spec, base_point(spec)) == a);
    spec.threads = 4;
    CHECK(run_frames(spec, base_point(spec)) == a);
    spec.threads = 3;
    CHECK(run_frames(spec, base_point(spec)) == a);
  }

  TEST_CASE("paired realizations: each algorithm's tally does not depend on its companions") {
    auto spec = small_spec({Algorithm::MMSE, Algorithm::ZF}, 6);
    spec.base.snr_db = 5.0;
    const auto both = run_frames(spec, base_point(spec));
    spec.algorithms = {Algorithm::ZF};
    CHECK(run_frames(spec, base_point(spec)).at(0) == both.at(1));
  }

  TEST_CASE("symbol conservation") {
    auto spec = small_spec({Algorithm::ZF, Algorithm::SBMRE}, 3);
    spec.sweep = Sweep{SweepAxis::Pilots, {16, 40}};
    const auto res = run_sweep(spec);
    REQUIRE(res.rows.size() == 4);
    for (const auto& r : res.rows) {
      CHECK(r.symbols == static_cast<std::int64_t>(r.frames) * 2 * (256 - r.np));
      CHECK(r.errors <= r.symbols);
      const double expect = r.errors > 0 ? static_cast<double>(r.errors) / r.symbols : 1.0 / r.symbols;
      CHECK(r.ser == expect);
    }
    CHECK(res.master_seed == 2024);
  }

  TEST_CASE("frame failures name the seed") {
    auto spec = small_spec({Algorithm::BMRE_RC}, 1);
    spec.base.T = 1;
    spec.base.L = 2;
    spec.base.M = 1;
    spec.base.N = 2;
    spec.base.Ns = 3;
    spec.base.Np = 2;
    try {
      run_frames(spec, base_point(spec));
      FAIL("expected a failure");
    } catch (const InsufficientDataError& e) {
      CHECK(std::string(e.what()).find("frame seed") != std::string::npos);
    }
  }

  TEST_CASE("MMSE SER does not rise with SNR") {
    auto spec = small_spec({Algorithm::MMSE}, 500);
    spec.sweep = Sweep{SweepAxis::Snr, {0, 5, 10, 15}};
    const auto res = run_sweep(spec);
    REQUIRE(res.rows.size() == 4);
    for (std::size_t i = 1; i < res.rows.size(); ++i) CHECK(res.rows[i].ser <= res.rows[i - 1].ser);
  }

  TEST_CASE("more pilots help the semi-blind equalizer at 15 dB") {
    auto spec = small_spec({Algorithm::SBMRE}, 60);
    spec.base.snr_db = 15.0;
    spec.sweep = Sweep{SweepAxis::Pilots, {16, 32, 64}};
    const auto res = run_sweep(spec);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[2].ser <= res.rows[0].ser);
  }

  TEST_CASE("CSV: one row is two lines and round-trips") {
    auto spec = small_spec({Algorithm::MMSE}, 4);
    const auto res = run_sweep(spec);
    const std::string text = csv_of(res);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("algo,snr_db,np,lambda,frames,symbols,errors,ser\n", 0) == 0);

    spec.algorithms = {Algorithm::ZF, Algorithm::SBMRE_RC};
    spec.sweep = Sweep{SweepAxis::Lambda, {0.05, 0.1}};
    const auto many = run_sweep(spec);
    std::istringstream in(csv_of(many));
    check_same_rows(read_csv(in), many.rows);

    std::istringstream bad("algo,snr\n");
    CHECK_THROWS_AS(read_csv(bad), ConfigError);
  }

  TEST_CASE("JSON export carries rows and metadata") {
    auto spec = small_spec({Algorithm::ZF}, 2);
    spec.sweep = Sweep{SweepAxis::Snr, {5, 10}};
    const auto res = run_sweep(spec);
    std::ostringstream out;
    write_json(out, res);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j.at("rows").size() == 2);
    CHECK(j.at("metadata").at("master_seed") == 2024);
    CHECK(j.at("metadata").contains("wall_time"));
    CHECK(j.at("rows")[1].at("snr_db") == 10.0);
    CHECK(j.at("rows")[1].at("errors") == res.rows[1].errors);
  }

  TEST_CASE("file export and I/O errors") {
    auto spec = small_spec({Algorithm::ZF}, 1);
    const auto res = run_sweep(spec);
    const std::string path = temp_path("rows.csv");
    export_result(res, path, ExportFormat::Csv);
    std::ifstream in(path);
    check_same_rows(read_csv(in), res.rows);
    std::remove(path.c_str());
    try {
      export_result(res, "/nonexistent-dir/x.csv", ExportFormat::Csv);
      FAIL("expected an I/O error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("/nonexistent-dir/x.csv") != std::string::npos);
    }
    CHECK(parse_format("json") == ExportFormat::Json);
    CHECK_THROWS_AS(parse_format("xml"), ConfigError);
  }

  TEST_CASE("adaptive experiment with an injected stub oracle") {
    auto spec = small_spec({Algorithm::SBMRE}, 1);
    const auto s = run_adaptive_experiment(spec, Algorithm::SBMRE, stub::config(), stub::oracle);
    REQUIRE(s.history.size() == std::size(stub::kTrace));
    for (std::size_t i = 0; i < s.history.size(); ++i) {
      CHECK(s.history[i].np == stub::kTrace[i].np);
      CHECK(std::abs(s.history[i].loss - stub::kTrace[i].loss) <= 1e-12);
    }

    const std::string path = temp_path("trace.csv");
    export_trace(s, path, ExportFormat::Csv);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iter,np,ser,loss");
    std::remove(path.c_str());

    const std::string jpath = temp_path("trace.json");
    export_trace(s, jpath, ExportFormat::Json);
    std::ifstream jin(jpath);
    const auto j = nlohmann::json::parse(jin);
    CHECK(j.dump().find("\"np\"") != std::string::npos);
    std::remove(jpath.c_str());
  }

  TEST_CASE("adaptive experiment: a loose target pushes N_p up first") {
    auto spec = small_spec({Algorithm::SBMRE_RC}, 4);
    spec.base.snr_db = 5.0;
    AdaptiveConfig cfg;
    cfg.target = 1e-4;  // far below what 4 frames at 5 dB can show
    cfg.np_min = 10;
    cfg.np_max = 246;
    cfg.max_iter = 2;
    const auto s = run_adaptive_experiment(spec, Algorithm::SBMRE_RC, cfg);
    REQUIRE(s.history.size() == 2);
    CHECK(s.history[0].np == 10);
    CHECK(s.history[0].loss > 0);
    CHECK(s.history[1].np > 10);
  }

  TEST_CASE("adaptive experiment preconditions") {
    auto spec = small_spec({Algorithm::ZF}, 1);
    AdaptiveConfig cfg;
    CHECK_THROWS_AS(run_adaptive_experiment(spec, Algorithm::ZF, cfg), ConfigError);
    cfg.np_min = 5;
    CHECK_THROWS_AS(run_adaptive_experiment(spec, Algorithm::SBMRE, cfg), ConfigError);
    cfg = AdaptiveConfig{};
    spec.sweep = Sweep{SweepAxis::Snr, {5}};
    CHECK_THROWS_AS(run_adaptive_experiment(spec, Algorithm::SBMRE, cfg), ConfigError);
  }
}
