// Command-line front end for the SB-MRE simulator.
//
//   sbmre sweep-snr    --snr 0:15:5 --algos ZF,MMSE,SBMRE --frames 500 --out ser.csv
//   sbmre sweep-pilots --np 10:64:6 --algos SBMRE,SBMRE_RC
//   sbmre sweep-lambda --lambda 0.01:0.2:0.01
//   sbmre adaptive     --algos SBMRE_RC --target 1e-2
//   sbmre demo

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sbmre/errors.hpp"
#include "sbmre/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config_path;
  int frames = 100;
  std::string algos = "ZF,MMSE,BMRE,BMRE_RC,SBMRE,SBMRE_RC";
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "SystemConfig JSON file");
  cmd->add_option("--frames", opt.frames, "Monte-Carlo frames per grid point");
  cmd->add_option("--algos", opt.algos, "Comma-separated algorithms");
  cmd->add_option("--seed", opt.seed, "Master seed");
  cmd->add_option("--out", opt.out, "Output file (stdout when omitted)");
  cmd->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", opt.threads, "Worker threads per grid point");
}

sbmre::ExperimentSpec make_spec(const CommonOptions& opt) {
  sbmre::ExperimentSpec spec;
  if (!opt.config_path.empty()) spec.base = sbmre::load_config(opt.config_path);
  spec.algorithms = sbmre::parse_algorithm_list(opt.algos);
  spec.frames = opt.frames;
  spec.master_seed = opt.seed;
  spec.threads = opt.threads;
  return spec;
}

void emit(const sbmre::ExperimentResult& result, const CommonOptions& opt) {
  const auto format = sbmre::parse_format(opt.format);
  if (!opt.out.empty()) {
    sbmre::export_result(result, opt.out, format);
    std::cerr << "wrote " << result.rows.size() << " rows to " << opt.out << '\n';
  } else if (format == sbmre::ExportFormat::Csv) {
    sbmre::write_csv(std::cout, result);
  } else {
    sbmre::write_json(std::cout, result);
  }
}

void print_table(const sbmre::ExperimentResult& result) {
  std::map<double, std::map<std::string, double>> table;
  std::vector<std::string> algos;
  for (const auto& r : result.rows) {
    const std::string name(sbmre::algorithm_name(r.algo));
    if (std::find(algos.begin(), algos.end(), name) == algos.end()) algos.push_back(name);
    table[r.snr_db][name] = r.ser;
  }
  std::printf("%8s", "SNR(dB)");
  for (const auto& a : algos) std::printf(" %12s", a.c_str());
  std::printf("\n");
  for (const auto& [snr, row] : table) {
    std::printf("%8.1f", snr);
    for (const auto& a : algos) std::printf(" %12.4e", row.at(a));
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-blind mutually referenced equalizers: Monte-Carlo SER experiments"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string snr_range = "0:15:5";
  std::string np_range = "10:64:6";
  std::string lambda_range = "0.01:0.2:0.01";

  auto* sweep_snr = app.add_subcommand("sweep-snr", "SER versus SNR");
  add_common(sweep_snr, opt);
  sweep_snr->add_option("--snr", snr_range, "SNR range a:b:step in dB");

  auto* sweep_np = app.add_subcommand("sweep-pilots", "SER versus pilot count");
  add_common(sweep_np, opt);
  sweep_np->add_option("--np", np_range, "Pilot range a:b:step");

  auto* sweep_lambda = app.add_subcommand("sweep-lambda", "SER versus blind weighting factor");
  add_common(sweep_lambda, opt);
  sweep_lambda->add_option("--lambda", lambda_range, "Lambda range a:b:step");

  sbmre::AdaptiveConfig adaptive_cfg;
  std::optional<int> np_max;
  auto* adaptive = app.add_subcommand("adaptive", "Adapt the pilot count toward a target SER");
  add_common(adaptive, opt);
  adaptive->add_option("--target", adaptive_cfg.target, "Target SER");
  adaptive->add_option("--delta1", adaptive_cfg.delta1, "Increase rate above target");
  adaptive->add_option("--max-iter", adaptive_cfg.max_iter, "Iteration budget");
  adaptive->add_option("--tol", adaptive_cfg.tol, "Convergence band on |log10(SER/target)|");
  adaptive->add_option("--np-max", np_max, "Upper pilot bound (default N_s - N)");

  auto* demo = app.add_subcommand("demo", "Reference 2x4 scenario at 5, 10 and 15 dB");
  demo->add_option("--frames", opt.frames, "Frames per SNR point")->default_val(200);
  demo->add_option("--seed", opt.seed, "Master seed");
  demo->add_option("--threads", opt.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (demo->parsed()) {
      CommonOptions d = opt;
      d.algos = "ZF,MMSE,BMRE,BMRE_RC,SBMRE,SBMRE_RC";
      auto spec = make_spec(d);
      spec.sweep = sbmre::Sweep{sbmre::SweepAxis::Snr, {5.0, 10.0, 15.0}};
      const auto result = sbmre::run_sweep(spec);
      std::printf("T=%d L=%d M=%d N=%d N_s=%d N_p=%d lambda=%g, %d frames per point\n", spec.base.T,
                  spec.base.L, spec.base.M, spec.base.N, spec.base.Ns, spec.base.Np, spec.base.lambda,
                  spec.frames);
      print_table(result);
      return 0;
    }

    auto spec = make_spec(opt);
    if (adaptive->parsed()) {
      if (spec.algorithms.size() != 1) {
        throw sbmre::ConfigError("adaptive takes exactly one algorithm (SBMRE or SBMRE_RC)");
      }
      adaptive_cfg.np_min = spec.base.N;
      adaptive_cfg.np_max = np_max.value_or(spec.base.Ns - spec.base.N);
      const auto state = sbmre::run_adaptive_experiment(spec, spec.algorithms.front(), adaptive_cfg);
      if (!opt.out.empty()) {
        sbmre::export_trace(state, opt.out, sbmre::parse_format(opt.format));
      } else {
        sbmre::write_trace_csv(std::cout, state);
      }
      std::cerr << (state.converged ? "converged" : "not converged") << " after " << state.iter
                << " iterations, N_p = " << state.np_effective << '\n';
      return 0;
    }

    if (sweep_snr->parsed()) {
      spec.sweep = sbmre::Sweep{sbmre::SweepAxis::Snr, sbmre::parse_range(snr_range)};
    } else if (sweep_np->parsed()) {
      spec.sweep = sbmre::Sweep{sbmre::SweepAxis::Pilots, sbmre::parse_range(np_range)};
    } else {
      spec.sweep = sbmre::Sweep{sbmre::SweepAxis::Lambda, sbmre::parse_range(lambda_range)};
    }
    emit(sbmre::run_sweep(spec), opt);
    return 0;
  } catch (const sbmre::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sbmre::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
