#include "sbmre/equalizers.hpp"

#include <string>

#include "sbmre/errors.hpp"

namespace sbmre {

int delay_count(EqMode mode, int K) { return mode == EqMode::Full ? K : 2; }

std::vector<int> mode_delays(EqMode mode, int K) {
  if (mode == EqMode::Reduced) return {0, K - 1};
  std::vector<int> delays(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) delays[static_cast<std::size_t>(i)] = i;
  return delays;
}

int delay_slot(EqMode mode, int K, int delay) {
  if (mode == EqMode::Full) {
    if (delay < 0 || delay >= K) {
      throw DimensionError("delay " + std::to_string(delay) + " outside [0, " + std::to_string(K - 1) + "]");
    }
    return delay;
  }
  if (delay == 0) return 0;
  if (delay == K - 1) return 1;
  throw DimensionError("reduced mode keeps delays 0 and " + std::to_string(K - 1) + ", not " +
                       std::to_string(delay));
}

namespace {

void require_mode(EqMode mode, int K) {
  if (mode == EqMode::Reduced && K < 2) throw ConfigError("reduced mode needs K >= 2");
}

}  // namespace

CMatrix MreQuadratic::dense() const {
  const Index n = dim();
  const int d = D();
  CMatrix r = CMatrix::Zero(n, n);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const auto b = block.block(static_cast<Index>(i) * LN, static_cast<Index>(j) * LN, LN, LN);
      for (int t = 0; t < T; ++t) {
        r.block((static_cast<Index>(i) * T + t) * LN, (static_cast<Index>(j) * T + t) * LN, LN, LN) = b;
      }
    }
  }
  return r;
}

CMatrix PilotNormalOps::AhA() const {
  const Index blocks = static_cast<Index>(D()) * T;
  const Index ln = XXh.rows();
  CMatrix a = CMatrix::Zero(blocks * ln, blocks * ln);
  for (Index b = 0; b < blocks; ++b) a.block(b * ln, b * ln, ln, ln) = XXh;
  return a;
}

CVector PilotNormalOps::Ahs() const { return XSh.reshaped(); }

std::vector<Index> delay_to_transmitter_permutation(int T, int D, int LN) {
  std::vector<Index> perm(static_cast<std::size_t>(T) * D * LN);
  std::size_t j = 0;
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < D; ++s) {
      for (int k = 0; k < LN; ++k) perm[j++] = (static_cast<Index>(s) * T + t) * LN + k;
    }
  }
  return perm;
}

CVector to_transmitter_major(const CVector& g, int T, int D, int LN) {
  const auto perm = delay_to_transmitter_permutation(T, D, LN);
  if (g.size() != static_cast<Index>(perm.size())) throw DimensionError("to_transmitter_major: size mismatch");
  CVector out(g.size());
  for (std::size_t j = 0; j < perm.size(); ++j) out(static_cast<Index>(j)) = g(perm[j]);
  return out;
}

CVector to_delay_major(const CVector& g, int T, int D, int LN) {
  const auto perm = delay_to_transmitter_permutation(T, D, LN);
  if (g.size() != static_cast<Index>(perm.size())) throw DimensionError("to_delay_major: size mismatch");
  CVector out(g.size());
  for (std::size_t j = 0; j < perm.size(); ++j) out(perm[j]) = g(static_cast<Index>(j));
  return out;
}

EqualizerBank bank_from_vector(const CVector& g_tm, EqMode mode, int T, int K, int LN) {
  const int d = delay_count(mode, K);
  if (g_tm.size() != static_cast<Index>(T) * d * LN) throw DimensionError("bank_from_vector: size mismatch");
  return {mode, T, K, g_tm.reshaped(LN, static_cast<Index>(d) * T)};
}

CVector bank_to_vector(const EqualizerBank& bank) { return bank.G.reshaped(); }

int mre_lag(EqMode mode, int K) { return mode == EqMode::Full ? 1 : K - 1; }

CMatrix mre_constraint_rows(const CVector& x_a, const CVector& x_b, const SystemConfig& cfg,
                            EqMode mode) {
  const int K = cfg.K();
  const int LN = cfg.LN();
  const int T = cfg.T;
  require_mode(mode, K);
  if (x_a.size() != LN || x_b.size() != LN) {
    throw DimensionError("mre_constraint_rows: windows must have length L*N = " + std::to_string(LN));
  }
  const int d = delay_count(mode, K);
  const int chain = d - 1;  // consecutive slot pairs: K-1 (FULL) or 1 (REDUCED)
  CMatrix u = CMatrix::Zero(static_cast<Index>(chain) * T, static_cast<Index>(d) * T * LN);
  for (int s = 0; s < chain; ++s) {
    for (int t = 0; t < T; ++t) {
      const Index row = static_cast<Index>(s) * T + t;
      u.row(row).segment((static_cast<Index>(s) * T + t) * LN, LN) = x_a.adjoint();
      u.row(row).segment((static_cast<Index>(s + 1) * T + t) * LN, LN) = -x_b.adjoint();
    }
  }
  return u;
}

MreQuadratic estimate_R(const ReceivedWindows& rx, const SystemConfig& cfg, EqMode mode) {
  const int K = cfg.K();
  const int LN = cfg.LN();
  require_mode(mode, K);
  if (rx.windows.rows() != LN) throw DimensionError("estimate_R: window length differs from L*N");

  const int lag = mre_lag(mode, K);
  const Index pairs = rx.windows.cols() - lag;
  if (pairs < 1) {
    throw InsufficientDataError("estimate_R: no window pairs at lag " + std::to_string(lag) + " in a " +
                                std::to_string(rx.windows.cols()) + "-window frame");
  }
  const auto xa = rx.windows.leftCols(pairs);
  const auto xb = rx.windows.middleCols(lag, pairs);
  const CMatrix caa = xa * xa.adjoint();
  const CMatrix cbb = xb * xb.adjoint();
  const CMatrix cab = xa * xb.adjoint();

  const int d = delay_count(mode, K);
  MreQuadratic r{mode, cfg.T, K, LN, CMatrix::Zero(static_cast<Index>(d) * LN, static_cast<Index>(d) * LN),
                 pairs};
  for (int s = 0; s + 1 < d; ++s) {
    const Index a = static_cast<Index>(s) * LN;
    const Index b = a + LN;
    r.block.block(a, a, LN, LN) += caa;
    r.block.block(b, b, LN, LN) += cbb;
    r.block.block(a, b, LN, LN) -= cab;
    r.block.block(b, a, LN, LN) -= cab.adjoint();
  }
  r.block /= static_cast<double>(pairs);
  return r;
}

BlindMre blind_mre(const MreQuadratic& R, const SystemConfig& cfg) {
  if (R.T != cfg.T || R.K != cfg.K() || R.LN != cfg.LN()) {
    throw DimensionError("blind_mre: quadratic form does not match the configuration");
  }
  const auto pairs = linalg::hermitian_smallest_eigpairs(R.block, R.T);
  const int d = R.D();

  BlindMre out;
  out.value = pairs.values(0);
  out.chain_values = pairs.values;
  out.g = CVector::Zero(R.dim());
  for (int s = 0; s < d; ++s) {
    out.g.segment(static_cast<Index>(s) * R.T * R.LN, R.LN) =
        pairs.vectors.col(0).segment(static_cast<Index>(s) * R.LN, R.LN);
  }

  // The smallest eigenvalue of R has multiplicity T (one copy per
  // transmitter slot), so one eigenvector only ever fills one slot. The bank
  // instead places the t-th smallest chain of the shared block in slot t.
  out.bank = {R.mode, R.T, R.K, CMatrix(R.LN, static_cast<Index>(d) * R.T)};
  for (int t = 0; t < R.T; ++t) {
    for (int s = 0; s < d; ++s) {
      out.bank.G.col(static_cast<Index>(t) * d + s) = pairs.vectors.col(t).segment(static_cast<Index>(s) * R.LN, R.LN);
    }
  }
  return out;
}

PilotNormalOps pilot_normal_ops(const ReceivedWindows& rx, const Frame& frame,
                                const SystemConfig& cfg, EqMode mode) {
  const int K = cfg.K();
  const int LN = cfg.LN();
  require_mode(mode, K);
  if (cfg.Np < cfg.N || cfg.Np > cfg.Ns) {
    throw ConfigError("pilot_normal_ops: need N <= N_p <= N_s, got N_p = " + std::to_string(cfg.Np));
  }
  if (rx.windows.rows() != LN || frame.T() != cfg.T || frame.Ns() < cfg.Np) {
    throw DimensionError("pilot_normal_ops: received windows or frame do not match the configuration");
  }

  const Index windows = cfg.Np - cfg.N + 1;
  const auto x = rx.windows.leftCols(windows);
  const auto delays = mode_delays(mode, K);
  const int d = static_cast<int>(delays.size());

  // S(t*D + slot, c) = s_t(n - delay) for n = N - 1 + c.
  CMatrix s(static_cast<Index>(d) * cfg.T, windows);
  for (int t = 0; t < cfg.T; ++t) {
    for (int slot = 0; slot < d; ++slot) {
      for (Index c = 0; c < windows; ++c) {
        const int n = cfg.N - 1 + static_cast<int>(c);
        s(static_cast<Index>(t) * d + slot, c) = frame.symbol(t, n - delays[static_cast<std::size_t>(slot)]);
      }
    }
  }
  return {mode, cfg.T, K, x * x.adjoint(), x * s.adjoint(), windows};
}

EqualizerBank sb_mre(const PilotNormalOps& ops, const MreQuadratic& R, double lambda,
                     const SystemConfig& cfg) {
  if (!(lambda >= 0.0)) throw DomainError("sb_mre: lambda must be >= 0");
  if (ops.mode != R.mode || ops.T != R.T || ops.K != R.K || ops.XXh.rows() != R.LN || R.T != cfg.T ||
      R.K != cfg.K()) {
    throw DimensionError("sb_mre: pilot operators and quadratic form disagree");
  }
  const int d = R.D();
  const Index LN = R.LN;
  const Index n = static_cast<Index>(d) * LN;

  // Cost: (1/P) sum over the P pilot windows of the LS residual, plus
  // lambda times the cross-relation error summed over all window pairs
  // (R.sample_count * R, since R is a sample mean).
  //
  // Transmitter-major, the system is block diagonal with T copies of
  // I_D (x) XX^H / P + lambda * pairs * block; one factorization serves
  // every transmitter.
  const double pilot_scale = 1.0 / static_cast<double>(ops.pilot_windows);
  CMatrix system = (lambda * static_cast<double>(R.sample_count)) * R.block;
  for (int s = 0; s < d; ++s) system.block(s * LN, s * LN, LN, LN) += pilot_scale * ops.XXh;
  CMatrix rhs(n, R.T);
  for (int t = 0; t < R.T; ++t) {
    for (int s = 0; s < d; ++s) {
      rhs.col(t).segment(s * LN, LN) = pilot_scale * ops.XSh.col(static_cast<Index>(t) * d + s);
    }
  }
  const auto sol = linalg::solve_hpd(system, rhs);

  EqualizerBank bank{R.mode, R.T, R.K, CMatrix(LN, static_cast<Index>(d) * R.T)};
  for (int t = 0; t < R.T; ++t) {
    for (int s = 0; s < d; ++s) bank.G.col(static_cast<Index>(t) * d + s) = sol.x.col(t).segment(s * LN, LN);
  }
  return bank;
}

EqualizerBank zf_equalizer(const StackedChannel& H) {
  const CMatrix& h = H.full;
  if (h.rows() < h.cols()) {
    throw NumericalError("zf_equalizer: stacked channel is wide (" + std::to_string(h.rows()) + "x" +
                         std::to_string(h.cols()) + "), no left inverse");
  }
  const auto sol = linalg::solve_hpd(h.adjoint() * h, h.adjoint());
  if (sol.regularized) throw NumericalError("zf_equalizer: stacked channel is rank deficient");
  return {EqMode::Full, H.T, H.K, sol.x.adjoint()};
}

EqualizerBank mmse_equalizer(const StackedChannel& H, double sigma2) {
  if (!(sigma2 >= 0.0)) throw DomainError("mmse_equalizer: sigma2 must be >= 0");
  if (sigma2 == 0.0) return zf_equalizer(H);
  // (H H^H + s I)^{-1} H = H (H^H H + s I)^{-1}; the right-hand form stays
  // well conditioned as sigma2 -> 0 because H^H H is full rank.
  const CMatrix& h = H.full;
  CMatrix gram = h.adjoint() * h;
  gram.diagonal().array() += sigma2;
  return {EqMode::Full, H.T, H.K, linalg::solve_hpd(gram, h.adjoint()).x.adjoint()};
}

Streams apply_bank(const EqualizerBank& bank, const ReceivedWindows& rx, int delay) {
  const int slot = delay_slot(bank.mode, bank.K, delay);
  if (bank.G.rows() != rx.windows.rows()) throw DimensionError("apply_bank: bank and windows differ in length");
  const int Ns = static_cast<int>(rx.streams.cols());
  Streams out{CMatrix::Zero(bank.T, Ns), {std::max(0, rx.first() - delay), rx.last() - delay}};
  const int d = bank.D();
  for (int t = 0; t < bank.T; ++t) {
    const auto g = bank.G.col(static_cast<Index>(t) * d + slot);
    for (int n = out.valid.first; n <= out.valid.last; ++n) {
      out.values(t, n) = g.dot(rx.window(n + delay));
    }
  }
  return out;
}

}  // namespace sbmre
