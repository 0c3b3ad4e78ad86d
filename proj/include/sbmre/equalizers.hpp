#pragma once

#include <vector>

#include "sbmre/linalg.hpp"
#include "sbmre/model.hpp"

namespace sbmre {

/// FULL keeps every delay 0..K-1; REDUCED keeps only delays 0 and K-1.
enum class EqMode { Full, Reduced };

/// Number of delays D kept by a mode.
int delay_count(EqMode mode, int K);
/// Delays kept by a mode, in slot order.
std::vector<int> mode_delays(EqMode mode, int K);
/// Slot of `delay` within a mode; throws DimensionError for delays the mode does not keep.
int delay_slot(EqMode mode, int K, int delay);

/// Linear equalizers, one LN-tap filter per (transmitter, kept delay).
///
/// Columns are transmitter-major: column t*D + slot holds g_{t,delay}.
/// For FULL this is [G_0 ... G_{T-1}] with G_t = [g_{t,0} ... g_{t,K-1}];
/// for REDUCED each transmitter contributes [g_{t,0}, g_{t,K-1}].
struct EqualizerBank {
  EqMode mode = EqMode::Full;
  int T = 0;
  int K = 0;
  CMatrix G;

  [[nodiscard]] int D() const { return delay_count(mode, K); }
  [[nodiscard]] auto column(int t, int delay) const { return G.col(t * D() + delay_slot(mode, K, delay)); }
};

/// Sample MRE quadratic form.
///
/// In the delay-major g layout (block i*T + t holds g_{t,i}) the matrix R
/// couples only equalizers of the same transmitter, and every transmitter
/// sees the same coupling. It is therefore stored as the shared
/// per-transmitter block `block` (LN*D square, delay blocks of size LN);
/// dense() expands it to the full LN*D*T matrix.
struct MreQuadratic {
  EqMode mode = EqMode::Full;
  int T = 0;
  int K = 0;
  int LN = 0;
  CMatrix block;
  Index sample_count = 0;

  [[nodiscard]] int D() const { return delay_count(mode, K); }
  [[nodiscard]] Index dim() const { return static_cast<Index>(LN) * D() * T; }
  /// Full R in delay-major layout.
  [[nodiscard]] CMatrix dense() const;
};

/// Normal-equation pieces of the pilot least-squares term.
///
/// With A = I_{DT} (x) X^H, A^H A = I_{DT} (x) (X X^H) and A^H s = vec(X S^H),
/// where X = [x(N-1) ... x(N_p-1)] and S holds the reference symbols of the
/// kept delays. Only X X^H and X S^H are stored.
struct PilotNormalOps {
  EqMode mode = EqMode::Full;
  int T = 0;
  int K = 0;
  CMatrix XXh;  // LN x LN
  CMatrix XSh;  // LN x D*T, transmitter-major columns
  Index pilot_windows = 0;

  [[nodiscard]] int D() const { return delay_count(mode, K); }
  [[nodiscard]] CMatrix AhA() const;
  [[nodiscard]] CVector Ahs() const;
};

/// Index map for the layout change: element j of a transmitter-major vector
/// comes from element perm[j] of the delay-major vector.
std::vector<Index> delay_to_transmitter_permutation(int T, int D, int LN);
CVector to_transmitter_major(const CVector& g, int T, int D, int LN);
CVector to_delay_major(const CVector& g, int T, int D, int LN);
/// Reshapes a transmitter-major vector into bank columns and back.
EqualizerBank bank_from_vector(const CVector& g_tm, EqMode mode, int T, int K, int LN);
CVector bank_to_vector(const EqualizerBank& bank);

/// Cross-relation rows U for one window pair, over the delay-major layout.
/// FULL: T(K-1) rows, row i*T + t is x_a^H in block (i, t) and -x_b^H in
/// block (i+1, t). REDUCED: T rows, x_a^H in (delay 0, t), -x_b^H in (delay K-1, t).
CMatrix mre_constraint_rows(const CVector& x_a, const CVector& x_b, const SystemConfig& cfg,
                            EqMode mode);

/// Window lag of the cross-relation pairs: 1 for FULL, K-1 for REDUCED.
int mre_lag(EqMode mode, int K);

/// R = mean over all valid pairs (x(n), x(n + lag)) of U^H U.
MreQuadratic estimate_R(const ReceivedWindows& rx, const SystemConfig& cfg, EqMode mode);

struct BlindMre {
  CVector g;                 ///< unit-norm smallest eigenvector of R (delay-major)
  double value = 0.0;        ///< its eigenvalue
  Eigen::VectorXd chain_values;  ///< the T smallest eigenvalues of the per-transmitter block
  EqualizerBank bank;        ///< slot t holds the t-th smallest eigenvector chain
};

/// Blind MRE under the unit-norm constraint.
BlindMre blind_mre(const MreQuadratic& R, const SystemConfig& cfg);

PilotNormalOps pilot_normal_ops(const ReceivedWindows& rx, const Frame& frame,
                                const SystemConfig& cfg, EqMode mode);

/// Closed-form semi-blind solution (A^H A / P + lambda * N_R * R) g = A^H s / P,
/// with P pilot windows, N_R cross-relation pairs, and R taken to the
/// transmitter-major layout. lambda = 0 is the pilot least-squares solution.
EqualizerBank sb_mre(const PilotNormalOps& ops, const MreQuadratic& R, double lambda,
                     const SystemConfig& cfg);

/// H (H^H H)^{-1}; throws NumericalError when H is rank deficient.
EqualizerBank zf_equalizer(const StackedChannel& H);
/// (H H^H + sigma2 I)^{-1} H, unit symbol energy. sigma2 == 0 is ZF.
EqualizerBank mmse_equalizer(const StackedChannel& H, double sigma2);

/// Per-transmitter equalizer outputs re-aligned to symbol time: values(t, n)
/// estimates s_t(n) for n in `valid`; other entries are zero.
struct Streams {
  CMatrix values;
  IndexRange valid;
};

/// values(t, n) = g_{t,delay}^H x(n + delay).
Streams apply_bank(const EqualizerBank& bank, const ReceivedWindows& rx, int delay);

}  // namespace sbmre
