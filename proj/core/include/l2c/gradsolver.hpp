#pragma once

#include "l2c/admm.hpp"

#include <vector>

namespace l2c {

/// Matrix-valued LQR of one agent: min sum 1/2 [X;U]^T H [X;U] + tr(H_xth^T X) + tr(H_uth^T U)
/// subject to X_{k+1} = fx X_k + fu U_k + fth, X_0 = 0.
struct AuxLqrData {
  MatrixSeq Hxx;      // N+1 (last entry is the terminal block)
  MatrixSeq Hxu;      // N
  MatrixSeq Huu;      // N
  MatrixSeq Hxtheta;  // N+1, each n x p
  MatrixSeq Hutheta;  // N,   each m x p
  MatrixSeq fx, fu;   // N
  MatrixSeq ftheta;   // N, each n x p (may be empty matrices meaning zero)

  int horizon() const { return static_cast<int>(Huu.size()); }
  int cols() const { return Hxtheta.empty() ? 0 : static_cast<int>(Hxtheta.front().cols()); }
  void validate() const;
};

struct AuxLqrSolution {
  MatrixSeq X;  // N+1
  MatrixSeq U;  // N
};

/// Hessian blocks recovered from a DDP workspace: H = Q - f^T V_xx' f.
void hessians_from_workspace(const DdpWorkspace& ws, AuxLqrData& aux);

/// Reuse route: V_xtheta recursion only; V_xx, K and Quu^-1 come from the workspace.
AuxLqrSolution aux_lqr_reuse(const AuxLqrData& aux, const DdpWorkspace& ws);

/// Costate (PMP) recursion, independent of the DDP workspace.
AuxLqrSolution aux_lqr_pmp_oracle(const AuxLqrData& aux);

struct AugmentedOracleStats {
  int vthth_blocks = 0;  // number of p x p V_thth blocks formed
  int vthth_dim = 0;
};
/// Riccati recursion on the augmented state [x; theta], including V_thth.
AuxLqrSolution aux_lqr_augmented_oracle(const AuxLqrData& aux, AugmentedOracleStats* stats = nullptr);

/// Eigenvalue shift: L + (eps - lambda_min) I when lambda_min(L) < eps. A negative eps disables it.
Matrix regularize_curvature(const Matrix& L, double eps_reg, double* lambda_min = nullptr);

/// Stacked copy gradients = -(L_reg + blockdiag(rho))^{-1} rhs.
Matrix aux_static_qp(const Matrix& L, const Vector& prox_weight, const Matrix& rhs, double eps_reg);

struct AgentGrad {
  MatrixSeq X, U;          // primal gradients
  MatrixSeq Xc, Uc;        // copy gradients
  MatrixSeq dlambda, dxi;  // dual gradients
};

struct GradIterate {
  int index = 0;
  std::vector<AgentGrad> agents;
  MatrixSeq aux;  // per stage
};

struct GradOptions {
  double eps_reg = 1e-6;
  int threads = 1;
  bool keep_history = true;
};

struct GradResult {
  GradIterate final;
  std::vector<GradIterate> history;
};

/// Per-agent Subsystem-1 data for forward iteration t (0-based), given the previous copy/dual gradients.
AuxLqrData subsystem1_data(const Problem& problem, const HyperParams& hp, const AdmmState& prev,
                           const AgentIterate& it, int agent, const AgentGrad* prev_grad);

/// Subsystem 3: dual-gradient ascent. next must already hold X, U, Xc, Uc; rho_col < 0
/// when the penalty is not part of theta.
void dual_grad_update(const AgentIterate& fwd, int rho_col, const AgentGrad& prev, AgentGrad& next);

/// Full gradient recursion over the stored forward iterates (a_max = forward.iterates.size()).
GradResult gradsolver_run(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                          const GradOptions& opts = {});

/// Zero-initialized gradient iterate.
GradIterate zero_grad_iterate(const Problem& problem, int p);

// Oracles ------------------------------------------------------------------

struct CentralizedQpResult {
  GradIterate grads;  // X, U, Xc, Uc filled
  double hessian_min_eig = 0.0;
  int kkt_dim = 0;
};

/// Dense KKT solve of the centralized matrix-valued QP at the last forward iterate.
CentralizedQpResult centralized_qp_oracle(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                                          const GradOptions& opts = {});

/// Smallest eigenvalue of the centralized QP Hessian (block-wise) at the last forward iterate.
double centralized_qp_min_eig(const Problem& problem, const HyperParams& hp, const AdmmResult& forward,
                              const GradOptions& opts = {});

/// Central differences of the whole forward pipeline, h_j = h_rel * max(1, |theta_j|).
GradIterate pipeline_finite_difference(const Problem& problem, const HyperParams& hp, int a_max,
                                       const AdmmOptions& opts, double h_rel = 1e-5,
                                       const std::vector<int>& columns = {});

/// (1/N) sum_k |A_k - B_k|_F / |A_k|_F over k = 1..N (0/0 counts as 0).
double mean_step_relative_error(const MatrixSeq& A, const MatrixSeq& B);

/// |A - B|_F / max(|A|_F, tiny) over a stacked sequence.
double relative_frobenius(const MatrixSeq& A, const MatrixSeq& B);

struct TruncationLevel {
  int a_tc = 0;
  std::vector<double> dX;       // per step k, aggregated over agents
  std::vector<double> cum_dev;  // sum_{t<k} |delta tau_t|
  std::vector<double> ratio;    // dX / cum_dev (0 when both vanish)
  double max_ratio = 0.0;
  double deviation = 0.0;       // |X^{tc} - X^{fp}| over all k and agents
};

struct TruncationReport {
  int a_fp = 0;
  std::vector<TruncationLevel> levels;
  double median_max_ratio = 0.0;
  double max_max_ratio = 0.0;
  bool bounded = false;    // max <= 10 x median
  bool monotone = false;   // deviation non-increasing in a_tc
};

TruncationReport truncation_error_check(const Problem& problem, const HyperParams& hp,
                                        const std::vector<int>& a_tc_levels, int a_fp,
                                        const AdmmOptions& opts, const GradOptions& gopts = {});

}  // namespace l2c
