// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "radcom/config.hpp"
#include "radcom/conic.hpp"
#include "radcom/model.hpp"

namespace radcom::awsr {

/// MMSE equalizers and weights, indexed [sample][user]. The common entries
/// are empty in SDMA mode.
struct WmmseState {
  std::vector<std::vector<Complex>> g_common;
  std::vector<std::vector<Complex>> g_private;
  std::vector<std::vector<double>> w_common;
  std::vector<std::vector<double>> w_private;
  std::vector<std::vector<double>> mse_common;   // epsilon at the MMSE point
  std::vector<std::vector<double>> mse_private;

  bool has_common() const { return !g_common.empty(); }
};

WmmseState mmse_step(const CMatrix& precoder, const SaaBatch& batch, AccessMode mode);

/// Augmented WMSE in bits, (w eps - ln w - 1) / ln 2 + 1. Equals 1 - log2(1/eps)
/// at w = 1/eps and is minimized over w there, so 1 - xi never exceeds the
/// rate for any equalizer and weight.
double augmented_wmse(double weight, double mse);

struct VUpdateProblem {
  CVector prox_center;       // stacked Nt(K+1)
  double prox_weight = 1.0;  // rho; 0 only together with power_budget
  SaaBatch batch;
  SystemConfig config;
  /// Optional sum-power bound ||P||_F^2 <= budget, used when the v-update
  /// is solved on its own rather than inside ADMM.
  std::optional<double> power_budget;

  void validate() const;
};

/// Conic program of one AO step plus the bookkeeping to read it back.
struct PrecoderSubproblem {
  conic::ConicProblem conic;
  std::vector<int> streams;  // active precoder columns
  int n_tx = 0;
  int n_users = 0;
  int share_offset = -1;     // -1 when shares are absent (SDMA)
  /// Constant dropped from the conic objective; conic objective + constant
  /// is the surrogate value.
  double objective_constant = 0.0;

  Precoder precoder(const Vector& x) const;
  CommonRateShares shares(const Vector& x) const;
};

PrecoderSubproblem build_precoder_subproblem(const WmmseState& state,
                                             const VUpdateProblem& problem);

/// -sum_k mu_k (C_k + Rbar_k) + rho/2 ||vec P - center||^2 on the batch, with
/// shares taken as given (callers pass shares that satisfy decodability).
double surrogate_objective(const CMatrix& precoder, const CommonRateShares& shares,
                           const VUpdateProblem& problem);

/// QoS constraints cannot be met by the conic step.
class QosInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AoResult {
  Precoder precoder;
  CommonRateShares shares;
  std::vector<double> objective_trace;  // minimization form, non-increasing
  int iterations = 0;
  bool converged = false;
  /// Increase of the conic step that was rejected at a stationary point, 0
  /// when every step was accepted.
  double rejected_increase = 0.0;
};

/// Alternates mmse_step and the conic precoder step. Throws QosInfeasible when
/// the conic step is infeasible and conic::ConicFailure on any other solver
/// failure before a first feasible iterate exists.
AoResult ao_solve(const VUpdateProblem& problem, const Precoder& init,
                  const CommonRateShares& shares_init, const SolverSettings& settings = {});

/// Common column along the principal eigenvector of sum_k h_k h_k^H with
/// `common_fraction` of the power (RSMA only), private columns from
/// regularized zero forcing with the remaining power, then every row rescaled
/// to Pt/Nt.
Precoder warm_start(const ChannelEstimate& estimate, const SystemConfig& config,
                    AccessMode mode, double common_fraction = 0.2);

}  // namespace radcom::awsr
