// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "radcom/config.hpp"
#include "radcom/model.hpp"

namespace radcom::admm {

/// One ADMM variable block: (alpha, c, p).
struct Block {
  double pattern_scale = 1.0;
  CommonRateShares shares;
  CVector precoder;  // stacked Nt(K+1)
};

struct ResidualRecord {
  int iteration = 0;
  double primal = 0.0;          // ||p_v - p_u||
  double dual = 0.0;            // ||p_u^{t+1} - p_u^t||
  double awsr_surrogate = 0.0;  // AWSR of the v block on the SAA batch
  double bse = 0.0;             // BSE of the u block with its own alpha
};

struct AdmmState {
  Block v;
  Block u;
  CVector d;  // scaled dual of the precoder consensus
  int iteration = 0;
  std::vector<ResidualRecord> history;
};

/// d + (p_v - p_u).
CVector dual_update(const CVector& d, const CVector& v_precoder, const CVector& u_precoder);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

/// r = p_v - p_u of `next`, q = p_u(next) - p_u(prev); no rho factor on q.
Residuals residuals(const AdmmState& prev, const AdmmState& next);

struct RadComSolution {
  Precoder precoder;  // from the u block
  CommonRateShares shares;
  double pattern_scale = 1.0;
  bool converged = false;
  int iterations = 0;
  std::vector<ResidualRecord> history;
};

/// A subproblem failed; the realization is abandoned.
class SubproblemFailure : public std::runtime_error {
 public:
  SubproblemFailure(const std::string& what, int iteration, bool qos_infeasible)
      : std::runtime_error(what), iteration_(iteration), qos_infeasible_(qos_infeasible) {}
  int iteration() const { return iteration_; }
  bool qos_infeasible() const { return qos_infeasible_; }

 private:
  int iteration_;
  bool qos_infeasible_;
};

struct RunOptions {
  SolverSettings settings;
  /// Index of the channel realization; selects the SAA and radar streams.
  std::uint64_t realization = 0;
  /// Replaces the drawn SAA batch when set.
  std::optional<SaaBatch> batch;
};

/// SAA batch of one realization: Ĥ alone under perfect CSIT, otherwise
/// `saa_samples` conditional draws from the ("saa", realization) stream.
SaaBatch realization_batch(const SystemConfig& config, const ChannelEstimate& estimate,
                           std::uint64_t realization);

/// Shares on the batch for a fixed precoder: QoS deficits first, the rest of
/// the common rate to the largest weight (lowest index on ties), scaled down
/// when the deficits exceed the common rate. Zero in SDMA mode.
CommonRateShares refit_shares(const CMatrix& precoder, const SaaBatch& batch,
                              const SystemConfig& config);

RadComSolution run(const SystemConfig& config, const ChannelEstimate& estimate,
                   const BeampatternSpec& spec, const RunOptions& options = {});

/// CSV with header iteration,primal_residual,dual_residual,awsr_surrogate,bse.
void write_residual_csv(const std::vector<ResidualRecord>& history, std::ostream& out);

}  // namespace radcom::admm
