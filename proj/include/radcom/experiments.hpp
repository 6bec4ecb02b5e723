// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "radcom/admm.hpp"
#include "radcom/config.hpp"
#include "radcom/model.hpp"

namespace radcom::experiments {

enum class ErbseOrder { kRootThenMean, kMeanThenRoot };
std::string_view to_string(ErbseOrder order);
ErbseOrder parse_erbse_order(std::string_view text);

struct SweepPlan {
  std::vector<double> lambdas = {1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  int n_realizations = 20;
  std::vector<AccessMode> access_modes = {AccessMode::kRsma, AccessMode::kSdma};
  std::vector<CsitMode> csit_modes = {CsitMode::kPartial};
  int eval_samples = 1000;
  ErbseOrder erbse_order = ErbseOrder::kRootThenMean;

  void validate() const;
};

struct Evaluation {
  Vector per_user_ar;        // C_k + Rbar_k with delivered shares
  CommonRateShares delivered;
  double ewsr = 0.0;         // sum_k mu_k per_user_ar_k
  double bse = 0.0;
  double rbse = 0.0;
  double common_power_frac = 0.0;
  Vector private_power_frac;
};

/// Rates on `eval_samples` fresh conditional draws (Ĥ alone under perfect
/// CSIT), shares clipped to the estimated common rate, RBSE with the
/// solution's own pattern scale.
Evaluation evaluate_solution(const admm::RadComSolution& solution, const ChannelEstimate& estimate,
                             const SystemConfig& config, const BeampatternSpec& spec,
                             int eval_samples, RngStream& rng);

enum class Outcome { kOk, kInfeasible, kFailed };

struct RealizationRecord {
  AccessMode access = AccessMode::kRsma;
  CsitMode csit = CsitMode::kPartial;
  double lambda = 0.0;
  int realization = 0;
  Outcome outcome = Outcome::kOk;
  bool converged = false;
  int iterations = 0;
  double max_row_deviation = 0.0;
  Evaluation evaluation;
  std::string message;  // failure text
};

struct TradeoffPoint {
  AccessMode access = AccessMode::kRsma;
  CsitMode csit = CsitMode::kPartial;
  double lambda = 0.0;
  double ewsr = 0.0;
  double erbse = 0.0;
  Vector per_user_ar;
  double common_power_frac = 0.0;
  Vector private_power_frac;
  int n_ok = 0;
  int n_infeasible = 0;
  int n_failed = 0;
};

struct SweepResult {
  std::vector<RealizationRecord> records;  // ordered (csit, access, lambda, realization)
  std::vector<TradeoffPoint> points;       // ordered (csit, access, lambda)
};

/// Called after every finished work item with (done, total, record).
using Progress = std::function<void(int, int, const RealizationRecord&)>;

/// Runs every (csit, access, lambda, realization) item on up to `jobs`
/// threads. Realization r uses the ("channel", r) stream for Ĥ in every mode,
/// so modes and lambdas see the same channels.
SweepResult run_sweep(const SweepPlan& plan, const SystemConfig& base, const BeampatternSpec& spec,
                      const SolverSettings& settings = {}, int jobs = 1,
                      const Progress& progress = {});

/// Aggregates the records of realizations [0, n_realizations) into points.
std::vector<TradeoffPoint> aggregate(const std::vector<RealizationRecord>& records,
                                     const SweepPlan& plan, int n_realizations,
                                     const std::vector<double>& user_weights);

/// Trade-off CSV of the points with the given access/csit mode.
void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, AccessMode access,
                        CsitMode csit, int n_users, std::ostream& out);
/// Two columns "erbse ewsr" for plotting.
void write_gnuplot(const std::vector<TradeoffPoint>& points, AccessMode access, CsitMode csit,
                   std::ostream& out);

}  // namespace radcom::experiments
