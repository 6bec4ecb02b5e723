// SPDX-License-Identifier: Apache-2.0
#include "radcom/admm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "radcom/awsr_solver.hpp"
#include "radcom/bse_solver.hpp"
#include "radcom/conic.hpp"

namespace radcom::admm {

CVector dual_update(const CVector& d, const CVector& v_precoder, const CVector& u_precoder) {
  return d + (v_precoder - u_precoder);
}

Residuals residuals(const AdmmState& prev, const AdmmState& next) {
  return {(next.v.precoder - next.u.precoder).norm(),
          (next.u.precoder - prev.u.precoder).norm()};
}

SaaBatch realization_batch(const SystemConfig& config, const ChannelEstimate& estimate,
                           std::uint64_t realization) {
  if (config.csit_mode == CsitMode::kPerfect) return SaaBatch{{estimate.h_hat}};
  RngStream rng = RngStream::derive(config.rng_seed, "saa", realization);
  return sample_saa_batch(estimate, config.saa_samples, rng);
}

CommonRateShares refit_shares(const CMatrix& precoder, const SaaBatch& batch,
                              const SystemConfig& config) {
  const int k_users = config.n_users;
  CommonRateShares out = CommonRateShares::zeros(k_users);
  if (config.access_mode == AccessMode::kSdma) return out;
  const AverageRates rates = average_rates(precoder, out, batch, config.user_weights);
  const double budget = std::max(rates.common, 0.0);
  for (int k = 0; k < k_users; ++k)
    out.shares(k) = std::max(0.0, config.qos_threshold - rates.private_per_user(k));
  if (out.total() > budget) return clip_shares(out, budget);
  int best = 0;
  for (int k = 1; k < k_users; ++k)
    if (config.user_weights[static_cast<std::size_t>(k)] >
        config.user_weights[static_cast<std::size_t>(best)])
      best = k;
  out.shares(best) += budget - out.total();
  return out;
}

RadComSolution run(const SystemConfig& config, const ChannelEstimate& estimate,
                   const BeampatternSpec& spec, const RunOptions& options) {
  config.validate();
  spec.validate();
  estimate.validate(config.channel_variances);
  if (estimate.n_tx() != config.n_tx || estimate.n_users() != config.n_users)
    throw std::invalid_argument("admm: channel estimate does not match the configuration");

  const SaaBatch batch =
      options.batch ? *options.batch : realization_batch(config, estimate, options.realization);
  RngStream radar_rng = RngStream::derive(config.rng_seed, "radar", options.realization);
  const double rho = config.admm_penalty;
  const double nu = config.admm_tolerance;

  AdmmState state;
  state.v.precoder = awsr::warm_start(estimate, config, config.access_mode,
                                      options.settings.warm_start_common_fraction)
                         .stacked();
  state.v.shares = CommonRateShares::zeros(config.n_users);
  state.v.pattern_scale = 1.0;
  state.u = state.v;
  state.d = CVector::Zero(state.v.precoder.size());

  radar::UUpdateProblem up;
  up.prox_weight = rho;
  up.spec = spec;
  up.reg_lambda = config.reg_lambda;
  up.config = config;

  awsr::VUpdateProblem vp;
  vp.prox_weight = rho;
  vp.batch = batch;
  vp.config = config;

  RadComSolution sol;
  for (int t = 1; t <= config.max_admm_iters; ++t) {
    const AdmmState prev = state;
    state.iteration = t;

    vp.prox_center = state.u.precoder - state.d;
    try {
      const awsr::AoResult ao =
          awsr::ao_solve(vp, Precoder::from_stacked(state.v.precoder, config.n_tx),
                         state.v.shares, options.settings);
      state.v.precoder = ao.precoder.stacked();
      state.v.shares = ao.shares;
    } catch (const awsr::QosInfeasible& e) {
      throw SubproblemFailure(std::string(e.what()) + " at ADMM iteration " + std::to_string(t),
                              t, true);
    } catch (const conic::ConicFailure& e) {
      throw SubproblemFailure(std::string(e.what()) + " at ADMM iteration " + std::to_string(t),
                              t, false);
    }

    up.prox_center = state.v.precoder + state.d;
    try {
      const radar::Candidate cand = radar::solve(up, radar_rng, options.settings);
      state.u.precoder = cand.u;
      state.u.pattern_scale = cand.alpha;
    } catch (const conic::ConicFailure& e) {
      throw SubproblemFailure(std::string(e.what()) + " at ADMM iteration " + std::to_string(t),
                              t, false);
    }
    state.u.shares = state.v.shares;

    state.d = dual_update(state.d, state.v.precoder, state.u.precoder);
    const Residuals res = residuals(prev, state);

    ResidualRecord rec;
    rec.iteration = t;
    rec.primal = res.primal;
    rec.dual = res.dual;
    const CMatrix pv = Precoder::from_stacked(state.v.precoder, config.n_tx).columns;
    rec.awsr_surrogate = average_rates(pv, state.v.shares, batch, config.user_weights).awsr;
    BeampatternSpec scaled = spec;
    scaled.pattern_scale = state.u.pattern_scale;
    rec.bse = bse(Precoder::from_stacked(state.u.precoder, config.n_tx).columns, scaled,
                  config.antenna_spacing);
    state.history.push_back(rec);

    sol.iterations = t;
    if (res.primal <= nu && res.dual <= nu) {
      sol.converged = true;
      break;
    }
  }

  sol.precoder = Precoder::from_stacked(state.u.precoder, config.n_tx);
  const SteeringGrid grid(spec.angles, config.n_tx, config.antenna_spacing);
  sol.pattern_scale = radar::optimal_pattern_scale(grid.gains(sol.precoder.columns), spec.desired);
  sol.shares = refit_shares(sol.precoder.columns, batch, config);
  sol.history = std::move(state.history);
  return sol;
}

void write_residual_csv(const std::vector<ResidualRecord>& history, std::ostream& out) {
  out << "iteration,primal_residual,dual_residual,awsr_surrogate,bse\n";
  out << std::setprecision(17);
  for (const ResidualRecord& r : history)
    out << r.iteration << ',' << r.primal << ',' << r.dual << ',' << r.awsr_surrogate << ','
        << r.bse << '\n';
}

}  // namespace radcom::admm
