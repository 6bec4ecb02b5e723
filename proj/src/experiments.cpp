// SPDX-License-Identifier: Apache-2.0
#include "radcom/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "radcom/awsr_solver.hpp"

namespace radcom::experiments {

std::string_view to_string(ErbseOrder order) {
  return order == ErbseOrder::kRootThenMean ? "root_then_mean" : "mean_then_root";
}

ErbseOrder parse_erbse_order(std::string_view text) {
  if (text == "root_then_mean") return ErbseOrder::kRootThenMean;
  if (text == "mean_then_root") return ErbseOrder::kMeanThenRoot;
  throw std::invalid_argument("unknown ERBSE order '" + std::string(text) +
                              "' (expected root_then_mean or mean_then_root)");
}

void SweepPlan::validate() const {
  if (lambdas.empty()) throw std::invalid_argument("sweep.lambdas: must not be empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw std::invalid_argument("sweep.lambdas: values must be > 0");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      throw std::invalid_argument("sweep.lambdas: values must be strictly increasing");
  }
  if (n_realizations < 1) throw std::invalid_argument("sweep.realizations: must be >= 1");
  if (access_modes.empty()) throw std::invalid_argument("sweep.modes: must not be empty");
  if (csit_modes.empty()) throw std::invalid_argument("sweep.csit_modes: must not be empty");
  if (eval_samples < 1) throw std::invalid_argument("sweep.eval_samples: must be >= 1");
}

Evaluation evaluate_solution(const admm::RadComSolution& solution, const ChannelEstimate& estimate,
                             const SystemConfig& config, const BeampatternSpec& spec,
                             int eval_samples, RngStream& rng) {
  const CMatrix& p = solution.precoder.columns;
  const bool perfect = config.csit_mode == CsitMode::kPerfect ||
                       estimate.error_variances.cwiseAbs().maxCoeff() == 0.0;
  const SaaBatch batch =
      perfect ? SaaBatch{{estimate.h_hat}} : sample_saa_batch(estimate, eval_samples, rng);
  const AverageRates rates = average_rates(p, solution.shares, batch, config.user_weights);

  Evaluation ev;
  ev.delivered = clip_shares(solution.shares, rates.common);
  ev.per_user_ar = ev.delivered.shares + rates.private_per_user;
  for (int k = 0; k < config.n_users; ++k)
    ev.ewsr += config.user_weights[static_cast<std::size_t>(k)] * ev.per_user_ar(k);
  BeampatternSpec scaled = spec;
  scaled.pattern_scale = solution.pattern_scale;
  ev.bse = bse(p, scaled, config.antenna_spacing);
  ev.rbse = std::sqrt(ev.bse);
  const double total = p.squaredNorm();
  ev.private_power_frac = Vector::Zero(config.n_users);
  if (total > 0.0) {
    ev.common_power_frac = p.col(0).squaredNorm() / total;
    for (int k = 0; k < config.n_users; ++k)
      ev.private_power_frac(k) = p.col(k + 1).squaredNorm() / total;
  }
  return ev;
}

namespace {

struct WorkItem {
  CsitMode csit;
  AccessMode access;
  double lambda;
  int realization;
};

RealizationRecord run_item(const WorkItem& item, const SweepPlan& plan, const SystemConfig& base,
                           const BeampatternSpec& spec, const SolverSettings& settings) {
  RealizationRecord rec;
  rec.access = item.access;
  rec.csit = item.csit;
  rec.lambda = item.lambda;
  rec.realization = item.realization;

  SystemConfig cfg = base;
  cfg.access_mode = item.access;
  cfg.csit_mode = item.csit;
  cfg.reg_lambda = item.lambda;
  const auto r = static_cast<std::uint64_t>(item.realization);
  RngStream channel_rng = RngStream::derive(cfg.rng_seed, "channel", r);
  const ChannelEstimate estimate = draw_channel_estimate(cfg, channel_rng);
  try {
    admm::RunOptions opts;
    opts.settings = settings;
    opts.realization = r;
    const admm::RadComSolution sol = admm::run(cfg, estimate, spec, opts);
    rec.converged = sol.converged;
    rec.iterations = sol.iterations;
    rec.max_row_deviation = sol.precoder.max_row_power_deviation(cfg.power_total / cfg.n_tx);
    RngStream eval_rng = RngStream::derive(cfg.rng_seed, "eval", r);
    rec.evaluation = evaluate_solution(sol, estimate, cfg, spec, plan.eval_samples, eval_rng);
  } catch (const admm::SubproblemFailure& e) {
    rec.outcome = e.qos_infeasible() ? Outcome::kInfeasible : Outcome::kFailed;
    rec.message = e.what();
  } catch (const std::exception& e) {
    rec.outcome = Outcome::kFailed;
    rec.message = e.what();
  }
  return rec;
}

}  // namespace

SweepResult run_sweep(const SweepPlan& plan, const SystemConfig& base, const BeampatternSpec& spec,
                      const SolverSettings& settings, int jobs, const Progress& progress) {
  plan.validate();
  base.validate();
  spec.validate();

  std::vector<WorkItem> items;
  for (CsitMode csit : plan.csit_modes)
    for (AccessMode access : plan.access_modes)
      for (double lambda : plan.lambdas)
        for (int r = 0; r < plan.n_realizations; ++r) items.push_back({csit, access, lambda, r});

  SweepResult result;
  result.records.resize(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  int done = 0;
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      result.records[i] = run_item(items[i], plan, base, spec, settings);
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(++done, static_cast<int>(items.size()), result.records[i]);
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  result.points = aggregate(result.records, plan, plan.n_realizations, base.user_weights);
  return result;
}

std::vector<TradeoffPoint> aggregate(const std::vector<RealizationRecord>& records,
                                     const SweepPlan& plan, int n_realizations,
                                     const std::vector<double>& user_weights) {
  const auto k_users = static_cast<Eigen::Index>(user_weights.size());
  std::vector<TradeoffPoint> points;
  for (CsitMode csit : plan.csit_modes) {
    for (AccessMode access : plan.access_modes) {
      for (double lambda : plan.lambdas) {
        TradeoffPoint pt;
        pt.access = access;
        pt.csit = csit;
        pt.lambda = lambda;
        pt.per_user_ar = Vector::Zero(k_users);
        pt.private_power_frac = Vector::Zero(k_users);
        double rbse_sum = 0.0;
        double bse_sum = 0.0;
        for (const RealizationRecord& rec : records) {
          if (rec.csit != csit || rec.access != access || rec.lambda != lambda ||
              rec.realization >= n_realizations)
            continue;
          if (rec.outcome == Outcome::kInfeasible) {
            ++pt.n_infeasible;
            continue;
          }
          if (rec.outcome == Outcome::kFailed) {
            ++pt.n_failed;
            continue;
          }
          ++pt.n_ok;
          const Evaluation& ev = rec.evaluation;
          pt.ewsr += ev.ewsr;
          rbse_sum += ev.rbse;
          bse_sum += ev.bse;
          pt.per_user_ar += ev.per_user_ar;
          pt.common_power_frac += ev.common_power_frac;
          pt.private_power_frac += ev.private_power_frac;
        }
        if (pt.n_ok > 0) {
          const double inv = 1.0 / pt.n_ok;
          pt.ewsr *= inv;
          pt.per_user_ar *= inv;
          pt.common_power_frac *= inv;
          pt.private_power_frac *= inv;
          pt.erbse = plan.erbse_order == ErbseOrder::kRootThenMean ? rbse_sum * inv
                                                                   : std::sqrt(bse_sum * inv);
        } else {
          const double nan = std::nan("");
          pt.ewsr = pt.erbse = pt.common_power_frac = nan;
          pt.per_user_ar.setConstant(nan);
          pt.private_power_frac.setConstant(nan);
        }
        points.push_back(pt);
      }
    }
  }
  return points;
}

void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, AccessMode access,
                        CsitMode csit, int n_users, std::ostream& out) {
  out << "mode,csit_mode,lambda,ewsr_bpshz,erbse";
  for (int k = 1; k <= n_users; ++k) out << ",ar_user_" << k;
  out << ",common_power_frac";
  for (int k = 1; k <= n_users; ++k) out << ",private_power_frac_" << k;
  out << ",n_ok,n_infeasible\n";
  out << std::setprecision(12);
  for (const TradeoffPoint& p : points) {
    if (p.access != access || p.csit != csit) continue;
    out << to_string(p.access) << ',' << to_string(p.csit) << ',' << p.lambda << ',' << p.ewsr
        << ',' << p.erbse;
    for (int k = 0; k < n_users; ++k) out << ',' << p.per_user_ar(k);
    out << ',' << p.common_power_frac;
    for (int k = 0; k < n_users; ++k) out << ',' << p.private_power_frac(k);
    out << ',' << p.n_ok << ',' << p.n_infeasible << '\n';
  }
}

void write_gnuplot(const std::vector<TradeoffPoint>& points, AccessMode access, CsitMode csit,
                   std::ostream& out) {
  out << "# erbse ewsr (" << to_string(access) << ", " << to_string(csit) << " CSIT)\n";
  out << std::setprecision(12);
  for (const TradeoffPoint& p : points)
    if (p.access == access && p.csit == csit) out << p.erbse << ' ' << p.ewsr << '\n';
}

}  // namespace radcom::experiments
