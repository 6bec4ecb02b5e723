// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <limits>
#include <sstream>

#include "radcom/admm.hpp"
#include "radcom/awsr_solver.hpp"
#include "radcom/bse_solver.hpp"
#include "test_util.hpp"

using namespace radcom;

namespace {

admm::AdmmState random_state(std::mt19937_64& gen, int n) {
  admm::AdmmState s;
  s.v.precoder = testutil::random_cvector(gen, n);
  s.u.precoder = testutil::random_cvector(gen, n);
  s.d = testutil::random_cvector(gen, n);
  return s;
}

struct Scenario {
  SystemConfig cfg;
  ChannelEstimate est;
  BeampatternSpec spec;
};

Scenario scenario(int nt, int k, CsitMode csit, double lambda, std::uint64_t r = 0) {
  Scenario s;
  s.cfg = testutil::small_config(nt, k, AccessMode::kRsma, csit);
  s.cfg.reg_lambda = lambda;
  RngStream chan = RngStream::derive(s.cfg.rng_seed, "channel", r);
  s.est = draw_channel_estimate(s.cfg, chan);
  s.spec = directional_beam_pattern(angle_grid(-kPi / 2, kPi / 2, kPi / 180), 0.0, nt, 0.5);
  return s;
}

}  // namespace

TEST_CASE("dual update") {
  std::mt19937_64 gen(51);
  const CVector d = testutil::random_cvector(gen, 6);
  const CVector v = testutil::random_cvector(gen, 6);
  CHECK((admm::dual_update(d, v, v) - d).norm() == 0.0);
  const CVector u = testutil::random_cvector(gen, 6);
  CHECK((admm::dual_update(CVector::Zero(6), v, u) - (v - u)).norm() == 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const admm::AdmmState s = random_state(gen, 12);
    const CVector next = admm::dual_update(s.d, s.v.precoder, s.u.precoder);
    for (int i = 0; i < 12; ++i)
      CHECK(std::abs(next(i) - (s.d(i) + s.v.precoder(i) - s.u.precoder(i))) < 1e-15);
  }
}

TEST_CASE("residuals") {
  std::mt19937_64 gen(52);
  admm::AdmmState prev = random_state(gen, 8);
  admm::AdmmState next = random_state(gen, 8);
  next.v.precoder = next.u.precoder;
  CHECK(admm::residuals(prev, next).primal == 0.0);
  next = random_state(gen, 8);
  next.u.precoder = prev.u.precoder;
  CHECK(admm::residuals(prev, next).dual == 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    prev = random_state(gen, 8);
    next = random_state(gen, 8);
    double r2 = 0.0, q2 = 0.0;
    for (int i = 0; i < 8; ++i) {
      r2 += std::norm(next.v.precoder(i) - next.u.precoder(i));
      q2 += std::norm(next.u.precoder(i) - prev.u.precoder(i));
    }
    const admm::Residuals res = admm::residuals(prev, next);
    CHECK(res.primal == doctest::Approx(std::sqrt(r2)).epsilon(1e-14));
    CHECK(res.dual == doctest::Approx(std::sqrt(q2)).epsilon(1e-14));
  }
}

TEST_CASE("infinite tolerance stops after one iteration") {
  Scenario s = scenario(4, 2, CsitMode::kPartial, 1e-5);
  s.cfg.admm_tolerance = std::numeric_limits<double>::infinity();
  const admm::RadComSolution sol = admm::run(s.cfg, s.est, s.spec);
  CHECK(sol.iterations == 1);
  CHECK(sol.history.size() == 1);
  CHECK(sol.converged);
}

TEST_CASE("communications end matches a decoupled AWSR run") {
  Scenario s = scenario(4, 1, CsitMode::kPerfect, 1e-9);
  s.cfg.qos_threshold = 0.0;
  const admm::RadComSolution sol = admm::run(s.cfg, s.est, s.spec);
  const SaaBatch batch{{s.est.h_hat}};
  const double admm_awsr =
      average_rates(sol.precoder.columns, sol.shares, batch, s.cfg.user_weights).awsr;

  awsr::VUpdateProblem prob;
  prob.config = s.cfg;
  prob.batch = batch;
  prob.prox_weight = 0.0;
  prob.prox_center = CVector::Zero(8);
  prob.power_budget = s.cfg.power_total;
  const awsr::AoResult alone = awsr::ao_solve(
      prob, awsr::warm_start(s.est, s.cfg, AccessMode::kRsma), CommonRateShares::zeros(1));
  CMatrix proj = alone.precoder.columns;
  for (int r = 0; r < 4; ++r) proj.row(r) *= 5.0 / proj.row(r).norm();
  const double oracle_awsr =
      average_rates(proj, admm::refit_shares(proj, batch, s.cfg), batch, s.cfg.user_weights).awsr;
  CHECK(std::abs(admm_awsr - oracle_awsr) <= 0.02 * oracle_awsr);
}

TEST_CASE("radar end matches a radar-only oracle") {
  Scenario s = scenario(4, 2, CsitMode::kPartial, 1e-1);
  s.spec = rectangular_pattern(s.spec.angles, 0.0, deg_to_rad(5.0));
  const admm::RadComSolution sol = admm::run(s.cfg, s.est, s.spec);
  BeampatternSpec own = s.spec;
  own.pattern_scale = sol.pattern_scale;
  const double achieved = bse(sol.precoder.columns, own, 0.5);

  radar::UUpdateProblem pure;
  pure.config = s.cfg;
  pure.spec = s.spec;
  pure.reg_lambda = 1.0;
  pure.prox_weight = 1e-9;
  pure.prox_center = CVector::Zero(12);
  RngStream rng(8);
  const radar::Candidate oracle = radar::pg_oracle(pure, 20, rng);
  CHECK(achieved <= 1.05 * oracle.objective);
}

TEST_CASE("run is deterministic and feasible") {
  const Scenario s = scenario(4, 2, CsitMode::kPartial, 1e-3, 2);
  const admm::RadComSolution a = admm::run(s.cfg, s.est, s.spec);
  const admm::RadComSolution b = admm::run(s.cfg, s.est, s.spec);
  CHECK((a.precoder.columns - b.precoder.columns).norm() == 0.0);
  CHECK(a.iterations == b.iterations);
  CHECK(a.precoder.max_row_power_deviation(25.0) <= 1e-6 * 100.0);
  CHECK(a.history.size() == static_cast<std::size_t>(a.iterations));
}

TEST_CASE("shares refit") {
  const Scenario s = scenario(4, 2, CsitMode::kPerfect, 1e-3);
  const SaaBatch batch{{s.est.h_hat}};
  const CMatrix p = awsr::warm_start(s.est, s.cfg, AccessMode::kRsma, 0.3).columns;
  const CommonRateShares c = admm::refit_shares(p, batch, s.cfg);
  const AverageRates ar = average_rates(p, CommonRateShares::zeros(2), batch, s.cfg.user_weights);
  CHECK(c.total() == doctest::Approx(ar.common));
  for (int k = 0; k < 2; ++k)
    if (ar.private_per_user(k) < s.cfg.qos_threshold)
      CHECK(c.shares(k) >= s.cfg.qos_threshold - ar.private_per_user(k) - 1e-12);
  SystemConfig sdma = s.cfg;
  sdma.access_mode = AccessMode::kSdma;
  CHECK(admm::refit_shares(p, batch, sdma).total() == 0.0);
}

TEST_CASE("residual CSV") {
  std::ostringstream out;
  admm::write_residual_csv({{1, 0.5, 0.25, 3.0, 7.0}}, out);
  CHECK(out.str() == "iteration,primal_residual,dual_residual,awsr_surrogate,bse\n1,0.5,0.25,3,7\n");
}
