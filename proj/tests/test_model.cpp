// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles.hpp"
#include "radcom/model.hpp"
#include "test_util.hpp"

using namespace radcom;
using testutil::random_cmatrix;
using testutil::random_cvector;

TEST_CASE("steering vector known angles") {
  const CVector a0 = steering_vector(0.0, 4, 0.5);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(a0(n) - Complex(1, 0)) < 1e-15);

  const CVector a90 = steering_vector(kPi / 2, 4, 0.5);
  const Complex expect90[] = {1.0, -1.0, 1.0, -1.0};
  for (int n = 0; n < 4; ++n) CHECK(std::abs(a90(n) - expect90[n]) < 1e-12);

  const CVector a30 = steering_vector(kPi / 6, 2, 0.5);
  CHECK(std::abs(a30(0) - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(a30(1) - Complex(0, 1)) < 1e-12);
}

TEST_CASE("beampattern gain of isotropic and matched precoders") {
  const double pt = 100.0;
  const CMatrix iso = std::sqrt(pt / 4) * CMatrix::Identity(4, 4);
  for (double th : {-1.2, -0.3, 0.0, 0.7, 1.5}) CHECK(beampattern_gain(iso, th, 0.5) == doctest::Approx(pt));

  CMatrix beam(4, 1);
  beam.col(0) = std::sqrt(pt / 4) * steering_vector(0.2, 4, 0.5);
  CHECK(beampattern_gain(beam, 0.2, 0.5) == doctest::Approx(400.0).epsilon(1e-12));
}

TEST_CASE("beampattern gain matches the covariance quadratic form") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix p = random_cmatrix(gen, 3 + trial % 3, 1 + trial % 4);
    const double th = ang(gen);
    CHECK(beampattern_gain(p, th, 0.5) ==
          doctest::Approx(oracle::gain(p, th, 0.5)).epsilon(1e-11));
  }
  SteeringGrid grid(angle_grid(-1.0, 1.0, 0.25), 4, 0.5);
  const CMatrix p = random_cmatrix(gen, 4, 3);
  const Vector g = grid.gains(p);
  for (int m = 0; m < grid.size(); ++m)
    CHECK(g(m) == doctest::Approx(oracle::gain(p, -1.0 + 0.25 * m, 0.5)).epsilon(1e-11));
}

TEST_CASE("sinr and rates on hand-built channels") {
  CVector h(2);
  h << 1.0, 0.0;
  CMatrix p = CMatrix::Zero(2, 2);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  StreamRates r = sinr_and_rates(p, h, 0);
  CHECK(r.sinr_common == doctest::Approx(1.0));
  CHECK(r.rate_common == doctest::Approx(1.0));

  p.setZero();
  p(0, 1) = 1.0;
  r = sinr_and_rates(p, h, 0);
  CHECK(r.sinr_private == doctest::Approx(1.0));
  CHECK(r.rate_private == doctest::Approx(1.0));
  CHECK(r.rate_common == 0.0);
}

TEST_CASE("sinr and rates match term-by-term evaluation") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const CMatrix p = random_cmatrix(gen, 4, 3, 3.0);
    const CVector h = random_cvector(gen, 4);
    for (int k = 0; k < 2; ++k) {
      const StreamRates r = sinr_and_rates(p, h, k);
      const oracle::Rates o = oracle::rates(p, h, k);
      CHECK(r.rate_common == doctest::Approx(o.rc).epsilon(1e-12));
      CHECK(r.rate_private == doctest::Approx(o.rp).epsilon(1e-12));
    }
  }
}

TEST_CASE("common rate is the minimum over users") {
  std::mt19937_64 gen(13);
  const CMatrix p = random_cmatrix(gen, 3, 3);
  const CVector h = random_cvector(gen, 3);
  CMatrix same(3, 2);
  same << h, h;
  CHECK(common_rate(p, same) == doctest::Approx(sinr_and_rates(p, h, 0).rate_common));

  CMatrix pc = CMatrix::Zero(2, 3);
  pc(0, 0) = 1.0;
  CMatrix hs = CMatrix::Zero(2, 2);
  hs(0, 0) = std::sqrt(3.0);  // SINR 3, rate 2
  hs(0, 1) = 1.0;             // SINR 1, rate 1
  CHECK(sinr_and_rates(pc, hs.col(0), 0).rate_common == doctest::Approx(2.0));
  CHECK(common_rate(pc, hs) == doctest::Approx(1.0));

  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix q = random_cmatrix(gen, 4, 4, 2.0);
    const CMatrix hh = random_cmatrix(gen, 4, 3);
    double best = 1e300;
    for (int k = 0; k < 3; ++k) best = std::min(best, oracle::rates(q, hh.col(k), k).rc);
    CHECK(common_rate(q, hh) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("SAA batch statistics and determinism") {
  std::mt19937_64 gen(14);
  ChannelEstimate est{random_cmatrix(gen, 4, 2), Vector::Zero(2)};
  RngStream rng(5);
  const SaaBatch exact = sample_saa_batch(est, 7, rng);
  REQUIRE(exact.size() == 7);
  for (const CMatrix& h : exact.samples) CHECK((h - est.h_hat).norm() == 0.0);

  est.error_variances = Vector::Constant(2, 0.25);
  RngStream r1 = RngStream::derive(9, "saa", 3);
  const SaaBatch big = sample_saa_batch(est, 10000, r1);
  double sum = 0.0;
  double count = 0.0;
  for (const CMatrix& h : big.samples) {
    sum += (h - est.h_hat).cwiseAbs2().sum();
    count += static_cast<double>(h.size());
  }
  CHECK(std::abs(sum / count - 0.25) <= 0.05 * 0.25);

  RngStream a = RngStream::derive(9, "saa", 3);
  RngStream b = RngStream::derive(9, "saa", 3);
  const SaaBatch ba = sample_saa_batch(est, 5, a);
  const SaaBatch bb = sample_saa_batch(est, 5, b);
  for (int m = 0; m < 5; ++m) CHECK((ba.samples[m] - bb.samples[m]).norm() == 0.0);
}

TEST_CASE("average rates") {
  std::mt19937_64 gen(15);
  const std::vector<double> w = {0.5, 0.5};
  const CMatrix p = random_cmatrix(gen, 4, 3, 4.0);
  const CMatrix h0 = random_cmatrix(gen, 4, 2);
  const CMatrix h1 = random_cmatrix(gen, 4, 2);

  SUBCASE("single exact sample equals instantaneous rates") {
    const AverageRates ar = average_rates(p, CommonRateShares::zeros(2), SaaBatch{{h0}}, w);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(ar.private_per_user(k) - sinr_and_rates(p, h0.col(k), k).rate_private) <= 1e-12);
      CHECK(std::abs(ar.common_per_user(k) - sinr_and_rates(p, h0.col(k), k).rate_common) <= 1e-12);
    }
  }
  SUBCASE("two samples give the arithmetic mean") {
    const AverageRates ar = average_rates(p, CommonRateShares::zeros(2), SaaBatch{{h0, h1}}, w);
    for (int k = 0; k < 2; ++k) {
      const double mean = 0.5 * (sinr_and_rates(p, h0.col(k), k).rate_private +
                                 sinr_and_rates(p, h1.col(k), k).rate_private);
      CHECK(ar.private_per_user(k) == doctest::Approx(mean).epsilon(1e-13));
    }
  }
  SUBCASE("brute-force averaging loop") {
    std::vector<CMatrix> samples;
    for (int m = 0; m < 20; ++m) samples.push_back(random_cmatrix(gen, 4, 2));
    CommonRateShares c{Vector::Constant(2, 10.0)};
    const AverageRates ar = average_rates(p, c, SaaBatch{samples}, w);
    Vector rc, rp;
    oracle::average(p, samples, rc, rp);
    for (int k = 0; k < 2; ++k) {
      CHECK(ar.common_per_user(k) == doctest::Approx(rc(k)).epsilon(1e-12));
      CHECK(ar.private_per_user(k) == doctest::Approx(rp(k)).epsilon(1e-12));
    }
    const double common = std::min(rc(0), rc(1));
    CHECK(ar.common == doctest::Approx(common));
    // Shares of 10 each are clipped to the common rate, split evenly.
    CHECK(ar.awsr == doctest::Approx(0.5 * (common + rp(0) + rp(1))).epsilon(1e-12));
  }
}

TEST_CASE("beampattern squared error") {
  const double pt = 100.0;
  BeampatternSpec spec;
  spec.angles = angle_grid(-kPi / 2, kPi / 2, kPi / 180);
  spec.desired = Vector::Ones(spec.angles.size());
  spec.pattern_scale = pt;
  const CMatrix iso = std::sqrt(pt / 4) * CMatrix::Identity(4, 4);
  CHECK(bse(iso, spec, 0.5) == doctest::Approx(0.0).epsilon(1e-18));

  std::mt19937_64 gen(16);
  const CMatrix p = random_cmatrix(gen, 4, 3, 3.0);
  spec.desired.setZero();
  double sq = 0.0;
  for (int m = 0; m < spec.angles.size(); ++m) sq += std::pow(oracle::gain(p, spec.angles(m), 0.5), 2);
  CHECK(bse(p, spec, 0.5) > 0.0);
  CHECK(bse(p, spec, 0.5) == doctest::Approx(sq).epsilon(1e-11));

  for (int trial = 0; trial < 20; ++trial) {
    BeampatternSpec s2 = directional_beam_pattern(angle_grid(-1.2, 1.2, 0.1), 0.3 * (trial % 3), 4, 0.5);
    s2.pattern_scale = 50.0 + trial;
    const CMatrix q = random_cmatrix(gen, 4, 3, 2.0);
    CHECK(bse(q, s2, 0.5) ==
          doctest::Approx(oracle::bse(q, s2.angles, s2.desired, s2.pattern_scale, 0.5)).epsilon(1e-11));
  }
}

TEST_CASE("feasible precoders carry the total power") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix p = testutil::feasible_precoder(gen, 4, 3, 100.0);
    CHECK(std::abs((p * p.adjoint()).trace().real() - 100.0) <= 1e-6 * 100.0);
    CHECK(Precoder(p).max_row_power_deviation(25.0) <= 1e-12);
  }
}

TEST_CASE("channel estimate draws") {
  SystemConfig cfg = testutil::small_config(4, 2);
  RngStream a = RngStream::derive(3, "channel", 0);
  const ChannelEstimate partial = draw_channel_estimate(cfg, a);
  CHECK(partial.error_variances(0) == doctest::Approx(std::pow(100.0, -0.6)));
  cfg.csit_mode = CsitMode::kPerfect;
  RngStream b = RngStream::derive(3, "channel", 0);
  const ChannelEstimate perfect = draw_channel_estimate(cfg, b);
  CHECK(perfect.error_variances.norm() == 0.0);
  // Same normals, different estimate variance.
  const double ratio = std::sqrt(1.0 - partial.error_variances(0));
  CHECK((partial.h_hat - ratio * perfect.h_hat).norm() < 1e-12);
}

TEST_CASE("config validation names the field") {
  SystemConfig cfg;
  cfg.user_weights = {1.0};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("system.user_weights"),
                       std::invalid_argument);
}
