// SPDX-License-Identifier: Apache-2.0
#include "radcom/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace radcom {

Precoder Precoder::zeros(int n_tx, int n_users) {
  return Precoder(CMatrix::Zero(n_tx, n_users + 1));
}

Precoder Precoder::from_stacked(const CVector& stacked, int n_tx) {
  if (n_tx < 1 || stacked.size() % n_tx != 0)
    throw std::invalid_argument("stacked precoder length is not a multiple of n_tx");
  const auto cols = stacked.size() / n_tx;
  return Precoder(Eigen::Map<const CMatrix>(stacked.data(), n_tx, cols));
}

CVector Precoder::stacked() const {
  return Eigen::Map<const CVector>(columns.data(), columns.size());
}

double Precoder::max_row_power_deviation(double target) const {
  return (row_powers().array() - target).abs().maxCoeff();
}

void ChannelEstimate::validate(const std::vector<double>& channel_variances) const {
  if (error_variances.size() != h_hat.cols())
    throw std::invalid_argument("channel estimate: one error variance per user required");
  if (static_cast<Eigen::Index>(channel_variances.size()) != h_hat.cols())
    throw std::invalid_argument("channel estimate: channel variance count mismatch");
  for (Eigen::Index k = 0; k < h_hat.cols(); ++k) {
    if (error_variances(k) < 0.0 ||
        error_variances(k) > channel_variances[static_cast<std::size_t>(k)])
      throw std::invalid_argument("channel estimate: error variance of user " +
                                  std::to_string(k) + " outside [0, sigma_k^2]");
  }
}

ChannelEstimate draw_channel_estimate(const SystemConfig& config, RngStream& rng) {
  ChannelEstimate est;
  est.error_variances = config.error_variances();
  est.h_hat = rng.complex_normal_matrix(config.n_tx, config.n_users);
  est.validate(config.channel_variances);
  for (int k = 0; k < config.n_users; ++k) {
    const double var = config.channel_variances[static_cast<std::size_t>(k)] -
                       est.error_variances(k);
    est.h_hat.col(k) *= std::sqrt(var);
  }
  return est;
}

SaaBatch sample_saa_batch(const ChannelEstimate& estimate, int m_prime, RngStream& rng) {
  if (m_prime < 1) throw std::invalid_argument("SAA sample count must be >= 1");
  SaaBatch batch;
  batch.samples.reserve(static_cast<std::size_t>(m_prime));
  const auto nt = estimate.h_hat.rows();
  const auto k = estimate.h_hat.cols();
  for (int m = 0; m < m_prime; ++m) {
    CMatrix sample = estimate.h_hat;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double var = estimate.error_variances(j);
      for (Eigen::Index i = 0; i < nt; ++i) {
        // Always consume the draws so streams stay aligned across CSIT modes.
        const Complex e = rng.complex_normal(1.0);
        if (var > 0.0) sample(i, j) += std::sqrt(var) * e;
      }
    }
    batch.samples.push_back(std::move(sample));
  }
  return batch;
}

void BeampatternSpec::validate() const {
  if (angles.size() == 0) throw std::invalid_argument("beampattern: empty angle grid");
  if (desired.size() != angles.size())
    throw std::invalid_argument("beampattern: desired pattern length differs from grid");
  for (Eigen::Index m = 0; m < angles.size(); ++m) {
    if (angles(m) < -kPi / 2 - 1e-12 || angles(m) > kPi / 2 + 1e-12)
      throw std::invalid_argument("beampattern: angle outside [-90, 90] degrees");
    if (m > 0 && !(angles(m) > angles(m - 1)))
      throw std::invalid_argument("beampattern: angles must be strictly increasing");
    if (!(desired(m) >= 0.0))
      throw std::invalid_argument("beampattern: desired pattern must be nonnegative");
  }
  if (!(desired.maxCoeff() > 0.0))
    throw std::invalid_argument("beampattern: desired pattern is identically zero");
  if (!(pattern_scale > 0.0))
    throw std::invalid_argument("beampattern: pattern_scale must be > 0");
}

Vector angle_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("angle grid: bad range");
  const auto n = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = lo + static_cast<double>(i) * step;
  return out;
}

BeampatternSpec directional_beam_pattern(const Vector& angles, double target,
                                         int n_tx, double spacing) {
  const CVector a0 = steering_vector(target, n_tx, spacing);
  BeampatternSpec spec;
  spec.angles = angles;
  spec.desired.resize(angles.size());
  const double peak = static_cast<double>(n_tx) * n_tx;
  for (Eigen::Index m = 0; m < angles.size(); ++m) {
    const Complex c = steering_vector(angles(m), n_tx, spacing).dot(a0);
    spec.desired(m) = std::norm(c) / peak;
  }
  return spec;
}

BeampatternSpec rectangular_pattern(const Vector& angles, double target,
                                    double half_width) {
  BeampatternSpec spec;
  spec.angles = angles;
  spec.desired.resize(angles.size());
  for (Eigen::Index m = 0; m < angles.size(); ++m)
    spec.desired(m) = std::abs(angles(m) - target) <= half_width + 1e-12 ? 1.0 : 0.0;
  return spec;
}

CVector steering_vector(double theta, int n_tx, double spacing) {
  CVector a(n_tx);
  const double phase = 2.0 * kPi * spacing * std::sin(theta);
  for (int n = 0; n < n_tx; ++n) a(n) = std::polar(1.0, phase * n);
  return a;
}

SteeringGrid::SteeringGrid(const Vector& angles, int n_tx, double spacing)
    : steering_(n_tx, angles.size()) {
  for (Eigen::Index m = 0; m < angles.size(); ++m)
    steering_.col(m) = steering_vector(angles(m), n_tx, spacing);
}

Vector SteeringGrid::gains(const CMatrix& precoder) const {
  return (steering_.adjoint() * precoder).rowwise().squaredNorm();
}

double beampattern_gain(const CMatrix& precoder, double theta, double spacing) {
  const CVector a = steering_vector(theta, static_cast<int>(precoder.rows()), spacing);
  return (a.adjoint() * precoder).squaredNorm();
}

double bse_from_gains(const Vector& gains, const Vector& desired, double pattern_scale) {
  return (pattern_scale * desired - gains).squaredNorm();
}

double bse(const CMatrix& precoder, const BeampatternSpec& spec, double spacing) {
  const SteeringGrid grid(spec.angles, static_cast<int>(precoder.rows()), spacing);
  return bse_from_gains(grid.gains(precoder), spec.desired, spec.pattern_scale);
}

namespace {

// |h^H p_j|^2 for every column j.
Eigen::RowVectorXd stream_powers(const CMatrix& precoder, const CVector& channel) {
  return (channel.adjoint() * precoder).cwiseAbs2();
}

StreamRates rates_from_powers(const Eigen::RowVectorXd& pw, int user) {
  const double private_total = pw.tail(pw.size() - 1).sum();
  StreamRates r;
  r.sinr_common = pw(0) / (private_total + 1.0);
  r.sinr_private = pw(user + 1) / (private_total - pw(user + 1) + 1.0);
  r.rate_common = std::log2(1.0 + r.sinr_common);
  r.rate_private = std::log2(1.0 + r.sinr_private);
  return r;
}

}  // namespace

StreamRates sinr_and_rates(const CMatrix& precoder, const CVector& channel, int user) {
  if (user < 0 || user + 1 >= precoder.cols())
    throw std::out_of_range("user index outside precoder");
  return rates_from_powers(stream_powers(precoder, channel), user);
}

double common_rate(const CMatrix& precoder, const CMatrix& channels) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < channels.cols(); ++k) {
    const CVector h = channels.col(k);
    best = std::min(best, sinr_and_rates(precoder, h, static_cast<int>(k)).rate_common);
  }
  return best;
}

CommonRateShares clip_shares(const CommonRateShares& shares, double budget) {
  CommonRateShares out{shares.shares.cwiseMax(0.0)};
  const double total = out.total();
  if (total > budget && total > 0.0) out.shares *= std::max(budget, 0.0) / total;
  return out;
}

AverageRates average_rates(const CMatrix& precoder, const CommonRateShares& shares,
                           const SaaBatch& batch, const std::vector<double>& weights) {
  if (batch.samples.empty()) throw std::invalid_argument("average_rates: empty batch");
  const auto k_users = precoder.cols() - 1;
  AverageRates out;
  out.common_per_user = Vector::Zero(k_users);
  out.private_per_user = Vector::Zero(k_users);
  for (const CMatrix& h : batch.samples) {
    const CMatrix hp = h.adjoint() * precoder;  // K x (K+1)
    for (Eigen::Index k = 0; k < k_users; ++k) {
      const StreamRates r = rates_from_powers(hp.row(k).cwiseAbs2(), static_cast<int>(k));
      out.common_per_user(k) += r.rate_common;
      out.private_per_user(k) += r.rate_private;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.common_per_user *= inv;
  out.private_per_user *= inv;
  out.common = out.common_per_user.minCoeff();
  const CommonRateShares delivered = clip_shares(shares, out.common);
  for (Eigen::Index k = 0; k < k_users; ++k)
    out.awsr += weights[static_cast<std::size_t>(k)] *
                (delivered.shares(k) + out.private_per_user(k));
  return out;
}

}  // namespace radcom
