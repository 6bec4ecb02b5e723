// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "radcom/config.hpp"
#include "radcom/rng.hpp"
#include "radcom/types.hpp"

namespace radcom {

/// Nt x (K+1) precoder. Column 0 carries the common stream, column k+1 the
/// private stream of user k.
struct Precoder {
  CMatrix columns;

  Precoder() = default;
  explicit Precoder(CMatrix m) : columns(std::move(m)) {}
  static Precoder zeros(int n_tx, int n_users);
  /// Inverse of stacked(): column-major vec(P) of length Nt(K+1).
  static Precoder from_stacked(const CVector& stacked, int n_tx);

  int n_tx() const { return static_cast<int>(columns.rows()); }
  int n_users() const { return static_cast<int>(columns.cols()) - 1; }
  CVector stacked() const;

  Vector row_powers() const { return columns.rowwise().squaredNorm(); }
  /// max_r |sum_j |P[r,j]|^2 - target|.
  double max_row_power_deviation(double target) const;
};

struct ChannelEstimate {
  CMatrix h_hat;          // Nt x K, column k is the estimate of h_k
  Vector error_variances; // sigma_{e,k}^2

  int n_tx() const { return static_cast<int>(h_hat.rows()); }
  int n_users() const { return static_cast<int>(h_hat.cols()); }
  /// Checks shapes and that every error variance stays below the channel
  /// variance, so the estimate variance is nonnegative.
  void validate(const std::vector<double>& channel_variances) const;
};

/// Draws h_hat_k ~ CN(0, sigma_k^2 - sigma_{e,k}^2 I). The underlying
/// standard normals do not depend on the CSIT mode, so perfect and partial
/// runs of the same realization share randomness.
ChannelEstimate draw_channel_estimate(const SystemConfig& config, RngStream& rng);

/// Conditional channel samples H^(m) = H_hat + H_tilde^(m).
struct SaaBatch {
  std::vector<CMatrix> samples;

  int size() const { return static_cast<int>(samples.size()); }
};

SaaBatch sample_saa_batch(const ChannelEstimate& estimate, int m_prime, RngStream& rng);

struct CommonRateShares {
  Vector shares;  // C_k >= 0, one per user

  static CommonRateShares zeros(int n_users) { return {Vector::Zero(n_users)}; }
  double total() const { return shares.sum(); }
};

/// Angle grid and desired pattern of the radar metric.
struct BeampatternSpec {
  Vector angles;   // radians, strictly increasing within [-pi/2, pi/2]
  Vector desired;  // P_d(theta_m) >= 0
  double pattern_scale = 1.0;

  int size() const { return static_cast<int>(angles.size()); }
  void validate() const;
};

/// Desired pattern equal to the normalized beampattern of a single beam
/// steered to `target` (peak value 1). Exactly achievable under the
/// per-antenna power constraint.
BeampatternSpec directional_beam_pattern(const Vector& angles, double target,
                                         int n_tx, double spacing);
/// P_d = 1 within +-half_width of target and 0 elsewhere.
BeampatternSpec rectangular_pattern(const Vector& angles, double target,
                                    double half_width);
/// Uniform grid [lo, hi] with the given step, all in radians.
Vector angle_grid(double lo, double hi, double step);

/// a(theta)[n] = exp(j 2 pi n spacing sin(theta)).
CVector steering_vector(double theta, int n_tx, double spacing);

/// Steering vectors of a whole angle grid, stacked as Nt x M columns.
class SteeringGrid {
 public:
  SteeringGrid(const Vector& angles, int n_tx, double spacing);

  const CMatrix& matrix() const { return steering_; }
  int size() const { return static_cast<int>(steering_.cols()); }
  /// Beampattern gains a^H P P^H a at every grid angle.
  Vector gains(const CMatrix& precoder) const;

 private:
  CMatrix steering_;
};

double beampattern_gain(const CMatrix& precoder, double theta, double spacing);

/// sum_m (alpha * desired_m - gains_m)^2.
double bse_from_gains(const Vector& gains, const Vector& desired, double pattern_scale);
double bse(const CMatrix& precoder, const BeampatternSpec& spec, double spacing);

struct StreamRates {
  double sinr_common = 0.0;
  double sinr_private = 0.0;
  double rate_common = 0.0;   // bps/Hz
  double rate_private = 0.0;  // bps/Hz
};

/// SINRs and rates of user `user` (0-based) with noise variance 1.
StreamRates sinr_and_rates(const CMatrix& precoder, const CVector& channel, int user);

/// min_k R_{c,k}.
double common_rate(const CMatrix& precoder, const CMatrix& channels);

struct AverageRates {
  Vector common_per_user;   // sample mean of R_{c,k}
  Vector private_per_user;  // sample mean of R_k
  double common = 0.0;      // min_k of common_per_user
  double awsr = 0.0;        // sum_k mu_k (C_k + R_k) with shares clipped to `common`
};

AverageRates average_rates(const CMatrix& precoder, const CommonRateShares& shares,
                           const SaaBatch& batch, const std::vector<double>& weights);

/// Scales shares down proportionally so their sum does not exceed `budget`.
CommonRateShares clip_shares(const CommonRateShares& shares, double budget);

}  // namespace radcom
