// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "radcom/types.hpp"

namespace radcom {

enum class AccessMode { kRsma, kSdma };
enum class CsitMode { kPerfect, kPartial };

std::string_view to_string(AccessMode mode);
std::string_view to_string(CsitMode mode);
AccessMode parse_access_mode(std::string_view text);
CsitMode parse_csit_mode(std::string_view text);

/// Scenario constants for one RadCom transmitter. Noise variance is fixed
/// at 1, so `power_total` is the linear transmit SNR.
struct SystemConfig {
  int n_tx = 4;
  int n_users = 2;
  double power_total = 100.0;
  double antenna_spacing = 0.5;
  std::vector<double> user_weights = {0.5, 0.5};
  double qos_threshold = 1.0;
  double reg_lambda = 1e-5;
  double admm_penalty = 1.0;
  double admm_tolerance = 1e-2;
  double csit_exponent = 0.6;
  std::vector<double> channel_variances = {1.0, 1.0};
  int saa_samples = 32;
  AccessMode access_mode = AccessMode::kRsma;
  CsitMode csit_mode = CsitMode::kPartial;
  std::uint64_t rng_seed = 1;
  int max_admm_iters = 50;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  int n_streams() const { return n_users + 1; }
  /// sigma_k^2 * Pt^-alpha, or 0 under perfect CSIT.
  double error_variance(int user) const;
  Vector error_variances() const;
};

/// Tuning knobs of the numerical machinery; none of them change the model.
struct SolverSettings {
  double conic_tolerance = 1e-6;
  int conic_max_iters = 500;
  int ao_max_iters = 100;
  double ao_tolerance = 1e-4;
  int randomizations = 200;
  double rank1_threshold = 1e-6;
  /// Share of Pt on the common column of the RSMA warm start.
  double warm_start_common_fraction = 0.2;
  /// Tolerance of the radar relaxation, tighter than conic_tolerance so that
  /// its dual objective is a usable lower bound.
  double sdr_tolerance = 1e-8;
  /// When non-empty, failed conic problems are written here as JSON.
  std::string conic_dump_dir;
};

double dbm_to_linear(double dbm);

}  // namespace radcom
