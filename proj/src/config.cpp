// SPDX-License-Identifier: Apache-2.0
#include "radcom/config.hpp"

#include <cmath>
#include <stdexcept>

namespace radcom {

std::string_view to_string(AccessMode mode) {
  return mode == AccessMode::kRsma ? "rsma" : "sdma";
}

std::string_view to_string(CsitMode mode) {
  return mode == CsitMode::kPerfect ? "perfect" : "partial";
}

AccessMode parse_access_mode(std::string_view text) {
  if (text == "rsma" || text == "RSMA") return AccessMode::kRsma;
  if (text == "sdma" || text == "SDMA") return AccessMode::kSdma;
  throw std::invalid_argument("unknown access mode '" + std::string(text) + "'");
}

CsitMode parse_csit_mode(std::string_view text) {
  if (text == "perfect") return CsitMode::kPerfect;
  if (text == "partial") return CsitMode::kPartial;
  throw std::invalid_argument("unknown csit mode '" + std::string(text) + "'");
}

double dbm_to_linear(double dbm) { return std::pow(10.0, dbm / 10.0); }

void SystemConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("system." + field + ": " + why);
  };
  if (n_tx < 1) fail("n_tx", "must be >= 1");
  if (n_users < 1) fail("n_users", "must be >= 1");
  if (!(power_total > 0.0)) fail("power_total", "must be > 0");
  if (!(antenna_spacing > 0.0)) fail("antenna_spacing", "must be > 0");
  if (static_cast<int>(user_weights.size()) != n_users)
    fail("user_weights", "needs exactly n_users entries");
  for (double w : user_weights)
    if (!(w > 0.0)) fail("user_weights", "entries must be > 0");
  if (!(qos_threshold >= 0.0)) fail("qos_threshold", "must be >= 0");
  if (!(reg_lambda > 0.0)) fail("reg_lambda", "must be > 0");
  if (!(admm_penalty > 0.0)) fail("admm_penalty", "must be > 0");
  if (!(admm_tolerance > 0.0)) fail("admm_tolerance", "must be > 0");
  if (!(csit_exponent >= 0.0)) fail("csit_exponent", "must be >= 0");
  if (static_cast<int>(channel_variances.size()) != n_users)
    fail("channel_variances", "needs exactly n_users entries");
  for (double v : channel_variances)
    if (!(v > 0.0)) fail("channel_variances", "entries must be > 0");
  if (saa_samples < 1) fail("saa_samples", "must be >= 1");
  if (max_admm_iters < 1) fail("max_admm_iters", "must be >= 1");
}

double SystemConfig::error_variance(int user) const {
  if (csit_mode == CsitMode::kPerfect) return 0.0;
  return channel_variances.at(static_cast<std::size_t>(user)) *
         std::pow(power_total, -csit_exponent);
}

Vector SystemConfig::error_variances() const {
  Vector out(n_users);
  for (int k = 0; k < n_users; ++k) out(k) = error_variance(k);
  return out;
}

}  // namespace radcom
