// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "radcom/types.hpp"

namespace radcom {

/// A seeded random stream. Streams for different purposes (channel draws,
/// SAA batches, evaluation, randomization) are derived from one master seed
/// so every component can be reproduced on its own.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent stream from (master seed, purpose, index).
  static RngStream derive(std::uint64_t master_seed, std::string_view purpose,
                          std::uint64_t index = 0);

  double normal();
  double uniform();
  /// Circularly-symmetric complex Gaussian with the given variance.
  Complex complex_normal(double variance = 1.0);
  CMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                double variance = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace radcom
