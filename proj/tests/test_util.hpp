// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "radcom/model.hpp"

namespace testutil {

using namespace radcom;

inline CMatrix random_cmatrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale / std::sqrt(2.0));
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(n(gen), n(gen));
  return m;
}

inline CVector random_cvector(std::mt19937_64& gen, int n, double scale = 1.0) {
  return random_cmatrix(gen, n, 1, scale).col(0);
}

/// Precoder with every row rescaled to power pt / nt.
inline CMatrix feasible_precoder(std::mt19937_64& gen, int nt, int cols, double pt) {
  CMatrix p = random_cmatrix(gen, nt, cols);
  for (int r = 0; r < nt; ++r) p.row(r) *= std::sqrt(pt / nt) / p.row(r).norm();
  return p;
}

inline SystemConfig small_config(int nt, int k, AccessMode mode = AccessMode::kRsma,
                                 CsitMode csit = CsitMode::kPartial) {
  SystemConfig c;
  c.n_tx = nt;
  c.n_users = k;
  c.user_weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  c.channel_variances.assign(static_cast<std::size_t>(k), 1.0);
  c.access_mode = mode;
  c.csit_mode = csit;
  return c;
}

}  // namespace testutil
