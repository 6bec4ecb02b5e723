// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "radcom/config.hpp"
#include "radcom/conic.hpp"
#include "radcom/model.hpp"
#include "radcom/rng.hpp"

namespace radcom::radar {

/// Radar step: minimize over (alpha, u) with diag(P P^H) = Pt/Nt
///   lambda * sum_m (alpha P_d(theta_m) - a_m^H P P^H a_m)^2 + rho/2 ||u - center||^2.
/// Only the active streams are optimized (the common column stays zero in
/// SDMA mode).
struct UUpdateProblem {
  CVector prox_center;       // stacked Nt(K+1)
  double prox_weight = 1.0;  // rho
  BeampatternSpec spec;      // pattern_scale is ignored; alpha is optimized
  double reg_lambda = 1e-5;
  SystemConfig config;

  void validate() const;
  std::vector<int> active_streams() const;
};

struct LiftedSolution {
  CMatrix U;        // Nt(K+1) Hermitian, U >= u u^H
  CVector u_lin;    // stacked Nt(K+1)
  double alpha_u = 1.0;
  double sdr_objective = 0.0;  // dual objective: a lower bound on the radar step
  conic::KktResiduals kkt;
};

/// argmin_{alpha > 0} sum_m (alpha desired_m - gains_m)^2, clamped to 1e-9.
double optimal_pattern_scale(const Vector& gains, const Vector& desired);

/// Unlifted objective at u with alpha re-optimized; alpha is returned through
/// `alpha_out` when given.
double objective(const CVector& u, const UUpdateProblem& problem, double* alpha_out = nullptr);

/// Rescales every row of the active columns to norm sqrt(Pt/Nt); zero rows
/// become uniform over the active columns.
CVector project_rows(const CVector& u, const UUpdateProblem& problem);

LiftedSolution solve_sdr(const UUpdateProblem& problem, const SolverSettings& settings = {});

struct Candidate {
  CVector u;
  double alpha = 1.0;
  double objective = 0.0;
  bool rank_one = false;  // taken straight from the principal eigenvector
};

Candidate recover_rank1(const LiftedSolution& lifted, const UUpdateProblem& problem,
                        RngStream& rng, const SolverSettings& settings = {});

/// Projected gradient over the product of row spheres with Armijo steps and
/// closed-form alpha. Restart 0 starts from the projected prox center, the
/// rest from random feasible points.
Candidate pg_oracle(const UUpdateProblem& problem, int restarts, RngStream& rng);

/// solve_sdr followed by recover_rank1.
Candidate solve(const UUpdateProblem& problem, RngStream& rng,
                const SolverSettings& settings = {});

}  // namespace radcom::radar
