// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "radcom/types.hpp"

namespace radcom::conic {

enum class ConeKind { kZero, kNonnegative, kSecondOrder, kPsd };

/// One block of the slack vector. `size` is the vector length for the zero,
/// nonnegative and second-order cones and the matrix side for the PSD cone,
/// whose slack is stored as svec (lower triangle, column-major, off-diagonal
/// entries scaled by sqrt(2)).
struct Cone {
  ConeKind kind;
  int size;

  int dim() const { return kind == ConeKind::kPsd ? size * (size + 1) / 2 : size; }

  static Cone zero(int n) { return {ConeKind::kZero, n}; }
  static Cone nonnegative(int n) { return {ConeKind::kNonnegative, n}; }
  static Cone second_order(int n) { return {ConeKind::kSecondOrder, n}; }
  static Cone psd(int side) { return {ConeKind::kPsd, side}; }
};

/// minimize c'x  subject to  A x = b,  s = h - G x,  s in K.
///
/// x is free; `cones` partition the rows of (G, h) in order. Zero-cone rows
/// are equality constraints and are folded into (A, b) by the presolve.
struct ConicProblem {
  Vector c;
  Matrix A;
  Vector b;
  Matrix G;
  Vector h;
  std::vector<Cone> cones;

  int n_vars() const { return static_cast<int>(c.size()); }
  int n_slack() const;
  /// Throws std::invalid_argument on shape mismatches.
  void validate() const;
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kMaxIters };
std::string_view to_string(Status status);

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct ConicSolution {
  Vector x;  // primal
  Vector y;  // multipliers of A x = b
  Vector z;  // multipliers of the cone rows (dual cone)
  Vector s;  // slack h - G x
  Status status = Status::kMaxIters;
  KktResiduals kkt;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  double tolerance = 1e-6;
  int max_iters = 500;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
/// and Mehrotra correction. Deterministic; holds no state between calls.
///
/// On kOptimal the primal/dual residuals are relative to 1 + |b|, 1 + |h|
/// and 1 + |c|, and the gap to 1 + |c'x|. On kInfeasible (y, z) is a Farkas
/// certificate with h'z + b'y = -1; on kUnbounded x is a primal ray with
/// c'x = -1.
ConicSolution solve(const ConicProblem& problem, const SolverOptions& options = {});

/// Optimal, or stopped early (stall or iteration cap) at an iterate whose KKT
/// residuals are all within `tolerance`. On a stall the solver returns its
/// best iterate rather than the last one.
bool usable(const ConicSolution& solution, double tolerance);

/// Thrown by callers that require an optimal solve.
class ConicFailure : public std::runtime_error {
 public:
  ConicFailure(const std::string& what, Status status)
      : std::runtime_error(what), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

/// [[Re H, -Im H], [Im H, Re H]]. Rejects inputs that are not Hermitian
/// within `tolerance`.
Matrix embed_hermitian(const CMatrix& hermitian, double tolerance = 1e-10);
/// Left inverse of embed_hermitian on its range.
CMatrix unembed_hermitian(const Matrix& embedded);

Vector svec(const Matrix& symmetric);
Matrix smat(const Vector& v, int side);
inline int svec_dim(int side) { return side * (side + 1) / 2; }
/// Position of entry (i, j), i >= j, inside svec; weight is 1 or sqrt(2).
int svec_index(int i, int j, int side);

/// Writes the problem as a self-describing JSON document (matrices as
/// nested arrays, cones as tagged objects).
void dump_problem_json(const ConicProblem& problem, std::ostream& out);

/// Writes `problem` to a fresh file `<dir>/conic_failure_<tag>_<n>.json` and
/// returns its path; returns an empty string when `dir` is empty or the file
/// cannot be written.
std::string dump_failure(const ConicProblem& problem, const std::string& dir,
                         const std::string& tag);

}  // namespace radcom::conic
