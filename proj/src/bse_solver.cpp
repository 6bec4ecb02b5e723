// SPDX-License-Identifier: Apache-2.0
#include "radcom/bse_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace radcom::radar {
namespace {

constexpr double kMinScale = 1e-9;

// Objective pieces that only depend on the problem.
class Evaluator {
 public:
  explicit Evaluator(const UUpdateProblem& problem)
      : problem_(problem),
        grid_(problem.spec.angles, problem.config.n_tx, problem.config.antenna_spacing) {}

  double value(const CMatrix& p, double* alpha_out = nullptr) const {
    const Vector g = grid_.gains(p);
    const double alpha = optimal_pattern_scale(g, problem_.spec.desired);
    if (alpha_out) *alpha_out = alpha;
    const CVector u = Eigen::Map<const CVector>(p.data(), p.size());
    return problem_.reg_lambda * bse_from_gains(g, problem_.spec.desired, alpha) +
           0.5 * problem_.prox_weight * (u - problem_.prox_center).squaredNorm();
  }

  // Real gradient 2 dF/dP^* at fixed alpha.
  CMatrix gradient(const CMatrix& p, double alpha) const {
    const CMatrix ap = grid_.matrix().adjoint() * p;  // M x (K+1)
    const Vector g = ap.rowwise().squaredNorm();
    const Vector e = alpha * problem_.spec.desired - g;
    const CMatrix weighted = e.asDiagonal() * ap;
    const CMatrix center = Eigen::Map<const CMatrix>(problem_.prox_center.data(), p.rows(), p.cols());
    return 2.0 * (-2.0 * problem_.reg_lambda * (grid_.matrix() * weighted) +
                  0.5 * problem_.prox_weight * (p - center));
  }

 private:
  const UUpdateProblem& problem_;
  SteeringGrid grid_;
};

CMatrix as_matrix(const CVector& u, int n_tx) {
  return Eigen::Map<const CMatrix>(u.data(), n_tx, u.size() / n_tx);
}

CVector as_vector(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

// Global phase making Re(ref^H x) = |ref^H x|.
CVector align_phase(const CVector& x, const CVector& ref) {
  const Complex c = ref.dot(x);
  if (std::abs(c) == 0.0) return x;
  return x * (std::conj(c) / std::abs(c));
}

CMatrix project_matrix(CMatrix p, const std::vector<int>& active, double row_norm) {
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    double norm2 = 0.0;
    for (int j : active) norm2 += std::norm(p(r, j));
    if (norm2 > 0.0) {
      const double scale = row_norm / std::sqrt(norm2);
      for (int j : active) p(r, j) *= scale;
    } else {
      for (int j : active)
        p(r, j) = Complex(row_norm / std::sqrt(static_cast<double>(active.size())), 0.0);
    }
  }
  return p;
}

}  // namespace

void UUpdateProblem::validate() const {
  config.validate();
  spec.validate();
  if (prox_center.size() != static_cast<Eigen::Index>(config.n_tx) * config.n_streams())
    throw std::invalid_argument("u-update: prox_center has wrong length");
  if (!(prox_weight > 0.0)) throw std::invalid_argument("u-update: prox_weight must be > 0");
  if (!(reg_lambda > 0.0)) throw std::invalid_argument("u-update: reg_lambda must be > 0");
}

std::vector<int> UUpdateProblem::active_streams() const {
  std::vector<int> out;
  for (int j = config.access_mode == AccessMode::kRsma ? 0 : 1; j <= config.n_users; ++j)
    out.push_back(j);
  return out;
}

double optimal_pattern_scale(const Vector& gains, const Vector& desired) {
  if (gains.size() != desired.size())
    throw std::invalid_argument("optimal_pattern_scale: length mismatch");
  const double dd = desired.squaredNorm();
  if (!(dd > 0.0)) throw std::invalid_argument("optimal_pattern_scale: desired pattern is zero");
  return std::max(kMinScale, desired.dot(gains) / dd);
}

double objective(const CVector& u, const UUpdateProblem& problem, double* alpha_out) {
  const Evaluator ev(problem);
  return ev.value(as_matrix(u, problem.config.n_tx), alpha_out);
}

CVector project_rows(const CVector& u, const UUpdateProblem& problem) {
  const double row_norm = std::sqrt(problem.config.power_total / problem.config.n_tx);
  return as_vector(
      project_matrix(as_matrix(u, problem.config.n_tx), problem.active_streams(), row_norm));
}

LiftedSolution solve_sdr(const UUpdateProblem& problem, const SolverSettings& settings) {
  problem.validate();
  const int nt = problem.config.n_tx;
  const double pt = problem.config.power_total;
  const std::vector<int> active = problem.active_streams();
  const int ns = static_cast<int>(active.size());
  const int n_pairs = nt * (nt - 1) / 2;
  const int n_p = nt * ns;
  const int alpha_idx = 2 * n_pairs;
  const int p_idx = alpha_idx + 1;
  const int t_idx = p_idx + 2 * n_p;
  const int nz = t_idx + 1;
  const int m_angles = problem.spec.size();

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < nt; ++i)
    for (int j = i + 1; j < nt; ++j) pairs.emplace_back(i, j);

  // Residual e / Pt = F [rR; iR; alpha] + f0, compressed by QR.
  const int n_res = 2 * n_pairs + 1;
  Matrix ff(m_angles, n_res + 1);
  const double phase_step = 2.0 * kPi * problem.config.antenna_spacing;
  for (int m = 0; m < m_angles; ++m) {
    const double phi = phase_step * std::sin(problem.spec.angles(m));
    for (int q = 0; q < n_pairs; ++q) {
      const double d = static_cast<double>(pairs[static_cast<std::size_t>(q)].second -
                                           pairs[static_cast<std::size_t>(q)].first);
      ff(m, 2 * q) = -2.0 * std::cos(d * phi) / pt;
      ff(m, 2 * q + 1) = 2.0 * std::sin(d * phi) / pt;
    }
    ff(m, n_res - 1) = problem.spec.desired(m) / pt;
    ff(m, n_res) = -1.0;
  }
  Matrix r_aug = Matrix::Zero(n_res + 1, n_res + 1);
  {
    Eigen::HouseholderQR<Matrix> qr(ff);
    const auto rows = std::min<Eigen::Index>(ff.rows(), n_res + 1);
    r_aug.topRows(rows) = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  }
  // The R off-diagonals are stored as (re, im) pairs in z, which matches
  // the column order of ff.
  auto residual_col = [&](int c) { return c < 2 * n_pairs ? c : alpha_idx; };

  const double objective_weight = problem.reg_lambda * pt * pt;
  const double rho = problem.prox_weight;
  const CVector& center = problem.prox_center;

  conic::ConicProblem cp;
  cp.c = Vector::Zero(nz);
  cp.c(t_idx) = objective_weight;
  for (int s = 0; s < ns; ++s) {
    for (int i = 0; i < nt; ++i) {
      const Complex cc = center(active[static_cast<std::size_t>(s)] * nt + i);
      cp.c(p_idx + s * nt + i) = -rho * cc.real();
      cp.c(p_idx + n_p + s * nt + i) = -rho * cc.imag();
    }
  }
  const double constant = 0.5 * rho * (pt + center.squaredNorm());
  cp.A.resize(0, nz);
  cp.b.resize(0);

  const int side = nt + ns;
  const int psd_dim = conic::svec_dim(2 * side);
  const int soc_dim = n_res + 1 + 2;
  const int n_rows = soc_dim + 1 + psd_dim;
  cp.G = Matrix::Zero(n_rows, nz);
  cp.h = Vector::Zero(n_rows);

  // ((t+1)/2, r_aug [w; 1], (t-1)/2) in SOC.
  cp.G(0, t_idx) = -0.5;
  cp.h(0) = 0.5;
  for (int r = 0; r <= n_res; ++r) {
    for (int c = 0; c < n_res; ++c) cp.G(1 + r, residual_col(c)) = -r_aug(r, c);
    cp.h(1 + r) = r_aug(r, n_res);
  }
  cp.G(soc_dim - 1, t_idx) = -0.5;
  cp.h(soc_dim - 1) = -0.5;
  cp.cones.push_back(conic::Cone::second_order(soc_dim));

  cp.G(soc_dim, alpha_idx) = -1.0;
  cp.cones.push_back(conic::Cone::nonnegative(1));

  // [[R, P], [P^H, I]] >= 0, real-embedded.
  const int psd_row = soc_dim + 1;
  auto hermitian_unit = [&](int r, int c, Complex v) {
    CMatrix h = CMatrix::Zero(side, side);
    h(r, c) += v;
    h(c, r) += std::conj(v);
    return conic::svec(conic::embed_hermitian(h));
  };
  {
    CMatrix h0 = CMatrix::Zero(side, side);
    for (int i = 0; i < nt; ++i) h0(i, i) = pt / nt;
    for (int s = 0; s < ns; ++s) h0(nt + s, nt + s) = 1.0;
    cp.h.segment(psd_row, psd_dim) = conic::svec(conic::embed_hermitian(h0));
  }
  for (int q = 0; q < n_pairs; ++q) {
    const auto [i, j] = pairs[static_cast<std::size_t>(q)];
    cp.G.block(psd_row, 2 * q, psd_dim, 1) = -hermitian_unit(i, j, Complex(1.0, 0.0));
    cp.G.block(psd_row, 2 * q + 1, psd_dim, 1) = -hermitian_unit(i, j, Complex(0.0, 1.0));
  }
  for (int s = 0; s < ns; ++s) {
    for (int i = 0; i < nt; ++i) {
      cp.G.block(psd_row, p_idx + s * nt + i, psd_dim, 1) =
          -hermitian_unit(i, nt + s, Complex(1.0, 0.0));
      cp.G.block(psd_row, p_idx + n_p + s * nt + i, psd_dim, 1) =
          -hermitian_unit(i, nt + s, Complex(0.0, 1.0));
    }
  }
  cp.cones.push_back(conic::Cone::psd(2 * side));

  const conic::SolverOptions opts{settings.sdr_tolerance, settings.conic_max_iters};
  const conic::ConicSolution sol = conic::solve(cp, opts);
  if (!conic::usable(sol, std::max(settings.sdr_tolerance, settings.conic_tolerance))) {
    std::string msg = "u-update SDR failed: " + std::string(conic::to_string(sol.status));
    const std::string path = conic::dump_failure(cp, settings.conic_dump_dir, "sdr");
    if (!path.empty()) msg += " (problem written to " + path + ")";
    throw conic::ConicFailure(msg, sol.status);
  }

  const Vector& z = sol.x;
  CMatrix r = CMatrix::Zero(nt, nt);
  for (int i = 0; i < nt; ++i) r(i, i) = pt / nt;
  for (int q = 0; q < n_pairs; ++q) {
    const auto [i, j] = pairs[static_cast<std::size_t>(q)];
    r(i, j) = Complex(z(2 * q), z(2 * q + 1));
    r(j, i) = std::conj(r(i, j));
  }
  const int n_full = nt * problem.config.n_streams();
  LiftedSolution out;
  out.u_lin = CVector::Zero(n_full);
  CMatrix p(nt, ns);
  for (int s = 0; s < ns; ++s) {
    for (int i = 0; i < nt; ++i) {
      p(i, s) = Complex(z(p_idx + s * nt + i), z(p_idx + n_p + s * nt + i));
      out.u_lin(active[static_cast<std::size_t>(s)] * nt + i) = p(i, s);
    }
  }
  const CMatrix delta = r - p * p.adjoint();
  out.U = out.u_lin * out.u_lin.adjoint();
  for (int s = 0; s < ns; ++s) {
    const int off = active[static_cast<std::size_t>(s)] * nt;
    out.U.block(off, off, nt, nt) += delta / static_cast<double>(ns);
  }
  out.alpha_u = std::max(kMinScale, z(alpha_idx));
  out.sdr_objective = sol.dual_objective + constant;
  out.kkt = sol.kkt;
  return out;
}

Candidate recover_rank1(const LiftedSolution& lifted, const UUpdateProblem& problem,
                        RngStream& rng, const SolverSettings& settings) {
  const Evaluator ev(problem);
  const int nt = problem.config.n_tx;
  const double row_norm = std::sqrt(problem.config.power_total / nt);
  const std::vector<int> active = problem.active_streams();

  auto score = [&](const CVector& u) {
    Candidate c;
    c.u = as_vector(project_matrix(as_matrix(u, nt), active, row_norm));
    c.objective = ev.value(as_matrix(c.u, nt), &c.alpha);
    return c;
  };

  Eigen::SelfAdjointEigenSolver<CMatrix> es(lifted.U);
  const Vector& lam = es.eigenvalues();
  const auto n = lam.size();
  const double top = lam(n - 1);
  const CVector principal =
      std::sqrt(std::max(top, 0.0)) * align_phase(es.eigenvectors().col(n - 1), lifted.u_lin);
  if (n == 1 || (top > 0.0 && std::max(lam(n - 2), 0.0) / top <= settings.rank1_threshold)) {
    Candidate c = score(principal);
    c.rank_one = true;
    return c;
  }

  Candidate best = score(lifted.u_lin);
  auto consider = [&](Candidate c) {
    if (c.objective < best.objective) best = std::move(c);
  };
  consider(score(principal));
  const CMatrix factor = es.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  for (int d = 0; d < settings.randomizations; ++d) {
    CVector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.complex_normal(1.0);
    const CVector draw = align_phase(factor * w, problem.prox_center);
    consider(score(draw));
  }
  return best;
}

Candidate pg_oracle(const UUpdateProblem& problem, int restarts, RngStream& rng) {
  if (restarts < 1) throw std::invalid_argument("pg_oracle: restarts must be >= 1");
  problem.validate();
  const Evaluator ev(problem);
  const int nt = problem.config.n_tx;
  const int cols = problem.config.n_streams();
  const double row_norm = std::sqrt(problem.config.power_total / nt);
  const std::vector<int> active = problem.active_streams();

  Candidate best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    CMatrix p;
    if (r == 0) {
      p = project_matrix(as_matrix(problem.prox_center, nt), active, row_norm);
    } else {
      p = CMatrix::Zero(nt, cols);
      for (int j : active)
        for (int i = 0; i < nt; ++i) p(i, j) = rng.complex_normal(1.0);
      p = project_matrix(p, active, row_norm);
    }
    double alpha = 1.0;
    double f = ev.value(p, &alpha);
    double step = 1e-3;
    for (int it = 0; it < 5000; ++it) {
      const CMatrix g = ev.gradient(p, alpha);
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const CMatrix cand = project_matrix(p - step * g, active, row_norm);
        double cand_alpha = 1.0;
        const double fc = ev.value(cand, &cand_alpha);
        const double decrease = (cand - p).squaredNorm() / step;
        if (fc <= f - 1e-4 * decrease) {
          const double rel = (f - fc) / std::max(1.0, std::abs(f));
          p = cand;
          alpha = cand_alpha;
          f = fc;
          step *= 2.0;
          moved = rel > 1e-13;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (f < best.objective) {
      best.u = as_vector(p);
      best.alpha = alpha;
      best.objective = f;
    }
  }
  return best;
}

Candidate solve(const UUpdateProblem& problem, RngStream& rng, const SolverSettings& settings) {
  return recover_rank1(solve_sdr(problem, settings), problem, rng, settings);
}

}  // namespace radcom::radar
