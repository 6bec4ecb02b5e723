// SPDX-License-Identifier: Apache-2.0
#include "radcom/awsr_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace radcom::awsr {
namespace {

const double kLn2 = std::log(2.0);

struct Averaged {
  CMatrix a;   // Nt x Nt, mean of w |g|^2 / ln2 h h^H
  CVector f;   // mean of (w / ln2) conj(g) h
  double c = 0.0;
};

// Rows of s = h - G x accumulated before the conic problem is assembled.
class RowBuilder {
 public:
  explicit RowBuilder(int n_vars) : n_vars_(n_vars) {}

  // x_p' Q x_p <= a'x + b as a rotated second-order cone, where x_p are the
  // first q.rows() variables.
  void add_quadratic(const Matrix& q, const Vector& a, double b) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    const Vector& ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<Vector> l_rows;
    for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
      if (ev(i) <= cutoff) break;
      l_rows.push_back(std::sqrt(ev(i)) * es.eigenvectors().col(i));
    }
    if (l_rows.empty()) l_rows.push_back(Vector::Zero(q.rows()));
    push_row(-0.5 * a, 0.5 * (b + 1.0));
    for (const Vector& l : l_rows) {
      Vector g = Vector::Zero(n_vars_);
      g.head(l.size()) = -l;
      push_row(g, 0.0);
    }
    push_row(-0.5 * a, 0.5 * (b - 1.0));
    cones_.push_back(conic::Cone::second_order(static_cast<int>(l_rows.size()) + 2));
  }

  // ||M x_p + w||^2 <= x(t_index) as a rotated second-order cone.
  void add_affine_square(const Matrix& m, const Vector& w, int t_index) {
    Vector g = Vector::Zero(n_vars_);
    g(t_index) = -0.5;
    push_row(g, 0.5);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      g.setZero();
      g.head(m.cols()) = -m.row(r).transpose();
      push_row(g, w(r));
    }
    g.setZero();
    g(t_index) = -0.5;
    push_row(g, -0.5);
    cones_.push_back(conic::Cone::second_order(static_cast<int>(m.rows()) + 2));
  }

  void add_nonnegative(const std::vector<Vector>& g_rows, const std::vector<double>& h) {
    for (std::size_t i = 0; i < g_rows.size(); ++i) push_row(g_rows[i], h[i]);
    cones_.push_back(conic::Cone::nonnegative(static_cast<int>(g_rows.size())));
  }

  void add_norm_bound(int n_first, double bound) {
    Vector g = Vector::Zero(n_vars_);
    push_row(g, bound);
    for (int i = 0; i < n_first; ++i) {
      g.setZero();
      g(i) = -1.0;
      push_row(g, 0.0);
    }
    cones_.push_back(conic::Cone::second_order(n_first + 1));
  }

  void finish(conic::ConicProblem& out) const {
    out.G.resize(static_cast<Eigen::Index>(rows_.size()), n_vars_);
    out.h.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      out.G.row(static_cast<Eigen::Index>(i)) = rows_[i].transpose();
      out.h(static_cast<Eigen::Index>(i)) = h_[i];
    }
    out.cones = cones_;
  }

 private:
  void push_row(const Vector& g, double h) {
    rows_.push_back(g);
    h_.push_back(h);
  }

  int n_vars_;
  std::vector<Vector> rows_;
  std::vector<double> h_;
  std::vector<conic::Cone> cones_;
};

// Real coefficients of Re(f^H p) for p = xr + j xi over [xr; xi].
void add_linear(Vector& coeffs, const CVector& f, int offset, int n, double scale) {
  coeffs.segment(offset, f.size()) += scale * f.real();
  coeffs.segment(n + offset, f.size()) += scale * f.imag();
}

}  // namespace

double augmented_wmse(double weight, double mse) {
  return (weight * mse - std::log(weight) - 1.0) / kLn2 + 1.0;
}

WmmseState mmse_step(const CMatrix& precoder, const SaaBatch& batch, AccessMode mode) {
  const auto k_users = precoder.cols() - 1;
  const bool common = mode == AccessMode::kRsma;
  WmmseState st;
  for (const CMatrix& h : batch.samples) {
    const CMatrix hp = h.adjoint() * precoder;  // K x (K+1)
    std::vector<Complex> gc, gp;
    std::vector<double> wc, wp, ec, ep;
    for (Eigen::Index k = 0; k < k_users; ++k) {
      const double priv_total = hp.row(k).tail(k_users).squaredNorm() + 1.0;
      const double own = std::norm(hp(k, k + 1));
      gp.push_back(std::conj(hp(k, k + 1)) / priv_total);
      const double e = 1.0 - own / priv_total;
      ep.push_back(e);
      wp.push_back(1.0 / e);
      if (common) {
        const double total = priv_total + std::norm(hp(k, 0));
        gc.push_back(std::conj(hp(k, 0)) / total);
        const double ecom = 1.0 - std::norm(hp(k, 0)) / total;
        ec.push_back(ecom);
        wc.push_back(1.0 / ecom);
      }
    }
    st.g_private.push_back(std::move(gp));
    st.w_private.push_back(std::move(wp));
    st.mse_private.push_back(std::move(ep));
    if (common) {
      st.g_common.push_back(std::move(gc));
      st.w_common.push_back(std::move(wc));
      st.mse_common.push_back(std::move(ec));
    }
  }
  return st;
}

void VUpdateProblem::validate() const {
  config.validate();
  const auto expected = static_cast<Eigen::Index>(config.n_tx) * config.n_streams();
  if (prox_center.size() != expected)
    throw std::invalid_argument("v-update: prox_center has wrong length");
  if (prox_weight < 0.0) throw std::invalid_argument("v-update: prox_weight must be >= 0");
  if (prox_weight == 0.0 && !power_budget)
    throw std::invalid_argument("v-update: prox_weight = 0 requires a power budget");
  if (batch.samples.empty()) throw std::invalid_argument("v-update: empty SAA batch");
  for (const CMatrix& h : batch.samples)
    if (h.rows() != config.n_tx || h.cols() != config.n_users)
      throw std::invalid_argument("v-update: SAA sample has wrong shape");
}

Precoder PrecoderSubproblem::precoder(const Vector& x) const {
  Precoder p = Precoder::zeros(n_tx, n_users);
  const int n = n_tx * static_cast<int>(streams.size());
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (int i = 0; i < n_tx; ++i) {
      const int idx = static_cast<int>(s) * n_tx + i;
      p.columns(i, streams[s]) = Complex(x(idx), x(n + idx));
    }
  }
  return p;
}

CommonRateShares PrecoderSubproblem::shares(const Vector& x) const {
  if (share_offset < 0) return CommonRateShares::zeros(n_users);
  return {x.segment(share_offset, n_users).cwiseMax(0.0)};
}

PrecoderSubproblem build_precoder_subproblem(const WmmseState& state,
                                             const VUpdateProblem& problem) {
  const SystemConfig& cfg = problem.config;
  const int nt = cfg.n_tx;
  const int k_users = cfg.n_users;
  const bool rsma = cfg.access_mode == AccessMode::kRsma;
  if (rsma != state.has_common())
    throw std::invalid_argument("v-update: WMMSE state does not match the access mode");

  PrecoderSubproblem sub;
  sub.n_tx = nt;
  sub.n_users = k_users;
  for (int j = rsma ? 0 : 1; j <= k_users; ++j) sub.streams.push_back(j);
  const int n_streams = static_cast<int>(sub.streams.size());
  const int n = nt * n_streams;  // complex precoder entries
  const int priv_first = rsma ? 1 : 0;  // block index of the first private stream
  const int n_vars = 2 * n + (rsma ? k_users : 0) + 1;
  if (rsma) sub.share_offset = 2 * n;
  const int t_index = n_vars - 1;

  // Sample averages of the frozen WMMSE quantities.
  const double inv_m = 1.0 / static_cast<double>(problem.batch.size());
  auto average = [&](const std::vector<std::vector<Complex>>& g,
                     const std::vector<std::vector<double>>& w, int k) {
    Averaged av{CMatrix::Zero(nt, nt), CVector::Zero(nt), 0.0};
    for (int m = 0; m < problem.batch.size(); ++m) {
      const CVector h = problem.batch.samples[static_cast<std::size_t>(m)].col(k);
      const Complex gm = g[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
      const double wm = w[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
      av.a += (wm * std::norm(gm) / kLn2 * inv_m) * (h * h.adjoint());
      av.f += (wm / kLn2 * inv_m) * std::conj(gm) * h;
      av.c += inv_m * ((wm * (std::norm(gm) + 1.0) - std::log(wm) - 1.0) / kLn2 + 1.0);
    }
    return av;
  };
  std::vector<Averaged> priv, comm;
  for (int k = 0; k < k_users; ++k) {
    priv.push_back(average(state.g_private, state.w_private, k));
    if (rsma) comm.push_back(average(state.g_common, state.w_common, k));
  }

  auto blockdiag = [&](const CMatrix& a, int first_block) {
    CMatrix q = CMatrix::Zero(n, n);
    for (int s = first_block; s < n_streams; ++s) q.block(s * nt, s * nt, nt, nt) = a;
    return q;
  };
  const auto mu = cfg.user_weights;
  const CVector center = problem.prox_center;
  const double rho = problem.prox_weight;

  // Objective: t + lin'x - mu'C with x_p' Q x_p <= t.
  CMatrix q_obj = CMatrix::Zero(n, n);
  Vector lin = Vector::Zero(n_vars);
  double constant = 0.0;
  for (int k = 0; k < k_users; ++k) {
    const double mk = mu[static_cast<std::size_t>(k)];
    q_obj += mk * blockdiag(priv[static_cast<std::size_t>(k)].a, priv_first);
    add_linear(lin, priv[static_cast<std::size_t>(k)].f, (priv_first + k) * nt, n, -2.0 * mk);
    constant += mk * (priv[static_cast<std::size_t>(k)].c - 1.0);
  }
  q_obj += (0.5 * rho) * CMatrix::Identity(n, n);
  for (int s = 0; s < n_streams; ++s)
    add_linear(lin, center.segment(sub.streams[static_cast<std::size_t>(s)] * nt, nt), s * nt,
               n, -rho);
  constant += 0.5 * rho * center.squaredNorm();

  RowBuilder rows(n_vars);
  const Matrix q_real = conic::embed_hermitian(q_obj, 1e-8);
  const Eigen::LLT<Matrix> chol(q_real);
  if (rho > 0.0 && chol.info() == Eigen::Success) {
    // x'Qx + l'x = ||L'x + v||^2 - v'v with Q = LL' and 2Lv = l.
    const Matrix lt = chol.matrixU();
    const Vector v = 0.5 * chol.matrixL().solve(lin.head(2 * n));
    rows.add_affine_square(lt, v, t_index);
    lin.head(2 * n).setZero();
    constant -= v.squaredNorm();
  } else {
    Vector a = Vector::Zero(n_vars);
    a(t_index) = 1.0;
    rows.add_quadratic(q_real, a, 0.0);
  }
  if (rsma) {
    for (int k = 0; k < k_users; ++k) {
      // sum_j C_j <= 1 - xi_c,k
      const Averaged& av = comm[static_cast<std::size_t>(k)];
      Vector a = Vector::Zero(n_vars);
      add_linear(a, av.f, 0, n, 2.0);
      a.segment(sub.share_offset, k_users).array() -= 1.0;
      rows.add_quadratic(conic::embed_hermitian(blockdiag(av.a, 0), 1e-8), a, 1.0 - av.c);
    }
  }
  if (cfg.qos_threshold > 0.0) {
    for (int k = 0; k < k_users; ++k) {
      // xi_k <= 1 - R_th + C_k
      const Averaged& av = priv[static_cast<std::size_t>(k)];
      Vector a = Vector::Zero(n_vars);
      add_linear(a, av.f, (priv_first + k) * nt, n, 2.0);
      if (rsma) a(sub.share_offset + k) = 1.0;
      rows.add_quadratic(conic::embed_hermitian(blockdiag(av.a, priv_first), 1e-8), a,
                         1.0 - cfg.qos_threshold - av.c);
    }
  }
  if (rsma) {
    std::vector<Vector> g;
    for (int k = 0; k < k_users; ++k) {
      Vector row = Vector::Zero(n_vars);
      row(sub.share_offset + k) = -1.0;
      g.push_back(row);
    }
    rows.add_nonnegative(g, std::vector<double>(static_cast<std::size_t>(k_users), 0.0));
  }
  if (problem.power_budget) rows.add_norm_bound(2 * n, std::sqrt(*problem.power_budget));

  sub.conic.c = lin;
  sub.conic.c(t_index) += 1.0;
  if (rsma)
    for (int k = 0; k < k_users; ++k) sub.conic.c(sub.share_offset + k) -= mu[static_cast<std::size_t>(k)];
  sub.conic.A.resize(0, n_vars);
  sub.conic.b.resize(0);
  rows.finish(sub.conic);
  sub.objective_constant = constant;
  return sub;
}

double surrogate_objective(const CMatrix& precoder, const CommonRateShares& shares,
                           const VUpdateProblem& problem) {
  const auto k_users = precoder.cols() - 1;
  Vector priv = Vector::Zero(k_users);
  for (const CMatrix& h : problem.batch.samples) {
    const CMatrix hp = h.adjoint() * precoder;
    for (Eigen::Index k = 0; k < k_users; ++k) {
      const double own = std::norm(hp(k, k + 1));
      const double interf = hp.row(k).tail(k_users).squaredNorm() - own;
      priv(k) += std::log2(1.0 + own / (interf + 1.0));
    }
  }
  priv /= static_cast<double>(problem.batch.size());
  double value = 0.0;
  for (Eigen::Index k = 0; k < k_users; ++k)
    value -= problem.config.user_weights[static_cast<std::size_t>(k)] *
             (shares.shares(k) + priv(k));
  const CVector diff = Eigen::Map<const CVector>(precoder.data(), precoder.size()) -
                       problem.prox_center;
  return value + 0.5 * problem.prox_weight * diff.squaredNorm();
}

AoResult ao_solve(const VUpdateProblem& problem, const Precoder& init,
                  const CommonRateShares& shares_init, const SolverSettings& settings) {
  problem.validate();
  const SystemConfig& cfg = problem.config;
  if (init.n_tx() != cfg.n_tx || init.n_users() != cfg.n_users)
    throw std::invalid_argument("ao_solve: initial precoder has wrong shape");
  const bool rsma = cfg.access_mode == AccessMode::kRsma;

  AoResult res;
  res.precoder = init;
  if (!rsma) res.precoder.columns.col(0).setZero();
  res.shares = rsma ? shares_init : CommonRateShares::zeros(cfg.n_users);

  const conic::SolverOptions opts{settings.conic_tolerance, settings.conic_max_iters};
  for (int it = 1; it <= settings.ao_max_iters; ++it) {
    res.iterations = it;
    const WmmseState state = mmse_step(res.precoder.columns, problem.batch, cfg.access_mode);
    const PrecoderSubproblem sub = build_precoder_subproblem(state, problem);
    const conic::ConicSolution sol = conic::solve(sub.conic, opts);
    if (!conic::usable(sol, 10.0 * settings.conic_tolerance)) {
      if (!res.objective_trace.empty()) break;
      if (sol.status == conic::Status::kInfeasible)
        throw QosInfeasible("QoS constraints infeasible in the v-update (AO iteration " +
                            std::to_string(it) + ")");
      std::string msg = "v-update conic step failed: " + std::string(conic::to_string(sol.status));
      const std::string path = conic::dump_failure(sub.conic, settings.conic_dump_dir, "awsr");
      if (!path.empty()) msg += " (problem written to " + path + ")";
      throw conic::ConicFailure(msg, sol.status);
    }
    const Precoder next = sub.precoder(sol.x);
    const CommonRateShares next_shares = sub.shares(sol.x);
    const double value = surrogate_objective(next.columns, next_shares, problem);
    if (!res.objective_trace.empty() && value > res.objective_trace.back()) {
      // Within solver accuracy of a stationary point.
      res.rejected_increase = value - res.objective_trace.back();
      res.converged = true;
      break;
    }
    res.precoder = next;
    res.shares = next_shares;
    res.objective_trace.push_back(value);
    const auto n_trace = res.objective_trace.size();
    if (n_trace >= 2) {
      const double prev = res.objective_trace[n_trace - 2];
      if (prev - value <= settings.ao_tolerance * std::max(1.0, std::abs(prev))) {
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

Precoder warm_start(const ChannelEstimate& estimate, const SystemConfig& config,
                    AccessMode mode, double common_fraction) {
  if (!(common_fraction >= 0.0 && common_fraction < 1.0))
    throw std::invalid_argument("warm_start: common power fraction must lie in [0, 1)");
  const int nt = config.n_tx;
  const int k_users = config.n_users;
  const double pt = config.power_total;
  const CMatrix& h = estimate.h_hat;
  Precoder p = Precoder::zeros(nt, k_users);

  double private_power = pt;
  if (mode == AccessMode::kRsma) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h * h.adjoint());
    p.columns.col(0) = std::sqrt(common_fraction * pt) * es.eigenvectors().col(nt - 1);
    private_power = (1.0 - common_fraction) * pt;
  }
  const CMatrix gram = h * h.adjoint() +
                       (static_cast<double>(k_users) / private_power) * CMatrix::Identity(nt, nt);
  CMatrix rzf = gram.ldlt().solve(h);
  for (int k = 0; k < k_users; ++k) {
    const double norm = rzf.col(k).norm();
    const double share = std::sqrt(private_power / k_users);
    if (norm > 0.0)
      p.columns.col(k + 1) = share * rzf.col(k) / norm;
    else
      p.columns.col(k + 1).setConstant(Complex(share / std::sqrt(nt), 0.0));
  }
  const double row_target = std::sqrt(pt / nt);
  for (int r = 0; r < nt; ++r) {
    const double norm = p.columns.row(r).norm();
    if (norm > 0.0)
      p.columns.row(r) *= row_target / norm;
    else
      p.columns.row(r).tail(k_users).setConstant(Complex(row_target / std::sqrt(k_users), 0.0));
  }
  return p;
}

}  // namespace radcom::awsr
