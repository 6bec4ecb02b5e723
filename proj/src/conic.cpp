// SPDX-License-Identifier: Apache-2.0
#include "radcom/conic.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

namespace radcom::conic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

struct Block {
  ConeKind kind;
  int offset;
  int dim;
  int side;  // PSD only
};

// Cone structure of the slack vector after zero cones have been removed.
struct Layout {
  std::vector<Block> blocks;
  int dim = 0;
  int degree = 0;

  explicit Layout(const std::vector<Cone>& cones) {
    for (const Cone& c : cones) {
      if (c.kind == ConeKind::kZero) continue;
      blocks.push_back({c.kind, dim, c.dim(), c.size});
      dim += c.dim();
      switch (c.kind) {
        case ConeKind::kNonnegative: degree += c.size; break;
        case ConeKind::kSecondOrder: degree += 1; break;
        case ConeKind::kPsd: degree += c.size; break;
        case ConeKind::kZero: break;
      }
    }
  }
};

Vector identity(const Layout& layout) {
  Vector e = Vector::Zero(layout.dim);
  for (const Block& b : layout.blocks) {
    switch (b.kind) {
      case ConeKind::kNonnegative: e.segment(b.offset, b.dim).setOnes(); break;
      case ConeKind::kSecondOrder: e(b.offset) = 1.0; break;
      case ConeKind::kPsd:
        for (int i = 0; i < b.side; ++i) e(b.offset + svec_index(i, i, b.side)) = 1.0;
        break;
      case ConeKind::kZero: break;
    }
  }
  return e;
}

// Smallest "eigenvalue" of v in the Jordan algebra of the cone.
double min_eigenvalue(const Layout& layout, const Vector& v) {
  double out = kInf;
  for (const Block& b : layout.blocks) {
    const auto seg = v.segment(b.offset, b.dim);
    switch (b.kind) {
      case ConeKind::kNonnegative: out = std::min(out, seg.minCoeff()); break;
      case ConeKind::kSecondOrder:
        out = std::min(out, seg(0) - seg.tail(b.dim - 1).norm());
        break;
      case ConeKind::kPsd: {
        Eigen::SelfAdjointEigenSolver<Matrix> es(smat(seg, b.side), Eigen::EigenvaluesOnly);
        out = std::min(out, es.eigenvalues()(0));
        break;
      }
      case ConeKind::kZero: break;
    }
  }
  return out;
}

// a o b.
Vector jordan_product(const Layout& layout, const Vector& a, const Vector& b) {
  Vector out(layout.dim);
  for (const Block& bl : layout.blocks) {
    const auto sa = a.segment(bl.offset, bl.dim);
    const auto sb = b.segment(bl.offset, bl.dim);
    auto so = out.segment(bl.offset, bl.dim);
    switch (bl.kind) {
      case ConeKind::kNonnegative: so = sa.cwiseProduct(sb); break;
      case ConeKind::kSecondOrder:
        so(0) = sa.dot(sb);
        so.tail(bl.dim - 1) = sa(0) * sb.tail(bl.dim - 1) + sb(0) * sa.tail(bl.dim - 1);
        break;
      case ConeKind::kPsd: {
        const Matrix ma = smat(sa, bl.side);
        const Matrix mb = smat(sb, bl.side);
        so = svec(0.5 * (ma * mb + mb * ma));
        break;
      }
      case ConeKind::kZero: break;
    }
  }
  return out;
}

// Solves lambda o u = v for u, where lambda is a scaled point (diagonal in
// the PSD blocks).
Vector inverse_product(const Layout& layout, const Vector& lambda, const Vector& v) {
  Vector out(layout.dim);
  for (const Block& bl : layout.blocks) {
    const auto l = lambda.segment(bl.offset, bl.dim);
    const auto sv = v.segment(bl.offset, bl.dim);
    auto so = out.segment(bl.offset, bl.dim);
    switch (bl.kind) {
      case ConeKind::kNonnegative: so = sv.cwiseQuotient(l); break;
      case ConeKind::kSecondOrder: {
        const double l0 = l(0);
        const auto l1 = l.tail(bl.dim - 1);
        const double det = (l0 - l1.norm()) * (l0 + l1.norm());
        const double u0 = (l0 * sv(0) - l1.dot(sv.tail(bl.dim - 1))) / det;
        so(0) = u0;
        so.tail(bl.dim - 1) = (sv.tail(bl.dim - 1) - u0 * l1) / l0;
        break;
      }
      case ConeKind::kPsd: {
        const int n = bl.side;
        for (int j = 0; j < n; ++j) {
          const double lj = l(svec_index(j, j, n));
          for (int i = j; i < n; ++i) {
            const double li = l(svec_index(i, i, n));
            const int idx = svec_index(i, j, n);
            so(idx) = 2.0 * sv(idx) / (li + lj);
          }
        }
        break;
      }
      case ConeKind::kZero: break;
    }
  }
  return out;
}

// Largest alpha with lambda + alpha * d in the cone (lambda interior,
// diagonal in PSD blocks). Returns +inf when unbounded.
double max_step(const Layout& layout, const Vector& lambda, const Vector& d) {
  double step = kInf;
  for (const Block& bl : layout.blocks) {
    const auto l = lambda.segment(bl.offset, bl.dim);
    const auto sd = d.segment(bl.offset, bl.dim);
    switch (bl.kind) {
      case ConeKind::kNonnegative:
        for (int i = 0; i < bl.dim; ++i)
          if (sd(i) < 0.0) step = std::min(step, -l(i) / sd(i));
        break;
      case ConeKind::kSecondOrder: {
        const auto l1 = l.tail(bl.dim - 1);
        const auto d1 = sd.tail(bl.dim - 1);
        const double a = sd(0) * sd(0) - d1.squaredNorm();
        const double b = l(0) * sd(0) - l1.dot(d1);
        const double c = (l(0) - l1.norm()) * (l(0) + l1.norm());
        const double disc = b * b - a * c;
        if (a < 0.0 || (b < 0.0 && disc >= 0.0)) {
          const double denom = -b + std::sqrt(std::max(disc, 0.0));
          if (denom > 0.0) step = std::min(step, c / denom);
        }
        break;
      }
      case ConeKind::kPsd: {
        const int n = bl.side;
        Vector inv_sqrt(n);
        for (int i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(l(svec_index(i, i, n)));
        const Matrix dm = inv_sqrt.asDiagonal() * smat(sd, n) * inv_sqrt.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Matrix> es(dm, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues()(0);
        if (lo < 0.0) step = std::min(step, -1.0 / lo);
        break;
      }
      case ConeKind::kZero: break;
    }
  }
  return step;
}

enum class Op { kW, kWT, kWinv, kWinvT };

// Nesterov-Todd scaling W with W z = W^{-T} s = lambda.
class Scaling {
 public:
  static Scaling identity(const Layout& layout) {
    Scaling sc(layout);
    for (const Block& b : layout.blocks) {
      switch (b.kind) {
        case ConeKind::kNonnegative: sc.nonneg_.push_back(Vector::Ones(b.dim)); break;
        case ConeKind::kSecondOrder: {
          Vector w = Vector::Zero(b.dim);
          w(0) = 1.0;
          sc.soc_.push_back({1.0, w});
          break;
        }
        case ConeKind::kPsd:
          sc.psd_.push_back({Matrix::Identity(b.side, b.side), Matrix::Identity(b.side, b.side)});
          break;
        case ConeKind::kZero: break;
      }
    }
    return sc;
  }

  static std::optional<Scaling> nesterov_todd(const Layout& layout, const Vector& s,
                                              const Vector& z) {
    Scaling sc(layout);
    sc.lambda_ = Vector(layout.dim);
    for (const Block& b : layout.blocks) {
      const auto ss = s.segment(b.offset, b.dim);
      const auto zz = z.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::kNonnegative: {
          if ((ss.array() <= 0.0).any() || (zz.array() <= 0.0).any()) return std::nullopt;
          sc.nonneg_.push_back(ss.cwiseQuotient(zz).cwiseSqrt());
          sc.lambda_.segment(b.offset, b.dim) = ss.cwiseProduct(zz).cwiseSqrt();
          break;
        }
        case ConeKind::kSecondOrder: {
          const double sn1 = ss.tail(b.dim - 1).norm();
          const double zn1 = zz.tail(b.dim - 1).norm();
          const double s_det = (ss(0) - sn1) * (ss(0) + sn1);
          const double z_det = (zz(0) - zn1) * (zz(0) + zn1);
          if (!(ss(0) > sn1) || !(zz(0) > zn1) || !(s_det > 0.0) || !(z_det > 0.0))
            return std::nullopt;
          const double s_norm = std::sqrt(s_det);
          const double z_norm = std::sqrt(z_det);
          const Vector sbar = ss / s_norm;
          const Vector zbar = zz / z_norm;
          const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
          Vector w = sbar;
          w(0) += zbar(0);
          w.tail(b.dim - 1) -= zbar.tail(b.dim - 1);
          w /= 2.0 * gamma;
          // Hyperbolic Householder vector: W = beta (2 v v' - J).
          Vector v = w;
          v(0) += 1.0;
          v /= std::sqrt(2.0 * (w(0) + 1.0));
          sc.soc_.push_back({std::sqrt(s_norm / z_norm), v});
          break;
        }
        case ConeKind::kPsd: {
          Eigen::LLT<Matrix> ls(smat(ss, b.side));
          Eigen::LLT<Matrix> lz(smat(zz, b.side));
          if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return std::nullopt;
          const Matrix lsm = ls.matrixL();
          const Matrix lzm = lz.matrixL();
          Eigen::JacobiSVD<Matrix> svd(lzm.transpose() * lsm,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
          const Vector sv = svd.singularValues();
          if (!(sv.minCoeff() > 0.0)) return std::nullopt;
          const Matrix r = lsm * svd.matrixV() * sv.cwiseSqrt().cwiseInverse().asDiagonal();
          const Matrix rinv = sv.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
                              lsm.triangularView<Eigen::Lower>().solve(
                                  Matrix::Identity(b.side, b.side));
          sc.psd_.push_back({r, rinv});
          break;
        }
        case ConeKind::kZero: break;
      }
    }
    // lambda = W z; recomputed through the operator so every cone type
    // shares one code path.
    sc.lambda_ = sc.apply(Op::kW, z);
    // Exact diagonal form in PSD blocks (off-diagonals are round-off).
    for (const Block& b : layout.blocks) {
      if (b.kind != ConeKind::kPsd) continue;
      for (int j = 0; j < b.side; ++j)
        for (int i = j + 1; i < b.side; ++i) sc.lambda_(b.offset + svec_index(i, j, b.side)) = 0.0;
    }
    return sc;
  }

  const Vector& lambda() const { return lambda_; }

  Vector apply(Op op, const Vector& v) const {
    Vector out(layout_->dim);
    std::size_t in = 0, is = 0, ip = 0;
    for (const Block& b : layout_->blocks) {
      const auto sv = v.segment(b.offset, b.dim);
      auto so = out.segment(b.offset, b.dim);
      switch (b.kind) {
        case ConeKind::kNonnegative: {
          const Vector& d = nonneg_[in++];
          if (op == Op::kW || op == Op::kWT)
            so = sv.cwiseProduct(d);
          else
            so = sv.cwiseQuotient(d);
          break;
        }
        case ConeKind::kSecondOrder: {
          const auto& [beta, w] = soc_[is++];
          if (op == Op::kW || op == Op::kWT) {
            // beta (2 w w' - J) v
            const double wv = w.dot(sv);
            so = 2.0 * wv * w;
            so(0) -= sv(0);
            so.tail(b.dim - 1) += sv.tail(b.dim - 1);
            so *= beta;
          } else {
            // (1/beta) (2 J w w' J - J) v
            Vector jw = w;
            jw.tail(b.dim - 1) *= -1.0;
            const double wjv = jw.dot(sv);
            so = 2.0 * wjv * jw;
            so(0) -= sv(0);
            so.tail(b.dim - 1) += sv.tail(b.dim - 1);
            so /= beta;
          }
          break;
        }
        case ConeKind::kPsd: {
          const auto& [r, rinv] = psd_[ip++];
          const Matrix x = smat(sv, b.side);
          switch (op) {
            case Op::kW: so = svec(r.transpose() * x * r); break;
            case Op::kWT: so = svec(r * x * r.transpose()); break;
            case Op::kWinv: so = svec(rinv.transpose() * x * rinv); break;
            case Op::kWinvT: so = svec(rinv * x * rinv.transpose()); break;
          }
          break;
        }
        case ConeKind::kZero: break;
      }
    }
    return out;
  }

  Matrix apply_columns(Op op, const Matrix& m) const {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.col(j) = apply(op, m.col(j));
    return out;
  }

 private:
  explicit Scaling(const Layout& layout) : layout_(&layout) {}

  struct SocScale {
    double beta;
    Vector w;
  };
  struct PsdScale {
    Matrix r;
    Matrix rinv;
  };

  const Layout* layout_;
  Vector lambda_;
  std::vector<Vector> nonneg_;
  std::vector<SocScale> soc_;
  std::vector<PsdScale> psd_;
};

// Solves
//   [ 0  A'  G'    ] [dx]   [rx]
//   [ A  0   0     ] [dy] = [ry]
//   [ G  0  -W'W   ] [dz]   [rz]
// by eliminating dz and factoring [[H + A'A, A'], [A, 0]], H = G' W^-1 W^-T G.
class KktSolver {
 public:
  KktSolver(const Matrix& G, const Matrix& A, const Scaling& scaling)
      : G_(G), A_(A), scaling_(scaling) {
    const auto n = G.cols();
    const auto p = A.rows();
    gs_ = scaling.apply_columns(Op::kWinvT, G);
    Matrix k = Matrix::Zero(n + p, n + p);
    k.topLeftCorner(n, n) = gs_.transpose() * gs_;
    if (p > 0) {
      k.topLeftCorner(n, n) += A.transpose() * A;
      k.topRightCorner(n, p) = A.transpose();
      k.bottomLeftCorner(p, n) = A;
    }
    const double scale = 1.0 + k.topLeftCorner(n, n).diagonal().cwiseAbs().maxCoeff();
    k.topLeftCorner(n, n).diagonal().array() += 1e-14 * scale;
    lu_.compute(k);
  }

  struct Solution {
    Vector x, y, z;
  };

  Solution solve(const Vector& rx, const Vector& ry, const Vector& rz) const {
    Solution sol = solve_once(rx, ry, rz);
    for (int refine = 0; refine < 2; ++refine) {
      const Vector ex = rx - A_.transpose() * sol.y - G_.transpose() * sol.z;
      const Vector ey = ry - A_ * sol.x;
      const Vector ez = rz - G_ * sol.x +
                        scaling_.apply(Op::kWT, scaling_.apply(Op::kW, sol.z));
      const Solution corr = solve_once(ex, ey, ez);
      sol.x += corr.x;
      sol.y += corr.y;
      sol.z += corr.z;
    }
    return sol;
  }

 private:
  Solution solve_once(const Vector& rx, const Vector& ry, const Vector& rz) const {
    const auto n = G_.cols();
    const auto p = A_.rows();
    const Vector wrz = scaling_.apply(Op::kWinvT, rz);
    Vector rhs(n + p);
    rhs.head(n) = rx + gs_.transpose() * wrz;
    if (p > 0) {
      rhs.head(n) += A_.transpose() * ry;
      rhs.tail(p) = ry;
    }
    const Vector sol = lu_.solve(rhs);
    Solution out;
    out.x = sol.head(n);
    out.y = sol.tail(p);
    out.z = scaling_.apply(Op::kWinv, gs_ * out.x - wrz);
    return out;
  }

  const Matrix& G_;
  const Matrix& A_;
  const Scaling& scaling_;
  Matrix gs_;
  Eigen::PartialPivLU<Matrix> lu_;
};

struct Presolved {
  Matrix A;
  Vector b;
  Matrix G;
  Vector h;
  std::vector<int> eq_source;  // per internal equality row: original A row, or -1 - zero-cone row
  std::vector<int> cone_rows;  // per internal slack row: original G row
  bool inconsistent = false;
};

Presolved presolve(const ConicProblem& pr) {
  Presolved out;
  std::vector<int> eq_rows;  // >= 0: A row; < 0: -1 - G row
  for (int i = 0; i < pr.A.rows(); ++i) eq_rows.push_back(i);
  int row = 0;
  for (const Cone& c : pr.cones) {
    for (int i = 0; i < c.dim(); ++i, ++row) {
      if (c.kind == ConeKind::kZero)
        eq_rows.push_back(-1 - row);
      else
        out.cone_rows.push_back(row);
    }
  }
  const auto n = pr.c.size();
  Matrix a_all(static_cast<Eigen::Index>(eq_rows.size()), n);
  Vector b_all(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t i = 0; i < eq_rows.size(); ++i) {
    const int r = eq_rows[i];
    const auto ii = static_cast<Eigen::Index>(i);
    if (r >= 0) {
      a_all.row(ii) = pr.A.row(r);
      b_all(ii) = pr.b(r);
    } else {
      a_all.row(ii) = pr.G.row(-1 - r);
      b_all(ii) = pr.h(-1 - r);
    }
  }
  out.G.resize(static_cast<Eigen::Index>(out.cone_rows.size()), n);
  out.h.resize(static_cast<Eigen::Index>(out.cone_rows.size()));
  for (std::size_t i = 0; i < out.cone_rows.size(); ++i) {
    out.G.row(static_cast<Eigen::Index>(i)) = pr.G.row(out.cone_rows[i]);
    out.h(static_cast<Eigen::Index>(i)) = pr.h(out.cone_rows[i]);
  }

  if (a_all.rows() == 0) {
    out.A.resize(0, n);
    out.b.resize(0);
    return out;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a_all.transpose());
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < rank; ++i) keep.push_back(perm(i));
  std::sort(keep.begin(), keep.end());
  out.A.resize(rank, n);
  out.b.resize(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    out.A.row(i) = a_all.row(keep[static_cast<std::size_t>(i)]);
    out.b(i) = b_all(keep[static_cast<std::size_t>(i)]);
    out.eq_source.push_back(eq_rows[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])]);
  }
  if (rank < a_all.rows()) {
    // Dropped rows are combinations of kept ones; any solution of the kept
    // system must satisfy them too.
    const Vector x_ls = out.A.transpose() * (out.A * out.A.transpose()).ldlt().solve(out.b);
    const double resid = (a_all * x_ls - b_all).norm();
    if (resid > 1e-8 * (1.0 + b_all.norm())) out.inconsistent = true;
  }
  return out;
}

struct IpmResult {
  Vector x, y, z, s;
  Status status = Status::kMaxIters;
  int iterations = 0;
};

IpmResult run_ipm(const Presolved& pp, const Vector& c, const Layout& layout,
                  const SolverOptions& opt) {
  const Matrix& A = pp.A;
  const Vector& b = pp.b;
  const Matrix& G = pp.G;
  const Vector& h = pp.h;
  const Vector e = identity(layout);

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, h.norm());

  IpmResult out;
  Vector x, y, z, s;
  {
    const Scaling id = Scaling::identity(layout);
    const KktSolver kkt(G, A, id);
    const auto primal = kkt.solve(Vector::Zero(c.size()), b, h);
    x = primal.x;
    s = -primal.z;
    const auto dual = kkt.solve(-c, Vector::Zero(b.size()), Vector::Zero(h.size()));
    y = dual.y;
    z = dual.z;
    const double ts = -min_eigenvalue(layout, s);
    if (layout.dim > 0 && ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    const double tz = -min_eigenvalue(layout, z);
    if (layout.dim > 0 && tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0, kappa = 1.0;
  // Best iterate seen so far, returned when the method stalls.
  double best_measure = kInf;
  IpmResult best;

  for (int iter = 0; iter <= opt.max_iters; ++iter) {
    out.iterations = iter;
    const Vector rx = A.transpose() * y + G.transpose() * z + c * tau;
    const Vector ry = b * tau - A * x;
    const Vector rz = h * tau - G * x - s;
    const double cx = c.dot(x);
    const double by_hz = b.dot(y) + h.dot(z);
    const double rt = -cx - by_hz - kappa;

    const double pres = std::max(ry.norm() / (1.0 + b.norm()), rz.norm() / (1.0 + h.norm())) / tau;
    const double dres = rx.norm() / (1.0 + c.norm()) / tau;
    const double pcost = cx / tau;
    const double dcost = -by_hz / tau;
    const double gap =
        std::max(s.dot(z) / (tau * tau), std::abs(pcost - dcost)) / (1.0 + std::abs(pcost));
    const double measure = std::max({pres, dres, gap});
    if (measure < best_measure) {
      best_measure = measure;
      best.x = x / tau;
      best.y = y / tau;
      best.z = z / tau;
      best.s = s / tau;
      best.iterations = iter;
    }
    if (pres <= opt.tolerance && dres <= opt.tolerance && gap <= opt.tolerance) {
      out.status = Status::kOptimal;
      out.x = x / tau;
      out.y = y / tau;
      out.z = z / tau;
      out.s = s / tau;
      return out;
    }
    if (by_hz < 0.0 && kappa > tau) {
      const double pinf = (A.transpose() * y + G.transpose() * z).norm() / resx0 / (-by_hz);
      if (pinf <= opt.tolerance) {
        out.status = Status::kInfeasible;
        out.x = x / tau;
        out.y = y / (-by_hz);
        out.z = z / (-by_hz);
        out.s = s / tau;
        return out;
      }
    }
    if (cx < 0.0 && kappa > tau) {
      const double dinf =
          std::max((A * x).norm() / resy0, (G * x + s).norm() / resz0) / (-cx);
      if (dinf <= opt.tolerance) {
        out.status = Status::kUnbounded;
        out.x = x / (-cx);
        out.y = y / tau;
        out.z = z / tau;
        out.s = s / (-cx);
        return out;
      }
    }
    if (iter == opt.max_iters) break;

    const auto scaling = Scaling::nesterov_todd(layout, s, z);
    if (!scaling) break;
    const Vector& lambda = scaling->lambda();
    const double mu = (s.dot(z) + tau * kappa) / (layout.degree + 1.0);

    const KktSolver kkt(G, A, *scaling);
    const auto w1 = kkt.solve(-c, b, h);
    const double denom_base = kappa / tau - c.dot(w1.x) - b.dot(w1.y) - h.dot(w1.z);

    struct Direction {
      Vector x, y, z, s, s_scaled, z_scaled;
      double tau, kappa;
    };
    auto newton = [&](double eta, const Vector& ds, double dk) {
      const auto w2 = kkt.solve(-eta * rx, eta * ry, eta * rz - scaling->apply(Op::kWT, ds));
      Direction d;
      d.tau = (-eta * rt + c.dot(w2.x) + b.dot(w2.y) + h.dot(w2.z) + dk / tau) / denom_base;
      d.x = w2.x + d.tau * w1.x;
      d.y = w2.y + d.tau * w1.y;
      d.z = w2.z + d.tau * w1.z;
      d.z_scaled = scaling->apply(Op::kW, d.z);
      d.s_scaled = ds - d.z_scaled;
      d.s = scaling->apply(Op::kWT, d.s_scaled);
      d.kappa = (dk - kappa * d.tau) / tau;
      return d;
    };
    auto step_to_boundary = [&](const Direction& d) {
      double step = std::min(max_step(layout, lambda, d.s_scaled),
                             max_step(layout, lambda, d.z_scaled));
      if (d.tau < 0.0) step = std::min(step, -tau / d.tau);
      if (d.kappa < 0.0) step = std::min(step, -kappa / d.kappa);
      return step;
    };

    const Direction aff = newton(1.0, -lambda, -tau * kappa);
    const double step_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::pow(1.0 - step_aff, 3);

    const Vector rhs_c = sigma * mu * e - jordan_product(layout, lambda, lambda) -
                         jordan_product(layout, aff.s_scaled, aff.z_scaled);
    const Vector ds = inverse_product(layout, lambda, rhs_c);
    const double dk = sigma * mu - tau * kappa - aff.tau * aff.kappa;
    const Direction dir = newton(1.0 - sigma, ds, dk);
    const double step = std::min(1.0, 0.99 * step_to_boundary(dir));
    if (!std::isfinite(step) || !dir.x.allFinite()) break;

    x += step * dir.x;
    y += step * dir.y;
    z += step * dir.z;
    s += step * dir.s;
    tau += step * dir.tau;
    kappa += step * dir.kappa;
  }
  best.status = Status::kMaxIters;
  best.iterations = out.iterations;
  return best;
}

}  // namespace

int ConicProblem::n_slack() const {
  int m = 0;
  for (const Cone& c : cones) m += c.dim();
  return m;
}

void ConicProblem::validate() const {
  const auto n = c.size();
  if (A.cols() != n && A.size() != 0)
    throw std::invalid_argument("conic problem: A has wrong column count");
  if (A.rows() != b.size()) throw std::invalid_argument("conic problem: A/b row mismatch");
  if (G.cols() != n && G.size() != 0)
    throw std::invalid_argument("conic problem: G has wrong column count");
  if (G.rows() != h.size()) throw std::invalid_argument("conic problem: G/h row mismatch");
  if (n_slack() != G.rows())
    throw std::invalid_argument("conic problem: cone dimensions do not cover G rows");
  for (const Cone& cone : cones) {
    if (cone.size < 1) throw std::invalid_argument("conic problem: empty cone");
    if (cone.kind == ConeKind::kSecondOrder && cone.size < 2)
      throw std::invalid_argument("conic problem: second-order cone needs dim >= 2");
  }
}

bool usable(const ConicSolution& solution, double tolerance) {
  if (solution.status == Status::kOptimal) return true;
  return solution.status == Status::kMaxIters && solution.x.allFinite() &&
         solution.kkt.primal <= tolerance && solution.kkt.dual <= tolerance &&
         solution.kkt.gap <= tolerance;
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kMaxIters: return "max_iters";
  }
  return "unknown";
}

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options) {
  problem.validate();
  ConicProblem pr = problem;
  if (pr.A.size() == 0) pr.A.resize(pr.b.size(), pr.c.size());
  if (pr.G.size() == 0) pr.G.resize(pr.h.size(), pr.c.size());

  const Presolved pp = presolve(pr);
  const Layout layout(pr.cones);

  ConicSolution sol;
  IpmResult res;
  if (pp.inconsistent) {
    res.status = Status::kInfeasible;
    res.x = Vector::Zero(pr.c.size());
    res.y = Vector::Zero(pp.A.rows());
    res.z = Vector::Zero(pp.G.rows());
    res.s = Vector::Zero(pp.G.rows());
  } else {
    res = run_ipm(pp, pr.c, layout, options);
  }

  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.x = res.x;
  sol.y = Vector::Zero(pr.A.rows());
  sol.z = Vector::Zero(pr.G.rows());
  sol.s = pr.h - pr.G * sol.x;
  for (std::size_t i = 0; i < pp.cone_rows.size(); ++i)
    sol.z(pp.cone_rows[i]) = res.z(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < pp.eq_source.size(); ++i) {
    const int src = pp.eq_source[i];
    const double v = res.y(static_cast<Eigen::Index>(i));
    if (src >= 0)
      sol.y(src) = v;
    else
      sol.z(-1 - src) = v;
  }

  sol.primal_objective = pr.c.dot(sol.x);
  sol.dual_objective = -pr.b.dot(sol.y) - pr.h.dot(sol.z);
  const double rp_eq = pr.A.rows() > 0 ? (pr.A * sol.x - pr.b).norm() / (1.0 + pr.b.norm()) : 0.0;
  // Cone rows use the solver's own slack so that the residual reflects how
  // far that slack is from h - Gx (zero-cone rows have s = 0 by definition).
  Vector s_full = Vector::Zero(pr.G.rows());
  for (std::size_t i = 0; i < pp.cone_rows.size(); ++i)
    s_full(pp.cone_rows[i]) = res.s(static_cast<Eigen::Index>(i));
  const double rp_cone =
      pr.G.rows() > 0 ? (pr.G * sol.x + s_full - pr.h).norm() / (1.0 + pr.h.norm()) : 0.0;
  sol.kkt.primal = std::max(rp_eq, rp_cone);
  Vector dual_res = pr.c;
  if (pr.A.rows() > 0) dual_res += pr.A.transpose() * sol.y;
  if (pr.G.rows() > 0) dual_res += pr.G.transpose() * sol.z;
  sol.kkt.dual = dual_res.norm() / (1.0 + pr.c.norm());
  sol.kkt.gap = std::max(std::abs(s_full.dot(sol.z)),
                         std::abs(sol.primal_objective - sol.dual_objective)) /
                (1.0 + std::abs(sol.primal_objective));
  if (sol.status == Status::kOptimal) sol.s = s_full;
  return sol;
}

Matrix embed_hermitian(const CMatrix& hermitian, double tolerance) {
  if (hermitian.rows() != hermitian.cols())
    throw std::invalid_argument("embed_hermitian: matrix is not square");
  if ((hermitian - hermitian.adjoint()).cwiseAbs().maxCoeff() > tolerance)
    throw std::invalid_argument("embed_hermitian: matrix is not Hermitian");
  const auto n = hermitian.rows();
  Matrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = hermitian.real();
  out.topRightCorner(n, n) = -hermitian.imag();
  out.bottomLeftCorner(n, n) = hermitian.imag();
  out.bottomRightCorner(n, n) = hermitian.real();
  return out;
}

CMatrix unembed_hermitian(const Matrix& embedded) {
  const auto n = embedded.rows() / 2;
  CMatrix out(n, n);
  out.real() = 0.5 * (embedded.topLeftCorner(n, n) + embedded.bottomRightCorner(n, n));
  out.imag() = 0.5 * (embedded.bottomLeftCorner(n, n) - embedded.topRightCorner(n, n));
  return out;
}

int svec_index(int i, int j, int side) {
  // Column j starts after columns 0..j-1 of lengths side, side-1, ...
  return j * side - j * (j - 1) / 2 + (i - j);
}

Vector svec(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  Vector out(svec_dim(n));
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) out(idx++) = (i == j) ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  return out;
}

Matrix smat(const Vector& v, int side) {
  Matrix out(side, side);
  int idx = 0;
  for (int j = 0; j < side; ++j) {
    for (int i = j; i < side; ++i) {
      const double val = (i == j) ? v(idx) : v(idx) / kSqrt2;
      out(i, j) = val;
      out(j, i) = val;
      ++idx;
    }
  }
  return out;
}

void dump_problem_json(const ConicProblem& problem, std::ostream& out) {
  using nlohmann::json;
  auto mat = [](const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json r = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
      rows.push_back(r);
    }
    return rows;
  };
  auto vec = [](const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); };
  json cones = json::array();
  for (const Cone& c : problem.cones) {
    const char* kind = "zero";
    switch (c.kind) {
      case ConeKind::kZero: kind = "zero"; break;
      case ConeKind::kNonnegative: kind = "nonnegative"; break;
      case ConeKind::kSecondOrder: kind = "second_order"; break;
      case ConeKind::kPsd: kind = "psd"; break;
    }
    cones.push_back({{"kind", kind}, {"size", c.size}});
  }
  json doc = {{"format", "radcom-conic-problem"},
              {"version", 1},
              {"form", "minimize c'x s.t. A x = b, h - G x in cones"},
              {"c", vec(problem.c)},
              {"A", mat(problem.A)},
              {"b", vec(problem.b)},
              {"G", mat(problem.G)},
              {"h", vec(problem.h)},
              {"cones", cones}};
  out << doc.dump(1) << '\n';
}

std::string dump_failure(const ConicProblem& problem, const std::string& dir,
                         const std::string& tag) {
  if (dir.empty()) return {};
  static std::atomic<int> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path path =
      std::filesystem::absolute(std::filesystem::path(dir) /
                                ("conic_failure_" + tag + "_" + std::to_string(counter++) + ".json"));
  std::ofstream out(path);
  if (!out) return {};
  dump_problem_json(problem, out);
  return path.string();
}

}  // namespace radcom::conic
