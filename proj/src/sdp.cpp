#include "steerdet/conic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

namespace steerdet {

using Eigen::VectorXd;
using nlohmann::json;

int ConicProblem::add_block(int dim) {
  if (dim < 1) throw ParamError("PSD block dimension must be positive");
  block_dims.push_back(dim);
  return static_cast<int>(block_dims.size()) - 1;
}

int ConicProblem::add_free() {
  objective_free.push_back(0.0);
  return num_free++;
}

int ConicProblem::add_equality(Equality eq) {
  for (const auto& e : eq.entries) {
    if (e.block < 0 || e.block >= static_cast<int>(block_dims.size()))
      throw ParamError("equality references unknown block");
    if (e.row > e.col || e.row < 0 || e.col >= block_dims[e.block])
      throw ParamError("equality entry indices out of range");
  }
  for (const auto& f : eq.free_coefs)
    if (f.first < 0 || f.first >= num_free)
      throw ParamError("equality references unknown free variable");
  equalities.push_back(std::move(eq));
  return static_cast<int>(equalities.size()) - 1;
}

json ConicProblem::to_json() const {
  json eqs = json::array();
  for (const auto& eq : equalities) {
    json entries = json::array();
    for (const auto& e : eq.entries)
      entries.push_back(json::array({e.block, e.row, e.col, e.value}));
    json fc = json::array();
    for (const auto& f : eq.free_coefs)
      fc.push_back(json::array({f.first, f.second}));
    eqs.push_back(json{{"name", eq.name},
                       {"rhs", eq.rhs},
                       {"entries", entries},
                       {"free", fc}});
  }
  json obj_entries = json::array();
  for (const auto& e : objective_entries)
    obj_entries.push_back(json::array({e.block, e.row, e.col, e.value}));
  return json{{"blocks", block_dims},
              {"num_free", num_free},
              {"objective", {{"entries", obj_entries}, {"free", objective_free}}},
              {"equalities", eqs}};
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    default: return "NumericalTrouble";
  }
}

namespace {

// Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector, in the internal minimization convention
//   min <C,X> + c_f.u   s.t.  A(X) + B u = b,  X PSD blockwise, u free.
// The embedding tracks (X, u, y, S, tau, kappa) with residuals
//   rp = A(X) + B u - b tau          rf = B^T y - c_f tau
//   Rd = A*(y) + S - C tau           rg = <C,X> + c_f.u - b.y + kappa
// which shrink proportionally to the complementarity measure mu.
class HsdSolver {
 public:
  HsdSolver(const ConicProblem& prob, const SolveOptions& opts)
      : prob_(prob),
        opts_(opts),
        nb_(static_cast<int>(prob.block_dims.size())),
        m_(static_cast<int>(prob.equalities.size())),
        f_(prob.num_free) {
    C_.resize(nb_);
    for (int b = 0; b < nb_; ++b)
      C_[b] = Rmat::Zero(prob.block_dims[b], prob.block_dims[b]);
    for (const auto& e : prob.objective_entries) {
      C_[e.block](e.row, e.col) -= e.value;
      if (e.row != e.col) C_[e.block](e.col, e.row) -= e.value;
    }
    cf_ = VectorXd::Zero(f_);
    for (int i = 0; i < f_; ++i) cf_(i) = -prob.objective_free[i];
    bvec_ = VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i) bvec_(i) = prob.equalities[i].rhs;
    Bmat_ = Rmat::Zero(m_, f_);
    for (int i = 0; i < m_; ++i)
      for (const auto& fc : prob.equalities[i].free_coefs)
        Bmat_(i, fc.first) += fc.second;

    cons_by_block_.resize(nb_);
    for (int i = 0; i < m_; ++i)
      for (const auto& e : prob.equalities[i].entries)
        cons_by_block_[e.block][i].push_back(e);

    norm_b_ = bvec_.norm();
    norm_c_ = cf_.norm();
    for (const Rmat& c : C_) norm_c_ = std::hypot(norm_c_, c.norm());
  }

  ConicSolution run();

 private:
  static double inner(const Rmat& a, const Rmat& x) {
    return (a.array() * x.array()).sum();
  }

  static double entry_dot(const std::vector<ConstraintEntry>& entries,
                          const Rmat& y) {
    double s = 0.0;
    for (const auto& e : entries)
      s += (e.row == e.col) ? e.value * y(e.row, e.col)
                            : 2.0 * e.value * y(e.row, e.col);
    return s;
  }

  VectorXd apply_A(const std::vector<Rmat>& X, const VectorXd& u) const {
    VectorXd out = f_ > 0 ? (Bmat_ * u).eval() : VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      for (const auto& e : prob_.equalities[i].entries) {
        double xv = X[e.block](e.row, e.col);
        s += (e.row == e.col) ? e.value * xv : 2.0 * e.value * xv;
      }
      out(i) += s;
    }
    return out;
  }

  std::vector<Rmat> apply_At(const VectorXd& y) const {
    std::vector<Rmat> out(nb_);
    for (int b = 0; b < nb_; ++b)
      out[b] = Rmat::Zero(prob_.block_dims[b], prob_.block_dims[b]);
    for (int i = 0; i < m_; ++i) {
      const double yi = y(i);
      if (yi == 0.0) continue;
      for (const auto& e : prob_.equalities[i].entries) {
        out[e.block](e.row, e.col) += yi * e.value;
        if (e.row != e.col) out[e.block](e.col, e.row) += yi * e.value;
      }
    }
    return out;
  }

  // W A W for the sparse entry list of one constraint restricted to a block
  static Rmat sandwich(const Rmat& W, const std::vector<ConstraintEntry>& entries) {
    Rmat out = Rmat::Zero(W.rows(), W.cols());
    for (const auto& e : entries) {
      if (e.row == e.col) {
        out.noalias() += e.value * (W.col(e.row) * W.col(e.col).transpose());
      } else {
        out.noalias() += e.value * (W.col(e.row) * W.col(e.col).transpose());
        out.noalias() += e.value * (W.col(e.col) * W.col(e.row).transpose());
      }
    }
    return out;
  }

  struct Scaling {
    Rmat R, Rinv, W;
    VectorXd lambda;
  };

  bool compute_scaling(const Rmat& X, const Rmat& S, Scaling& sc) const {
    Eigen::LLT<Rmat> lx(X), ls(S);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    Rmat Lx = lx.matrixL(), Ls = ls.matrixL();
    Eigen::JacobiSVD<Rmat> svd(Ls.transpose() * Lx,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd sv = svd.singularValues();
    if (sv.minCoeff() <= 0.0) return false;
    VectorXd isq = sv.cwiseSqrt().cwiseInverse();
    sc.R = Lx * svd.matrixV() * isq.asDiagonal();
    sc.Rinv = isq.asDiagonal() * svd.matrixU().transpose() * Ls.transpose();
    sc.W = sc.R * sc.R.transpose();
    sc.lambda = sv;
    return true;
  }

  // (lambda o)^{-1} applied to a symmetric matrix in scaled coordinates
  static Rmat jordan_solve(const VectorXd& lambda, const Rmat& D) {
    Rmat out(D.rows(), D.cols());
    for (Eigen::Index i = 0; i < D.rows(); ++i)
      for (Eigen::Index j = 0; j < D.cols(); ++j)
        out(i, j) = 2.0 * D(i, j) / (lambda(i) + lambda(j));
    return out;
  }

  // largest t with I + t Q >= 0, i.e. 1/max(0, -lambda_min(Q))
  static double step_to_boundary(const Rmat& Q) {
    Eigen::SelfAdjointEigenSolver<Rmat> es(Q, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    return lmin >= 0.0 ? kInf : 1.0 / (-lmin);
  }

  static constexpr double kInf = 1e300;

  const ConicProblem& prob_;
  SolveOptions opts_;
  int nb_, m_, f_;
  std::vector<Rmat> C_;
  VectorXd cf_, bvec_;
  Rmat Bmat_;
  std::vector<std::map<int, std::vector<ConstraintEntry>>> cons_by_block_;
  double norm_b_ = 0.0, norm_c_ = 0.0;
};

ConicSolution HsdSolver::run() {
  ConicSolution sol;
  std::vector<Rmat> X(nb_), S(nb_);
  for (int b = 0; b < nb_; ++b) {
    X[b] = Rmat::Identity(prob_.block_dims[b], prob_.block_dims[b]);
    S[b] = X[b];
  }
  VectorXd u = VectorXd::Zero(f_), y = VectorXd::Zero(m_);
  double tau = 1.0, kappa = 1.0;
  double nu = 0.0;
  for (int b = 0; b < nb_; ++b) nu += prob_.block_dims[b];

  auto deflate = [&](double den) {
    sol.primal_blocks.resize(nb_);
    sol.dual_blocks.resize(nb_);
    for (int b = 0; b < nb_; ++b) {
      sol.primal_blocks[b] = X[b] / den;
      sol.dual_blocks[b] = S[b] / den;
    }
    sol.free_values.assign(u.data(), u.data() + f_);
    for (double& v : sol.free_values) v /= den;
    // duals reported in the public maximization convention
    sol.duals.assign(y.data(), y.data() + m_);
    for (double& v : sol.duals) v = -v / den;
  };

  std::vector<Scaling> sc(nb_);
  std::vector<Rmat> dXa(nb_), dSa(nb_), dX(nb_), dS(nb_);

  for (int iter = 0; iter <= opts_.max_iters; ++iter) {
    VectorXd rp = apply_A(X, u) - bvec_ * tau;
    std::vector<Rmat> Rd = apply_At(y);
    for (int b = 0; b < nb_; ++b) Rd[b] += S[b] - C_[b] * tau;
    VectorXd rf = f_ > 0 ? (Bmat_.transpose() * y - cf_ * tau).eval()
                         : VectorXd::Zero(0);
    double cx = cf_.dot(u);
    for (int b = 0; b < nb_; ++b) cx += inner(C_[b], X[b]);
    double by = bvec_.dot(y);
    double rg = cx - by + kappa;

    double compl_total = tau * kappa;
    for (int b = 0; b < nb_; ++b) compl_total += inner(X[b], S[b]);
    double mu = compl_total / (nu + 1.0);

    double pres = rp.norm() / (tau * (1.0 + norm_b_));
    double dnorm = rf.norm();
    for (int b = 0; b < nb_; ++b) dnorm = std::hypot(dnorm, Rd[b].norm());
    double dres = dnorm / (tau * (1.0 + norm_c_));
    double pobj = cx / tau, dobj = by / tau;
    double cone_gap = (compl_total - tau * kappa) / (tau * tau);
    double relgap = cone_gap / std::max({1.0, std::abs(pobj), std::abs(dobj)});

    if (opts_.verbose) {
      int worst = 0;
      rp.cwiseAbs().maxCoeff(&worst);
      std::cerr << "iter " << iter << "  mu=" << mu << "  pres=" << pres
                << "  dres=" << dres << "  relgap=" << relgap << "  tau=" << tau
                << "  kappa=" << kappa << "  rp_max=" << std::abs(rp(worst))
                << " at " << prob_.equalities[worst].name << "\n";
    }

    // cone members keep <X,S> >= 0; weak duality holds after deflation
    if (compl_total < -1e-9)
      throw Error("complementarity turned negative; step control broken");

    if (pres <= opts_.tol_feas && dres <= opts_.tol_feas &&
        relgap <= opts_.tol_gap) {
      deflate(tau);
      sol.status = SolveStatus::Optimal;
      sol.primal_objective = -pobj;
      sol.dual_objective = -dobj;
      sol.primal_residual = pres;
      sol.dual_residual = dres;
      sol.rel_gap = relgap;
      sol.iterations = iter;
      return sol;
    }

    if (by > 0.0) {
      double cert = f_ > 0 ? (Bmat_.transpose() * y).norm() : 0.0;
      std::vector<Rmat> aty = apply_At(y);
      for (int b = 0; b < nb_; ++b)
        cert = std::hypot(cert, (aty[b] + S[b]).norm());
      if (cert <= opts_.tol_feas * (1.0 + norm_c_) * by) {
        deflate(by);
        for (double& v : sol.duals) v = -v;  // Farkas direction, min convention
        sol.status = SolveStatus::PrimalInfeasible;
        sol.message = "primal infeasibility certificate found";
        sol.iterations = iter;
        return sol;
      }
    }
    if (cx < 0.0) {
      double cert = apply_A(X, u).norm();
      if (cert <= opts_.tol_feas * (1.0 + norm_b_) * (-cx)) {
        deflate(-cx);
        sol.status = SolveStatus::DualInfeasible;
        sol.message = "dual infeasibility certificate (unbounded objective)";
        sol.iterations = iter;
        return sol;
      }
    }
    if (mu < 1e-14 || tau < 1e-12 * std::max(1.0, kappa)) {
      deflate(std::max(tau, 1e-300));
      sol.status = SolveStatus::NumericalTrouble;
      sol.message = "embedding collapsed without a clean certificate";
      sol.iterations = iter;
      return sol;
    }
    if (iter == opts_.max_iters) break;

    bool ok = true;
    for (int b = 0; b < nb_; ++b) ok = ok && compute_scaling(X[b], S[b], sc[b]);
    if (!ok) {
      deflate(tau);
      sol.status = SolveStatus::NumericalTrouble;
      sol.message = "lost positive definiteness while scaling";
      sol.iterations = iter;
      return sol;
    }

    Rmat M = Rmat::Zero(m_, m_);
    for (int b = 0; b < nb_; ++b) {
      const auto& cons = cons_by_block_[b];
      for (const auto& [ci, centries] : cons) {
        Rmat Yj = sandwich(sc[b].W, centries);
        for (const auto& [cj, centries2] : cons) {
          if (cj > ci) break;
          M(cj, ci) += entry_dot(centries2, Yj);
        }
      }
    }
    M = M.selfadjointView<Eigen::Upper>();
    double reg = opts_.regularization * (1.0 + M.diagonal().maxCoeff());
    Eigen::LLT<Rmat> mllt(M + reg * Rmat::Identity(m_, m_));
    if (mllt.info() != Eigen::Success) {
      mllt.compute(M + (1e4 * reg) * Rmat::Identity(m_, m_));
      if (mllt.info() != Eigen::Success) {
        deflate(tau);
        sol.status = SolveStatus::NumericalTrouble;
        sol.message = "Schur complement factorization failed";
        sol.iterations = iter;
        return sol;
      }
    }
    Eigen::LDLT<Rmat> fldlt;
    Rmat MinvB;
    if (f_ > 0) {
      MinvB = mllt.solve(Bmat_);
      Rmat Sf = Bmat_.transpose() * MinvB;
      Sf += opts_.regularization * (1.0 + Sf.diagonal().cwiseAbs().maxCoeff()) *
            Rmat::Identity(f_, f_);
      fldlt.compute(Sf);
    }

    auto solve_k2 = [&](const VectorXd& r1, const VectorXd& r2, VectorXd& dy,
                        VectorXd& du) {
      auto once = [&](const VectorXd& a, const VectorXd& c, VectorXd& oy,
                      VectorXd& ou) {
        if (f_ > 0) {
          VectorXd t = mllt.solve(a);
          ou = fldlt.solve(Bmat_.transpose() * t - c);
          oy = t - MinvB * ou;
        } else {
          ou = VectorXd::Zero(0);
          oy = mllt.solve(a);
        }
      };
      once(r1, r2, dy, du);
      double scale = std::max(1.0, std::max(r1.norm(), r2.norm()));
      for (int pass = 0; pass < 4; ++pass) {
        VectorXd res1 = r1 - M * dy;
        if (f_ > 0) res1 -= Bmat_ * du;
        VectorXd res2 =
            f_ > 0 ? (r2 - Bmat_.transpose() * dy).eval() : VectorXd::Zero(0);
        if (std::max(res1.norm(), res2.norm()) < 1e-14 * scale) break;
        VectorXd cy, cu;
        once(res1, res2, cy, cu);
        dy += cy;
        if (f_ > 0) du += cu;
      }
    };

    std::vector<Rmat> WCW(nb_);
    VectorXd btilde = bvec_;
    double cWc = 0.0;
    for (int b = 0; b < nb_; ++b) {
      WCW[b] = sc[b].W * C_[b] * sc[b].W;
      cWc += inner(C_[b], WCW[b]);
      for (const auto& [ci, centries] : cons_by_block_[b])
        btilde(ci) += entry_dot(centries, WCW[b]);
    }
    VectorXd u2y, u2u;
    solve_k2(btilde, cf_, u2y, u2u);

    struct Dir {
      std::vector<Rmat> X, S;
      VectorXd y, u;
      double tau = 0.0, kappa = 0.0;
    };
    struct Rhs {
      VectorXd r1;             // primal rows
      std::vector<Rmat> R2;    // dual blocks
      VectorXd r3;             // free rows
      double r4 = 0.0;         // gap row
      std::vector<Rmat> Dc;    // scaled complementarity blocks
      double dtk = 0.0;        // tau-kappa row
    };

    auto newton_raw = [&](const Rhs& r) {
      Dir d;
      d.X.resize(nb_);
      d.S.resize(nb_);
      std::vector<Rmat> Gt(nb_), Gd(nb_);
      VectorXd rhs1 = r.r1;
      double cGd = 0.0, cWR2W = 0.0;
      for (int b = 0; b < nb_; ++b) {
        Gt[b] = jordan_solve(sc[b].lambda, r.Dc[b]);
        Gd[b] = sc[b].R * Gt[b] * sc[b].R.transpose();
        Rmat wr2w = sc[b].W * r.R2[b] * sc[b].W;
        cGd += inner(C_[b], Gd[b]);
        cWR2W += inner(C_[b], wr2w);
        for (const auto& [ci, centries] : cons_by_block_[b])
          rhs1(ci) += -entry_dot(centries, Gd[b]) + entry_dot(centries, wr2w);
      }
      VectorXd u1y, u1u;
      solve_k2(rhs1, r.r3, u1y, u1u);

      VectorXd bt2 = btilde - 2.0 * bvec_;
      double cst = cGd - cWR2W + bt2.dot(u1y) + r.dtk / tau;
      double slope = -cWc + bt2.dot(u2y) - kappa / tau;
      if (f_ > 0) {
        cst += cf_.dot(u1u);
        slope += cf_.dot(u2u);
      }
      if (std::abs(slope) < 1e-300) throw Error("singular embedding system");
      d.tau = (r.r4 - cst) / slope;
      d.y = u1y + d.tau * u2y;
      d.u = f_ > 0 ? (u1u + d.tau * u2u).eval() : VectorXd::Zero(0);
      std::vector<Rmat> aty = apply_At(d.y);
      for (int b = 0; b < nb_; ++b) {
        d.S[b] = r.R2[b] + C_[b] * d.tau - aty[b];
        // reconstruct in scaled coordinates; the unscaled form
        // Gd - W dS W doubles the cancellation when the scaling is extreme
        Rmat st = sc[b].R.transpose() * d.S[b] * sc[b].R;
        d.X[b] = sc[b].R * (Gt[b] - st) * sc[b].R.transpose();
      }
      d.kappa = (r.dtk - kappa * d.tau) / tau;
      return d;
    };

    // residual of the full Newton system for a computed direction
    auto newton_residual = [&](const Rhs& r, const Dir& d) {
      Rhs res;
      res.r1 = r.r1 - (apply_A(d.X, d.u) - bvec_ * d.tau);
      res.R2 = apply_At(d.y);
      for (int b = 0; b < nb_; ++b)
        res.R2[b] = r.R2[b] - (res.R2[b] + d.S[b] - C_[b] * d.tau);
      res.r3 = f_ > 0 ? VectorXd(r.r3 - (Bmat_.transpose() * d.y - cf_ * d.tau))
                      : VectorXd::Zero(0);
      double cx_d = cf_.dot(d.u);
      for (int b = 0; b < nb_; ++b) cx_d += inner(C_[b], d.X[b]);
      res.r4 = r.r4 - (cx_d - bvec_.dot(d.y) + d.kappa);
      res.Dc.resize(nb_);
      for (int b = 0; b < nb_; ++b) {
        Rmat xt = sc[b].Rinv * d.X[b] * sc[b].Rinv.transpose();
        Rmat st = sc[b].R.transpose() * d.S[b] * sc[b].R;
        Rmat sum = xt + st;
        Rmat lam_o = 0.5 * (sc[b].lambda.asDiagonal() * sum +
                            sum * sc[b].lambda.asDiagonal());
        res.Dc[b] = r.Dc[b] - lam_o;
      }
      res.dtk = r.dtk - (tau * d.kappa + kappa * d.tau);
      return res;
    };

    // one round of outer refinement counters the cancellation in
    // X-reconstruction when the scaling becomes extreme near convergence
    auto newton = [&](const Rhs& r) {
      Dir d = newton_raw(r);
      for (int pass = 0; pass < 2; ++pass) {
        Rhs res = newton_residual(r, d);
        double rn = res.r1.norm() + std::abs(res.r4) + std::abs(res.dtk);
        for (int b = 0; b < nb_; ++b) rn += res.Dc[b].norm() + res.R2[b].norm();
        if (f_ > 0) rn += res.r3.norm();
        if (rn < 1e-13) break;
        Dir c = newton_raw(res);
        for (int b = 0; b < nb_; ++b) {
          d.X[b] += c.X[b];
          d.S[b] += c.S[b];
        }
        d.y += c.y;
        if (f_ > 0) d.u += c.u;
        d.tau += c.tau;
        d.kappa += c.kappa;
      }
      return d;
    };

    auto max_step = [&](const std::vector<Rmat>& ddX, const std::vector<Rmat>& ddS,
                        double dtau, double dkappa) {
      double a = kInf;
      for (int b = 0; b < nb_; ++b) {
        VectorXd il = sc[b].lambda.cwiseSqrt().cwiseInverse();
        Rmat xt = sc[b].Rinv * ddX[b] * sc[b].Rinv.transpose();
        Rmat st = sc[b].R.transpose() * ddS[b] * sc[b].R;
        a = std::min(a, step_to_boundary(il.asDiagonal() * xt * il.asDiagonal()));
        a = std::min(a, step_to_boundary(il.asDiagonal() * st * il.asDiagonal()));
      }
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
      return a;
    };

    // predictor
    Rhs aff;
    aff.r1 = -rp;
    aff.R2.resize(nb_);
    for (int b = 0; b < nb_; ++b) aff.R2[b] = -Rd[b];
    aff.r3 = -rf;
    aff.r4 = -rg;
    aff.Dc.resize(nb_);
    for (int b = 0; b < nb_; ++b)
      aff.Dc[b] = Rmat((-sc[b].lambda.array().square()).matrix().asDiagonal());
    aff.dtk = -tau * kappa;
    Dir da = newton(aff);
    dXa = da.X;
    dSa = da.S;

    double alpha_aff = std::min(1.0, max_step(dXa, dSa, da.tau, da.kappa));
    double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    // corrector
    double eta = 1.0 - sigma;
    Rhs comb;
    comb.r1 = -eta * rp;
    comb.R2.resize(nb_);
    for (int b = 0; b < nb_; ++b) comb.R2[b] = -eta * Rd[b];
    comb.r3 = -eta * rf;
    comb.r4 = -eta * rg;
    comb.Dc.resize(nb_);
    for (int b = 0; b < nb_; ++b) {
      Rmat xt = sc[b].Rinv * dXa[b] * sc[b].Rinv.transpose();
      Rmat st = sc[b].R.transpose() * dSa[b] * sc[b].R;
      Rmat corr = 0.5 * (xt * st + st * xt);
      comb.Dc[b] = -corr;
      comb.Dc[b] -= Rmat((sc[b].lambda.array().square()).matrix().asDiagonal());
      comb.Dc[b] +=
          sigma * mu * Rmat::Identity(comb.Dc[b].rows(), comb.Dc[b].cols());
    }
    comb.dtk = sigma * mu - tau * kappa - da.tau * da.kappa;
    Dir dc = newton(comb);
    dX = dc.X;
    dS = dc.S;

    double alpha = std::min(1.0, 0.99 * max_step(dX, dS, dc.tau, dc.kappa));
    for (int b = 0; b < nb_; ++b) {
      X[b] = Rmat(0.5 * ((X[b] + alpha * dX[b]) +
                         (X[b] + alpha * dX[b]).transpose()));
      S[b] = Rmat(0.5 * ((S[b] + alpha * dS[b]) +
                         (S[b] + alpha * dS[b]).transpose()));
    }
    if (f_ > 0) u += alpha * dc.u;
    y += alpha * dc.y;
    tau += alpha * dc.tau;
    kappa += alpha * dc.kappa;
  }

  deflate(tau);
  sol.status = SolveStatus::NumericalTrouble;
  sol.message = "maximum iterations reached";
  sol.iterations = opts_.max_iters;
  return sol;
}

// Linearly dependent equality rows stall the interior-point iteration: the
// Schur complement becomes singular and regularization noise stops the
// primal residual from contracting. A pivoted elimination on the constraint
// Gram matrix identifies a maximal independent row subset once per solve.
std::vector<int> independent_rows(const ConicProblem& prob) {
  const int m = static_cast<int>(prob.equalities.size());
  Rmat gram = Rmat::Zero(m, m);
  std::vector<std::map<int, std::vector<ConstraintEntry>>> by_block(
      prob.block_dims.size());
  for (int i = 0; i < m; ++i)
    for (const auto& e : prob.equalities[i].entries)
      by_block[e.block][i].push_back(e);
  for (size_t b = 0; b < prob.block_dims.size(); ++b) {
    const int n = prob.block_dims[b];
    Rmat dense = Rmat::Zero(n, n);
    for (const auto& [cj, entries] : by_block[b]) {
      dense.setZero();
      for (const auto& e : entries) {
        dense(e.row, e.col) = e.value;
        dense(e.col, e.row) = e.value;
      }
      for (const auto& [ci, entries2] : by_block[b]) {
        if (ci > cj) break;
        double s = 0.0;
        for (const auto& e : entries2)
          s += (e.row == e.col ? 1.0 : 2.0) * e.value * dense(e.row, e.col);
        gram(ci, cj) += s;
      }
    }
  }
  for (int i = 0; i < m; ++i)
    for (const auto& [fi, vi] : prob.equalities[i].free_coefs)
      for (int j = i; j < m; ++j)
        for (const auto& [fj, vj] : prob.equalities[j].free_coefs)
          if (fi == fj) gram(i, j) += vi * vj;
  gram = gram.selfadjointView<Eigen::Upper>();

  // pivoted Cholesky; rows whose residual diagonal collapses are dependent
  Eigen::VectorXd diag = gram.diagonal();
  Eigen::VectorXd orig = diag.cwiseMax(1e-300);
  std::vector<int> keep;
  std::vector<bool> used(m, false);
  Rmat lmat(m, m);
  int rank = 0;
  for (int step = 0; step < m; ++step) {
    int piv = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      if (used[i]) continue;
      double rel = diag(i) / orig(i);
      if (rel > best) {
        best = rel;
        piv = i;
      }
    }
    // dependencies in the builders are exact (combinatorial coefficients),
    // so a generous cut separates them cleanly from independent rows even
    // though the Gram squares the conditioning
    if (piv < 0 || best <= 1e-9) break;
    used[piv] = true;
    keep.push_back(piv);
    Eigen::VectorXd col = gram.col(piv);
    for (int r = 0; r < rank; ++r) col -= lmat.col(r) * lmat(piv, r);
    col /= std::sqrt(std::max(diag(piv), 1e-300));
    lmat.col(rank) = col;
    for (int i = 0; i < m; ++i)
      if (!used[i]) diag(i) = std::max(0.0, diag(i) - col(i) * col(i));
    ++rank;
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

ConicSolution solve(const ConicProblem& prob, const SolveOptions& opts) {
  if (prob.block_dims.empty())
    throw ParamError("problem needs at least one PSD block");
  std::vector<int> keep;
  if (opts.presolve) keep = independent_rows(prob);
  if (!opts.presolve) {
    HsdSolver solver(prob, opts);
    return solver.run();
  }
  if (opts.verbose)
    std::cerr << "presolve: kept " << keep.size() << " of "
              << prob.equalities.size() << " equality rows\n";
  if (keep.size() == prob.equalities.size()) {
    HsdSolver solver(prob, opts);
    return solver.run();
  }
  ConicProblem reduced;
  reduced.block_dims = prob.block_dims;
  reduced.num_free = prob.num_free;
  reduced.objective_entries = prob.objective_entries;
  reduced.objective_free = prob.objective_free;
  reduced.equalities.reserve(keep.size());
  for (int i : keep) reduced.equalities.push_back(prob.equalities[i]);
  HsdSolver solver(reduced, opts);
  ConicSolution sol = solver.run();
  // dropped rows are consistent combinations of the kept ones; assigning
  // them zero multipliers keeps the dual certificate valid
  std::vector<double> duals(prob.equalities.size(), 0.0);
  for (size_t i = 0; i < keep.size(); ++i) duals[keep[i]] = sol.duals[i];
  sol.duals = std::move(duals);
  return sol;
}

DualReport extract_duals(const ConicProblem& prob, const ConicSolution& sol) {
  if (sol.status != SolveStatus::Optimal)
    throw StateError("duals only available for Optimal solutions");
  DualReport out;
  out.multipliers.reserve(prob.equalities.size());
  for (size_t i = 0; i < prob.equalities.size(); ++i)
    out.multipliers.emplace_back(prob.equalities[i].name, sol.duals[i]);
  out.block_complementarity.resize(prob.block_dims.size());
  for (size_t b = 0; b < prob.block_dims.size(); ++b)
    out.block_complementarity[b] =
        (sol.primal_blocks[b].array() * sol.dual_blocks[b].array()).sum();
  return out;
}

}  // namespace steerdet
