#pragma once

// Desk-scale dense semidefinite optimization:
//   minimize c^T x  subject to  F0_j + sum_i x_i F_ij >= 0  per block j.
//
// Primal-dual path-following interior point with Nesterov-Todd scaling,
// infeasible start, Mehrotra-style adaptive centering. Feasibility
// questions are answered through a phase-I max-margin transform
// (maximize t s.t. F(x) - t I >= 0), which is always strictly feasible
// and bounded, so the sign of t* is a reliable certificate; a Farkas
// dual-ray check backs the plain solver on infeasible instances.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmi.hpp"

namespace coopsyn {

enum class SdpStatus { Optimal, Infeasible, MaxIterations, NumericalFailure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::MaxIterations: return "max_iterations";
    case SdpStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

struct SdpSettings {
  double tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;  // fraction-to-boundary
};

struct SdpSolution {
  Vector x;
  SdpStatus status = SdpStatus::NumericalFailure;
  int iterations = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double duality_gap = std::numeric_limits<double>::infinity();
  std::vector<double> block_min_eig;
};

namespace detail {

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// F_j(x) for one block
inline Matrix block_value(const SdpBlock& b, const Vector& x) { return evaluate_block(b, x); }

// largest step a >= 0 with S + a*D staying PSD (S assumed PD); capped
inline double max_psd_step(const Matrix& s, const Matrix& d, double cap = 1.0e8) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix l = llt.matrixL();
  Matrix m = l.triangularView<Eigen::Lower>().solve(d);
  m = l.triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-16) return cap;
  return std::min(cap, 1.0 / (-lmin));
}

struct NtScaling {
  Matrix winv;   // W^{-1}
  Matrix zinv;   // Z^{-1}
};

inline bool nt_scaling(const Matrix& s, const Matrix& z, NtScaling& out) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0) return false;
  const Vector ls = es.eigenvalues();
  Matrix shalf = es.eigenvectors() * ls.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  Matrix sihalf =
      es.eigenvectors() * ls.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> et(sym(shalf * z * shalf));
  if (et.info() != Eigen::Success || et.eigenvalues().minCoeff() <= 0) return false;
  const Vector lt = et.eigenvalues();
  Matrix thalf = et.eigenvectors() * lt.cwiseSqrt().asDiagonal() * et.eigenvectors().transpose();
  out.winv = sym(sihalf * thalf * sihalf);
  Eigen::LLT<Matrix> lz(z);
  if (lz.info() != Eigen::Success) return false;
  out.zinv = lz.solve(Matrix::Identity(z.rows(), z.cols()));
  return true;
}

}  // namespace detail

/// Write the problem as plain text, one sparse triplet per line per block.
inline void dump_sdp(const SdpProblem& p, std::ostream& os) {
  os << "vars " << p.var_count << " blocks " << p.blocks.size() << "\n";
  os << "objective";
  for (int i = 0; i < p.var_count; ++i) os << " " << p.c(i);
  os << "\n";
  for (size_t j = 0; j < p.blocks.size(); ++j) {
    const auto& b = p.blocks[j];
    os << "block " << j << " dim " << b.dim << " name " << b.name << "\n";
    for (int r = 0; r < b.dim; ++r)
      for (int cc = 0; cc < b.dim; ++cc)
        if (b.f0(r, cc) != 0.0) os << "  F0 " << r << " " << cc << " " << b.f0(r, cc) << "\n";
    for (int i = 0; i < static_cast<int>(b.coeff.size()); ++i)
      for (const auto& e : b.coeff[static_cast<size_t>(i)])
        os << "  F" << (i + 1) << " " << e.row << " " << e.col << " " << e.value << "\n";
  }
}

/// Interior-point solve. Deterministic; single-threaded.
inline SdpSolution solve(const SdpProblem& p, const SdpSettings& settings = {}) {
  using detail::sym;
  SdpSolution sol;
  const int m = p.var_count;
  const int nb = static_cast<int>(p.blocks.size());
  if (m < 1) throw std::invalid_argument("sdp solve: no variables");
  for (const auto& b : p.blocks)
    if (!b.f0.allFinite()) throw std::invalid_argument("sdp solve: non-finite data");

  int ntot = 0;
  for (const auto& b : p.blocks) ntot += b.dim;
  if (ntot == 0) {
    sol.status = SdpStatus::Optimal;
    sol.x = Vector::Zero(m);
    sol.objective = 0.0;
    return sol;
  }

  Vector x = Vector::Zero(m);
  Vector x_best = x;
  double merit_best = std::numeric_limits<double>::infinity();
  double pres_best = merit_best, dres_best = merit_best, gap_best = merit_best;
  std::vector<Matrix> s(p.blocks.size()), z(p.blocks.size());
  double data_scale = 0.0;
  for (int j = 0; j < nb; ++j) data_scale = std::max(data_scale, p.blocks[j].f0.cwiseAbs().maxCoeff());
  for (int j = 0; j < nb; ++j) {
    const auto& b = p.blocks[static_cast<size_t>(j)];
    Matrix f = b.f0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(f), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double shift = std::max(0.0, -lmin) + 1.0 + 0.1 * data_scale;
    s[static_cast<size_t>(j)] = sym(f) + shift * Matrix::Identity(b.dim, b.dim);
    z[static_cast<size_t>(j)] = (1.0 + p.c.cwiseAbs().maxCoeff()) * Matrix::Identity(b.dim, b.dim);
  }

  auto dot = [](const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); };
  auto sparse_dot = [](const std::vector<SparseEntry>& f, const Matrix& g) {
    double v = 0.0;
    for (const auto& e : f) v += e.value * g(e.row, e.col);
    return v;
  };

  std::vector<detail::NtScaling> nt(p.blocks.size());
  std::vector<std::vector<Matrix>> gmat(p.blocks.size());  // Winv Fi Winv per block

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    sol.iterations = iter;
    // residuals
    std::vector<Matrix> pres_mat(p.blocks.size());
    double pres = 0.0;
    for (int j = 0; j < nb; ++j) {
      const auto& b = p.blocks[static_cast<size_t>(j)];
      pres_mat[static_cast<size_t>(j)] = detail::block_value(b, x) - s[static_cast<size_t>(j)];
      pres = std::max(pres, pres_mat[static_cast<size_t>(j)].cwiseAbs().maxCoeff() /
                                (1.0 + data_scale));
    }
    Vector d = p.c;
    for (int j = 0; j < nb; ++j) {
      const auto& b = p.blocks[static_cast<size_t>(j)];
      for (int i = 0; i < m; ++i)
        d(i) -= sparse_dot(b.coeff[static_cast<size_t>(i)], z[static_cast<size_t>(j)]);
    }
    const double dres = d.cwiseAbs().maxCoeff() / (1.0 + p.c.cwiseAbs().maxCoeff());

    double mu = 0.0, dobj = 0.0;
    for (int j = 0; j < nb; ++j) {
      mu += dot(s[static_cast<size_t>(j)], z[static_cast<size_t>(j)]);
      dobj -= dot(p.blocks[static_cast<size_t>(j)].f0, z[static_cast<size_t>(j)]);
    }
    mu /= ntot;
    const double pobj = p.c.dot(x);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    const double merit = std::max({pres, dres, gap});
    if (merit < merit_best) {
      merit_best = merit;
      pres_best = pres;
      dres_best = dres;
      gap_best = gap;
      x_best = x;
    }

    if (pres <= settings.tol && dres <= settings.tol && gap <= settings.tol) {
      sol.status = SdpStatus::Optimal;
      break;
    }

    // Farkas-style infeasibility: a nearly-dual-feasible Z with
    // <F0, Z> strongly negative scales into an improving ray.
    {
      double znorm = 0.0, f0z = 0.0, fiz = d.cwiseAbs().maxCoeff();
      for (int j = 0; j < nb; ++j) {
        znorm += z[static_cast<size_t>(j)].norm();
        f0z += dot(p.blocks[static_cast<size_t>(j)].f0, z[static_cast<size_t>(j)]);
      }
      if (znorm > 1e6 && f0z / znorm < -1e-7 &&
          (fiz + p.c.cwiseAbs().maxCoeff()) / znorm < 1e-9) {
        sol.status = SdpStatus::Infeasible;
        break;
      }
    }

    // NT scalings and Schur complement
    bool scale_ok = true;
    for (int j = 0; j < nb && scale_ok; ++j)
      scale_ok = detail::nt_scaling(s[static_cast<size_t>(j)], z[static_cast<size_t>(j)],
                                    nt[static_cast<size_t>(j)]);
    if (!scale_ok) {
      sol.status = SdpStatus::NumericalFailure;
      break;
    }
    for (int j = 0; j < nb; ++j) {
      const auto& b = p.blocks[static_cast<size_t>(j)];
      const Matrix& wi = nt[static_cast<size_t>(j)].winv;
      auto& gj = gmat[static_cast<size_t>(j)];
      gj.assign(static_cast<size_t>(m), Matrix());
      for (int i = 0; i < m; ++i) {
        const auto& entries = b.coeff[static_cast<size_t>(i)];
        if (entries.empty()) continue;
        Matrix g = Matrix::Zero(b.dim, b.dim);
        for (const auto& e : entries) g.noalias() += e.value * wi.col(e.row) * wi.row(e.col);
        gj[static_cast<size_t>(i)] = sym(g);
      }
    }
    Matrix schur = Matrix::Zero(m, m);
    for (int j = 0; j < nb; ++j) {
      const auto& b = p.blocks[static_cast<size_t>(j)];
      const auto& gj = gmat[static_cast<size_t>(j)];
      for (int i = 0; i < m; ++i) {
        if (b.coeff[static_cast<size_t>(i)].empty()) continue;
        for (int k = i; k < m; ++k) {
          if (gj[static_cast<size_t>(k)].size() == 0) continue;
          schur(i, k) += sparse_dot(b.coeff[static_cast<size_t>(i)], gj[static_cast<size_t>(k)]);
        }
      }
    }
    schur = schur.selfadjointView<Eigen::Upper>();
    schur.diagonal().array() += 1e-13 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Matrix> schur_fact(schur);
    if (schur_fact.info() != Eigen::Success) {
      sol.status = SdpStatus::NumericalFailure;
      break;
    }

    auto direction = [&](const std::vector<Matrix>& rc, Vector& dx, std::vector<Matrix>& ds,
                         std::vector<Matrix>& dz) {
      Vector q = -d;
      for (int j = 0; j < nb; ++j) {
        const auto& b = p.blocks[static_cast<size_t>(j)];
        const Matrix& wi = nt[static_cast<size_t>(j)].winv;
        Matrix rhs = sym(wi * (rc[static_cast<size_t>(j)] - pres_mat[static_cast<size_t>(j)]) * wi);
        for (int i = 0; i < m; ++i) q(i) += sparse_dot(b.coeff[static_cast<size_t>(i)], rhs);
      }
      dx = schur_fact.solve(q);
      ds.resize(p.blocks.size());
      dz.resize(p.blocks.size());
      for (int j = 0; j < nb; ++j) {
        const auto& b = p.blocks[static_cast<size_t>(j)];
        Matrix dsj = pres_mat[static_cast<size_t>(j)];
        for (int i = 0; i < m; ++i)
          for (const auto& e : b.coeff[static_cast<size_t>(i)]) dsj(e.row, e.col) += dx(i) * e.value;
        dsj = sym(dsj);
        const Matrix& wi = nt[static_cast<size_t>(j)].winv;
        ds[static_cast<size_t>(j)] = dsj;
        dz[static_cast<size_t>(j)] = sym(wi * (rc[static_cast<size_t>(j)] - dsj) * wi);
      }
    };

    // predictor (affine, sigma = 0)
    std::vector<Matrix> rc(p.blocks.size());
    for (int j = 0; j < nb; ++j) rc[static_cast<size_t>(j)] = -s[static_cast<size_t>(j)];
    Vector dx_aff;
    std::vector<Matrix> ds_aff, dz_aff;
    direction(rc, dx_aff, ds_aff, dz_aff);
    double ap = 1.0, ad = 1.0;
    for (int j = 0; j < nb; ++j) {
      ap = std::min(ap, settings.step_fraction *
                            detail::max_psd_step(s[static_cast<size_t>(j)], ds_aff[static_cast<size_t>(j)]));
      ad = std::min(ad, settings.step_fraction *
                            detail::max_psd_step(z[static_cast<size_t>(j)], dz_aff[static_cast<size_t>(j)]));
    }
    double mu_aff = 0.0;
    for (int j = 0; j < nb; ++j)
      mu_aff += detail::sym(s[static_cast<size_t>(j)] + ap * ds_aff[static_cast<size_t>(j)])
                    .cwiseProduct(detail::sym(z[static_cast<size_t>(j)] + ad * dz_aff[static_cast<size_t>(j)]))
                    .sum();
    mu_aff = std::max(mu_aff / ntot, 0.0);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::min(std::max(sigma, 1e-4), 1.0 - 1e-4);
    // keep centering up while residuals dominate the barrier
    if (std::max(pres, dres) > mu) sigma = std::max(sigma, 0.5);

    for (int j = 0; j < nb; ++j)
      rc[static_cast<size_t>(j)] =
          sigma * mu * nt[static_cast<size_t>(j)].zinv - s[static_cast<size_t>(j)];
    Vector dx;
    std::vector<Matrix> ds, dz;
    direction(rc, dx, ds, dz);
    if (!dx.allFinite()) {
      sol.status = SdpStatus::NumericalFailure;
      break;
    }
    ap = 1.0;
    ad = 1.0;
    for (int j = 0; j < nb; ++j) {
      ap = std::min(ap, settings.step_fraction *
                            detail::max_psd_step(s[static_cast<size_t>(j)], ds[static_cast<size_t>(j)]));
      ad = std::min(ad, settings.step_fraction *
                            detail::max_psd_step(z[static_cast<size_t>(j)], dz[static_cast<size_t>(j)]));
    }
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    x += ap * dx;
    for (int j = 0; j < nb; ++j) {
      s[static_cast<size_t>(j)] = sym(s[static_cast<size_t>(j)] + ap * ds[static_cast<size_t>(j)]);
      z[static_cast<size_t>(j)] = sym(z[static_cast<size_t>(j)] + ad * dz[static_cast<size_t>(j)]);
    }
    if (iter + 1 == settings.max_iterations) sol.status = SdpStatus::MaxIterations;
  }

  // report the best iterate seen; classify late numerical stalls by how
  // close that iterate already is to optimality
  sol.x = x_best;
  sol.primal_residual = pres_best;
  sol.dual_residual = dres_best;
  sol.duality_gap = gap_best;
  sol.objective = p.c.dot(x_best);
  if (merit_best <= settings.tol) {
    if (sol.status != SdpStatus::Infeasible) sol.status = SdpStatus::Optimal;
  } else if (sol.status == SdpStatus::NumericalFailure && merit_best <= 1e-5) {
    sol.status = SdpStatus::MaxIterations;
  }

  sol.block_min_eig.clear();
  for (const auto& b : p.blocks) {
    Matrix f = detail::block_value(b, sol.x);
    if (b.dim == 0) {
      sol.block_min_eig.push_back(0.0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(detail::sym(f), Eigen::EigenvaluesOnly);
    sol.block_min_eig.push_back(es.eigenvalues().minCoeff());
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Phase-I feasibility and bisection
// ---------------------------------------------------------------------------

struct FeasibilityResult {
  bool feasible = false;
  double margin = 0.0;  // optimal t of the max-margin transform
  Vector x;             // witness (meaningful when feasible)
  SdpStatus status = SdpStatus::NumericalFailure;
};

/// maximize t s.t. F_j(x) - t I >= 0, t <= cap. Strictly feasible and
/// bounded by construction; the sign of t* certifies feasibility of the
/// original constraints.
inline FeasibilityResult check_feasible(const SdpProblem& p, const SdpSettings& settings = {},
                                        double cap = 100.0, double feas_tol = 1e-9) {
  SdpProblem q = p;
  q.var_count = p.var_count + 1;
  q.c = Vector::Zero(q.var_count);
  q.c(p.var_count) = -1.0;  // maximize t
  for (auto& b : q.blocks) {
    b.coeff.resize(static_cast<size_t>(q.var_count));
    auto& te = b.coeff[static_cast<size_t>(p.var_count)];
    for (int r = 0; r < b.dim; ++r) te.push_back({r, r, -1.0});
  }
  SdpBlock capblk;
  capblk.name = "margin_cap";
  capblk.dim = 1;
  capblk.f0 = Matrix::Constant(1, 1, cap);
  capblk.coeff.assign(static_cast<size_t>(q.var_count), {});
  capblk.coeff[static_cast<size_t>(p.var_count)].push_back({0, 0, -1.0});
  q.blocks.push_back(capblk);
  q.scalar_of_var = {};  // transformed problem; registry mapping not meaningful

  SdpSolution sol = solve(q, settings);
  FeasibilityResult r;
  r.status = sol.status;
  if (sol.x.size() != q.var_count || !sol.x.allFinite()) return r;
  r.x = sol.x.head(p.var_count);
  // certify by direct eigendecomposition of the original blocks at the
  // returned point, independent of the solver's own status
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& b : p.blocks) {
    if (b.dim == 0) continue;
    Matrix f = evaluate_block(b, r.x);
    Eigen::SelfAdjointEigenSolver<Matrix> es(detail::sym(f), Eigen::EigenvaluesOnly);
    margin = std::min(margin, es.eigenvalues().minCoeff());
  }
  if (p.blocks.empty()) margin = cap;
  r.margin = margin;
  r.feasible = margin > feas_tol;
  return r;
}

struct BisectionResult {
  double gamma_star = 0.0;
  Vector witness;            // last feasible x
  double witness_gamma = 0.0;
  int evaluations = 0;
};

/// Bisect a monotone feasibility family: infeasible at lo, feasible at hi.
/// If lo itself is feasible, returns lo with its witness.
inline BisectionResult bisect_feasibility(const std::function<SdpProblem(double)>& builder,
                                          double lo, double hi, double tol,
                                          const SdpSettings& settings = {}) {
  if (!(lo < hi)) throw std::invalid_argument("bisect_feasibility: need lo < hi");
  BisectionResult r;
  FeasibilityResult fhi = check_feasible(builder(hi), settings);
  ++r.evaluations;
  if (!fhi.feasible)
    throw std::runtime_error("bisect_feasibility: interval does not bracket (hi infeasible)");
  FeasibilityResult flo = check_feasible(builder(lo), settings);
  ++r.evaluations;
  if (flo.feasible) {
    r.gamma_star = lo;
    r.witness = flo.x;
    r.witness_gamma = lo;
    return r;
  }
  Vector witness = fhi.x;
  double witness_gamma = hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    FeasibilityResult f = check_feasible(builder(mid), settings);
    ++r.evaluations;
    if (f.feasible) {
      hi = mid;
      witness = f.x;
      witness_gamma = mid;
    } else {
      lo = mid;
    }
  }
  r.gamma_star = hi;
  r.witness = witness;
  r.witness_gamma = witness_gamma;
  return r;
}

}  // namespace coopsyn
