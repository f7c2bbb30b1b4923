#pragma once

// Continuous-time LTI state-space algebra for cooperative systems:
// partitioned agent models, block-diagonal stacking, lower-LFT closure
// against an adjacency matrix, stability tests and an independent
// H-infinity norm oracle (Hamiltonian bisection + frequency grid).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace coopsyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// One agent of the cooperative system.
///
/// Signals: state x, performance input w1, spatial input w,
/// performance output z1, spatial output z.
///
///   dx/dt = A x + B1 w1 + B w
///   z1    = C1 x + D1 w1 + E1 w
///   z     = C x + F1 w1          (spatial feedthrough w -> z is zero)
struct AgentModel {
  Matrix A;   // n_x  x n_x
  Matrix B1;  // n_x  x n_w1
  Matrix B;   // n_x  x n_w
  Matrix C1;  // n_z1 x n_x
  Matrix C;   // n_z  x n_x
  Matrix D1;  // n_z1 x n_w1
  Matrix E1;  // n_z1 x n_w
  Matrix F1;  // n_z  x n_w1

  int nx() const { return static_cast<int>(A.rows()); }
  int nw1() const { return static_cast<int>(B1.cols()); }
  int nw() const { return static_cast<int>(B.cols()); }
  int nz1() const { return static_cast<int>(C1.rows()); }
  int nz() const { return static_cast<int>(C.rows()); }
};

/// Block-diagonal stack of agents; same block roles at stacked dimensions.
struct StackedSystem {
  Matrix A, B1, B, C1, C, D1, E1, F1;
  int agent_count = 0;
  std::vector<int> nx_offsets, nw1_offsets, nw_offsets, nz1_offsets, nz_offsets;

  int nx() const { return static_cast<int>(A.rows()); }
  int nw1() const { return static_cast<int>(B1.cols()); }
  int nw() const { return static_cast<int>(B.cols()); }
  int nz1() const { return static_cast<int>(C1.rows()); }
  int nz() const { return static_cast<int>(C.rows()); }
};

/// Closed loop H = F_L(S, Upsilon): performance channel w1 -> z1 only.
struct ClosedLoopSystem {
  Matrix A;  // n_x x n_x
  Matrix B;  // n_x x n_w1
  Matrix C;  // n_z1 x n_x
  Matrix D;  // n_z1 x n_w1
};

inline void validate_agent(const AgentModel& g) {
  const int nx = g.nx(), nw1 = g.nw1(), nw = g.nw(), nz1 = g.nz1(), nz = g.nz();
  auto want = [](const Matrix& m, int r, int c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw std::invalid_argument(std::string("AgentModel: bad shape for ") + name);
  };
  want(g.A, nx, nx, "A");
  want(g.B1, nx, nw1, "B1");
  want(g.B, nx, nw, "B");
  want(g.C1, nz1, nx, "C1");
  want(g.C, nz, nx, "C");
  want(g.D1, nz1, nw1, "D1");
  want(g.E1, nz1, nw, "E1");
  want(g.F1, nz, nw1, "F1");
}

/// Largest real part over the eigenvalues of a square matrix.
inline double spectral_abscissa(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

/// True iff all eigenvalues of A satisfy Re(lambda) < -tol.
inline bool is_hurwitz(const Matrix& a, double tol = 1e-9) {
  if (a.rows() != a.cols()) throw std::invalid_argument("is_hurwitz: matrix not square");
  if (a.rows() == 0) return true;
  return spectral_abscissa(a) < -tol;
}

/// diag{G_i}: every partition is the block diagonal of the agents' partitions.
inline StackedSystem block_diag_compose(const std::vector<AgentModel>& agents) {
  if (agents.empty()) throw std::invalid_argument("block_diag_compose: no agents");
  for (const auto& g : agents) validate_agent(g);

  StackedSystem s;
  s.agent_count = static_cast<int>(agents.size());
  int nx = 0, nw1 = 0, nw = 0, nz1 = 0, nz = 0;
  for (const auto& g : agents) {
    s.nx_offsets.push_back(nx);
    s.nw1_offsets.push_back(nw1);
    s.nw_offsets.push_back(nw);
    s.nz1_offsets.push_back(nz1);
    s.nz_offsets.push_back(nz);
    nx += g.nx();
    nw1 += g.nw1();
    nw += g.nw();
    nz1 += g.nz1();
    nz += g.nz();
  }
  s.A = Matrix::Zero(nx, nx);
  s.B1 = Matrix::Zero(nx, nw1);
  s.B = Matrix::Zero(nx, nw);
  s.C1 = Matrix::Zero(nz1, nx);
  s.C = Matrix::Zero(nz, nx);
  s.D1 = Matrix::Zero(nz1, nw1);
  s.E1 = Matrix::Zero(nz1, nw);
  s.F1 = Matrix::Zero(nz, nw1);
  for (int i = 0; i < s.agent_count; ++i) {
    const auto& g = agents[static_cast<size_t>(i)];
    const int ox = s.nx_offsets[i], ow1 = s.nw1_offsets[i], ow = s.nw_offsets[i];
    const int oz1 = s.nz1_offsets[i], oz = s.nz_offsets[i];
    s.A.block(ox, ox, g.nx(), g.nx()) = g.A;
    s.B1.block(ox, ow1, g.nx(), g.nw1()) = g.B1;
    s.B.block(ox, ow, g.nx(), g.nw()) = g.B;
    s.C1.block(oz1, ox, g.nz1(), g.nx()) = g.C1;
    s.C.block(oz, ox, g.nz(), g.nx()) = g.C;
    s.D1.block(oz1, ow1, g.nz1(), g.nw1()) = g.D1;
    s.E1.block(oz1, ow, g.nz1(), g.nw()) = g.E1;
    s.F1.block(oz, ow1, g.nz(), g.nw1()) = g.F1;
  }
  return s;
}

/// Lower LFT closure against the interconnection w = Upsilon z.
/// Always well posed here: the spatial feedthrough block of S is zero.
inline ClosedLoopSystem close_lft(const StackedSystem& s, const Matrix& upsilon) {
  if (upsilon.rows() != s.nw() || upsilon.cols() != s.nz())
    throw std::invalid_argument("close_lft: Upsilon must be n_w x n_z");
  ClosedLoopSystem h;
  h.A = s.A + s.B * upsilon * s.C;
  h.B = s.B1 + s.B * upsilon * s.F1;
  h.C = s.C1 + s.E1 * upsilon * s.C;
  h.D = s.D1 + s.E1 * upsilon * s.F1;
  return h;
}

/// C (jwI - A)^{-1} B + D.
inline ComplexMatrix freq_response(const ClosedLoopSystem& sys, double omega) {
  const int n = static_cast<int>(sys.A.rows());
  ComplexMatrix m = std::complex<double>(0.0, omega) * ComplexMatrix::Identity(n, n) -
                    sys.A.cast<std::complex<double>>();
  Eigen::PartialPivLU<ComplexMatrix> lu(m);
  // resolvent is singular iff jw is an eigenvalue of A
  const double rcond_proxy = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(rcond_proxy > 1e-14 * std::max(1.0, sys.A.cwiseAbs().maxCoeff())))
    throw std::runtime_error("freq_response: resolvent singular at given frequency");
  return sys.C.cast<std::complex<double>>() * lu.solve(sys.B.cast<std::complex<double>>()) +
         sys.D.cast<std::complex<double>>();
}

inline double sigma_max(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

inline double sigma_max(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

namespace detail {

// gamma is a lower bound on the norm iff the BRL Hamiltonian has an
// eigenvalue on the imaginary axis (Boyd-Balakrishnan test).
inline bool hamiltonian_has_imaginary_eig(const ClosedLoopSystem& sys, double gamma) {
  const int n = static_cast<int>(sys.A.rows());
  const int m = static_cast<int>(sys.B.cols());
  const int p = static_cast<int>(sys.C.rows());
  Matrix r = gamma * gamma * Matrix::Identity(m, m) - sys.D.transpose() * sys.D;
  Eigen::LDLT<Matrix> ldlt(r);
  Matrix ri = ldlt.solve(Matrix::Identity(m, m));
  Matrix a11 = sys.A + sys.B * ri * sys.D.transpose() * sys.C;
  Matrix h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = a11;
  h.topRightCorner(n, n) = sys.B * ri * sys.B.transpose();
  h.bottomLeftCorner(n, n) =
      -sys.C.transpose() * (Matrix::Identity(p, p) + sys.D * ri * sys.D.transpose()) * sys.C;
  h.bottomRightCorner(n, n) = -a11.transpose();
  Eigen::EigenSolver<Matrix> es(h, /*computeEigenvectors=*/false);
  const auto ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i).real()) < 1e-8 * std::max(1.0, std::abs(ev(i)))) return true;
  }
  return false;
}

}  // namespace detail

/// Peak singular value of the frequency response over a logarithmic grid.
/// A guaranteed lower bound on the H-infinity norm.
inline double hinf_lower_bound_grid(const ClosedLoopSystem& sys, int points = 500,
                                    double w_lo = 1e-3, double w_hi = 1e3) {
  double peak = sigma_max(sys.D);
  if (sys.B.size() == 0 || sys.C.size() == 0) return peak;
  // include omega = 0 (DC)
  if (sys.A.size() > 0) {
    Matrix dc = sys.D - sys.C * sys.A.partialPivLu().solve(sys.B);
    peak = std::max(peak, sigma_max(dc));
  }
  const double l0 = std::log10(w_lo), l1 = std::log10(w_hi);
  for (int k = 0; k < points; ++k) {
    const double w = std::pow(10.0, l0 + (l1 - l0) * k / (points - 1));
    peak = std::max(peak, sigma_max(freq_response(sys, w)));
  }
  return peak;
}

/// H-infinity norm via bisection on the Hamiltonian imaginary-eigenvalue
/// test, seeded and cross-checked by a frequency grid.
/// Requires a Hurwitz A; throws otherwise (unbounded L2 gain).
inline double hinf_norm(const ClosedLoopSystem& sys, double tol = 1e-6) {
  if (sys.A.size() > 0 && !is_hurwitz(sys.A))
    throw std::runtime_error("hinf_norm: unbounded L2 gain (A not Hurwitz)");
  const double d_norm = sigma_max(sys.D);
  if (sys.B.size() == 0 || sys.C.size() == 0 || sys.A.size() == 0) return d_norm;

  double lo = std::max(hinf_lower_bound_grid(sys), d_norm * (1.0 + 1e-10));
  if (lo == 0.0) {
    // zero response on the whole grid: system may still be nonzero, probe
    if (sys.C.cwiseAbs().maxCoeff() == 0.0 || sys.B.cwiseAbs().maxCoeff() == 0.0) return d_norm;
    lo = 1e-12;
  }
  double hi = std::max(2.0 * lo, 1e-6);
  int guard = 0;
  while (detail::hamiltonian_has_imaginary_eig(sys, hi * (1.0 + 1e-9))) {
    hi *= 2.0;
    if (++guard > 60) throw std::runtime_error("hinf_norm: upper bound search failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::hamiltonian_has_imaginary_eig(sys, mid))
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= tol * std::max(1.0, hi)) break;
  }
  return hi;
}

}  // namespace coopsyn
