#pragma once

// Parameterized adjacency matrices Upsilon(theta) = Upsilon0 + sum_k theta_k * basis_k,
// topology validation, and the benchmark topology growth rule.

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <vector>

#include "sstools.hpp"

namespace coopsyn {

struct Theta {
  Vector values;
};

/// Affine family of adjacency matrices with box-bounded parameters.
/// Invariants: zero diagonal for every admissible theta; every entry in
/// [entry_lo, entry_hi] over the whole parameter box.
struct AdjacencyParameterization {
  int agent_count = 0;
  Matrix upsilon0;
  std::vector<Matrix> bases;
  std::vector<std::pair<double, double>> bounds;  // per-parameter closed intervals
  double entry_lo = 0.0, entry_hi = 1.0;

  int parameter_count() const { return static_cast<int>(bases.size()); }
};

inline bool theta_within_bounds(const AdjacencyParameterization& p, const Theta& th,
                                double tol = 1e-12) {
  if (th.values.size() != p.parameter_count()) return false;
  for (int k = 0; k < p.parameter_count(); ++k) {
    if (th.values(k) < p.bounds[static_cast<size_t>(k)].first - tol ||
        th.values(k) > p.bounds[static_cast<size_t>(k)].second + tol)
      return false;
  }
  return true;
}

inline Matrix eval_adjacency(const AdjacencyParameterization& p, const Theta& th) {
  if (th.values.size() != p.parameter_count())
    throw std::invalid_argument("eval_adjacency: theta length mismatch");
  if (!theta_within_bounds(p, th)) {
    std::ostringstream os;
    os << "eval_adjacency: theta out of bounds:";
    for (int k = 0; k < p.parameter_count(); ++k) {
      const auto& b = p.bounds[static_cast<size_t>(k)];
      if (th.values(k) < b.first || th.values(k) > b.second)
        os << " theta[" << k << "]=" << th.values(k) << " not in [" << b.first << "," << b.second
           << "]";
    }
    throw std::domain_error(os.str());
  }
  Matrix u = p.upsilon0;
  for (int k = 0; k < p.parameter_count(); ++k) u += th.values(k) * p.bases[static_cast<size_t>(k)];
  return u;
}

/// Checks zero diagonal and entry bounds at every vertex of the parameter
/// box. Exact for affine families.
inline void validate_parameterization(const AdjacencyParameterization& p, double tol = 1e-12) {
  const int n = p.agent_count;
  if (p.upsilon0.rows() != n || p.upsilon0.cols() != n)
    throw std::invalid_argument("adjacency: Upsilon0 must be N x N");
  for (const auto& b : p.bases)
    if (b.rows() != n || b.cols() != n)
      throw std::invalid_argument("adjacency: basis must be N x N");
  if (p.bounds.size() != p.bases.size())
    throw std::invalid_argument("adjacency: one bound interval per basis");
  for (int i = 0; i < n; ++i) {
    if (std::abs(p.upsilon0(i, i)) > tol)
      throw std::invalid_argument("adjacency: Upsilon0 diagonal not zero");
    for (const auto& b : p.bases)
      if (std::abs(b(i, i)) > tol) throw std::invalid_argument("adjacency: basis diagonal not zero");
  }
  const int m = p.parameter_count();
  for (long mask = 0; mask < (1L << m); ++mask) {
    Theta th;
    th.values.resize(m);
    for (int k = 0; k < m; ++k)
      th.values(k) = (mask >> k & 1) ? p.bounds[static_cast<size_t>(k)].second
                                     : p.bounds[static_cast<size_t>(k)].first;
    Matrix u = p.upsilon0;
    for (int k = 0; k < m; ++k) u += th.values(k) * p.bases[static_cast<size_t>(k)];
    if (u.minCoeff() < p.entry_lo - tol || u.maxCoeff() > p.entry_hi + tol) {
      std::ostringstream os;
      os << "adjacency: entries leave [" << p.entry_lo << "," << p.entry_hi
         << "] at a bound-box vertex (min " << u.minCoeff() << ", max " << u.maxCoeff() << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

namespace detail {

// The four-agent benchmark adjacency: Upsilon0 at alpha = 0 plus the
// alpha-direction dUpsilon/dalpha.
inline void benchmark_n4(Matrix& u0, Matrix& du) {
  u0.setZero(4, 4);
  du.setZero(4, 4);
  // row i listens per the fixed benchmark topology
  u0(0, 3) = 1;  du(0, 1) = 2;  du(0, 2) = 3;  du(0, 3) = -5;
  u0(1, 3) = 1;  du(1, 0) = 1;  du(1, 2) = 3;  du(1, 3) = -4;
  u0(2, 3) = 1;  du(2, 0) = 1;  du(2, 1) = 2;  du(2, 3) = -3;
  u0(3, 2) = 1;  du(3, 0) = 1;  du(3, 1) = 2;  du(3, 2) = -3;
}

}  // namespace detail

/// Benchmark topology family, one scalar parameter alpha in [0, 0.2].
/// N = 4 is the reference four-agent adjacency; N = 3 removes the first
/// row and column; N > 4 appends one agent at a time, each listening to
/// agents 1 and N-1 with weights alpha and 1 - alpha.
inline AdjacencyParameterization benchmark_topology(int n) {
  if (n < 3) throw std::invalid_argument("benchmark_topology: N must be >= 3");
  Matrix u0_4, du_4;
  detail::benchmark_n4(u0_4, du_4);

  AdjacencyParameterization p;
  p.agent_count = n;
  p.bounds = {{0.0, 0.2}};
  if (n == 3) {
    p.upsilon0 = u0_4.bottomRightCorner(3, 3);
    p.bases = {du_4.bottomRightCorner(3, 3)};
    return p;
  }
  Matrix u0 = Matrix::Zero(n, n), du = Matrix::Zero(n, n);
  u0.topLeftCorner(4, 4) = u0_4;
  du.topLeftCorner(4, 4) = du_4;
  for (int i = 4; i < n; ++i) {
    // added agent i+1 listens to agent 1 (weight alpha) and agent i (weight 1-alpha)
    du(i, 0) = 1.0;
    u0(i, i - 1) = 1.0;
    du(i, i - 1) = -1.0;
  }
  p.upsilon0 = u0;
  p.bases = {du};
  return p;
}

inline double spectral_norm(const Matrix& m) { return sigma_max(m); }

}  // namespace coopsyn
