#pragma once

// Symbolic affine-in-variables block matrix inequalities: a variable
// registry with structure (symmetric / skew-symmetric / full / scalar),
// affine symmetric expressions, bilinear pair markers for sequential
// linearization, sparsity screening, unknown counting, and compilation
// to standard semidefinite form.

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sstools.hpp"

namespace coopsyn {

enum class VarStructure { Symmetric, SkewSymmetric, Full, Scalar };

using VarHandle = int;

struct VarInfo {
  std::string name;
  VarStructure structure = VarStructure::Scalar;
  int rows = 1, cols = 1;
  bool counted = true;  // gamma-like performance handles are excluded from accounting
  int scalar_offset = 0;
  int scalar_count = 0;
};

inline int scalar_count_for(VarStructure s, int rows, int cols) {
  switch (s) {
    case VarStructure::Symmetric: return rows * (rows + 1) / 2;
    case VarStructure::SkewSymmetric: return rows * (rows - 1) / 2;
    case VarStructure::Full: return rows * cols;
    case VarStructure::Scalar: return 1;
  }
  return 0;
}

/// Registry of matrix-valued decision variables. Mutation is single-owner
/// during assembly; freeze() records the sparsity-screening verdict, after
/// which reads are concurrent-safe.
class VariableRegistry {
 public:
  VarHandle declare(const std::string& name, VarStructure s, int rows, int cols = -1,
                    bool counted = true) {
    if (rows < 1) throw std::invalid_argument("declare_variable: dim must be >= 1");
    if (s == VarStructure::Scalar) {
      rows = 1;
      cols = 1;
    }
    if (cols < 0) cols = rows;
    if ((s == VarStructure::Symmetric || s == VarStructure::SkewSymmetric) && rows != cols)
      throw std::invalid_argument("declare_variable: structured variable must be square");
    VarInfo v;
    v.name = name;
    v.structure = s;
    v.rows = rows;
    v.cols = cols;
    v.counted = counted;
    v.scalar_offset = total_scalars_;
    v.scalar_count = scalar_count_for(s, rows, cols);
    total_scalars_ += v.scalar_count;
    vars_.push_back(v);
    return static_cast<VarHandle>(vars_.size()) - 1;
  }

  const VarInfo& info(VarHandle h) const { return vars_.at(static_cast<size_t>(h)); }
  int size() const { return static_cast<int>(vars_.size()); }
  int raw_scalar_count() const { return total_scalars_; }

  /// Basis matrix of scalar component k of variable h: dV/ds_k.
  Matrix basis(VarHandle h, int k) const {
    const VarInfo& v = info(h);
    Matrix b = Matrix::Zero(v.rows, v.cols);
    switch (v.structure) {
      case VarStructure::Scalar:
        b(0, 0) = 1.0;
        return b;
      case VarStructure::Full: {
        b(k / v.cols, k % v.cols) = 1.0;
        return b;
      }
      case VarStructure::Symmetric: {
        int idx = 0;
        for (int i = 0; i < v.rows; ++i)
          for (int j = i; j < v.cols; ++j, ++idx)
            if (idx == k) {
              b(i, j) = 1.0;
              b(j, i) = 1.0;
              return b;
            }
        break;
      }
      case VarStructure::SkewSymmetric: {
        int idx = 0;
        for (int i = 0; i < v.rows; ++i)
          for (int j = i + 1; j < v.cols; ++j, ++idx)
            if (idx == k) {
              b(i, j) = 1.0;
              b(j, i) = -1.0;
              return b;
            }
        break;
      }
    }
    throw std::out_of_range("basis: component index out of range");
  }

  /// Reassemble the matrix value of variable h from its local scalar vector.
  Matrix value_from_scalars(VarHandle h, const Vector& scalars) const {
    const VarInfo& v = info(h);
    if (scalars.size() != v.scalar_count)
      throw std::invalid_argument("value_from_scalars: wrong component count");
    Matrix m = Matrix::Zero(v.rows, v.cols);
    for (int k = 0; k < v.scalar_count; ++k) m += scalars(k) * basis(h, k);
    return m;
  }

  /// Project a matrix value of variable h onto its scalar components.
  Vector scalars_from_value(VarHandle h, const Matrix& m) const {
    const VarInfo& v = info(h);
    Vector s(v.scalar_count);
    switch (v.structure) {
      case VarStructure::Scalar: s(0) = m(0, 0); break;
      case VarStructure::Full: {
        int idx = 0;
        for (int i = 0; i < v.rows; ++i)
          for (int j = 0; j < v.cols; ++j) s(idx++) = m(i, j);
        break;
      }
      case VarStructure::Symmetric: {
        int idx = 0;
        for (int i = 0; i < v.rows; ++i)
          for (int j = i; j < v.cols; ++j) s(idx++) = 0.5 * (m(i, j) + m(j, i));
        break;
      }
      case VarStructure::SkewSymmetric: {
        int idx = 0;
        for (int i = 0; i < v.rows; ++i)
          for (int j = i + 1; j < v.cols; ++j) s(idx++) = 0.5 * (m(i, j) - m(j, i));
        break;
      }
    }
    return s;
  }

  void freeze(const std::vector<char>& surviving) {
    if (static_cast<int>(surviving.size()) != total_scalars_)
      throw std::invalid_argument("freeze: mask size mismatch");
    surviving_ = surviving;
  }
  bool frozen() const { return !surviving_.empty(); }

  /// Scalar unknowns of counted variables; after freeze(), only entries
  /// that survived the sparsity screening.
  int count_unknowns() const {
    int n = 0;
    for (const auto& v : vars_) {
      if (!v.counted) continue;
      if (surviving_.empty()) {
        n += v.scalar_count;
      } else {
        for (int k = 0; k < v.scalar_count; ++k)
          if (surviving_[static_cast<size_t>(v.scalar_offset + k)]) ++n;
      }
    }
    return n;
  }

 private:
  std::vector<VarInfo> vars_;
  int total_scalars_ = 0;
  std::vector<char> surviving_;
};

using Assignment = std::map<VarHandle, Matrix>;

/// One symmetrized affine term: L * V * R + (L * V * R)^T.
struct SymTerm {
  VarHandle var;
  Matrix left, right;
};

/// Symmetric matrix expression, affine in the registered variables:
///   constant + sum_k (L_k V_k R_k + (L_k V_k R_k)^T).
struct AffineMatrixExpression {
  int dim = 0;
  Matrix constant;  // symmetric
  std::vector<SymTerm> terms;

  static AffineMatrixExpression zero(int dim) {
    AffineMatrixExpression e;
    e.dim = dim;
    e.constant = Matrix::Zero(dim, dim);
    return e;
  }
  void add_term(VarHandle v, const Matrix& left, const Matrix& right) {
    terms.push_back({v, left, right});
  }
};

inline Matrix evaluate(const AffineMatrixExpression& e, const Assignment& a) {
  Matrix m = e.constant;
  for (const auto& t : e.terms) {
    auto it = a.find(t.var);
    if (it == a.end()) throw std::invalid_argument("evaluate: assignment missing a handle");
    Matrix lvr = t.left * it->second * t.right;
    m += lvr + lvr.transpose();
  }
  return m;
}

/// Non-symmetrized affine matrix map  constant + sum_k L_k V_k R_k,
/// used as one factor of a bilinear pair.
struct AffineMatrixMap {
  int rows = 0, cols = 0;
  Matrix constant;
  std::vector<SymTerm> terms;  // here meaning L*V*R only (no transpose)

  static AffineMatrixMap zero(int rows, int cols) {
    AffineMatrixMap m;
    m.rows = rows;
    m.cols = cols;
    m.constant = Matrix::Zero(rows, cols);
    return m;
  }
  void add_term(VarHandle v, const Matrix& left, const Matrix& right) {
    terms.push_back({v, left, right});
  }
};

inline Matrix evaluate(const AffineMatrixMap& m, const Assignment& a) {
  Matrix out = m.constant;
  for (const auto& t : m.terms) {
    auto it = a.find(t.var);
    if (it == a.end()) throw std::invalid_argument("evaluate map: assignment missing a handle");
    out += t.left * it->second * t.right;
  }
  return out;
}

/// Marker for a bilinear contribution G^T H + H^T G where G and H are
/// affine maps in disjoint variable groups. Tagged on a constraint and
/// replaced by a convex-concave inner approximation during linearization.
struct BilinearPair {
  AffineMatrixMap g, h;
};

enum class Sense { NegativeDefinite, PositiveDefinite };

struct Constraint {
  std::string name;
  AffineMatrixExpression expr;
  std::vector<BilinearPair> bilinear;
  Sense sense = Sense::NegativeDefinite;
  double margin = 0.0;  // strictness margin epsilon >= 0
};

/// Linear objective over scalarized variable components.
struct ObjectiveTerm {
  VarHandle var;
  int component;  // scalar component index within the variable
  double coeff;
};

struct MISystem {
  std::vector<Constraint> constraints;
  std::vector<ObjectiveTerm> objective;  // empty = feasibility
};

inline bool has_bilinear(const MISystem& sys) {
  for (const auto& c : sys.constraints)
    if (!c.bilinear.empty()) return true;
  return false;
}

/// Full (bilinear terms included) evaluation of a constraint body.
inline Matrix evaluate(const Constraint& c, const Assignment& a) {
  Matrix m = evaluate(c.expr, a);
  for (const auto& p : c.bilinear) {
    Matrix g = evaluate(p.g, a), h = evaluate(p.h, a);
    m += g.transpose() * h + h.transpose() * g;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Standard-form compilation
// ---------------------------------------------------------------------------

struct SparseEntry {
  int row, col;
  double value;
};

/// One PSD block F0 + sum_i x_i F_i >= 0 with sparse coefficients.
struct SdpBlock {
  std::string name;
  int dim = 0;
  Matrix f0;
  std::vector<std::vector<SparseEntry>> coeff;  // per solver variable
};

/// min c^T x subject to per-block PSD constraints.
struct SdpProblem {
  std::vector<SdpBlock> blocks;
  Vector c;
  int var_count = 0;
  std::vector<int> scalar_of_var;  // solver index -> registry scalar index
};

struct StandardFormOptions {
  bool screen_variables = true;  // drop scalar unknowns with all-zero coefficients
  bool screen_slots = true;      // drop vacuous rows/cols (zero or trivially satisfied)
};

namespace detail {

// Coefficient of one registry scalar in a constraint, on the screened slots.
inline Matrix scalar_coefficient(const VariableRegistry& reg, const Constraint& c, VarHandle h,
                                 int k) {
  Matrix coeff = Matrix::Zero(c.expr.dim, c.expr.dim);
  const Matrix b = reg.basis(h, k);
  for (const auto& t : c.expr.terms) {
    if (t.var != h) continue;
    Matrix lvr = t.left * b * t.right;
    coeff += lvr + lvr.transpose();
  }
  return coeff;
}

}  // namespace detail

/// Compile a pure-LMI system to standard form. Throws if any bilinear
/// marker is still present (linearize first). Performs the sparsity
/// screening and freezes the registry with the surviving-variable mask.
inline SdpProblem to_standard_form(const MISystem& sys, VariableRegistry& reg,
                                   const StandardFormOptions& opt = {}) {
  if (has_bilinear(sys))
    throw std::invalid_argument("to_standard_form: bilinear markers present; linearize first");

  const int m_raw = reg.raw_scalar_count();

  // Pass 1: dense coefficient matrices per constraint per touched scalar.
  // Registry scalars touched nowhere keep empty columns and are screened.
  struct PerConstraint {
    std::vector<int> scalars;         // registry scalar indices with nonzero coefficient
    std::vector<Matrix> coeffs;       // parallel to `scalars`
    Matrix constant;
    std::vector<int> keep_slots;
  };
  std::vector<PerConstraint> pcs;
  std::vector<char> touched(static_cast<size_t>(m_raw), 0);

  for (const auto& c : sys.constraints) {
    PerConstraint pc;
    pc.constant = c.expr.constant;
    const double sgn = (c.sense == Sense::NegativeDefinite) ? -1.0 : 1.0;
    std::map<int, Matrix> coeff_map;
    for (const auto& t : c.expr.terms) {
      const VarInfo& v = reg.info(t.var);
      for (int k = 0; k < v.scalar_count; ++k) {
        Matrix lvr = t.left * reg.basis(t.var, k) * t.right;
        Matrix contrib = lvr + lvr.transpose();
        if (contrib.cwiseAbs().maxCoeff() == 0.0) continue;
        auto [it, inserted] =
            coeff_map.try_emplace(v.scalar_offset + k, Matrix::Zero(c.expr.dim, c.expr.dim));
        it->second += contrib;
      }
    }
    for (auto it = coeff_map.begin(); it != coeff_map.end();) {
      if (it->second.cwiseAbs().maxCoeff() < 1e-300)
        it = coeff_map.erase(it);
      else
        ++it;
    }
    // slot screening: a slot is vacuous when no variable touches its
    // row/col and the constant row/col is zero off-diagonal with a
    // diagonal entry that is zero or already strictly on the right side
    pc.keep_slots.reserve(static_cast<size_t>(c.expr.dim));
    for (int s = 0; s < c.expr.dim; ++s) {
      bool live = !opt.screen_slots;
      if (!live) {
        for (int j = 0; j < c.expr.dim && !live; ++j) {
          if (j == s) continue;
          if (pc.constant(s, j) != 0.0 || pc.constant(j, s) != 0.0) live = true;
        }
        const double d = sgn * pc.constant(s, s);
        // sgn*constant must end up PSD; a lone diagonal d > 0 is trivially
        // satisfied, d == 0 is vacuous padding, d < 0 must stay visible
        if (!live && d < 0.0) live = true;
        for (const auto& [idx, cm] : coeff_map) {
          if (live) break;
          if (cm.row(s).cwiseAbs().maxCoeff() != 0.0 || cm.col(s).cwiseAbs().maxCoeff() != 0.0)
            live = true;
        }
      }
      if (live) pc.keep_slots.push_back(s);
    }
    for (const auto& [idx, cm] : coeff_map) {
      pc.scalars.push_back(idx);
      pc.coeffs.push_back(cm);
      touched[static_cast<size_t>(idx)] = 1;
    }
    pcs.push_back(std::move(pc));
  }

  // objective scalars always survive
  for (const auto& o : sys.objective) {
    const VarInfo& v = reg.info(o.var);
    touched[static_cast<size_t>(v.scalar_offset + o.component)] = 1;
  }

  std::vector<char> survive = touched;
  if (!opt.screen_variables) survive.assign(static_cast<size_t>(m_raw), 1);
  reg.freeze(survive);

  SdpProblem p;
  std::vector<int> solver_index(static_cast<size_t>(m_raw), -1);
  for (int i = 0; i < m_raw; ++i) {
    if (survive[static_cast<size_t>(i)]) {
      solver_index[static_cast<size_t>(i)] = p.var_count++;
      p.scalar_of_var.push_back(i);
    }
  }
  p.c = Vector::Zero(p.var_count);
  for (const auto& o : sys.objective) {
    const VarInfo& v = reg.info(o.var);
    p.c(solver_index[static_cast<size_t>(v.scalar_offset + o.component)]) += o.coeff;
  }

  for (size_t ci = 0; ci < sys.constraints.size(); ++ci) {
    const auto& c = sys.constraints[ci];
    const auto& pc = pcs[ci];
    const double sgn = (c.sense == Sense::NegativeDefinite) ? -1.0 : 1.0;
    SdpBlock blk;
    blk.name = c.name;
    blk.dim = static_cast<int>(pc.keep_slots.size());
    blk.f0 = Matrix::Zero(blk.dim, blk.dim);
    for (int a = 0; a < blk.dim; ++a)
      for (int b = 0; b < blk.dim; ++b)
        blk.f0(a, b) = sgn * pc.constant(pc.keep_slots[static_cast<size_t>(a)],
                                         pc.keep_slots[static_cast<size_t>(b)]);
    blk.f0 -= c.margin * Matrix::Identity(blk.dim, blk.dim);
    blk.coeff.assign(static_cast<size_t>(p.var_count), {});
    for (size_t q = 0; q < pc.scalars.size(); ++q) {
      const int xi = solver_index[static_cast<size_t>(pc.scalars[q])];
      auto& entries = blk.coeff[static_cast<size_t>(xi)];
      const Matrix& cm = pc.coeffs[q];
      for (int a = 0; a < blk.dim; ++a)
        for (int b = 0; b < blk.dim; ++b) {
          const double v = sgn * cm(pc.keep_slots[static_cast<size_t>(a)],
                                    pc.keep_slots[static_cast<size_t>(b)]);
          if (v != 0.0) entries.push_back({a, b, v});
        }
    }
    p.blocks.push_back(std::move(blk));
  }
  return p;
}

/// Evaluate one standard-form block at a solver vector.
inline Matrix evaluate_block(const SdpBlock& b, const Vector& x) {
  Matrix m = b.f0;
  for (int i = 0; i < static_cast<int>(b.coeff.size()); ++i)
    for (const auto& e : b.coeff[static_cast<size_t>(i)]) m(e.row, e.col) += x(i) * e.value;
  return m;
}

/// Map a registry-wide assignment onto the solver vector of a compiled problem.
inline Vector solver_vector_from_assignment(const SdpProblem& p, const VariableRegistry& reg,
                                            const Assignment& a) {
  Vector full = Vector::Zero(reg.raw_scalar_count());
  for (const auto& [h, m] : a) {
    const VarInfo& v = reg.info(h);
    Vector s = reg.scalars_from_value(h, m);
    full.segment(v.scalar_offset, v.scalar_count) = s;
  }
  Vector x(p.var_count);
  for (int i = 0; i < p.var_count; ++i) x(i) = full(p.scalar_of_var[static_cast<size_t>(i)]);
  return x;
}

/// Expand a solver vector back to per-variable matrix values.
inline Assignment assignment_from_solver_vector(const SdpProblem& p, const VariableRegistry& reg,
                                                const Vector& x) {
  Vector full = Vector::Zero(reg.raw_scalar_count());
  for (int i = 0; i < p.var_count; ++i) full(p.scalar_of_var[static_cast<size_t>(i)]) = x(i);
  Assignment a;
  for (VarHandle h = 0; h < reg.size(); ++h)
    a[h] = reg.value_from_scalars(h, full.segment(reg.info(h).scalar_offset,
                                                  reg.info(h).scalar_count));
  return a;
}

}  // namespace coopsyn
