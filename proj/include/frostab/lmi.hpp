#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frostab/eigen.hpp"
#include "frostab/matrix.hpp"

// ============================================================================
// Affine symmetric matrix-inequality problems in matrix decision variables.
//
// A constraint is an AffineMatrixExpr E(X1, ..., Xk) together with a sense
// (negative definite, positive definite, positive semidefinite).  Each term
// contributes  L * X * R,  optionally with X transposed, and optionally
// symmetrized (the term plus its transpose).  Scalar variables contribute
// x * (L * R), which lets a scalar multiply an arbitrary constant matrix.
//
// Certificates are plain valuations and are checked by verify() using only
// the eigen kernels, independent of whatever backend produced them.
// ============================================================================

namespace frostab {

enum class VarKind { Symmetric, Rectangular, Scalar };
enum class Cone { Free, PositiveDefinite, PositiveSemidefinite, PositiveScalar };
enum class Sense { NegDef, PosDef, PosSemidef };

struct VarId {
    std::size_t index = static_cast<std::size_t>(-1);
    bool valid() const { return index != static_cast<std::size_t>(-1); }
};

struct VarInfo {
    VarKind kind;
    Cone cone;
    std::size_t rows, cols;
    std::string name;
    std::size_t scalar_offset;  // position in the packed unknown vector
    std::size_t scalar_count;
};

struct ExprTerm {
    Mat left;
    VarId var;
    Mat right;
    bool transposed = false;
    bool symmetrize = false;
};

class AffineMatrixExpr {
public:
    AffineMatrixExpr() = default;
    explicit AffineMatrixExpr(std::size_t dim) : dim_(dim), constant_(dim, dim) {}

    std::size_t dim() const { return dim_; }
    const Mat& constant() const { return constant_; }
    const std::vector<ExprTerm>& terms() const { return terms_; }

    void add_constant(const Mat& c) {
        if (c.rows() != dim_ || c.cols() != dim_)
            throw dimension_error("AffineMatrixExpr: constant block must be " +
                                  std::to_string(dim_) + "x" + std::to_string(dim_));
        constant_ += c;
    }

    void add_term(Mat left, VarId var, Mat right, bool transposed = false,
                  bool symmetrize = false) {
        terms_.push_back({std::move(left), var, std::move(right), transposed, symmetrize});
    }

private:
    std::size_t dim_ = 0;
    Mat constant_;
    std::vector<ExprTerm> terms_;
};

struct Constraint {
    AffineMatrixExpr expr;
    Sense sense;
    std::string label;
};

// Concrete valuation of every declared variable.  Scalars are stored as 1x1
// matrices.  `margin` is the backend's achieved feasibility margin (smallest
// shifted-block eigenvalue); informational.
struct Certificate {
    std::vector<Mat> values;  // indexed by VarId
    double margin = 0.0;
    std::string backend_name;
    std::size_t iterations = 0;

    bool assigned(VarId v) const { return v.index < values.size(); }
    const Mat& value(VarId v) const { return values[v.index]; }
};

class LmiProblem {
public:
    VarId declare_var(VarKind kind, std::size_t rows, std::size_t cols, Cone cone,
                      std::string name = {}) {
        switch (kind) {
            case VarKind::Symmetric:
                if (rows != cols) throw dimension_error("declare_var: symmetric var must be square");
                if (cone == Cone::PositiveScalar)
                    throw error("declare_var: positive_scalar cone requires scalar kind");
                break;
            case VarKind::Rectangular:
                if (cone != Cone::Free)
                    throw error("declare_var: rectangular vars only support the free cone");
                break;
            case VarKind::Scalar:
                if (rows != 1 || cols != 1) throw dimension_error("declare_var: scalar var is 1x1");
                if (cone == Cone::PositiveDefinite || cone == Cone::PositiveSemidefinite)
                    throw error("declare_var: matrix cones require symmetric kind");
                break;
        }
        VarInfo info;
        info.kind = kind;
        info.cone = cone;
        info.rows = rows;
        info.cols = cols;
        info.name = name.empty() ? ("x" + std::to_string(vars_.size())) : std::move(name);
        info.scalar_offset = num_unknowns_;
        info.scalar_count = (kind == VarKind::Symmetric) ? rows * (rows + 1) / 2 : rows * cols;
        num_unknowns_ += info.scalar_count;
        vars_.push_back(std::move(info));
        return {vars_.size() - 1};
    }

    VarId symmetric(std::size_t n, Cone cone, std::string name = {}) {
        return declare_var(VarKind::Symmetric, n, n, cone, std::move(name));
    }
    VarId rectangular(std::size_t r, std::size_t c, std::string name = {}) {
        return declare_var(VarKind::Rectangular, r, c, Cone::Free, std::move(name));
    }
    VarId scalar(Cone cone, std::string name = {}) {
        return declare_var(VarKind::Scalar, 1, 1, cone, std::move(name));
    }

    const std::vector<VarInfo>& vars() const { return vars_; }
    const VarInfo& var(VarId v) const {
        if (v.index >= vars_.size()) throw error("LmiProblem: unregistered variable");
        return vars_[v.index];
    }
    std::size_t num_unknowns() const { return num_unknowns_; }

    void add_constraint(AffineMatrixExpr expr, Sense sense, std::string label = {}) {
        validate_expr(expr);
        constraints_.push_back({std::move(expr), sense,
                                label.empty() ? ("constraint" + std::to_string(constraints_.size()))
                                              : std::move(label)});
    }

    const std::vector<Constraint>& constraints() const { return constraints_; }

    // Numeric value of an expression under a certificate.
    Mat evaluate(const AffineMatrixExpr& expr, const Certificate& cert) const {
        Mat out = expr.constant();
        for (const ExprTerm& t : expr.terms()) {
            const VarInfo& info = var(t.var);
            if (!cert.assigned(t.var))
                throw error("evaluate: variable '" + info.name + "' not assigned");
            const Mat& xv = cert.value(t.var);
            if (xv.rows() != info.rows || xv.cols() != info.cols)
                throw error("evaluate: variable '" + info.name + "' not assigned (placeholder " +
                            xv.shape_str() + ", expected " + std::to_string(info.rows) + "x" +
                            std::to_string(info.cols) + ")");
            Mat contrib;
            if (info.kind == VarKind::Scalar) {
                contrib = (t.left * t.right) * xv(0, 0);
            } else {
                contrib = t.transposed ? t.left * xv.transposed() * t.right
                                       : t.left * xv * t.right;
            }
            out += contrib;
            if (t.symmetrize) out += contrib.transposed();
        }
        return out;
    }

private:
    void validate_expr(const AffineMatrixExpr& expr) const {
        for (const ExprTerm& t : expr.terms()) {
            const VarInfo& info = var(t.var);  // throws on unregistered
            const std::size_t vr = t.transposed ? info.cols : info.rows;
            const std::size_t vc = t.transposed ? info.rows : info.cols;
            if (info.kind == VarKind::Scalar) {
                if (t.left.cols() != t.right.rows())
                    throw dimension_error("expr term (scalar var '" + info.name +
                                          "'): left/right factor clash");
            } else if (t.left.cols() != vr || t.right.rows() != vc) {
                throw dimension_error("expr term (var '" + info.name + "'): factor shapes " +
                                      t.left.shape_str() + " * var * " + t.right.shape_str() +
                                      " do not conform");
            }
            if (t.left.rows() != expr.dim() || t.right.cols() != expr.dim())
                throw dimension_error("expr term (var '" + info.name +
                                      "'): contribution is not " + std::to_string(expr.dim()) +
                                      "x" + std::to_string(expr.dim()));
        }
    }

    std::vector<VarInfo> vars_;
    std::vector<Constraint> constraints_;
    std::size_t num_unknowns_ = 0;
};

// ----------------------------------------------------------------------------
// Certificate verification (solver-independent)
// ----------------------------------------------------------------------------

struct VerifyRow {
    std::string label;
    double extreme;  // lambda_max for negdef senses, lambda_min otherwise
    double margin;   // signed so that <= 0 always means satisfied
    bool pass;
};

struct VerifyReport {
    std::vector<VerifyRow> rows;
    bool pass = true;
    double worst_margin = 0.0;
};

// Evaluates every constraint and variable cone at the certificate values and
// eigen-checks the sense.  A row passes when its satisfaction margin is at
// least -tol; the report margin is signed so that negative means satisfied.
inline VerifyReport verify(const LmiProblem& p, const Certificate& cert, double tol) {
    VerifyReport rep;
    for (std::size_t vi = 0; vi < p.vars().size(); ++vi) {
        const VarInfo& info = p.vars()[vi];
        if (!cert.assigned({vi}))
            throw error("verify: variable '" + info.name + "' not assigned");
        const Mat& val = cert.value({vi});
        if (val.rows() != info.rows || val.cols() != info.cols) {
            if (val.rows() == 0 && val.cols() == 0)
                throw error("verify: variable '" + info.name + "' not assigned");
            throw dimension_error("verify: value shape for '" + info.name + "' is " +
                                  val.shape_str() + ", expected " + std::to_string(info.rows) +
                                  "x" + std::to_string(info.cols));
        }
        if (info.kind == VarKind::Symmetric && val.max_asymmetry() > 1e-9)
            throw numeric_error("verify: symmetric variable '" + info.name +
                                "' holds an asymmetric value");
        if (info.cone == Cone::Free) continue;
        VerifyRow row;
        if (info.cone == Cone::PositiveScalar) {
            row.label = info.name + " > 0";
            row.extreme = val(0, 0);
            row.margin = -val(0, 0);
        } else {
            row.label = info.name + (info.cone == Cone::PositiveDefinite ? " >> 0" : " >= 0");
            const auto w = sym_eig(val.symmetrized(), 1e-9);
            row.extreme = w.empty() ? 0.0 : w.front();
            row.margin = -row.extreme;
        }
        row.pass = row.margin <= tol;
        rep.rows.push_back(row);
    }
    for (const Constraint& c : p.constraints()) {
        const Mat e = p.evaluate(c.expr, cert);
        const auto w = sym_eig(e.symmetrized(), 1e-6 * std::max(1.0, e.norm_max()));
        VerifyRow row;
        row.label = c.label;
        if (c.sense == Sense::NegDef) {
            row.extreme = w.empty() ? 0.0 : w.back();
            row.margin = row.extreme;
        } else {
            row.extreme = w.empty() ? 0.0 : w.front();
            row.margin = -row.extreme;
        }
        row.pass = row.margin <= tol;
        rep.rows.push_back(row);
    }
    for (const VerifyRow& r : rep.rows) {
        rep.pass = rep.pass && r.pass;
        rep.worst_margin = std::max(rep.worst_margin, r.margin);
    }
    if (rep.rows.empty()) rep.worst_margin = 0.0;
    return rep;
}

}  // namespace frostab
