#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "frostab/lmi.hpp"
#include "frostab/matrix.hpp"

// ============================================================================
// Feasibility backend: a log-det barrier interior-point method on the
// phase-I program
//
//     maximize t   subject to   G_j(x) - t I >= 0  for every block j,
//                               |x_i| <= R,  t <= t_cap,
//
// where the blocks G_j collect every constraint (strict senses carry an
// epsilon*I shift so that G_j >= 0 recovers the original strict inequality
// with margin) and every variable cone.  Since all blocks enter phase I,
// a final iterate with min_j lambda_min(G_j) > 0 is a strictly feasible
// point.  Infeasibility is declared only from a dual witness: an aggregated
// PSD multiplier Z with unit trace, near-zero pairings with every basis
// matrix, and a provably negative bound on the optimal t.  Everything else
// is reported as inconclusive.
// ============================================================================

namespace frostab {

enum class SolveStatus { Feasible, Infeasible, Inconclusive };

struct SolveOptions {
    double margin = 1e-6;       // strictness shift, scaled per block
    std::size_t max_iter = 600; // total Newton iterations across all stages
    std::string backend = "barrier-ipm";
    double feas_target = 1e-3;  // stop as soon as the worst block margin reaches this
    double box_bound = 1e7;     // |x_i| <= box_bound
    double t_cap = 1e4;
    double mu_min = 1e-9;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Inconclusive;
    Certificate certificate;
    std::string reason;
    std::size_t iterations = 0;
    double dual_bound = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct ScalarBlock {
    std::size_t dim = 0;
    Mat g0;                                         // constant part of G_j
    std::vector<std::pair<std::size_t, Mat>> bases; // (unknown index, dG/dx_i)
    std::string label;
};

struct ScalarizedProblem {
    std::size_t num_unknowns = 0;
    std::vector<ScalarBlock> blocks;
};

// Basis matrix of one scalar unknown inside a matrix variable: E_pq (+ E_qp
// for off-diagonal symmetric slots).  Returned dense; variables are small.
inline Mat unknown_basis(const VarInfo& info, std::size_t local) {
    Mat b(info.rows, info.cols);
    if (info.kind == VarKind::Symmetric) {
        // upper-triangle packing, row-major
        std::size_t k = local;
        for (std::size_t p = 0; p < info.rows; ++p) {
            const std::size_t row_len = info.rows - p;
            if (k < row_len) {
                const std::size_t q = p + k;
                b(p, q) = 1.0;
                b(q, p) = 1.0;  // off-diagonal unknowns set both mirror entries
                if (p == q) b(p, q) = 1.0;
                return b;
            }
            k -= row_len;
        }
        throw error("unknown_basis: local index out of range");
    }
    b(local / info.cols, local % info.cols) = 1.0;
    return b;
}

inline void accumulate_term_bases(const LmiProblem& p, const ExprTerm& t, double sign,
                                  std::vector<Mat>& per_unknown, std::size_t dim) {
    const VarInfo& info = p.var(t.var);
    if (info.kind == VarKind::Scalar) {
        Mat contrib = t.left * t.right;
        if (t.symmetrize) contrib += contrib.transposed();
        contrib *= sign;
        Mat& slot = per_unknown[info.scalar_offset];
        if (slot.rows() == 0) slot = Mat(dim, dim);
        slot += contrib;
        return;
    }
    for (std::size_t u = 0; u < info.scalar_count; ++u) {
        Mat basis = unknown_basis(info, u);
        if (t.transposed) basis = basis.transposed();
        Mat contrib = t.left * basis * t.right;
        if (t.symmetrize) contrib += contrib.transposed();
        contrib *= sign;
        Mat& slot = per_unknown[info.scalar_offset + u];
        if (slot.rows() == 0) slot = Mat(dim, dim);
        slot += contrib;
    }
}

// Lowers the problem to per-block (g0, bases) data.  Strict senses receive a
// -eps*I shift sized by margin and the constant-block norm; semidefinite
// senses and cones are unshifted.
inline ScalarizedProblem scalarize(const LmiProblem& p, double margin) {
    ScalarizedProblem sp;
    sp.num_unknowns = p.num_unknowns();

    auto finish_block = [&](std::vector<Mat>& per_unknown, Mat g0, std::size_t dim,
                            std::string label) {
        ScalarBlock blk;
        blk.dim = dim;
        blk.g0 = std::move(g0);
        blk.label = std::move(label);
        for (std::size_t i = 0; i < per_unknown.size(); ++i)
            if (per_unknown[i].rows() != 0)
                blk.bases.emplace_back(i, (per_unknown[i] + per_unknown[i].transposed()) * 0.5);
        sp.blocks.push_back(std::move(blk));
    };

    // variable cones first (declaration order)
    for (const VarInfo& info : p.vars()) {
        if (info.cone == Cone::Free) continue;
        const std::size_t dim = (info.kind == VarKind::Scalar) ? 1 : info.rows;
        std::vector<Mat> per_unknown(sp.num_unknowns);
        for (std::size_t u = 0; u < info.scalar_count; ++u)
            per_unknown[info.scalar_offset + u] =
                (info.kind == VarKind::Scalar) ? Mat{{1.0}} : unknown_basis(info, u);
        const double eps =
            (info.cone == Cone::PositiveSemidefinite) ? 0.0 : margin;  // strict cones shifted
        Mat g0(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) g0(i, i) = -eps;
        finish_block(per_unknown, std::move(g0), dim, "cone:" + info.name);
    }

    for (const Constraint& c : p.constraints()) {
        const std::size_t dim = c.expr.dim();
        const double flip = (c.sense == Sense::NegDef) ? -1.0 : 1.0;
        std::vector<Mat> per_unknown(sp.num_unknowns);
        for (const ExprTerm& t : c.expr.terms())
            accumulate_term_bases(p, t, flip, per_unknown, dim);
        Mat g0 = c.expr.constant() * flip;
        g0 = (g0 + g0.transposed()) * 0.5;
        if (c.sense != Sense::PosSemidef) {
            const double eps = margin * std::max(1.0, c.expr.constant().norm_max());
            for (std::size_t i = 0; i < dim; ++i) g0(i, i) -= eps;
        }
        finish_block(per_unknown, std::move(g0), dim, c.label);
    }
    return sp;
}

inline Mat block_value(const ScalarBlock& blk, const std::vector<double>& x) {
    Mat g = blk.g0;
    for (const auto& [idx, basis] : blk.bases) {
        const double xi = x[idx];
        if (xi == 0.0) continue;
        for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] += xi * basis.data()[k];
    }
    return g;
}

inline double min_block_margin(const ScalarizedProblem& sp, const std::vector<double>& x) {
    double m = std::numeric_limits<double>::infinity();
    for (const ScalarBlock& blk : sp.blocks) {
        const auto w = sym_eig(block_value(blk, x), 1e-7 * std::max(1.0, blk.g0.norm_max()));
        if (!w.empty()) m = std::min(m, w.front());
    }
    return m;
}

}  // namespace detail

// Unpacks the flat unknown vector into per-variable matrices.
inline Certificate unpack_certificate(const LmiProblem& p, const std::vector<double>& x) {
    Certificate cert;
    cert.values.resize(p.vars().size());
    for (std::size_t vi = 0; vi < p.vars().size(); ++vi) {
        const VarInfo& info = p.vars()[vi];
        Mat v(info.rows, info.cols);
        if (info.kind == VarKind::Symmetric) {
            std::size_t k = info.scalar_offset;
            for (std::size_t i = 0; i < info.rows; ++i)
                for (std::size_t j = i; j < info.cols; ++j) {
                    v(i, j) = x[k];
                    v(j, i) = x[k];
                    ++k;
                }
        } else {
            for (std::size_t k = 0; k < info.scalar_count; ++k)
                v(k / info.cols, k % info.cols) = x[info.scalar_offset + k];
        }
        cert.values[vi] = std::move(v);
    }
    return cert;
}

// Phase-I barrier solve.  See the header comment for the scheme.
inline SolveResult solve(const LmiProblem& p, const SolveOptions& opts = {}) {
    if (p.constraints().empty()) throw error("solve: problem has no constraints");
    detail::ScalarizedProblem sp = detail::scalarize(p, opts.margin);
    const std::size_t nx = sp.num_unknowns;
    const std::size_t nb = sp.blocks.size();

    std::vector<double> x(nx, 0.0);
    double t0 = std::numeric_limits<double>::infinity();
    for (const detail::ScalarBlock& blk : sp.blocks) {
        const auto w = sym_eig(blk.g0, 1e-9 * std::max(1.0, blk.g0.norm_max()));
        if (!w.empty()) t0 = std::min(t0, w.front());
    }
    double t = t0 - 1.0;
    const double t_cap = std::max(opts.t_cap, t + 10.0);
    const double box = opts.box_bound;

    // barrier value of (x, t); +inf outside the domain
    auto barrier_val = [&](const std::vector<double>& xv, double tv, double mu) {
        if (tv >= t_cap) return std::numeric_limits<double>::infinity();
        double val = -tv / mu - std::log(t_cap - tv);
        for (double xi : xv) {
            if (std::fabs(xi) >= box) return std::numeric_limits<double>::infinity();
            val -= std::log(box - xi) + std::log(box + xi);
        }
        Mat l;
        for (const detail::ScalarBlock& blk : sp.blocks) {
            Mat s = detail::block_value(blk, xv);
            for (std::size_t i = 0; i < blk.dim; ++i) s(i, i) -= tv;
            if (!cholesky(s, l)) return std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < blk.dim; ++i) val -= 2.0 * std::log(l(i, i));
        }
        return val;
    };

    SolveResult res;
    res.certificate.backend_name = opts.backend;
    std::size_t newton_total = 0;
    double mu = std::max(1.0, std::fabs(t));

    std::vector<double> grad(nx + 1), step(nx + 1);
    std::vector<Mat> sinv(nb), wmats;

    while (true) {
        // ---- centering for current mu ----
        for (int inner = 0; inner < 40; ++inner) {
            if (newton_total >= opts.max_iter) break;
            ++newton_total;

            std::fill(grad.begin(), grad.end(), 0.0);
            Mat hess(nx + 1, nx + 1);
            grad[nx] = -1.0 / mu;

            for (std::size_t j = 0; j < nb; ++j) {
                const detail::ScalarBlock& blk = sp.blocks[j];
                Mat s = detail::block_value(blk, x);
                for (std::size_t i = 0; i < blk.dim; ++i) s(i, i) -= t;
                sinv[j] = chol_inverse(s);
                const Mat& si = sinv[j];
                const std::size_t ln = blk.bases.size();
                wmats.assign(ln, Mat());
                for (std::size_t a = 0; a < ln; ++a) {
                    const auto& [ia, fa] = blk.bases[a];
                    grad[ia] -= dot(si, fa);
                    wmats[a] = si * fa * si;
                    hess(ia, nx) -= wmats[a].trace();
                    for (std::size_t b = 0; b <= a; ++b) {
                        const auto& [ib, fb] = blk.bases[b];
                        const double h = dot(wmats[a], fb);
                        hess(ia, ib) += h;
                        if (ia != ib) hess(ib, ia) += h;
                    }
                }
                grad[nx] += si.trace();
                hess(nx, nx) += dot(si, si);
            }
            for (std::size_t a = 0; a < nx; ++a) hess(nx, a) = hess(a, nx);
            for (std::size_t i = 0; i < nx; ++i) {
                grad[i] += 1.0 / (box - x[i]) - 1.0 / (box + x[i]);
                hess(i, i) += 1.0 / ((box - x[i]) * (box - x[i])) +
                              1.0 / ((box + x[i]) * (box + x[i]));
            }
            grad[nx] += 1.0 / (t_cap - t);
            hess(nx, nx) += 1.0 / ((t_cap - t) * (t_cap - t));

            // Newton direction, with Levenberg damping on Cholesky failure
            Mat rhs(nx + 1, 1);
            for (std::size_t i = 0; i <= nx; ++i) rhs(i, 0) = -grad[i];
            Mat dir;
            double damp = 0.0;
            for (int attempt = 0;; ++attempt) {
                Mat hd = hess;
                if (damp > 0.0)
                    for (std::size_t i = 0; i <= nx; ++i) hd(i, i) += damp;
                Mat l;
                if (cholesky(hd, l)) {
                    dir = rhs;
                    for (std::size_t i = 0; i <= nx; ++i) {
                        double sum = dir(i, 0);
                        for (std::size_t k = 0; k < i; ++k) sum -= l(i, k) * dir(k, 0);
                        dir(i, 0) = sum / l(i, i);
                    }
                    for (std::size_t ii = nx + 1; ii-- > 0;) {
                        double sum = dir(ii, 0);
                        for (std::size_t k = ii + 1; k <= nx; ++k) sum -= l(k, ii) * dir(k, 0);
                        dir(ii, 0) = sum / l(ii, ii);
                    }
                    break;
                }
                if (attempt > 40) throw numeric_error("solve: Newton system unsolvable");
                damp = (damp == 0.0) ? 1e-10 * std::max(1.0, hess.trace()) : damp * 10.0;
            }

            double decrement = 0.0;
            for (std::size_t i = 0; i <= nx; ++i) decrement -= grad[i] * dir(i, 0);
            if (!(decrement > 0.0)) break;  // ascent or numerically flat: recenter at next mu

            const double f0 = barrier_val(x, t, mu);
            double alpha = 1.0;
            std::vector<double> xn(nx);
            double tn = 0.0, fn = 0.0;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t i = 0; i < nx; ++i) xn[i] = x[i] + alpha * dir(i, 0);
                tn = t + alpha * dir(nx, 0);
                fn = barrier_val(xn, tn, mu);
                if (fn <= f0 - 0.01 * alpha * decrement) break;
                alpha *= 0.5;
            }
            if (!(fn < std::numeric_limits<double>::infinity()) || fn > f0) break;
            x = xn;
            t = tn;
            if (decrement < 1e-10 * std::max(1.0, std::fabs(f0))) break;  // centered
        }

        const double m_now = detail::min_block_margin(sp, x);
        if (m_now >= opts.feas_target || (m_now > 0.0 && mu <= opts.mu_min)) {
            // Feasibility problems here are homogeneous up to the shift, so a
            // feasible point can usually be rescaled to O(1) entries; keep the
            // scaled point only if it stays strictly inside.
            double xmax = 0.0;
            for (double xi : x) xmax = std::max(xmax, std::fabs(xi));
            double margin = m_now;
            if (xmax > 10.0) {
                std::vector<double> xs(x);
                for (double& xi : xs) xi *= 10.0 / xmax;
                const double ms = detail::min_block_margin(sp, xs);
                if (ms > 1e-9) {
                    x = std::move(xs);
                    margin = ms;
                }
            }
            res.status = SolveStatus::Feasible;
            res.certificate = unpack_certificate(p, x);
            res.certificate.backend_name = opts.backend;
            res.certificate.margin = margin;
            res.certificate.iterations = newton_total;
            res.iterations = newton_total;
            return res;
        }

        if (mu <= opts.mu_min || newton_total >= opts.max_iter) {
            if (m_now > 0.0) {
                res.status = SolveStatus::Feasible;
                res.certificate = unpack_certificate(p, x);
                res.certificate.backend_name = opts.backend;
                res.certificate.margin = m_now;
                res.certificate.iterations = newton_total;
                res.iterations = newton_total;
                return res;
            }
            // dual witness: Z_j = mu * S_j^{-1}, normalized to unit total trace
            double trace_sum = 0.0;
            for (std::size_t j = 0; j < nb; ++j) {
                Mat s = detail::block_value(sp.blocks[j], x);
                for (std::size_t i = 0; i < sp.blocks[j].dim; ++i) s(i, i) -= t;
                sinv[j] = chol_inverse(s);
                trace_sum += sinv[j].trace();
            }
            std::vector<double> resid(nx, 0.0);
            double obj = 0.0;
            for (std::size_t j = 0; j < nb; ++j) {
                const Mat z = sinv[j] * (1.0 / trace_sum);
                obj += dot(sp.blocks[j].g0, z);
                for (const auto& [idx, basis] : sp.blocks[j].bases) resid[idx] += dot(basis, z);
            }
            double resid_sum = 0.0;
            for (double r : resid) resid_sum += std::fabs(r);
            const double bound = obj + box * resid_sum;  // rigorous: t* <= bound
            res.dual_bound = bound;
            res.iterations = newton_total;
            if (bound < 0.0) {
                res.status = SolveStatus::Infeasible;
                res.reason = "dual witness bounds the optimal feasibility margin by " +
                             std::to_string(bound) + " < 0 (strictly-shifted problem infeasible)";
            } else {
                res.status = SolveStatus::Inconclusive;
                res.reason = newton_total >= opts.max_iter
                                 ? "iteration cap reached before a verdict (margin " +
                                       std::to_string(m_now) + ", dual bound " +
                                       std::to_string(bound) + ")"
                                 : "barrier path exhausted without decisive margin or witness "
                                   "(margin " + std::to_string(m_now) + ", dual bound " +
                                       std::to_string(bound) + ")";
            }
            return res;
        }
        mu *= 0.2;
    }
}

}  // namespace frostab
