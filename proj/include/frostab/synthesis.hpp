#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "frostab/interval.hpp"
#include "frostab/lmi.hpp"
#include "frostab/matrix.hpp"
#include "frostab/solver.hpp"
#include "frostab/stability.hpp"

// ============================================================================
// Fixed-order dynamic output feedback synthesis.
//
// The closed loop of plant (A, B interval; C certain) with the controller
// (A_c, B_c, C_c, D_c) is
//
//   D^a x_cl = A_cl x_cl(t) + A_dcl x_cl(t - d),
//   A_cl  = [[A, 0], [B_c C, A_c]],   A_dcl = [[B D_c C, B C_c], [0, 0]],
//
// with the plant uncertainty carried in structured factor form: the delayed
// factor pair is ([M_B; 0], [R_B D_c C, R_B C_c]), which keeps the coupling
// between the delayed column groups instead of flattening to an elementwise
// hull.
//
// The synthesis inequality uses a common multiplier T = diag(T_S, T_C) on the
// three equation rows and the variable change W_1 = T_C A_c, W_2 = T_C B_c,
// W_3 = T_S B_0 C_c, W_4 = T_S B_0 D_c with the W blocks left free; the
// uncertainty-scaling border freezes the controller products at the previous
// iterate (zeros first) so every pass is affine.  Freeing the W blocks makes
// the search optimistic: the solution need not be exactly realizable by a
// controller, and recover() reads the gains back by least squares, recording
// the residuals.  None of this is trusted on its own: every accepted
// controller passes the robust closed-loop stability analysis, which is the
// arbiter.
// ============================================================================

namespace frostab {

struct Controller {
    Mat a_c;  // n_c x n_c
    Mat b_c;  // n_c x m
    Mat c_c;  // l x n_c
    Mat d_c;  // l x m

    std::size_t order() const { return a_c.rows(); }

    static Controller static_gain(Mat gain) {
        Controller k;
        const std::size_t l = gain.rows(), m = gain.cols();
        k.a_c = Mat(0, 0);
        k.b_c = Mat(0, m);
        k.c_c = Mat(l, 0);
        k.d_c = std::move(gain);
        return k;
    }

    void validate(std::size_t l, std::size_t m) const {
        const std::size_t nc = a_c.rows();
        if (a_c.cols() != nc || b_c.rows() != nc || c_c.cols() != nc)
            throw dimension_error("Controller: inconsistent order blocks");
        if (b_c.cols() != m || d_c.cols() != m)
            throw dimension_error("Controller: input width must match plant output count");
        if (c_c.rows() != l || d_c.rows() != l)
            throw dimension_error("Controller: output height must match plant input count");
    }

    double param_distance(const Controller& o) const {
        if (order() != o.order() || d_c.rows() != o.d_c.rows() || d_c.cols() != o.d_c.cols())
            return std::numeric_limits<double>::infinity();
        double d = (d_c - o.d_c).norm_max();
        d = std::max(d, (c_c - o.c_c).norm_max());
        d = std::max(d, (b_c - o.b_c).norm_max());
        d = std::max(d, (a_c - o.a_c).norm_max());
        return d;
    }
};

struct ClosedLoop {
    UncertaintyFactors a_cl;   // non-delayed coefficient factors
    UncertaintyFactors a_dcl;  // delayed coefficient factors
};

namespace detail {

inline Mat abs_entries(Mat m) {
    for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = std::fabs(m.data()[k]);
    return m;
}

}  // namespace detail

// Closed-loop augmentation in structured factor form.
inline ClosedLoop close_loop(const FoSystem& sys, const Controller& k) {
    sys.validate();
    const std::size_t n = sys.state_dim(), l = sys.input_dim(), m = sys.output_dim();
    k.validate(l, m);
    const std::size_t nc = k.order();

    const UncertaintyFactors a_uf = build_factors(sys.a_int);
    const UncertaintyFactors b_uf = build_factors(sys.b_int);
    const Mat& c = sys.c_out;

    ClosedLoop cl;
    cl.a_cl.center = block_assemble({{a_uf.center, Mat(n, nc)}, {k.b_c * c, k.a_c}});
    cl.a_cl.m_factor = block_assemble({{a_uf.m_factor}, {Mat(nc, a_uf.slot_count())}});
    cl.a_cl.r_factor = block_assemble({{a_uf.r_factor, Mat(a_uf.slot_count(), nc)}});

    cl.a_dcl.center = block_assemble(
        {{b_uf.center * k.d_c * c, b_uf.center * k.c_c}, {Mat(nc, n), Mat(nc, nc)}});
    cl.a_dcl.m_factor = block_assemble({{b_uf.m_factor}, {Mat(nc, b_uf.slot_count())}});
    cl.a_dcl.r_factor = block_assemble({{b_uf.r_factor * k.d_c * c, b_uf.r_factor * k.c_c}});

    cl.a_cl.radius = detail::abs_entries(cl.a_cl.m_factor) * detail::abs_entries(cl.a_cl.r_factor);
    cl.a_dcl.radius =
        detail::abs_entries(cl.a_dcl.m_factor) * detail::abs_entries(cl.a_dcl.r_factor);
    return cl;
}

// ----------------------------------------------------------------------------
// Synthesis LMI
// ----------------------------------------------------------------------------

struct SynthesisVarIds {
    VarId p, q, z, n1, n2, n3, t_s, t_c, w1, w2, w3, w4, eta;
};

struct SynthesisProblem {
    LmiProblem problem;
    SynthesisVarIds ids;
};

// Free-variable-change synthesis inequality.  `fixed_cc` (l x n_c) and
// `fixed_dc` (l x m) freeze the controller products inside the
// uncertainty-scaling border; pass zeros on the first iterate.
inline SynthesisProblem assemble_synthesis(const FoSystem& sys, std::size_t nc,
                                           const Mat& fixed_cc, const Mat& fixed_dc) {
    sys.validate();
    const std::size_t n = sys.state_dim(), l = sys.input_dim(), m = sys.output_dim();
    if (fixed_cc.rows() != l || fixed_cc.cols() != nc)
        throw dimension_error("assemble_synthesis: fixed C_c must be l x n_c");
    if (fixed_dc.rows() != l || fixed_dc.cols() != m)
        throw dimension_error("assemble_synthesis: fixed D_c must be l x m");

    const UncertaintyFactors a_uf = build_factors(sys.a_int);
    const UncertaintyFactors b_uf = build_factors(sys.b_int);
    const Mat& c = sys.c_out;
    const double tau = sys.delay.tau;
    const double mu = sys.delay.mu;
    detail::check_delay_params(tau, mu);

    const std::size_t na = n + nc;
    const std::size_t sa = a_uf.slot_count();  // n^2
    const std::size_t sb = b_uf.slot_count();  // n l
    const std::size_t d = 4 * na + sa + 2 * sb;

    SynthesisProblem sp;
    LmiProblem& prob = sp.problem;
    SynthesisVarIds& ids = sp.ids;
    ids.p = prob.symmetric(na, Cone::PositiveDefinite, "P");
    ids.q = prob.symmetric(na, Cone::PositiveSemidefinite, "Q");
    ids.z = prob.symmetric(na, Cone::PositiveDefinite, "Z");
    ids.n1 = prob.rectangular(na, na, "N1");
    ids.n2 = prob.rectangular(na, na, "N2");
    ids.n3 = prob.rectangular(na, na, "N3");
    ids.t_s = prob.symmetric(n, Cone::Free, "T_S");
    ids.t_c = prob.symmetric(nc, Cone::Free, "T_C");
    ids.w1 = prob.rectangular(nc, nc, "W1");
    ids.w2 = prob.rectangular(nc, m, "W2");
    ids.w3 = prob.rectangular(n, nc, "W3");
    ids.w4 = prob.rectangular(n, m, "W4");
    ids.eta = prob.scalar(Cone::PositiveScalar, "eta");

    AffineMatrixExpr expr(d);
    auto blk = [&](std::size_t i) { return detail::row_selector(d, i * na, na); };
    auto blk_x = [&](std::size_t i) { return detail::row_selector(d, i * na, n); };
    auto blk_c = [&](std::size_t i) { return detail::row_selector(d, i * na + n, nc); };
    const Mat l1 = blk(0), l2 = blk(1), l3 = blk(2), l4 = blk(3);

    // sym of the constant-structure grid
    expr.add_term(l1, ids.n1, l1.transposed(), false, true);
    expr.add_term(l1, ids.q, l1.transposed(), false, true);
    expr.add_term(-1.0 * l1, ids.n1, l2.transposed(), false, true);
    expr.add_term(l1, ids.p, l3.transposed(), false, true);
    expr.add_term(tau * l1, ids.n1, l4.transposed(), false, true);
    expr.add_term(l2, ids.n2, l1.transposed(), false, true);
    expr.add_term(-1.0 * l2, ids.n2, l2.transposed(), false, true);
    expr.add_term(-(1.0 - mu) * l2, ids.q, l2.transposed(), false, true);
    expr.add_term(l3, ids.n3, l1.transposed(), false, true);
    expr.add_term(-1.0 * l3, ids.n3, l2.transposed(), false, true);
    expr.add_term(tau * l2, ids.n2, l4.transposed(), false, true);
    expr.add_term(tau * l3, ids.z, l3.transposed(), false, true);
    expr.add_term(tau * l3, ids.n3, l4.transposed(), false, true);
    expr.add_term(-tau * l4, ids.z, l4.transposed(), false, true);
    for (std::size_t i = 0; i < 3; ++i) {
        expr.add_term(blk_x(i), ids.t_s, blk_x(2).transposed(), false, true);
        if (nc > 0) expr.add_term(blk_c(i), ids.t_c, blk_c(2).transposed(), false, true);
    }

    // sym of the gain grid, identical content on the three equation rows
    for (std::size_t i = 0; i < 3; ++i) {
        const Mat lx = blk_x(i);
        const Mat lc = blk_c(i);
        expr.add_term(-1.0 * (lx * a_uf.center), ids.t_s, blk_x(0).transposed(), false, true);
        expr.add_term(-1.0 * lx, ids.w4, c * blk_x(1).transposed(), false, true);
        if (nc > 0) {
            expr.add_term(-1.0 * lx, ids.w3, blk_c(1).transposed(), false, true);
            expr.add_term(-1.0 * lc, ids.w2, c * blk_x(0).transposed(), false, true);
            expr.add_term(-1.0 * lc, ids.w1, blk_c(0).transposed(), false, true);
        }
    }

    // eta times the constant uncertainty Gram on the x-parts of blocks 1..3
    const Mat gram = a_uf.m_factor * a_uf.m_factor.transposed() +
                     2.0 * (b_uf.m_factor * b_uf.m_factor.transposed());
    Mat k1(d, d);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) k1.set_block(i * na, j * na, gram);
    expr.add_term(k1, ids.eta, Mat::identity(d));

    // scaled-factor border rows against the -eta I corner
    const Mat lg1 = detail::row_selector(d, 4 * na, sa);
    const Mat lg2 = detail::row_selector(d, 4 * na + sa, sb);
    const Mat lg3 = detail::row_selector(d, 4 * na + sa + sb, sb);
    expr.add_term(lg1 * a_uf.r_factor, ids.t_s, blk_x(0).transposed(), false, true);
    expr.add_term(lg2 * (b_uf.r_factor * fixed_dc * c), ids.t_s, blk_x(1).transposed(), false,
                  true);
    if (nc > 0)
        expr.add_term(lg3 * (b_uf.r_factor * fixed_cc), ids.t_c, blk_c(1).transposed(), false,
                      true);
    Mat border_sel(d, sa + 2 * sb);
    for (std::size_t k = 0; k < sa + 2 * sb; ++k) border_sel(4 * na + k, k) = 1.0;
    expr.add_term(border_sel, ids.eta, -1.0 * border_sel.transposed());

    prob.add_constraint(std::move(expr), Sense::NegDef, "synthesis-lmi");
    return sp;
}

// ----------------------------------------------------------------------------
// Controller recovery
// ----------------------------------------------------------------------------

enum class SynthesisFailure { NoFeasibleIterate, RecoveryFailure, PostValidationFailure };

class synthesis_error : public error {
public:
    synthesis_error(SynthesisFailure kind, const std::string& msg) : error(msg), kind_(kind) {}
    SynthesisFailure kind() const { return kind_; }

private:
    SynthesisFailure kind_;
};

struct RecoveryResiduals {
    double w1 = 0.0;  // |T_C A_c - W1|
    double w2 = 0.0;  // |T_C B_c - W2|
    double w3 = 0.0;  // |T_S B0 C_c - W3|
    double w4 = 0.0;  // |T_S B0 D_c - W4|
    double max() const { return std::max(std::max(w1, w2), std::max(w3, w4)); }
};

// Reads the controller out of a synthesis certificate.  W1/W2 invert exactly
// through T_C; W3/W4 are least-squares against T_S B0 via the pseudo-inverse,
// with the residuals reported to the caller.
inline Controller recover(const Certificate& cert, const SynthesisVarIds& ids, const Mat& b0,
                          std::size_t nc, RecoveryResiduals* residuals = nullptr) {
    const Mat& t_s = cert.value(ids.t_s);
    const Mat& t_c = cert.value(ids.t_c);
    const Mat& w1 = cert.value(ids.w1);
    const Mat& w2 = cert.value(ids.w2);
    const Mat& w3 = cert.value(ids.w3);
    const Mat& w4 = cert.value(ids.w4);

    Controller k;
    if (nc > 0) {
        try {
            k.a_c = lu_solve(t_c, w1);
            k.b_c = lu_solve(t_c, w2);
        } catch (const numeric_error&) {
            throw synthesis_error(SynthesisFailure::RecoveryFailure,
                                  "recover: T_C is singular, controller dynamics unrecoverable");
        }
    } else {
        k.a_c = Mat(0, 0);
        k.b_c = Mat(0, w2.cols());
    }
    const Mat tsb = t_s * b0;        // n x l
    const Mat tsb_pinv = pinv(tsb);  // l x n
    k.c_c = tsb_pinv * w3;           // least squares for T_S B0 C_c = W3
    k.d_c = tsb_pinv * w4;

    RecoveryResiduals res;
    res.w1 = (nc > 0) ? (t_c * k.a_c - w1).norm_max() : 0.0;
    res.w2 = (nc > 0) ? (t_c * k.b_c - w2).norm_max() : 0.0;
    res.w3 = (tsb * k.c_c - w3).norm_max();
    res.w4 = (tsb * k.d_c - w4).norm_max();
    if (residuals) *residuals = res;

    // a rank-deficient T_S B0 that also leaves a material least-squares
    // residual cannot yield a usable gain
    const bool full_col_rank =
        b0.cols() == 0 || (tsb_pinv * tsb - Mat::identity(b0.cols())).norm_max() <= 1e-6;
    const double thresh =
        1e-6 * (1.0 + std::max(std::max(w1.norm_max(), w2.norm_max()),
                               std::max(w3.norm_max(), w4.norm_max())));
    if (!full_col_rank && (res.w3 > thresh || res.w4 > thresh))
        throw synthesis_error(SynthesisFailure::RecoveryFailure,
                              "recover: T_S B0 is rank deficient and the least-squares residual " +
                                  std::to_string(std::max(res.w3, res.w4)) +
                                  " exceeds the acceptance threshold");
    return k;
}

// ----------------------------------------------------------------------------
// Full synthesis loop
// ----------------------------------------------------------------------------

struct SynthesizeOptions {
    std::size_t max_outer_iter = 10;
    double conv_tol = 1e-6;
    AnalyzeOptions analyze;
};

struct SynthesisResult {
    Controller controller;
    Certificate certificate;  // synthesis-stage certificate (free W blocks)
    RecoveryResiduals recovery_residuals;
    std::size_t iterations = 0;
    StabilityReport post_validation;  // the result that actually counts
};

// Iterates the affine synthesis problem with the scaled border frozen at the
// previous controller (zeros first), recovering gains by least squares each
// pass, until the controller stops moving or the iteration cap is reached.
// The recovered controllers then face the robust closed-loop analysis, newest
// first; only a controller whose closed loop is certified is ever returned.
inline SynthesisResult synthesize(const FoSystem& sys, std::size_t nc,
                                  const SynthesizeOptions& opts = {}) {
    sys.validate();
    const std::size_t l = sys.input_dim(), m = sys.output_dim();
    const Mat b0 = decompose(sys.b_int).first;

    struct Iterate {
        Controller k;
        Certificate cert;
        RecoveryResiduals resid;
    };
    std::vector<Iterate> iterates;
    Mat cc = Mat(l, nc), dc = Mat(l, m);
    std::string last_failure;
    SynthesisFailure first_failure = SynthesisFailure::NoFeasibleIterate;

    for (std::size_t it = 0; it < opts.max_outer_iter; ++it) {
        const SynthesisProblem sp = assemble_synthesis(sys, nc, cc, dc);
        const SolveResult sol = solve(sp.problem, opts.analyze.solve);
        if (sol.status != SolveStatus::Feasible) {
            last_failure = "iterate " + std::to_string(it) + ": solver " +
                           (sol.status == SolveStatus::Infeasible ? "infeasible" : "inconclusive") +
                           (sol.reason.empty() ? "" : " (" + sol.reason + ")");
            break;
        }
        RecoveryResiduals resid;
        Controller k;
        try {
            k = recover(sol.certificate, sp.ids, b0, nc, &resid);
        } catch (const synthesis_error& e) {
            first_failure = SynthesisFailure::RecoveryFailure;
            last_failure = "iterate " + std::to_string(it) + ": " + e.what();
            break;
        }
        const double delta = iterates.empty() ? std::numeric_limits<double>::infinity()
                                              : k.param_distance(iterates.back().k);
        iterates.push_back({std::move(k), sol.certificate, resid});
        cc = iterates.back().k.c_c;
        dc = iterates.back().k.d_c;
        if (delta < opts.conv_tol) break;
    }

    if (iterates.empty())
        throw synthesis_error(first_failure, "synthesize: no usable iterate; " + last_failure);

    std::string post_reasons;
    for (std::size_t idx = iterates.size(); idx-- > 0;) {
        Iterate& cand = iterates[idx];
        const ClosedLoop cl = close_loop(sys, cand.k);
        StabilityReport post =
            analyze_interval(cl.a_cl, cl.a_dcl, sys.delay.tau, sys.delay.mu, opts.analyze);
        if (post.verdict == Verdict::CertifiedStable) {
            SynthesisResult res;
            res.controller = std::move(cand.k);
            res.certificate = std::move(cand.cert);
            res.recovery_residuals = cand.resid;
            res.iterations = iterates.size();
            res.post_validation = std::move(post);
            return res;
        }
        post_reasons += " iterate " + std::to_string(idx) + ": not certified;";
    }
    throw synthesis_error(SynthesisFailure::PostValidationFailure,
                          "synthesize: no iterate passed closed-loop post-validation;" +
                              post_reasons +
                              (last_failure.empty() ? "" : " (" + last_failure + ")"));
}

// ----------------------------------------------------------------------------
// Controller JSON
// ----------------------------------------------------------------------------

inline nlohmann::ordered_json controller_to_json(const Controller& k) {
    auto mat_rows = [](const Mat& m) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    nlohmann::ordered_json j;
    j["n_c"] = k.order();
    j["A_c"] = mat_rows(k.a_c);
    j["B_c"] = mat_rows(k.b_c);
    j["C_c"] = mat_rows(k.c_c);
    j["D_c"] = mat_rows(k.d_c);
    return j;
}

}  // namespace frostab
