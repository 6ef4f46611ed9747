#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "frostab/eigen.hpp"
#include "frostab/interval.hpp"
#include "frostab/lmi.hpp"
#include "frostab/solver.hpp"

// ============================================================================
// Delay-dependent stability certificates.
//
// The certain-system problem is the 4n x 4n inequality Gamma < 0 in
// P > 0, Q >= 0, Z > 0 and free N_i, T_i (i = 1..3), block row order
// (x(t), x(t-d), D^alpha x, integral slack).  The interval problem keeps the
// same core, replaces A, B by interval centers, adds eta R^T R blocks on the
// first two diagonal positions, and borders the result with the
// -T_i M factor columns against -eta I.  Feasibility of either certifies
// asymptotic stability for every fractional order in (0,1); the conditions
// are sufficient only, so the verdict enum has no "certified unstable" value.
//
// The delayed-state coefficient is always passed explicitly.  The plant model
// delays the input, so which matrix multiplies x(t - d) depends on how the
// loop was closed; callers decide, this module never guesses.
// ============================================================================

namespace frostab {

struct DelayedPair {
    Mat a;          // non-delayed coefficient, n x n
    Mat a_delayed;  // delayed-state coefficient, n x n

    std::size_t dim() const { return a.rows(); }

    void validate() const {
        if (a.rows() != a.cols() || a_delayed.rows() != a_delayed.cols() ||
            a.rows() != a_delayed.rows())
            throw dimension_error("DelayedPair: both coefficients must be n x n");
        if (!a.all_finite() || !a_delayed.all_finite())
            throw numeric_error("DelayedPair: non-finite entries");
    }
};

enum class Verdict { CertifiedStable, Unknown };

struct ProblemStats {
    std::size_t constraint_dim = 0;
    std::size_t num_unknowns = 0;
    std::size_t solver_iterations = 0;
    double solve_seconds = 0.0;
};

struct StabilityReport {
    Verdict verdict = Verdict::Unknown;
    std::optional<Certificate> certificate;
    VerifyReport verification;
    ProblemStats stats;
    SolveStatus solver_status = SolveStatus::Inconclusive;
    std::string solver_reason;
    std::vector<std::string> warnings;
};

struct AnalyzeOptions {
    SolveOptions solve;
    double verify_tol = 1e-8;  // self-produced certificates
};

namespace detail {

// D x n selector with the identity at rows [offset, offset + n)
inline Mat row_selector(std::size_t total, std::size_t offset, std::size_t n) {
    Mat s(total, n);
    for (std::size_t i = 0; i < n; ++i) s(offset + i, i) = 1.0;
    return s;
}

struct StabilityVars {
    VarId p, q, z;
    VarId n1, n2, n3;
    VarId t1, t2, t3;
};

inline StabilityVars declare_stability_vars(LmiProblem& prob, std::size_t n) {
    StabilityVars v;
    v.p = prob.symmetric(n, Cone::PositiveDefinite, "P");
    v.q = prob.symmetric(n, Cone::PositiveSemidefinite, "Q");
    v.z = prob.symmetric(n, Cone::PositiveDefinite, "Z");
    v.n1 = prob.rectangular(n, n, "N1");
    v.n2 = prob.rectangular(n, n, "N2");
    v.n3 = prob.rectangular(n, n, "N3");
    v.t1 = prob.rectangular(n, n, "T1");
    v.t2 = prob.rectangular(n, n, "T2");
    v.t3 = prob.rectangular(n, n, "T3");
    return v;
}

// Shared 4n x 4n core of the delay inequality, written into `expr` whose
// dimension may exceed 4n (interval problems append border blocks).  `a` and
// `b` are the fixed (or center) coefficients.
inline void add_delay_core(AffineMatrixExpr& expr, const StabilityVars& v, const Mat& a,
                           const Mat& b, double tau, double mu) {
    const std::size_t n = a.rows();
    const std::size_t d = expr.dim();
    const Mat l1 = row_selector(d, 0, n);
    const Mat l2 = row_selector(d, n, n);
    const Mat l3 = row_selector(d, 2 * n, n);
    const Mat l4 = row_selector(d, 3 * n, n);
    const Mat r1 = l1.transposed(), r2 = l2.transposed(), r3 = l3.transposed(),
              r4 = l4.transposed();

    // (1,1): Q + N1 + N1^T - A^T T1^T - T1 A
    expr.add_term(l1, v.q, r1);
    expr.add_term(l1, v.n1, r1, false, true);
    expr.add_term(-1.0 * l1, v.t1, a * r1, false, true);
    // (1,2): N2^T - N1 - A^T T2^T - T1 B   (transpose mirrored at (2,1))
    expr.add_term(l1, v.n2, r2, true, true);
    expr.add_term(-1.0 * l1, v.n1, r2, false, true);
    expr.add_term(-1.0 * (l1 * a.transposed()), v.t2, r2, true, true);
    expr.add_term(-1.0 * l1, v.t1, b * r2, false, true);
    // (1,3): P + N3^T + T1 - A^T T3^T
    expr.add_term(l1, v.p, r3, false, true);
    expr.add_term(l1, v.n3, r3, true, true);
    expr.add_term(l1, v.t1, r3, false, true);
    expr.add_term(-1.0 * (l1 * a.transposed()), v.t3, r3, true, true);
    // (1,4): tau N1
    expr.add_term(tau * l1, v.n1, r4, false, true);
    // (2,2): -(1-mu) Q - N2 - N2^T - T2 B - B^T T2^T
    expr.add_term(-(1.0 - mu) * l2, v.q, r2);
    expr.add_term(-1.0 * l2, v.n2, r2, false, true);
    expr.add_term(-1.0 * l2, v.t2, b * r2, false, true);
    // (2,3): -N3^T + T2 - B^T T3^T
    expr.add_term(-1.0 * l2, v.n3, r3, true, true);
    expr.add_term(l2, v.t2, r3, false, true);
    expr.add_term(-1.0 * (l2 * b.transposed()), v.t3, r3, true, true);
    // (2,4): tau N2
    expr.add_term(tau * l2, v.n2, r4, false, true);
    // (3,3): tau Z + T3 + T3^T
    expr.add_term(tau * l3, v.z, r3);
    expr.add_term(l3, v.t3, r3, false, true);
    // (3,4): tau N3
    expr.add_term(tau * l3, v.n3, r4, false, true);
    // (4,4): -tau Z
    expr.add_term(-tau * l4, v.z, r4);
}

inline void check_delay_params(double tau, double mu) {
    if (!(tau > 0.0)) throw numeric_error("stability: tau must be > 0");
    if (!(mu < 1.0)) throw numeric_error("stability: mu must be < 1");
}

}  // namespace detail

// Certain-system problem: one 4n x 4n constraint.
inline LmiProblem assemble_certain(const DelayedPair& pair, double tau, double mu) {
    pair.validate();
    detail::check_delay_params(tau, mu);
    const std::size_t n = pair.dim();
    LmiProblem prob;
    const detail::StabilityVars v = detail::declare_stability_vars(prob, n);
    AffineMatrixExpr gamma(4 * n);
    detail::add_delay_core(gamma, v, pair.a, pair.a_delayed, tau, mu);
    prob.add_constraint(std::move(gamma), Sense::NegDef, "delay-lmi");
    return prob;
}

// Robust interval problem: the bordered constraint of dimension
// 4n + (A slots) + (B slots).  Factor sets may come from build_factors or
// from a closed-loop construction; only shapes matter here.
inline LmiProblem assemble_interval(const UncertaintyFactors& a_uf, const UncertaintyFactors& b_uf,
                                    double tau, double mu) {
    detail::check_delay_params(tau, mu);
    const std::size_t n = a_uf.state_dim();
    if (a_uf.col_dim() != n)
        throw dimension_error("assemble_interval: non-delayed factor set must be square");
    if (b_uf.state_dim() != n || b_uf.col_dim() != n)
        throw dimension_error("assemble_interval: delayed factor set must be n x n");
    const std::size_t sa = a_uf.slot_count();
    const std::size_t sb = b_uf.slot_count();
    const std::size_t d = 4 * n + sa + sb;

    LmiProblem prob;
    const detail::StabilityVars v = detail::declare_stability_vars(prob, n);
    const VarId eta = prob.scalar(Cone::PositiveScalar, "eta");

    AffineMatrixExpr expr(d);
    detail::add_delay_core(expr, v, a_uf.center, b_uf.center, tau, mu);

    const Mat l1 = detail::row_selector(d, 0, n);
    const Mat l2 = detail::row_selector(d, n, n);
    const Mat la = detail::row_selector(d, 4 * n, sa);
    const Mat lb = detail::row_selector(d, 4 * n + sa, sb);

    // eta R^T R on the first two diagonal blocks
    expr.add_term(l1 * a_uf.r_factor.transposed(), eta, a_uf.r_factor * l1.transposed());
    expr.add_term(l2 * b_uf.r_factor.transposed(), eta, b_uf.r_factor * l2.transposed());

    // border columns -T_i M against the -eta I corner
    const Mat ra_cols = a_uf.m_factor * la.transposed();  // n x d
    const Mat rb_cols = b_uf.m_factor * lb.transposed();
    const VarId tvars[3] = {v.t1, v.t2, v.t3};
    for (std::size_t i = 0; i < 3; ++i) {
        const Mat li = detail::row_selector(d, i * n, n);
        expr.add_term(-1.0 * li, tvars[i], ra_cols, false, true);
        expr.add_term(-1.0 * li, tvars[i], rb_cols, false, true);
    }
    Mat border_sel(d, sa + sb);
    for (std::size_t k = 0; k < sa + sb; ++k) border_sel(4 * n + k, k) = 1.0;
    expr.add_term(border_sel, eta, -1.0 * border_sel.transposed());  // -eta I corner

    prob.add_constraint(std::move(expr), Sense::NegDef, "robust-delay-lmi");
    return prob;
}

namespace detail {

inline StabilityReport run_analysis(LmiProblem prob, const AnalyzeOptions& opts,
                                    std::vector<std::string> warnings) {
    StabilityReport rep;
    rep.warnings = std::move(warnings);
    rep.stats.constraint_dim = prob.constraints().front().expr.dim();
    rep.stats.num_unknowns = prob.num_unknowns();
    const auto start = std::chrono::steady_clock::now();
    const SolveResult sol = solve(prob, opts.solve);
    rep.stats.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.stats.solver_iterations = sol.iterations;
    rep.solver_status = sol.status;
    rep.solver_reason = sol.reason;
    if (sol.status == SolveStatus::Feasible) {
        rep.verification = verify(prob, sol.certificate, opts.verify_tol);
        if (rep.verification.pass) {
            rep.verdict = Verdict::CertifiedStable;
            rep.certificate = sol.certificate;
        } else {
            rep.warnings.push_back(
                "solver reported feasible but independent verification failed; verdict unknown");
        }
    }
    return rep;
}

}  // namespace detail

inline StabilityReport analyze_certain(const DelayedPair& pair, double tau, double mu,
                                       const AnalyzeOptions& opts = {}) {
    return detail::run_analysis(assemble_certain(pair, tau, mu), opts, {});
}

inline StabilityReport analyze_interval(const UncertaintyFactors& a_uf,
                                        const UncertaintyFactors& b_uf, double tau, double mu,
                                        const AnalyzeOptions& opts = {}) {
    return detail::run_analysis(assemble_interval(a_uf, b_uf, tau, mu), opts, {});
}

// ----------------------------------------------------------------------------
// Sector diagnostic
// ----------------------------------------------------------------------------

// Eigenvalue scatter of sampled interval members against the fractional
// stability sector |arg(lambda)| > alpha pi / 2.  A diagnostic on the
// non-delayed matrix only, not a delay-aware proof.
struct SectorSample {
    Spectrum spectrum;
    std::vector<double> margins;  // |arg| - alpha pi/2 per eigenvalue
    double worst_margin = 0.0;
};

inline std::vector<SectorSample> sector_scan(const IntervalMatrix& a_int, double alpha,
                                             std::size_t count, std::uint64_t seed) {
    if (a_int.rows() != a_int.cols()) throw dimension_error("sector_scan: interval must be square");
    if (!(alpha > 0.0 && alpha < 1.0)) throw numeric_error("sector_scan: alpha must be in (0,1)");
    const double boundary = alpha * M_PI / 2.0;
    const UncertaintyFactors uf = build_factors(a_int);
    const std::vector<Mat> members = vertex_samples(uf, count, seed);
    std::vector<SectorSample> out;
    out.reserve(members.size());
    for (const Mat& m : members) {
        SectorSample s;
        s.spectrum = gen_eig(m);
        s.worst_margin = std::numeric_limits<double>::infinity();
        for (const auto& lam : s.spectrum.values) {
            const double margin = std::fabs(std::arg(lam)) - boundary;
            s.margins.push_back(margin);
            s.worst_margin = std::min(s.worst_margin, margin);
        }
        if (s.spectrum.values.empty()) s.worst_margin = 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace frostab
