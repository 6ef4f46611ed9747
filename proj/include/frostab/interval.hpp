#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "frostab/matrix.hpp"
#include "frostab/rng.hpp"

// ============================================================================
// Interval matrices and systems: the center/radius decomposition and the
// rank-one factor form that carries the uncertainty.  Every member of an
// interval family [L, U] is center + M diag(deltas) R with |delta| <= 1,
// one delta per entry slot, slots ordered row-major.
// ============================================================================

namespace frostab {

struct IntervalMatrix {
    Mat lower;
    Mat upper;

    IntervalMatrix() = default;
    IntervalMatrix(Mat lo, Mat up) : lower(std::move(lo)), upper(std::move(up)) { validate(); }

    // degenerate (certain) interval
    static IntervalMatrix certain(const Mat& m) { return IntervalMatrix(m, m); }

    std::size_t rows() const { return lower.rows(); }
    std::size_t cols() const { return lower.cols(); }

    void validate() const {
        if (lower.rows() != upper.rows() || lower.cols() != upper.cols())
            throw dimension_error("IntervalMatrix: bound shape mismatch " + lower.shape_str() +
                                  " vs " + upper.shape_str());
        if (!lower.all_finite() || !upper.all_finite())
            throw numeric_error("IntervalMatrix: non-finite bound entry");
        for (std::size_t i = 0; i < lower.rows(); ++i)
            for (std::size_t j = 0; j < lower.cols(); ++j)
                if (lower(i, j) > upper(i, j))
                    throw numeric_error("IntervalMatrix: lower > upper at (" + std::to_string(i) +
                                        "," + std::to_string(j) + ")");
    }

    bool contains(const Mat& m, double tol = 1e-12) const {
        if (m.rows() != rows() || m.cols() != cols()) return false;
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j)
                if (m(i, j) < lower(i, j) - tol || m(i, j) > upper(i, j) + tol) return false;
        return true;
    }
};

// center = (L+U)/2, radius = (U-L)/2, elementwise
inline std::pair<Mat, Mat> decompose(const IntervalMatrix& im) {
    im.validate();
    const std::size_t r = im.rows(), c = im.cols();
    Mat center(r, c), radius(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            center(i, j) = 0.5 * (im.lower(i, j) + im.upper(i, j));
            radius(i, j) = 0.5 * (im.upper(i, j) - im.lower(i, j));
        }
    }
    return {std::move(center), std::move(radius)};
}

// Center plus the rank-one factor pair.  For a plain interval built by
// build_factors, m_factor * r_factor reproduces the radius exactly; composite
// factor sets (closed loops) keep the elementwise hull |m|*|r| in `radius`
// instead.
struct UncertaintyFactors {
    Mat center;    // n x c
    Mat radius;    // n x c, entrywise >= 0 (hull of the factor form)
    Mat m_factor;  // n x s
    Mat r_factor;  // s x c

    std::size_t state_dim() const { return center.rows(); }
    std::size_t col_dim() const { return center.cols(); }
    std::size_t slot_count() const { return m_factor.cols(); }

    IntervalMatrix hull() const { return IntervalMatrix(center - radius, center + radius); }
};

// Builds the factor form of an interval: slot (i,j), taken row-major, puts
// sqrt(radius_ij) e_i into the m-factor column and sqrt(radius_ij) e_j^T into
// the r-factor row.  Shapes are always n x (n c) and (n c) x c; zero-radius
// slots keep their zero column/row.
inline UncertaintyFactors build_factors(const IntervalMatrix& im) {
    auto [center, radius] = decompose(im);
    const std::size_t n = im.rows(), c = im.cols();
    UncertaintyFactors uf;
    uf.center = std::move(center);
    uf.radius = radius;
    uf.m_factor = Mat(n, n * c);
    uf.r_factor = Mat(n * c, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const std::size_t slot = i * c + j;
            const double root = std::sqrt(radius(i, j));
            uf.m_factor(i, slot) = root;
            uf.r_factor(slot, j) = root;
        }
    }
    return uf;
}

// center + M diag(deltas) R; each |delta| must be <= 1
inline Mat sample_member(const UncertaintyFactors& uf, const std::vector<double>& deltas) {
    if (deltas.size() != uf.slot_count())
        throw dimension_error("sample_member: need " + std::to_string(uf.slot_count()) +
                              " deltas, got " + std::to_string(deltas.size()));
    for (double d : deltas)
        if (!(d >= -1.0 && d <= 1.0))
            throw numeric_error("sample_member: delta " + std::to_string(d) + " outside [-1,1]");
    Mat out = uf.center;
    const std::size_t n = uf.m_factor.rows(), c = uf.r_factor.cols(), s = uf.slot_count();
    for (std::size_t k = 0; k < s; ++k) {
        if (deltas[k] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double mik = uf.m_factor(i, k);
            if (mik == 0.0) continue;
            for (std::size_t j = 0; j < c; ++j) out(i, j) += deltas[k] * mik * uf.r_factor(k, j);
        }
    }
    return out;
}

// Deterministic sample set: the two extreme vertices first, then alternating
// random +/-1 vertex patterns and uniform interior points.
inline std::vector<Mat> vertex_samples(const UncertaintyFactors& uf, std::size_t count,
                                       std::uint64_t seed) {
    if (count == 0) throw error("vertex_samples: count must be >= 1");
    Rng rng(seed);
    const std::size_t s = uf.slot_count();
    std::vector<Mat> out;
    out.reserve(count);
    std::vector<double> deltas(s, 1.0);
    out.push_back(sample_member(uf, deltas));  // upper vertex
    if (out.size() == count) return out;
    std::fill(deltas.begin(), deltas.end(), -1.0);
    out.push_back(sample_member(uf, deltas));  // lower vertex
    while (out.size() < count) {
        const bool vertex = (out.size() % 2 == 0);
        for (double& d : deltas) d = vertex ? rng.sign() : rng.uniform(-1.0, 1.0);
        out.push_back(sample_member(uf, deltas));
    }
    return out;
}

// ----------------------------------------------------------------------------
// Delay descriptions and the system type
// ----------------------------------------------------------------------------

// Time-varying delay d(t) with bound tau and derivative bound mu < 1.
// Three concrete forms: a constant, the modulated-sine profile
// a (sin t + 1)(1 - e^{-t}), and a piecewise-linear sample table.
struct DelaySpec {
    enum class Form { Constant, SinExp, Table };

    Form form = Form::Constant;
    double tau = 0.0;
    double mu = 0.0;
    double constant_value = 0.0;
    double sin_exp_a = 0.0;
    std::vector<std::pair<double, double>> table;  // (t, d(t)) samples, t ascending

    static DelaySpec constant(double value, double tau_bound = -1.0) {
        DelaySpec d;
        d.form = Form::Constant;
        d.constant_value = value;
        d.tau = (tau_bound >= 0.0) ? tau_bound : value;
        d.mu = 0.0;
        d.validate();
        return d;
    }

    static DelaySpec sin_exp(double a, double tau_bound, double mu_bound) {
        DelaySpec d;
        d.form = Form::SinExp;
        d.sin_exp_a = a;
        d.tau = tau_bound;
        d.mu = mu_bound;
        d.validate();
        return d;
    }

    static DelaySpec from_table(std::vector<std::pair<double, double>> samples, double tau_bound,
                                double mu_bound) {
        DelaySpec d;
        d.form = Form::Table;
        d.table = std::move(samples);
        d.tau = tau_bound;
        d.mu = mu_bound;
        d.validate();
        return d;
    }

    void validate() const {
        if (!(std::isfinite(tau) && std::isfinite(mu)))
            throw numeric_error("DelaySpec: tau/mu must be finite");
        if (tau < 0.0) throw numeric_error("DelaySpec: tau must be >= 0");
        if (!(mu < 1.0)) throw numeric_error("DelaySpec: need mu < 1");
        if (form == Form::Constant && constant_value > tau + 1e-15)
            throw numeric_error("DelaySpec: constant delay exceeds tau");
        if (form == Form::Table) {
            for (std::size_t i = 1; i < table.size(); ++i)
                if (table[i].first <= table[i - 1].first)
                    throw numeric_error("DelaySpec: table times must increase");
        }
    }

    // d(t); table form is interpolated linearly and clamped to [0, tau]
    double value_at(double t) const {
        double d = 0.0;
        switch (form) {
            case Form::Constant:
                d = constant_value;
                break;
            case Form::SinExp:
                d = sin_exp_a * (std::sin(t) + 1.0) * (1.0 - std::exp(-t));
                break;
            case Form::Table: {
                if (table.empty()) return 0.0;
                if (t <= table.front().first) {
                    d = table.front().second;
                } else if (t >= table.back().first) {
                    d = table.back().second;
                } else {
                    std::size_t i = 1;
                    while (table[i].first < t) ++i;
                    const auto [t0, d0] = table[i - 1];
                    const auto [t1, d1] = table[i];
                    d = d0 + (d1 - d0) * (t - t0) / (t1 - t0);
                }
                break;
            }
        }
        return std::min(std::max(d, 0.0), tau);
    }

    // True when the analytic supremum of the delay profile exceeds the stored
    // tau bound, which the validation layer reports as a warning rather than
    // an error (the clamped profile is simulated either way).
    bool sup_exceeds_tau() const {
        if (form == Form::SinExp) return 2.0 * sin_exp_a > tau + 1e-12;
        if (form == Form::Table) {
            for (const auto& [t, d] : table)
                if (d > tau + 1e-12) return true;
        }
        return false;
    }
};

// Fractional-order interval system: D^alpha x = A x + B u(t - d(t)),
// y = C x, with A and B interval matrices and 0 < alpha < 1.
struct FoSystem {
    double alpha = 0.5;
    IntervalMatrix a_int;  // n x n
    IntervalMatrix b_int;  // n x l
    Mat c_out;             // m x n, certain
    DelaySpec delay;

    std::size_t state_dim() const { return a_int.rows(); }
    std::size_t input_dim() const { return b_int.cols(); }
    std::size_t output_dim() const { return c_out.rows(); }

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw numeric_error("FoSystem: alpha must lie in (0,1)");
        a_int.validate();
        b_int.validate();
        if (a_int.rows() != a_int.cols()) throw dimension_error("FoSystem: A must be square");
        if (b_int.rows() != a_int.rows())
            throw dimension_error("FoSystem: B row count must match state dimension");
        if (c_out.cols() != a_int.rows())
            throw dimension_error("FoSystem: C column count must match state dimension");
        delay.validate();
    }
};

}  // namespace frostab
