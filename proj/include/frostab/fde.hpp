#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "frostab/interval.hpp"
#include "frostab/matrix.hpp"
#include "frostab/synthesis.hpp"

// ============================================================================
// Caputo fractional delay simulation by the Grunwald-Letnikov scheme applied
// to x - x0, which is Caputo-consistent for orders in (0,1) when the history
// is carried by the initial function.  Marching rule at t_k = k h:
//
//   h^{-a} sum_{j=0..k} c_j (x_{k-j} - x0) = A x_k + A_d x(t_k - d(t_k)),
//
// with c_0 = 1 and c_j = (1 - (1+a)/j) c_{j-1}.  The non-delayed term is
// implicit; the delayed state interpolates linearly between grid points and
// the initial function.  When the delayed argument falls inside the current
// step (d(t_k) < h), the interpolation weight on the unknown x_k joins the
// left-hand solve, so no fixed-point iteration is ever needed.
// ============================================================================

namespace frostab {

struct SimConfig {
    double step_h = 0.01;
    double horizon_t = 50.0;
    std::size_t memory_len = 0;  // 0 means full memory

    // history phi(t) on [-tau, 0]: a constant vector or a sample table
    bool history_is_table = false;
    std::vector<double> history_constant;
    std::vector<std::pair<double, std::vector<double>>> history_table;  // ascending t

    void validate(std::size_t n, double tau) const {
        if (!(step_h > 0.0) || !(horizon_t > 0.0))
            throw numeric_error("SimConfig: step and horizon must be positive");
        if (tau > 0.0 && step_h > tau + 1e-15)
            throw numeric_error("SimConfig: step " + std::to_string(step_h) +
                                " exceeds the delay bound " + std::to_string(tau));
        if (history_is_table) {
            if (history_table.empty()) throw numeric_error("SimConfig: empty history table");
            for (const auto& [t, v] : history_table) {
                if (v.size() != n) throw dimension_error("SimConfig: history sample width");
                if (t > 1e-12) throw numeric_error("SimConfig: history samples must lie in [-tau, 0]");
            }
        } else if (history_constant.size() != n) {
            throw dimension_error("SimConfig: history vector must have the state width");
        }
    }

    std::vector<double> history_at(double t) const {
        if (!history_is_table) return history_constant;
        if (t <= history_table.front().first) return history_table.front().second;
        if (t >= history_table.back().first) return history_table.back().second;
        std::size_t i = 1;
        while (history_table[i].first < t) ++i;
        const auto& [t0, v0] = history_table[i - 1];
        const auto& [t1, v1] = history_table[i];
        const double w = (t - t0) / (t1 - t0);
        std::vector<double> out(v0.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - w) * v0[k] + w * v1[k];
        return out;
    }
};

struct Trace {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<double> norms;
    bool diverged = false;
    std::size_t diverged_step = 0;

    std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
};

// Grunwald-Letnikov coefficient sequence; valid for orders in (0, 1].
inline std::vector<double> gl_coeffs(double alpha, std::size_t count) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw numeric_error("gl_coeffs: order must lie in (0, 1]");
    if (count == 0) throw error("gl_coeffs: count must be >= 1");
    std::vector<double> c(count);
    c[0] = 1.0;
    for (std::size_t j = 1; j < count; ++j)
        c[j] = (1.0 - (1.0 + alpha) / static_cast<double>(j)) * c[j - 1];
    return c;
}

inline Trace simulate(const Mat& a, const Mat& a_d, const DelaySpec& delay, double alpha,
                      const SimConfig& cfg) {
    const std::size_t n = a.rows();
    if (a.cols() != n || a_d.rows() != n || a_d.cols() != n)
        throw dimension_error("simulate: coefficients must be square and share the dimension");
    delay.validate();
    cfg.validate(n, delay.tau);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw numeric_error("simulate: order must lie in (0, 1]");

    const double h = cfg.step_h;
    const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.horizon_t / h));
    const std::vector<double> coeff = gl_coeffs(alpha, steps + 1);
    const double ha = std::pow(h, alpha);

    const std::vector<double> x0 = cfg.history_at(0.0);
    Trace tr;
    tr.times.reserve(steps + 1);
    tr.states.reserve(steps + 1);
    tr.times.push_back(0.0);
    tr.states.push_back(x0);

    auto vnorm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    tr.norms.push_back(vnorm(x0));
    const double blowup = 1e6 * (1.0 + tr.norms.front());

    const Mat lhs_base = Mat::identity(n) - ha * a;

    for (std::size_t k = 1; k <= steps; ++k) {
        const double tk = static_cast<double>(k) * h;
        const double td = tk - delay.value_at(tk);

        // memory sum over c_j (x_{k-j} - x0)
        std::vector<double> mem(n, 0.0);
        const std::size_t span = (cfg.memory_len == 0) ? k : std::min(cfg.memory_len, k);
        for (std::size_t j = 1; j <= span; ++j) {
            const double cj = coeff[j];
            const std::vector<double>& xj = tr.states[k - j];
            for (std::size_t i = 0; i < n; ++i) mem[i] += cj * (xj[i] - x0[i]);
        }

        // delayed state: history function, grid interpolation, or partially
        // implicit when the argument lands inside the current step
        std::vector<double> xdel_known(n, 0.0);
        double implicit_w = 0.0;
        if (td <= 0.0) {
            xdel_known = cfg.history_at(td);
        } else {
            const double pos = td / h;
            const auto lo = static_cast<std::size_t>(pos);
            const double w = pos - static_cast<double>(lo);
            if (lo >= k - 1 + 1) {  // td == tk exactly (zero delay)
                implicit_w = 1.0;
            } else if (lo == k - 1) {
                implicit_w = w;
                for (std::size_t i = 0; i < n; ++i) xdel_known[i] = (1.0 - w) * tr.states[k - 1][i];
            } else {
                const std::vector<double>& xa = tr.states[lo];
                const std::vector<double>& xb = tr.states[lo + 1];
                for (std::size_t i = 0; i < n; ++i)
                    xdel_known[i] = (1.0 - w) * xa[i] + w * xb[i];
            }
        }

        Mat rhs(n, 1);
        const Mat adx = a_d * [&] {
            Mat v(n, 1);
            for (std::size_t i = 0; i < n; ++i) v(i, 0) = xdel_known[i];
            return v;
        }();
        for (std::size_t i = 0; i < n; ++i) rhs(i, 0) = x0[i] - mem[i] + ha * adx(i, 0);

        Mat lhs = lhs_base;
        if (implicit_w > 0.0) lhs -= (implicit_w * ha) * a_d;

        Mat xk;
        try {
            xk = lu_solve(lhs, rhs);
        } catch (const numeric_error&) {
            throw numeric_error("simulate: singular step system at step " + std::to_string(k));
        }

        std::vector<double> xkv(n);
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            xkv[i] = xk(i, 0);
            finite = finite && std::isfinite(xkv[i]);
        }
        const double nk = vnorm(xkv);
        if (!finite || nk > blowup) {
            tr.diverged = true;
            tr.diverged_step = k;
            break;
        }
        tr.times.push_back(tk);
        tr.states.push_back(std::move(xkv));
        tr.norms.push_back(nk);
    }
    return tr;
}

// Fixed-sample closed loop: builds A_cl, A_dcl from the member matrices and
// the controller, then delegates.  The configured history must already cover
// the augmented state (plant + controller).
inline Trace simulate_closed_loop(const Mat& a_sample, const Mat& b_sample, const Mat& c_out,
                                  const Controller& k, const DelaySpec& delay, double alpha,
                                  const SimConfig& cfg) {
    const std::size_t n = a_sample.rows(), nc = k.order();
    if (b_sample.rows() != n || c_out.cols() != n)
        throw dimension_error("simulate_closed_loop: plant sample shapes");
    k.validate(b_sample.cols(), c_out.rows());
    const Mat a_cl = block_assemble({{a_sample, Mat(n, nc)}, {k.b_c * c_out, k.a_c}});
    const Mat a_dcl = block_assemble(
        {{b_sample * k.d_c * c_out, b_sample * k.c_c}, {Mat(nc, n), Mat(nc, nc)}});
    return simulate(a_cl, a_dcl, delay, alpha, cfg);
}

// CSV with the fixed 12-significant-digit formatting used by every artifact
// this tool emits (reruns diff clean).
inline void trace_to_csv(const Trace& tr, std::ostream& os) {
    const std::size_t n = tr.dim();
    os << "t";
    for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
    os << ",norm\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.12g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        put(tr.times[k]);
        for (std::size_t i = 0; i < n; ++i) {
            os << ',';
            put(tr.states[k][i]);
        }
        os << ',';
        put(tr.norms[k]);
        os << '\n';
    }
}

}  // namespace frostab
