#pragma once

// Shared test-side oracles.  These are intentionally independent of the
// library's solve paths: polynomial roots come from Durand-Kerner iteration,
// characteristic polynomials from Faddeev-LeVerrier, determinants from a
// plain complex LU.

#include <complex>
#include <vector>

#include "frostab/matrix.hpp"
#include "frostab/rng.hpp"

namespace testutil {

using cd = std::complex<double>;

inline frostab::Mat random_mat(frostab::Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                               double hi = 1.0) {
    frostab::Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline frostab::Mat random_symmetric(frostab::Rng& rng, std::size_t n, double lo = -1.0,
                                     double hi = 1.0) {
    frostab::Mat m = random_mat(rng, n, n, lo, hi);
    return m.symmetrized();
}

// coefficients c[0..n] with p(x) = sum c[k] x^k, c[n] = 1, via Faddeev-LeVerrier
inline std::vector<double> char_poly(const frostab::Mat& a) {
    const std::size_t n = a.rows();
    std::vector<double> c(n + 1, 0.0);
    c[n] = 1.0;
    frostab::Mat m = frostab::Mat::zeros(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        m = a * m;
        for (std::size_t i = 0; i < n; ++i) m(i, i) += c[n - k + 1];
        c[n - k] = -(a * m).trace() / static_cast<double>(k);
    }
    return c;
}

// Durand-Kerner simultaneous root iteration on a monic polynomial
inline std::vector<cd> poly_roots(const std::vector<double>& coeffs) {
    const std::size_t n = coeffs.size() - 1;
    auto eval = [&](cd x) {
        cd v = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
        return v;
    };
    std::vector<cd> r(n);
    cd seed(0.4, 0.9);
    cd acc = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc *= seed;
        r[i] = acc;
    }
    for (int it = 0; it < 500; ++it) {
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cd denom = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) denom *= (r[i] - r[j]);
            const cd delta = eval(r[i]) / denom;
            r[i] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-13) break;
    }
    return r;
}

// determinant of (a - lambda I) via complex LU with partial pivoting
inline cd det_shifted(const frostab::Mat& a, cd lambda) {
    const std::size_t n = a.rows();
    std::vector<std::vector<cd>> m(n, std::vector<cd>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = cd(a(i, j)) - (i == j ? lambda : cd(0.0));
    cd det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m[i][k]) > std::abs(m[p][k])) p = i;
        if (p != k) {
            std::swap(m[p], m[k]);
            det = -det;
        }
        if (std::abs(m[k][k]) == 0.0) return 0.0;
        det *= m[k][k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const cd f = m[i][k] / m[k][k];
            for (std::size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
        }
    }
    return det;
}

// multiset match between two complex lists, greedy nearest pairing
inline double spectrum_distance(std::vector<cd> a, std::vector<cd> b) {
    double worst = 0.0;
    for (const cd& x : a) {
        std::size_t best = 0;
        double bd = 1e300;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = std::abs(x - b[j]);
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        worst = std::max(worst, bd);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return worst;
}

}  // namespace testutil
