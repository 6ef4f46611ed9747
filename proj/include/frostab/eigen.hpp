#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "frostab/matrix.hpp"

// ============================================================================
// Eigenvalue machinery.
//
// Symmetric problems use cyclic Jacobi: at the sizes seen here (<= ~60) it is
// accurate to machine precision and the implementation stays small.  General
// problems use Householder reduction to Hessenberg form followed by the
// Francis double-shift QR iteration, the classic EISPACK scheme.  The
// pseudo-inverse rides on the symmetric solver applied to m^T m.
// ============================================================================

namespace frostab {

struct Spectrum {
    std::vector<std::complex<double>> values;
};

namespace detail {

// Cyclic Jacobi sweeps on a symmetric matrix.  `a` is destroyed; eigenvalues
// land unordered in the returned vector and eigenvectors (columns) in *vecs
// when requested.
inline std::vector<double> jacobi_sweep(Mat a, Mat* vecs) {
    const std::size_t n = a.rows();
    if (vecs) *vecs = Mat::identity(n);
    if (n < 2) {
        std::vector<double> w(n);
        if (n == 1) w[0] = a(0, 0);
        return w;
    }
    const double scale = std::max(a.norm_max(), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::fabs(a(p, q));
        if (off <= 1e-15 * n * scale) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= 1e-18 * scale) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(theta * theta + 1.0))
                                     : -1.0 / (-theta + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = aip - s * (aiq + tau * aip);
                    a(p, i) = a(i, p);
                    a(i, q) = aiq + s * (aip - tau * aiq);
                    a(q, i) = a(i, q);
                }
                if (vecs) {
                    for (std::size_t i = 0; i < n; ++i) {
                        const double vip = (*vecs)(i, p), viq = (*vecs)(i, q);
                        (*vecs)(i, p) = vip - s * (viq + tau * vip);
                        (*vecs)(i, q) = viq + s * (vip - tau * viq);
                    }
                }
            }
        }
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = a(i, i);
    return w;
}

// Householder similarity reduction to upper Hessenberg form, in place.
inline void hessenberg_reduce(Mat& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    std::vector<double> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) scale += std::fabs(a(i, k));
        if (scale == 0.0) continue;
        double h = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k) / scale;
            h += v[i] * v[i];
        }
        const double f = v[k + 1];
        const double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        h -= f * g;  // h = |u|^2 / 2 for the reflector u
        v[k + 1] = f - g;
        for (std::size_t j = 0; j < n; ++j) {  // left application
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s /= h;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {  // right application
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s /= h;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        a(k + 1, k) = scale * g;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix; destroys `a`.
// `max_sweeps` caps the total number of implicit QR sweeps across all
// deflation stages.
inline std::vector<std::complex<double>> hqr_eigenvalues(Mat& a, std::size_t max_sweeps) {
    const int n = static_cast<int>(a.rows());
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    if (n == 0) return w;

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::fabs(a(i, j));
    if (anorm == 0.0) return w;  // zero matrix

    int nn = n - 1;
    int its = 0;
    std::size_t total = 0;
    double t = 0.0;
    while (nn >= 0) {
        int l;
        for (l = nn; l >= 1; --l) {
            double s = std::fabs(a(l - 1, l - 1)) + std::fabs(a(l, l));
            if (s == 0.0) s = anorm;
            if (std::fabs(a(l, l - 1)) + s == s) {
                a(l, l - 1) = 0.0;
                break;
            }
        }
        if (l < 0) l = 0;

        double x = a(nn, nn);
        if (l == nn) {  // single real eigenvalue deflates
            w[nn] = {x + t, 0.0};
            --nn;
            its = 0;
            continue;
        }
        double y = a(nn - 1, nn - 1);
        double ww = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {  // trailing 2x2 deflates
            double p = 0.5 * (y - x);
            double q = p * p + ww;
            double z = std::sqrt(std::fabs(q));
            x += t;
            if (q >= 0.0) {
                z = p + ((p >= 0.0) ? z : -z);
                w[nn - 1] = {x + z, 0.0};
                w[nn] = (z != 0.0) ? std::complex<double>(x - ww / z, 0.0)
                                   : std::complex<double>(x + z, 0.0);
            } else {
                w[nn - 1] = {x + p, z};
                w[nn] = {x + p, -z};
            }
            nn -= 2;
            its = 0;
            continue;
        }

        if (++total > max_sweeps)
            throw numeric_error("gen_eig: QR iteration failed to converge within " +
                                std::to_string(max_sweeps) + " sweeps (matrix norm " +
                                std::to_string(anorm) + ")");
        if (its == 10 || its == 20) {  // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            double s = std::fabs(a(nn, nn - 1)) + std::fabs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            ww = -0.4375 * s * s;
        }
        ++its;

        double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
        int m;
        for (m = nn - 2; m >= l; --m) {
            z = a(m, m);
            const double rr = x - z;
            const double ss = y - z;
            p = (rr * ss - ww) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - rr - ss;
            r = a(m + 2, m + 1);
            const double s = std::fabs(p) + std::fabs(q) + std::fabs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::fabs(a(m, m - 1)) * (std::fabs(q) + std::fabs(r));
            const double v =
                std::fabs(p) * (std::fabs(a(m - 1, m - 1)) + std::fabs(z) + std::fabs(a(m + 1, m + 1)));
            if (u + v == v) break;
        }
        for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
        }
        for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
                p = a(k, k - 1);
                q = a(k + 1, k - 1);
                r = (k != nn - 1) ? a(k + 2, k - 1) : 0.0;
                x = std::fabs(p) + std::fabs(q) + std::fabs(r);
                if (x != 0.0) {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            double s = std::sqrt(p * p + q * q + r * r);
            if (p < 0.0) s = -s;
            if (s != 0.0) {
                if (k == m) {
                    if (l != m) a(k, k - 1) = -a(k, k - 1);
                } else {
                    a(k, k - 1) = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for (int j = k; j <= nn; ++j) {  // row modification
                    double pp = a(k, j) + q * a(k + 1, j);
                    if (k != nn - 1) {
                        pp += r * a(k + 2, j);
                        a(k + 2, j) -= pp * z;
                    }
                    a(k + 1, j) -= pp * y;
                    a(k, j) -= pp * x;
                }
                const int mmin = (nn < k + 3) ? nn : k + 3;
                for (int i = l; i <= mmin; ++i) {  // column modification
                    double pp = x * a(i, k) + y * a(i, k + 1);
                    if (k != nn - 1) {
                        pp += z * a(i, k + 2);
                        a(i, k + 2) -= pp * r;
                    }
                    a(i, k + 1) -= pp * q;
                    a(i, k) -= pp;
                }
            }
        }
    }
    return w;
}

}  // namespace detail

// Sorted real eigenvalues of a symmetric matrix.  `tol` bounds the tolerated
// asymmetry |m_ij - m_ji|; the matrix is symmetrized before iterating so the
// returned factors are exact for the symmetrized input.
inline std::vector<double> sym_eig(const Mat& m, double tol = 1e-9) {
    if (m.rows() != m.cols())
        throw dimension_error("sym_eig: matrix not square (" + m.shape_str() + ")");
    if (m.max_asymmetry() > tol)
        throw numeric_error("sym_eig: asymmetry " + std::to_string(m.max_asymmetry()) +
                            " exceeds tolerance " + std::to_string(tol));
    std::vector<double> w = detail::jacobi_sweep(m.symmetrized(), nullptr);
    std::sort(w.begin(), w.end());
    return w;
}

// Eigenvalues ascending plus orthonormal eigenvectors (columns of the second
// element), satisfying V diag(w) V^T = sym(m).
inline std::pair<std::vector<double>, Mat> sym_eig_vectors(const Mat& m, double tol = 1e-9) {
    if (m.rows() != m.cols())
        throw dimension_error("sym_eig_vectors: matrix not square");
    if (m.max_asymmetry() > tol)
        throw numeric_error("sym_eig_vectors: asymmetry exceeds tolerance");
    Mat vecs;
    std::vector<double> w = detail::jacobi_sweep(m.symmetrized(), &vecs);
    // sort ascending, permuting columns alongside
    const std::size_t n = w.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
    std::vector<double> ws(n);
    Mat vs(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        ws[j] = w[idx[j]];
        for (std::size_t i = 0; i < n; ++i) vs(i, j) = vecs(i, idx[j]);
    }
    return {std::move(ws), std::move(vs)};
}

// Complex spectrum of a general square matrix via Hessenberg + shifted QR.
// Values are sorted by (re, im) so repeated runs emit identical output.
inline Spectrum gen_eig(const Mat& m) {
    if (m.rows() != m.cols())
        throw dimension_error("gen_eig: matrix not square (" + m.shape_str() + ")");
    Mat h = m;
    detail::hessenberg_reduce(h);
    const std::size_t cap = 100 * std::max<std::size_t>(m.rows(), 1);
    Spectrum sp;
    sp.values = detail::hqr_eigenvalues(h, cap);
    std::sort(sp.values.begin(), sp.values.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() < b.real();
                  return a.imag() < b.imag();
              });
    return sp;
}

// Moore-Penrose pseudo-inverse.  Singular values below rank_tol * sigma_max
// are treated as zero.  Built from the eigendecomposition of m^T m, which is
// plenty at these sizes and condition numbers.
inline Mat pinv(const Mat& m, double rank_tol = 1e-10) {
    if (m.rows() == 0 || m.cols() == 0) return Mat(m.cols(), m.rows());
    if (m.rows() < m.cols()) return pinv(m.transposed(), rank_tol).transposed();

    const Mat gram = m.transposed() * m;  // c x c
    auto [lam, v] = sym_eig_vectors(gram, 1e-9 * std::max(1.0, gram.norm_max()));
    const std::size_t c = m.cols();
    double sig_max = 0.0;
    for (double l : lam) sig_max = std::max(sig_max, std::sqrt(std::max(l, 0.0)));
    Mat out(c, m.rows());
    if (sig_max == 0.0) return out;  // zero matrix pinv is zero
    const double cut = rank_tol * sig_max;
    // m+ = sum over retained modes of (1/lambda_i) v_i v_i^T m^T
    const Mat mt = m.transposed();
    for (std::size_t k = 0; k < c; ++k) {
        const double sigma = std::sqrt(std::max(lam[k], 0.0));
        if (sigma <= cut) continue;
        const double inv_l = 1.0 / lam[k];
        // rank-one update: out += inv_l * v_k (v_k^T m^T)
        std::vector<double> row(m.rows(), 0.0);
        for (std::size_t j = 0; j < m.rows(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < c; ++i) s += v(i, k) * mt(i, j);
            row[j] = s;
        }
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += inv_l * v(i, k) * row[j];
    }
    return out;
}

// Negative-definiteness test with an explicit margin: true iff
// lambda_max(m) <= -margin.  The witness eigenvalue is always returned.
struct NegdefResult {
    bool is_negdef;
    double lambda_max;
};

inline NegdefResult is_negdef(const Mat& m, double margin) {
    const std::vector<double> w = sym_eig(m, 1e-9);
    const double lmax = w.empty() ? 0.0 : w.back();
    return {lmax <= -margin, lmax};
}

}  // namespace frostab
