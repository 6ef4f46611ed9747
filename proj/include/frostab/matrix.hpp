#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

// ============================================================================
// Dense real matrix kernels: storage, arithmetic, block assembly, linear
// solves.  Everything here is desk-scale (n <~ 100); no attempt is made to
// block or vectorize beyond what the compiler does on its own.
// ============================================================================

namespace frostab {

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class dimension_error : public error {
public:
    explicit dimension_error(const std::string& msg) : error(msg) {}
};

class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

// Row-major dense matrix.  Zero-sized dimensions are legal; they show up
// naturally when a controller of order 0 drops its dynamic blocks.
class Mat {
public:
    Mat() = default;

    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Mat(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw dimension_error("Mat: ragged initializer list");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat zeros(std::size_t r, std::size_t c) { return Mat(r, c); }

    // Column vector helper.
    static Mat col(std::initializer_list<double> v) {
        Mat m(v.size(), 1);
        std::size_t i = 0;
        for (double x : v) m(i++, 0) = x;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Mat& operator+=(const Mat& o) {
        require_same_shape(o, "operator+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }

    Mat& operator-=(const Mat& o) {
        require_same_shape(o, "operator-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }

    Mat& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double s) { return a *= s; }
    friend Mat operator*(double s, Mat a) { return a *= s; }
    friend Mat operator-(Mat a) { return a *= -1.0; }

    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.cols_ != b.rows_)
            throw dimension_error("matmul: " + a.shape_str() + " * " + b.shape_str());
        Mat c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    // max |entry|; zero-sized matrices have norm 0
    double norm_max() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::fabs(v));
        return m;
    }

    double norm_fro() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
        return t;
    }

    double max_asymmetry() const {
        double m = 0.0;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                m = std::max(m, std::fabs((*this)(i, j) - (*this)(j, i)));
        return m;
    }

    bool is_symmetric(double tol) const {
        return rows_ == cols_ && max_asymmetry() <= tol;
    }

    // (A + A^T)/2, used to scrub roundoff before eigen routines
    Mat symmetrized() const {
        Mat s(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
        return s;
    }

    Mat block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
        if (i0 + r > rows_ || j0 + c > cols_)
            throw dimension_error("block: out of range");
        Mat b(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
        return b;
    }

    void set_block(std::size_t i0, std::size_t j0, const Mat& b) {
        if (i0 + b.rows_ > rows_ || j0 + b.cols_ > cols_)
            throw dimension_error("set_block: out of range");
        for (std::size_t i = 0; i < b.rows_; ++i)
            for (std::size_t j = 0; j < b.cols_; ++j) (*this)(i0 + i, j0 + j) = b(i, j);
    }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    void require_same_shape(const Mat& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw dimension_error(std::string(op) + ": " + shape_str() + " vs " + o.shape_str());
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ----------------------------------------------------------------------------
// Block assembly
// ----------------------------------------------------------------------------

// One cell of a block grid: either a concrete matrix or a zero placeholder
// whose dimensions are inferred from its row/column neighbors.
struct Block {
    Mat mat;
    bool is_zero = false;

    Block(Mat m) : mat(std::move(m)) {}  // NOLINT(google-explicit-constructor)
    Block() : is_zero(true) {}
};

// Zero placeholder for block grids.
inline Block Z() { return Block{}; }

using BlockGrid = std::vector<std::vector<Block>>;

// Concatenates a 2-D arrangement of blocks.  Every concrete block in a grid
// row must share its row count, likewise per column; zero placeholders take
// the inferred size.  A row or column made only of placeholders is ambiguous
// and rejected.
inline Mat block_assemble(const BlockGrid& grid) {
    const std::size_t gr = grid.size();
    if (gr == 0) return Mat();
    const std::size_t gc = grid[0].size();
    for (std::size_t i = 0; i < gr; ++i)
        if (grid[i].size() != gc)
            throw dimension_error("block_assemble: ragged grid at row " + std::to_string(i));

    std::vector<std::ptrdiff_t> row_h(gr, -1), col_w(gc, -1);
    for (std::size_t i = 0; i < gr; ++i) {
        for (std::size_t j = 0; j < gc; ++j) {
            const Block& b = grid[i][j];
            if (b.is_zero) continue;
            const auto r = static_cast<std::ptrdiff_t>(b.mat.rows());
            const auto c = static_cast<std::ptrdiff_t>(b.mat.cols());
            if (row_h[i] < 0) row_h[i] = r;
            else if (row_h[i] != r)
                throw dimension_error("block_assemble: row mismatch at block (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            if (col_w[j] < 0) col_w[j] = c;
            else if (col_w[j] != c)
                throw dimension_error("block_assemble: column mismatch at block (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    for (std::size_t i = 0; i < gr; ++i)
        if (row_h[i] < 0)
            throw dimension_error("block_assemble: row " + std::to_string(i) +
                                  " has no concrete block to size it");
    for (std::size_t j = 0; j < gc; ++j)
        if (col_w[j] < 0)
            throw dimension_error("block_assemble: column " + std::to_string(j) +
                                  " has no concrete block to size it");

    std::size_t total_r = 0, total_c = 0;
    for (auto h : row_h) total_r += static_cast<std::size_t>(h);
    for (auto w : col_w) total_c += static_cast<std::size_t>(w);

    Mat out(total_r, total_c);
    std::size_t i0 = 0;
    for (std::size_t i = 0; i < gr; ++i) {
        std::size_t j0 = 0;
        for (std::size_t j = 0; j < gc; ++j) {
            if (!grid[i][j].is_zero) out.set_block(i0, j0, grid[i][j].mat);
            j0 += static_cast<std::size_t>(col_w[j]);
        }
        i0 += static_cast<std::size_t>(row_h[i]);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Linear solves
// ----------------------------------------------------------------------------

// Solves a x = b by LU with partial pivoting; throws numeric_error on a
// (numerically) singular pivot.
inline Mat lu_solve(Mat a, Mat b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n)
        throw dimension_error("lu_solve: need square a and conforming b");
    const double scale = std::max(a.norm_max(), 1e-300);
    std::vector<std::size_t> piv(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a(i, k)) > std::fabs(a(p, k))) p = i;
        piv[k] = p;
        if (std::fabs(a(p, k)) <= 1e-14 * scale)
            throw numeric_error("lu_solve: singular matrix (pivot " + std::to_string(k) + ")");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(p, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
        }
    }
    for (std::size_t kk = n; kk-- > 0;) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = b(kk, j);
            for (std::size_t i = kk + 1; i < n; ++i) s -= a(kk, i) * b(i, j);
            b(kk, j) = s / a(kk, kk);
        }
    }
    return b;
}

// In-place lower Cholesky; returns false if the matrix is not positive
// definite (used as the cheap PD test inside the barrier line search).
inline bool cholesky(const Mat& a, Mat& lower) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw dimension_error("cholesky: matrix not square");
    lower = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
        if (d <= 0.0 || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        lower(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            lower(i, j) = s / ljj;
        }
    }
    return true;
}

inline bool is_positive_definite(const Mat& a) {
    Mat l;
    return cholesky(a, l);
}

// Symmetric inverse via Cholesky; requires positive definiteness.
inline Mat chol_inverse(const Mat& a) {
    Mat l;
    if (!cholesky(a, l)) throw numeric_error("chol_inverse: matrix not positive definite");
    const std::size_t n = a.rows();
    // forward/back substitution against the identity
    Mat inv = Mat::identity(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = inv(i, j);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * inv(k, j);
            inv(i, j) = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = inv(ii, j);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * inv(k, j);
            inv(ii, j) = s / l(ii, ii);
        }
    }
    return inv;
}

inline double dot(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw dimension_error("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
    return s;
}

}  // namespace frostab
