#include "qkf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qkf/kernels.hpp"

namespace qkf {

void check_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionError("dimension mismatch: " + what);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        check_dims(r.size() == cols_, "ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::column(const Vector& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

Matrix Matrix::row(const Vector& v) {
    Matrix m(1, v.size());
    for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::trace() const {
    check_dims(rows_ == cols_, "trace of non-square");
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, i);
    return s;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    check_dims(rows_ == o.rows_ && cols_ == o.cols_, "matrix add");
    kernels::axpy(1.0, o.data(), data(), data_.size());
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    check_dims(rows_ == o.rows_ && cols_ == o.cols_, "matrix sub");
    kernels::axpy(-1.0, o.data(), data(), data_.size());
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    kernels::scale_copy(s, data(), data(), data_.size());
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    check_dims(a.cols() == b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            kernels::axpy(a(i, k), b.row_ptr(k), ci, b.cols());
        }
    }
    return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
    check_dims(a.cols() == x.size(), "matvec");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row_ptr(i), x.data(), x.size());
    return y;
}

Vector operator+(Vector a, const Vector& b) {
    check_dims(a.size() == b.size(), "vector add");
    kernels::axpy(1.0, b.data(), a.data(), a.size());
    return a;
}

Vector operator-(Vector a, const Vector& b) {
    check_dims(a.size() == b.size(), "vector sub");
    kernels::axpy(-1.0, b.data(), a.data(), a.size());
    return a;
}

Vector operator*(double s, Vector a) {
    kernels::scale_copy(s, a.data(), a.data(), a.size());
    return a;
}

double dot(const Vector& a, const Vector& b) {
    check_dims(a.size() == b.size(), "dot");
    return kernels::dot(a.data(), b.data(), a.size());
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

void add_outer(Matrix& c, double w, const Vector& x, const Vector& y) {
    check_dims(c.rows() == x.size() && c.cols() == y.size(), "outer product");
    for (std::size_t i = 0; i < x.size(); ++i) kernels::axpy(w * x[i], y.data(), c.row_ptr(i), y.size());
}

Matrix mul_transposed(const Matrix& a, const Matrix& b) {
    check_dims(a.cols() == b.cols(), "A * B^T");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            c(i, j) = kernels::dot(a.row_ptr(i), b.row_ptr(j), a.cols());
    return c;
}

Matrix symmetrized(const Matrix& m) {
    check_dims(m.rows() == m.cols(), "symmetrize");
    Matrix s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

double max_abs(const Matrix& m) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j)));
    return v;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    check_dims(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff");
    return max_abs(a - b);
}

// ---------------------------------------------------------------------------

std::optional<Matrix> cholesky(const Matrix& a) {
    check_dims(a.rows() == a.cols(), "cholesky");
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j) - kernels::dot(l.row_ptr(j), l.row_ptr(j), j);
        if (!(d > 0.0)) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j) - kernels::dot(l.row_ptr(i), l.row_ptr(j), j);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Matrix cholesky_with_jitter(const Matrix& a, double rel_jitter, int attempts) {
    if (auto l = cholesky(a)) return *l;
    double jitter = rel_jitter * std::abs(a.trace());
    if (jitter <= 0.0) jitter = rel_jitter;
    for (int k = 0; k < attempts; ++k) {
        Matrix aj = a;
        for (std::size_t i = 0; i < a.rows(); ++i) aj(i, i) += jitter;
        if (auto l = cholesky(aj)) return *l;
        jitter *= 10.0;
    }
    throw NotPsdError("covariance is not positive semidefinite (cholesky failed after jitter)");
}

Matrix psd_square_root(const Matrix& a, double tol_scale) {
    if (auto l = cholesky(a)) return *l;
    const auto eig = eigen_symmetric(a);
    const double scale = std::max(std::abs(a.trace()), max_abs(a));
    if (!eig.values.empty() && eig.values.front() < -tol_scale * scale)
        throw NotPsdError("matrix is indefinite beyond tolerance");
    Matrix root(a.rows(), a.cols());
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
        const double s = std::sqrt(std::max(eig.values[k], 0.0));
        for (std::size_t i = 0; i < a.rows(); ++i) root(i, k) = s * eig.vectors(i, k);
    }
    return root;
}

namespace {

// Forward/back substitution with the Cholesky factor, B overwritten column-wise.
Matrix cholesky_solve(const Matrix& l, const Matrix& b) {
    const std::size_t n = l.rows();
    check_dims(b.rows() == n, "cholesky solve rhs");
    Matrix x = b;
    for (std::size_t c = 0; c < b.cols(); ++c) {
        // L z = b
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
        // L^T x = z
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
            x(ii, c) = s / l(ii, ii);
        }
    }
    return x;
}

}  // namespace

Matrix solve_spd(const Matrix& a, const Matrix& b) {
    auto l = cholesky(a);
    if (!l) throw NotPsdError("solve_spd: matrix not positive definite");
    return cholesky_solve(*l, b);
}

SymmetricEigen eigen_symmetric(const Matrix& a) {
    check_dims(a.rows() == a.cols(), "eigen_symmetric");
    const std::size_t n = a.rows();
    Matrix d = symmetrized(a);
    Matrix v = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += d(i, j) * d(i, j);
        return std::sqrt(s);
    };

    const double scale = std::max(max_abs(d), 1e-300);
    for (int sweep = 0; sweep < 100 && off_norm() > 1e-15 * scale * n; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(d(p, q)) <= 1e-300) continue;
                const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double dkp = d(k, p), dkq = d(k, q);
                    d(k, p) = c * dkp - s * dkq;
                    d(k, q) = s * dkp + c * dkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double dpk = d(p, k), dqk = d(q, k);
                    d(p, k) = c * dpk - s * dqk;
                    d(q, k) = s * dpk + c * dqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d(i, i) < d(j, j); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

SymPinv pinv_symmetric(const Matrix& a, double tol) {
    auto eig = eigen_symmetric(a);
    const std::size_t n = a.rows();
    SymPinv out;
    out.inverse = Matrix(n, n);
    double min_kept = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = eig.values[k];
        if (std::abs(lam) <= tol) continue;
        ++out.rank;
        min_kept = (min_kept == 0.0) ? std::abs(lam) : std::min(min_kept, std::abs(lam));
        Vector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = eig.vectors(i, k);
        add_outer(out.inverse, 1.0 / lam, col, col);
    }
    out.min_kept = min_kept;
    return out;
}

SymSolveResult solve_right_symmetric(const Matrix& a, const Matrix& b, double pivot_tol) {
    check_dims(a.rows() == a.cols() && b.cols() == a.rows(), "solve_right_symmetric");
    const std::size_t n = a.rows();
    SymSolveResult out;

    // LDL^T without pivoting; fine for the near-PSD systems this serves.
    Matrix l = Matrix::identity(n);
    Vector dpiv(n);
    bool ok = true;
    double min_pivot = 0.0;
    for (std::size_t j = 0; j < n && ok; ++j) {
        double dj = a(j, j);
        for (std::size_t k = 0; k < j; ++k) dj -= l(j, k) * l(j, k) * dpiv[k];
        dpiv[j] = dj;
        min_pivot = (j == 0) ? dj : std::min(min_pivot, dj);
        if (!(dj > pivot_tol)) {
            ok = false;
            break;
        }
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k) * dpiv[k];
            l(i, j) = s / dj;
        }
    }

    if (ok) {
        // X A = B  <=>  A X^T = B^T with A = L D L^T.
        Matrix rhs = b.transposed();
        for (std::size_t c = 0; c < rhs.cols(); ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = rhs(i, c);
                for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * rhs(k, c);
                rhs(i, c) = s;
            }
            for (std::size_t i = 0; i < n; ++i) rhs(i, c) /= dpiv[i];
            for (std::size_t ii = n; ii-- > 0;) {
                double s = rhs(ii, c);
                for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * rhs(k, c);
                rhs(ii, c) = s;
            }
        }
        out.x = rhs.transposed();
        out.rank = n;
        out.min_pivot = min_pivot;
        out.used_pinv = false;
        return out;
    }

    SymPinv p = pinv_symmetric(a, pivot_tol);
    out.x = b * p.inverse;
    out.rank = p.rank;
    out.min_pivot = min_pivot;
    out.used_pinv = true;
    return out;
}

bool is_psd(const Matrix& a, double tol_scale) {
    auto eig = eigen_symmetric(a);
    const double floor = -tol_scale * std::max(std::abs(a.trace()), 1.0);
    return eig.values.empty() || eig.values.front() >= floor;
}

}  // namespace qkf
