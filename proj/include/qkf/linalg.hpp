// Dense row-major matrix/vector algebra used throughout the library.
//
// Dimensions are checked at every operation boundary; a mismatch throws
// DimensionError rather than broadcasting. Sizes in this library stay small
// (state dim <= 6, augmented measurement blocks <= 36x36), so everything is
// plain dense storage over the runtime-dispatched kernels.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkf {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotPsdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const Vector& d);
    // Column vector / row vector views of a Vector.
    static Matrix column(const Vector& v);
    static Matrix row(const Vector& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    Matrix transposed() const;
    double trace() const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double s, Vector a);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);

// C += w * x * y^T
void add_outer(Matrix& c, double w, const Vector& x, const Vector& y);

// A * B^T without forming the transpose.
Matrix mul_transposed(const Matrix& a, const Matrix& b);

// (M + M^T) / 2
Matrix symmetrized(const Matrix& m);

double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

void check_dims(bool ok, const std::string& what);

// ---------------------------------------------------------------------------
// Factorizations
// ---------------------------------------------------------------------------

// Lower-triangular Cholesky factor of a symmetric matrix; nullopt when a
// pivot is not strictly positive.
std::optional<Matrix> cholesky(const Matrix& a);

// Cholesky with an escalating diagonal jitter: after a clean attempt fails,
// retries with (rel_jitter * trace(a)) * I scaled by 10 each time, up to
// `attempts` retries. Throws NotPsdError when all attempts fail.
Matrix cholesky_with_jitter(const Matrix& a, double rel_jitter = 1e-12, int attempts = 3);

// Square-root factor R with R R^T = a for a PSD-up-to-tolerance matrix:
// Cholesky when positive definite, otherwise the eigenvector root with
// negative eigenvalues clamped to zero. Eigenvalues below
// -tol_scale * max(|trace|, max|entry|) mean genuinely indefinite input and
// throw NotPsdError.
Matrix psd_square_root(const Matrix& a, double tol_scale = 1e-10);

// Solve A X = B for symmetric positive definite A via Cholesky.
Matrix solve_spd(const Matrix& a, const Matrix& b);

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // columns are eigenvectors
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen eigen_symmetric(const Matrix& a);

// Moore-Penrose pseudo-inverse of a symmetric matrix; eigenvalues with
// |lambda| <= tol are treated as zero. Returns the numerical rank too.
struct SymPinv {
    Matrix inverse;
    std::size_t rank = 0;
    double min_kept = 0.0;
};
SymPinv pinv_symmetric(const Matrix& a, double tol);

// Solve X A = B (A symmetric) by LDL^T; falls back to the pseudo-inverse when
// a pivot drops below pivot_tol. Reports diagnostics of the path taken.
struct SymSolveResult {
    Matrix x;
    std::size_t rank = 0;
    double min_pivot = 0.0;
    bool used_pinv = false;
};
SymSolveResult solve_right_symmetric(const Matrix& a, const Matrix& b, double pivot_tol);

bool is_psd(const Matrix& a, double tol_scale = 1e-10);

}  // namespace qkf
