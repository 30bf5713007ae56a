// Kronecker-product and stacking utilities the quadratic update formulas are
// written in, plus the duplicate-entry reduction maps that make the augmented
// measurement covariance invertible for vector measurements.
#pragma once

#include "qkf/linalg.hpp"

namespace qkf {

// Standard Kronecker product; (p*r) x (q*s) for A p x q, B r x s.
Matrix kron(const Matrix& a, const Matrix& b);

// v (x) v, length m^2; entry (i*m + j) = v[i] * v[j].
Vector vec_square(const Vector& v);

// Column-major stack: columns concatenated top to bottom. With this
// convention stack(a * b^T) = b (x) a, so E[dy (x) dy] = stack(P_yy) holds
// exactly as the update formulas require.
Vector stack(const Matrix& m);
Matrix unstack(const Vector& w, std::size_t rows, std::size_t cols);

// Selection map L (m(m+1)/2 x m^2) picking one representative of each
// unordered pair, and duplication map D (m^2 x m(m+1)/2) rebuilding the full
// Kronecker square. L*D = I; D*L is the identity on symmetric vectors.
// Pair order is (0,0),(0,1),...,(0,m-1),(1,1),...,(m-1,m-1).
struct ReductionMaps {
    std::size_t dim = 0;                                    // m
    Matrix select;                                          // L
    Matrix duplicate;                                       // D
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // (i, j), i <= j

    std::size_t reduced_size() const { return pairs.size(); }
    // L * w without forming the product.
    Vector reduce(const Vector& full) const;
    // Right-multiply by L^T: A (rows x m^2) -> (rows x m(m+1)/2).
    Matrix reduce_cols(const Matrix& a) const;
    // L * A * L^T for A m^2 x m^2.
    Matrix reduce_both(const Matrix& a) const;
};

ReductionMaps reduction_maps(std::size_t m);

}  // namespace qkf
