#include "qkf/tensor.hpp"

#include "qkf/kernels.hpp"

namespace qkf {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < b.rows(); ++k) {
            double* dst = out.row_ptr(i * b.rows() + k);
            for (std::size_t j = 0; j < a.cols(); ++j) {
                kernels::scale_copy(a(i, j), b.row_ptr(k), dst + j * b.cols(), b.cols());
            }
        }
    }
    return out;
}

Vector vec_square(const Vector& v) {
    const std::size_t m = v.size();
    Vector out(m * m);
    for (std::size_t i = 0; i < m; ++i) kernels::scale_copy(v[i], v.data(), out.data() + i * m, m);
    return out;
}

Vector stack(const Matrix& m) {
    Vector out(m.rows() * m.cols());
    std::size_t t = 0;
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out[t++] = m(i, j);
    return out;
}

Matrix unstack(const Vector& w, std::size_t rows, std::size_t cols) {
    check_dims(w.size() == rows * cols, "unstack");
    Matrix out(rows, cols);
    std::size_t t = 0;
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) out(i, j) = w[t++];
    return out;
}

Vector ReductionMaps::reduce(const Vector& full) const {
    check_dims(full.size() == dim * dim, "reduce");
    Vector out(pairs.size());
    for (std::size_t r = 0; r < pairs.size(); ++r) out[r] = full[pairs[r].first * dim + pairs[r].second];
    return out;
}

Matrix ReductionMaps::reduce_cols(const Matrix& a) const {
    check_dims(a.cols() == dim * dim, "reduce_cols");
    Matrix out(a.rows(), pairs.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t r = 0; r < pairs.size(); ++r)
            out(i, r) = a(i, pairs[r].first * dim + pairs[r].second);
    return out;
}

Matrix ReductionMaps::reduce_both(const Matrix& a) const {
    check_dims(a.rows() == dim * dim && a.cols() == dim * dim, "reduce_both");
    Matrix out(pairs.size(), pairs.size());
    for (std::size_t r = 0; r < pairs.size(); ++r)
        for (std::size_t c = 0; c < pairs.size(); ++c)
            out(r, c) = a(pairs[r].first * dim + pairs[r].second,
                          pairs[c].first * dim + pairs[c].second);
    return out;
}

ReductionMaps reduction_maps(std::size_t m) {
    check_dims(m >= 1, "reduction_maps dimension");
    ReductionMaps maps;
    maps.dim = m;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) maps.pairs.emplace_back(i, j);

    const std::size_t r = maps.pairs.size();
    maps.select = Matrix(r, m * m);
    maps.duplicate = Matrix(m * m, r);
    for (std::size_t k = 0; k < r; ++k) {
        const auto [i, j] = maps.pairs[k];
        maps.select(k, i * m + j) = 1.0;
        maps.duplicate(i * m + j, k) = 1.0;
        maps.duplicate(j * m + i, k) = 1.0;
    }
    return maps;
}

}  // namespace qkf
