#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "dgms/errors.hpp"

namespace dgms {

/// Dense row-major 2-D array. Plain value type: parameters, features and
/// checkpoints live here; differentiable computation happens on a Tape.
template <class S>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<S> data; // row-major, rows*cols entries

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, S(0)) {
        if (r < 0 || c < 0) throw ArgumentError("matrix dimensions must be non-negative");
    }
    Matrix(int r, int c, std::initializer_list<S> values) : Matrix(r, c) {
        if (static_cast<int>(values.size()) != r * c)
            throw ArgumentError("matrix initializer size does not match shape");
        std::size_t i = 0;
        for (S v : values) data[i++] = v;
    }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix full(int r, int c, S v) {
        Matrix m(r, c);
        for (auto& x : m.data) x = v;
        return m;
    }
    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = S(1);
        return m;
    }

    S& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const S& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool operator==(const Matrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

template <class To, class From>
Matrix<To> cast_matrix(const Matrix<From>& m) {
    Matrix<To> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<To>(m.data[i]);
    return out;
}

} // namespace dgms
