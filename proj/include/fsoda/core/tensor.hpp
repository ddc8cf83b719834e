#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "fsoda/core/error.hpp"

namespace fsoda {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 matrices.
/// All training math runs in double so finite-difference checks are exact
/// to roundoff.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        assert(rows >= 0 && cols >= 0);
    }
    Tensor(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
        assert(data_.size() == static_cast<size_t>(rows) * cols);
    }
    Tensor(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = static_cast<int>(init.size());
        cols_ = rows_ > 0 ? static_cast<int>(init.begin()->size()) : 0;
        data_.reserve(static_cast<size_t>(rows_) * cols_);
        for (const auto& row : init) {
            assert(static_cast<int>(row.size()) == cols_);
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
    static Tensor full(int rows, int cols, double v) {
        Tensor t(rows, cols);
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }
    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }
    static Tensor row(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Tensor(1, n, std::move(v));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& vec() const { return data_; }

    double* row_ptr(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }
    const double* row_ptr(int i) const { return data_.data() + static_cast<size_t>(i) * cols_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void set_zero() { fill(0.0); }

    Tensor transposed() const {
        Tensor out(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
        return out;
    }

    Tensor row_copy(int i) const {
        Tensor out(1, cols_);
        std::copy(row_ptr(i), row_ptr(i) + cols_, out.data());
        return out;
    }

    void add_inplace(const Tensor& o) {
        assert(same_shape(o));
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    }
    /// this += a * x
    void axpy_inplace(double a, const Tensor& x) {
        assert(same_shape(x));
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
    }
    void scale_inplace(double a) {
        for (auto& v : data_) v *= a;
    }

    double sum() const {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }
    double squared_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }
    double norm() const { return std::sqrt(squared_norm()); }
    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::fabs(v));
        return m;
    }
    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// C += alpha * op(A) * op(B). Naive triple loop; matrices here stay small
/// (embedding dim <= a few hundred).
inline void gemm_acc(Tensor& c, const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, double alpha = 1.0) {
    const int m = trans_a ? a.cols() : a.rows();
    const int k = trans_a ? a.rows() : a.cols();
    const int kb = trans_b ? b.cols() : b.rows();
    const int n = trans_b ? b.rows() : b.cols();
    if (k != kb || c.rows() != m || c.cols() != n)
        throw NumericError("gemm: shape mismatch " + std::to_string(m) + "x" + std::to_string(k) + " * " +
                           std::to_string(kb) + "x" + std::to_string(n));
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = alpha * (trans_a ? a(p, i) : a(i, p));
            if (av == 0.0) continue;
            double* crow = c.row_ptr(i);
            if (!trans_b) {
                const double* brow = b.row_ptr(p);
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                for (int j = 0; j < n; ++j) crow[j] += av * b(j, p);
            }
        }
    }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows(), b.cols());
    gemm_acc(c, a, false, b, false);
    return c;
}

}  // namespace fsoda
