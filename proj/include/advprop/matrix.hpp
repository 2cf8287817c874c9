#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace advprop {

/// Dense row-major matrix of 64-bit reals, the universal numeric carrier.
/// Data matrices store one sample per row; weight matrices are stored
/// (out_units x in_units). Public operations never return NaN/Inf values:
/// a non-finite result raises NumericError instead of propagating.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);  // zero-filled
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    const std::vector<double>& values() const { return data_; }
    void fill(double v);

    std::string shape_str() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix identity(std::size_t n);

/// Standard product a*b; requires a.cols == b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * transpose(b) without materializing the transpose; b is (n x k) and
/// the result (m x n). The dot products use eight interleaved partial sums
/// (fixed order, deterministic).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// transpose(a) * b without materializing the transpose; a is (k x m).
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Entrywise sign with sign(0) = 0, so a zero entry produces no
/// perturbation downstream. Rejects non-finite inputs.
Matrix sign_map(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// One L2 norm per row.
std::vector<double> row_l2_norms(const Matrix& m);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

/// Mean and population standard deviation over all entries.
MeanStd mean_std(const Matrix& m);

double frobenius_norm(const Matrix& m);

/// True when shapes and every stored bit pattern agree.
bool bit_identical(const Matrix& a, const Matrix& b);

/// Raises NumericError naming `context` if any entry is NaN or Inf.
void ensure_finite(const Matrix& m, const char* context);

}  // namespace advprop
