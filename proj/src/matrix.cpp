#include "advprop/matrix.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "advprop/errors.hpp"

namespace advprop {

namespace {

std::string shape_of(std::size_t r, std::size_t c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shapes differ (" + a.shape_str() +
                         " vs " + b.shape_str() + ")");
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_of(rows_, cols_));
    }
}

void Matrix::fill(double v) {
    for (auto& x : data_) x = v;
}

std::string Matrix::shape_str() const { return shape_of(rows_, cols_); }

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void ensure_finite(const Matrix& m, const char* context) {
    const double* p = m.data();
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) {
            throw NumericError(std::string(context) + ": non-finite value at (" +
                               std::to_string(i / (m.cols() ? m.cols() : 1)) + "," +
                               std::to_string(m.cols() ? i % m.cols() : 0) + ")");
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" + a.shape_str() +
                         " vs " + b.shape_str() + ")");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    // i-k-j order: contiguous access on b and c, and each c entry still
    // accumulates its k terms in ascending order.
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = pc + i * n;
        const double* ai = pa + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = ai[kk];
            const double* bk = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    ensure_finite(c, "matmul");
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: shared dimension differs (" + a.shape_str() +
                         " vs " + b.shape_str() + "^T)");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Matrix c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = pa + i * k;
        double* ci = pc + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = pb + j * k;
            double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
            std::size_t kk = 0;
            for (; kk + 8 <= k; kk += 8) {
                for (std::size_t u = 0; u < 8; ++u) acc[u] += ai[kk + u] * bj[kk + u];
            }
            double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                       ((acc[4] + acc[5]) + (acc[6] + acc[7]));
            for (; kk < k; ++kk) s += ai[kk] * bj[kk];
            ci[j] = s;
        }
    }
    ensure_finite(c, "matmul_nt");
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: shared dimension differs (" + a.shape_str() +
                         "^T vs " + b.shape_str() + ")");
    }
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Matrix c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* ak = pa + kk * m;
        const double* bk = pb + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double aki = ak[i];
            double* ci = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
        }
    }
    ensure_finite(c, "matmul_tn");
    return c;
}

Matrix sign_map(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    const double* p = m.data();
    double* q = out.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double v = p[i];
        if (!std::isfinite(v)) {
            throw NumericError("sign_map: non-finite entry at index " + std::to_string(i));
        }
        q[i] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
    ensure_finite(c, "add");
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
    ensure_finite(c, "sub");
    return c;
}

Matrix scale(const Matrix& m, double c) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = m.data()[i] * c;
    ensure_finite(out, "scale");
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
    ensure_finite(c, "hadamard");
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
    return t;
}

std::vector<double> row_l2_norms(const Matrix& m) {
    std::vector<double> norms(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* p = m.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += p[c] * p[c];
        if (!std::isfinite(s)) {
            throw NumericError("row_l2_norms: non-finite row " + std::to_string(r));
        }
        norms[r] = std::sqrt(s);
    }
    return norms;
}

MeanStd mean_std(const Matrix& m) {
    if (m.size() == 0) throw DataError("mean_std: empty matrix");
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) sum += m.data()[i];
    const double mean = sum / static_cast<double>(m.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = m.data()[i] - mean;
        sq += d * d;
    }
    const double var = sq / static_cast<double>(m.size());
    if (!std::isfinite(mean) || !std::isfinite(var)) {
        throw NumericError("mean_std: non-finite statistics");
    }
    return {mean, std::sqrt(var)};
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m.data()[i] * m.data()[i];
    return std::sqrt(s);
}

bool bit_identical(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.size() == 0) return true;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace advprop
