#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace frametuner {

template <class T> struct is_complex : std::false_type {};
template <class U> struct is_complex<std::complex<U>> : std::true_type {};
template <class T> inline constexpr bool is_complex_v = is_complex<T>::value;

inline double conj_of(double x) { return x; }
inline std::complex<double> conj_of(const std::complex<double>& x) { return std::conj(x); }

inline double real_of(double x) { return x; }
inline double real_of(const std::complex<double>& x) { return x.real(); }

inline double abs_sq(double x) { return x * x; }
inline double abs_sq(const std::complex<double>& x) {
    return x.real() * x.real() + x.imag() * x.imag();
}

template <class T>
const char* field_name() {
    return is_complex_v<T> ? "complex" : "real";
}

/// Dense row-major matrix over double or std::complex<double>.
template <class T>
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("Matrix: dimensions must be positive");
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    std::vector<T> col(std::size_t j) const {
        std::vector<T> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    void set_col(std::size_t j, const std::vector<T>& v) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
    }

    bool all_finite() const {
        for (const T& x : data_) {
            if (!std::isfinite(real_of(x))) return false;
            if constexpr (is_complex_v<T>) {
                if (!std::isfinite(x.imag())) return false;
            }
        }
        return true;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Standard product; the k-sum runs in ascending index order so results are
/// reproducible bit-for-bit.
template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: dimension mismatch (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " * " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
    }
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            T acc{};
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += a(i, k) * b(k, j);
            }
            c(i, j) = acc;
        }
    }
    return c;
}

/// Conjugate transpose.
template <class T>
Matrix<T> adjoint(const Matrix<T>& a) {
    Matrix<T> c(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            c(j, i) = conj_of(a(i, j));
        }
    }
    return c;
}

/// Hilbert-Schmidt (Frobenius) norm: sqrt(sum of squared entry moduli).
template <class T>
double hs_norm(const Matrix<T>& a) {
    double acc = 0.0;
    for (const T& x : a.data()) acc += abs_sq(x);
    return std::sqrt(acc);
}

template <class T>
Matrix<T> operator+(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("matrix add: shape mismatch");
    }
    Matrix<T> c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

template <class T>
Matrix<T> operator-(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("matrix subtract: shape mismatch");
    }
    Matrix<T> c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

template <class T>
Matrix<T> scale(const Matrix<T>& a, double s) {
    Matrix<T> c = a;
    for (T& x : c.data()) x *= s;
    return c;
}

/// <x, y> = sum_i x_i * conj(y_i); linear in the first argument.
template <class T>
T inner(const std::vector<T>& x, const std::vector<T>& y) {
    T acc{};
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * conj_of(y[i]);
    return acc;
}

template <class T>
double norm_sq(const std::vector<T>& x) {
    double acc = 0.0;
    for (const T& v : x) acc += abs_sq(v);
    return acc;
}

template <class T>
double norm(const std::vector<T>& x) {
    return std::sqrt(norm_sq(x));
}

template <class T>
std::vector<T> matvec(const Matrix<T>& a, const std::vector<T>& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<T> y(a.rows(), T{});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T acc{};
        for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * x[k];
        y[i] = acc;
    }
    return y;
}

}  // namespace frametuner
