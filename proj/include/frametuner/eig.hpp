#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "frametuner/matrix.hpp"

namespace frametuner {

/// Eigen-data of a Hermitian matrix: eigenvalues ascending, eigenvectors as
/// the matching orthonormal columns.
template <class T>
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    Matrix<T> eigenvectors;
};

namespace detail {

template <class T>
double off_diagonal_norm(const Matrix<T>& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) acc += abs_sq(a(i, j));
        }
    }
    return std::sqrt(acc);
}

// Index of the largest-modulus component; ties go to the smaller index.
template <class T>
std::size_t dominant_index(const Matrix<T>& v, std::size_t col) {
    std::size_t best = 0;
    double best_mag = abs_sq(v(0, col));
    for (std::size_t i = 1; i < v.rows(); ++i) {
        double mag = abs_sq(v(i, col));
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for small dense Hermitian matrices. Sweeps run
/// in a fixed (p, q) order and all arithmetic is sequential double precision,
/// so identical inputs produce identical outputs. Eigenvalues come back
/// ascending; within an exactly degenerate cluster, columns are ordered by
/// the original index of each eigenvector's dominant component and rotated to
/// make that component real and nonnegative.
template <class T>
EigenDecomposition<T> hermitian_eig(const Matrix<T>& input) {
    if (input.rows() != input.cols()) {
        throw std::invalid_argument("hermitian_eig: matrix must be square");
    }
    const std::size_t n = input.rows();
    const double scale = hs_norm(input);
    if (hs_norm(input - adjoint(input)) > 1e-12 * (1.0 + scale)) {
        throw std::invalid_argument("hermitian_eig: matrix is not Hermitian within tolerance");
    }

    Matrix<T> a = input;
    Matrix<T> v = Matrix<T>::identity(n);

    constexpr int kMaxSweeps = 100;
    constexpr double kOffTol = 1e-14;
    if (n > 1) {
        int sweep = 0;
        for (; sweep < kMaxSweeps; ++sweep) {
            if (detail::off_diagonal_norm(a) <= kOffTol * scale) break;
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const T apq = a(p, q);
                    const double beta = std::sqrt(abs_sq(apq));
                    if (beta == 0.0) continue;
                    const T phase = apq * (1.0 / beta);
                    const double app = real_of(a(p, p));
                    const double aqq = real_of(a(q, q));
                    const double tau = (aqq - app) / (2.0 * beta);
                    double t;
                    if (tau >= 0.0) {
                        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                    } else {
                        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                    }
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;

                    for (std::size_t i = 0; i < n; ++i) {
                        if (i == p || i == q) continue;
                        const T aip = a(i, p);
                        const T aiq = a(i, q);
                        a(i, p) = c * aip - s * conj_of(phase) * aiq;
                        a(i, q) = s * phase * aip + c * aiq;
                        a(p, i) = conj_of(a(i, p));
                        a(q, i) = conj_of(a(i, q));
                    }
                    a(p, p) = T{c * c * app - 2.0 * c * s * beta + s * s * aqq};
                    a(q, q) = T{s * s * app + 2.0 * c * s * beta + c * c * aqq};
                    a(p, q) = T{};
                    a(q, p) = T{};
                    for (std::size_t i = 0; i < n; ++i) {
                        const T vip = v(i, p);
                        const T viq = v(i, q);
                        v(i, p) = c * vip - s * conj_of(phase) * viq;
                        v(i, q) = s * phase * vip + c * viq;
                    }
                }
            }
        }
        if (sweep == kMaxSweeps && detail::off_diagonal_norm(a) > kOffTol * scale) {
            throw std::runtime_error("hermitian_eig: Jacobi sweeps did not converge");
        }
    }

    // Canonical phase: dominant component real and >= 0.
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t d = detail::dominant_index(v, j);
        const T pivot = v(d, j);
        const double mag = std::sqrt(abs_sq(pivot));
        if (mag > 0.0) {
            const T phase = conj_of(pivot * (1.0 / mag));
            for (std::size_t i = 0; i < n; ++i) v(i, j) *= phase;
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> lambdas(n);
    std::vector<std::size_t> dominants(n);
    for (std::size_t j = 0; j < n; ++j) {
        lambdas[j] = real_of(a(j, j));
        dominants[j] = detail::dominant_index(v, j);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (lambdas[x] != lambdas[y]) return lambdas[x] < lambdas[y];
        if (dominants[x] != dominants[y]) return dominants[x] < dominants[y];
        return x < y;
    });

    EigenDecomposition<T> out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix<T>(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = lambdas[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

}  // namespace frametuner
