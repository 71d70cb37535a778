#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "frametuner/eig.hpp"
#include "frametuner/matrix.hpp"
#include "frametuner/rng.hpp"

namespace frametuner {

inline constexpr double kColumnNormTol = 1e-12;
inline constexpr double kDefaultUntfTol = 1e-8;

/// Thrown when a synthesis matrix has a column whose norm is not 1; carries
/// the offending column so callers can report it (or normalize and retry).
class UnitNormError : public std::runtime_error {
public:
    UnitNormError(std::size_t column, double column_norm)
        : std::runtime_error("column " + std::to_string(column) + " has norm " +
                             std::to_string(column_norm) + ", expected 1"),
          column_(column),
          norm_(column_norm) {}

    std::size_t column() const { return column_; }
    double column_norm() const { return norm_; }

private:
    std::size_t column_;
    double norm_;
};

/// A unit norm sequence of count() vectors in a space_dim()-dimensional real
/// or complex Hilbert space, held as its M x N synthesis matrix (vectors are
/// the columns). Immutable after construction.
template <class T>
class Frame {
public:
    explicit Frame(Matrix<T> synthesis) : synthesis_(std::move(synthesis)) {
        if (!synthesis_.all_finite()) {
            throw std::invalid_argument("Frame: synthesis matrix has non-finite entries");
        }
        for (std::size_t n = 0; n < synthesis_.cols(); ++n) {
            double s = 0.0;
            for (std::size_t m = 0; m < synthesis_.rows(); ++m) s += abs_sq(synthesis_(m, n));
            const double len = std::sqrt(s);
            if (std::abs(len - 1.0) > kColumnNormTol) throw UnitNormError(n, len);
        }
    }

    std::size_t space_dim() const { return synthesis_.rows(); }
    std::size_t count() const { return synthesis_.cols(); }
    const Matrix<T>& synthesis() const { return synthesis_; }
    std::vector<T> column(std::size_t n) const { return synthesis_.col(n); }

    /// N/M, the tight frame constant a UNTF of these dimensions would have.
    double redundancy() const {
        return static_cast<double>(count()) / static_cast<double>(space_dim());
    }

private:
    Matrix<T> synthesis_;
};

struct FrameAnalysis {
    std::vector<double> eigenvalues;  // of FF*, ascending
    double frame_potential = 0.0;
    double distance_from_tightness = 0.0;
    bool is_untf = false;
    double lower_frame_bound = 0.0;  // least eigenvalue of FF*
    double upper_frame_bound = 0.0;  // greatest eigenvalue of FF*
};

/// Scales every column to unit norm. Columns with norm <= 1e-14 are rejected
/// (their direction is undefined).
template <class T>
Frame<T> normalize_columns(const Matrix<T>& raw) {
    Matrix<T> out = raw;
    for (std::size_t n = 0; n < out.cols(); ++n) {
        double s = 0.0;
        for (std::size_t m = 0; m < out.rows(); ++m) s += abs_sq(out(m, n));
        const double len = std::sqrt(s);
        if (len <= 1e-14) {
            throw std::invalid_argument("normalize_columns: column " + std::to_string(n) +
                                        " is zero");
        }
        for (std::size_t m = 0; m < out.rows(); ++m) out(m, n) *= 1.0 / len;
    }
    return Frame<T>(std::move(out));
}

/// FF*, the M x M frame operator.
template <class T>
Matrix<T> frame_operator(const Frame<T>& f) {
    return matmul(f.synthesis(), adjoint(f.synthesis()));
}

/// F*F, the N x N Gram matrix of pairwise inner products.
template <class T>
Matrix<T> gram(const Frame<T>& f) {
    return matmul(adjoint(f.synthesis()), f.synthesis());
}

/// FP(F) = ||F*F||_HS^2, the sum of squared moduli of all pairwise inner
/// products. At least N^2/M, with equality exactly at UNTFs.
template <class T>
double frame_potential(const Frame<T>& f) {
    const double g = hs_norm(gram(f));
    return g * g;
}

/// ||FF* - (N/M) I||_HS, computed from the M x M frame operator. Equal to
/// sqrt(FP - N^2/M); the Gram route serves as the test oracle for that
/// identity.
template <class T>
double distance_from_tightness(const Frame<T>& f) {
    const Matrix<T> s = frame_operator(f);
    const double target = f.redundancy();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        for (std::size_t j = 0; j < s.cols(); ++j) {
            if (i == j) {
                acc += abs_sq(s(i, j) - T{target});
            } else {
                acc += abs_sq(s(i, j));
            }
        }
    }
    return std::sqrt(acc);
}

template <class T>
FrameAnalysis analyze(const Frame<T>& f, double untf_tol = kDefaultUntfTol) {
    if (untf_tol <= 0.0) throw std::invalid_argument("analyze: untf_tol must be positive");
    FrameAnalysis out;
    const EigenDecomposition<T> eig = hermitian_eig(frame_operator(f));
    out.eigenvalues = eig.eigenvalues;
    out.frame_potential = frame_potential(f);
    out.distance_from_tightness = distance_from_tightness(f);
    out.is_untf = out.distance_from_tightness <= untf_tol;
    out.lower_frame_bound = out.eigenvalues.front();
    out.upper_frame_bound = out.eigenvalues.back();
    return out;
}

/// The UNTF obtained by keeping the first M rows of the N x N DFT matrix and
/// scaling columns to unit norm: entry (m, n) = exp(2*pi*i*m*n/N)/sqrt(M).
inline Frame<std::complex<double>> harmonic_frame(std::size_t space_dim, std::size_t count) {
    if (space_dim == 0 || count == 0) {
        throw std::invalid_argument("harmonic_frame: dimensions must be positive");
    }
    if (space_dim > count) {
        throw std::invalid_argument("harmonic_frame: requires M <= N");
    }
    constexpr double kTwoPi = 6.28318530717958647692;
    const double amp = 1.0 / std::sqrt(static_cast<double>(space_dim));
    Matrix<std::complex<double>> syn(space_dim, count);
    for (std::size_t m = 0; m < space_dim; ++m) {
        for (std::size_t n = 0; n < count; ++n) {
            const double arg = kTwoPi * static_cast<double>(m) * static_cast<double>(n) /
                               static_cast<double>(count);
            syn(m, n) = std::polar(amp, arg);
        }
    }
    return Frame<std::complex<double>>(std::move(syn));
}

/// Unit norm frame with i.i.d. standard Gaussian entries, columns normalized.
/// Deterministic per seed.
template <class T>
Frame<T> random_frame(std::size_t space_dim, std::size_t count, std::uint64_t seed) {
    if (space_dim == 0 || count == 0) {
        throw std::invalid_argument("random_frame: dimensions must be positive");
    }
    if (space_dim > count) {
        throw std::invalid_argument("random_frame: requires M <= N");
    }
    Rng rng(seed);
    Matrix<T> syn(space_dim, count);
    for (std::size_t n = 0; n < count; ++n) {
        double s = 0.0;
        do {
            s = 0.0;
            for (std::size_t m = 0; m < space_dim; ++m) {
                syn(m, n) = rng.gaussian_scalar<T>();
                s += abs_sq(syn(m, n));
            }
        } while (std::sqrt(s) <= 1e-14);
        const double inv = 1.0 / std::sqrt(s);
        for (std::size_t m = 0; m < space_dim; ++m) syn(m, n) *= inv;
    }
    return Frame<T>(std::move(syn));
}

/// Moves each column along a seeded random tangent direction by a geodesic
/// angle drawn uniformly from [0, magnitude], then renormalizes.
template <class T>
Frame<T> perturb(const Frame<T>& f, double magnitude, std::uint64_t seed) {
    if (magnitude < 0.0) throw std::invalid_argument("perturb: magnitude must be >= 0");
    Rng rng(seed);
    Matrix<T> syn = f.synthesis();
    const std::size_t dim = f.space_dim();
    for (std::size_t n = 0; n < f.count(); ++n) {
        std::vector<T> col = syn.col(n);
        std::vector<T> dir(dim);
        for (std::size_t m = 0; m < dim; ++m) dir[m] = rng.gaussian_scalar<T>();
        const double angle = magnitude * rng.uniform();
        const T overlap = inner(dir, col);
        for (std::size_t m = 0; m < dim; ++m) dir[m] -= overlap * col[m];
        const double len = norm(dir);
        if (len <= 1e-14 || angle == 0.0) continue;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        double out_sq = 0.0;
        for (std::size_t m = 0; m < dim; ++m) {
            col[m] = c * col[m] + s * (dir[m] * (1.0 / len));
            out_sq += abs_sq(col[m]);
        }
        const double inv = 1.0 / std::sqrt(out_sq);
        for (std::size_t m = 0; m < dim; ++m) col[m] *= inv;
        syn.set_col(n, col);
    }
    return Frame<T>(std::move(syn));
}

/// The 2x4 real family [[cos t, cos t, 0, 0], [sin t, -sin t, 1, 1]]. Its
/// descent dynamics close in a single angle (theta shrinks by
/// 4 t cos(theta) sin^3(theta) per step), which makes it the golden fixture
/// for the non-coprime behavior of the tuner.
inline Frame<double> example_theta_frame(double theta) {
    Matrix<double> syn(2, 4);
    syn(0, 0) = std::cos(theta);
    syn(1, 0) = std::sin(theta);
    syn(0, 1) = std::cos(theta);
    syn(1, 1) = -std::sin(theta);
    syn(0, 2) = 0.0;
    syn(1, 2) = 1.0;
    syn(0, 3) = 0.0;
    syn(1, 3) = 1.0;
    return Frame<double>(std::move(syn));
}

/// The closest UNTF to example_theta_frame(theta) for theta in [0, pi/8]:
/// two orthonormal bases at half the angle.
inline Frame<double> example_theta_tilde_frame(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    Matrix<double> syn(2, 4);
    syn(0, 0) = c;
    syn(1, 0) = s;
    syn(0, 1) = c;
    syn(1, 1) = -s;
    syn(0, 2) = -s;
    syn(1, 2) = c;
    syn(0, 3) = s;
    syn(1, 3) = c;
    return Frame<double>(std::move(syn));
}

/// sqrt(N/M) * (FF*)^(-1/2) * F: the tight frame nearest to F in HS norm.
/// Its columns are generally not unit norm. Inputs whose frame operator has
/// an eigenvalue <= 1e-12 are rejected as rank deficient.
template <class T>
Matrix<T> nearest_tight_frame(const Frame<T>& f) {
    const EigenDecomposition<T> eig = hermitian_eig(frame_operator(f));
    if (eig.eigenvalues.front() <= 1e-12) {
        throw std::invalid_argument(
            "nearest_tight_frame: frame operator is rank deficient (lambda_min = " +
            std::to_string(eig.eigenvalues.front()) + ")");
    }
    const std::size_t dim = f.space_dim();
    // sqrt(N/M) * V diag(1/sqrt(lambda)) V*
    Matrix<T> w(dim, dim);
    const double amp = std::sqrt(f.redundancy());
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            T acc{};
            for (std::size_t k = 0; k < dim; ++k) {
                acc += eig.eigenvectors(i, k) * conj_of(eig.eigenvectors(j, k)) *
                       (1.0 / std::sqrt(eig.eigenvalues[k]));
            }
            w(i, j) = acc * amp;
        }
    }
    return matmul(w, f.synthesis());
}

}  // namespace frametuner
