#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frametuner/descent.hpp"
#include "frametuner/frame.hpp"
#include "frametuner/matrix.hpp"

namespace frametuner {

using cvec = std::vector<std::complex<double>>;

/// Cyclic translation (T^steps f)(m) = f(m - steps mod M). Unitary.
template <class T>
std::vector<T> translate(const std::vector<T>& v, long steps) {
    const std::size_t m = v.size();
    if (m == 0) throw std::invalid_argument("translate: empty vector");
    const long len = static_cast<long>(m);
    const long shift = ((steps % len) + len) % len;
    std::vector<T> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = v[(i + m - static_cast<std::size_t>(shift)) % m];
    }
    return out;
}

/// Modulation (E^steps f)(m) = e^(2 pi i steps m / M) f(m). Unitary; defined
/// on complex vectors only (a real input has no real-field counterpart).
inline cvec modulate(const cvec& v, long steps) {
    const std::size_t m = v.size();
    if (m == 0) throw std::invalid_argument("modulate: empty vector");
    constexpr double kTwoPi = 6.28318530717958647692;
    cvec out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double arg = kTwoPi * static_cast<double>(steps) * static_cast<double>(i) /
                           static_cast<double>(m);
        out[i] = std::polar(1.0, arg) * v[i];
    }
    return out;
}

namespace detail {

inline void require_unit(const cvec& v, const char* what) {
    if (std::abs(norm(v) - 1.0) > kColumnNormTol) {
        throw std::invalid_argument(std::string(what) + ": generator must be unit norm");
    }
}

}  // namespace detail

/// The orbit {T^(Ai) E^(Bj) f : 0 <= i < C, 0 <= j < D} of one unit norm
/// generator f in l(Z_M), with M = AC = BD; the induced frame has N = CD
/// vectors.
struct GaborSystem {
    std::size_t signal_len;  // M
    std::size_t trans_step;  // A
    std::size_t mod_step;    // B
    cvec generator;

    GaborSystem(std::size_t m, std::size_t a, std::size_t b, cvec gen)
        : signal_len(m), trans_step(a), mod_step(b), generator(std::move(gen)) {
        if (m == 0 || a == 0 || b == 0) {
            throw std::invalid_argument("GaborSystem: parameters must be positive");
        }
        if (m % a != 0) {
            throw std::invalid_argument("GaborSystem: A = " + std::to_string(a) +
                                        " does not divide M = " + std::to_string(m));
        }
        if (m % b != 0) {
            throw std::invalid_argument("GaborSystem: B = " + std::to_string(b) +
                                        " does not divide M = " + std::to_string(m));
        }
        if (generator.size() != m) {
            throw std::invalid_argument("GaborSystem: generator length must equal M");
        }
        detail::require_unit(generator, "GaborSystem");
    }

    std::size_t num_translates() const { return signal_len / trans_step; }  // C
    std::size_t num_modulates() const { return signal_len / mod_step; }     // D
    std::size_t orbit_size() const { return num_translates() * num_modulates(); }
};

/// The orbit {T^(Ai) f_j} of several unit norm generators under the
/// translation lattice, M = AC; the induced frame has N = C * |J| vectors.
struct FilterBank {
    std::size_t signal_len;  // M
    std::size_t trans_step;  // A
    std::vector<cvec> generators;

    FilterBank(std::size_t m, std::size_t a, std::vector<cvec> gens)
        : signal_len(m), trans_step(a), generators(std::move(gens)) {
        if (m == 0 || a == 0) {
            throw std::invalid_argument("FilterBank: parameters must be positive");
        }
        if (m % a != 0) {
            throw std::invalid_argument("FilterBank: A = " + std::to_string(a) +
                                        " does not divide M = " + std::to_string(m));
        }
        if (generators.empty()) {
            throw std::invalid_argument("FilterBank: needs at least one generator");
        }
        for (const cvec& g : generators) {
            if (g.size() != m) {
                throw std::invalid_argument("FilterBank: generator length must equal M");
            }
            detail::require_unit(g, "FilterBank");
        }
    }

    std::size_t num_translates() const { return signal_len / trans_step; }  // C
    std::size_t orbit_size() const { return num_translates() * generators.size(); }
};

/// Columns in (i, j)-lexicographic order: i over translates (outer), j over
/// modulates (inner); column (i, j) = T^(Ai) E^(Bj) f.
inline Frame<std::complex<double>> synthesize(const GaborSystem& sys) {
    const std::size_t c = sys.num_translates();
    const std::size_t d = sys.num_modulates();
    Matrix<std::complex<double>> syn(sys.signal_len, c * d);
    std::size_t col = 0;
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const cvec v = translate(modulate(sys.generator, static_cast<long>(sys.mod_step * j)),
                                     static_cast<long>(sys.trans_step * i));
            syn.set_col(col++, v);
        }
    }
    return Frame<std::complex<double>>(std::move(syn));
}

/// Columns with i over translates (outer) and j over generators (inner).
inline Frame<std::complex<double>> synthesize(const FilterBank& bank) {
    const std::size_t c = bank.num_translates();
    Matrix<std::complex<double>> syn(bank.signal_len, bank.orbit_size());
    std::size_t col = 0;
    for (std::size_t i = 0; i < c; ++i) {
        for (const cvec& g : bank.generators) {
            syn.set_col(col++, translate(g, static_cast<long>(bank.trans_step * i)));
        }
    }
    return Frame<std::complex<double>>(std::move(syn));
}

struct CommutationCheck {
    bool ok = false;
    double max_violation = 0.0;
};

/// ||FF* U - U FF*||_HS for each unitary, applied column-by-column without
/// materializing U as a matrix.
inline CommutationCheck commutation_check_ops(
    const Matrix<std::complex<double>>& frame_op,
    const std::vector<std::function<cvec(const cvec&)>>& unitaries) {
    const std::size_t dim = frame_op.rows();
    CommutationCheck out;
    for (const auto& apply : unitaries) {
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            cvec basis(dim, {0.0, 0.0});
            basis[k] = {1.0, 0.0};
            const cvec su = matvec(frame_op, apply(basis));  // (FF* U) e_k
            const cvec us = apply(frame_op.col(k));          // (U FF*) e_k
            for (std::size_t m = 0; m < dim; ++m) acc += abs_sq(su[m] - us[m]);
        }
        out.max_violation = std::max(out.max_violation, std::sqrt(acc));
    }
    out.ok = out.max_violation <= 1e-9;
    return out;
}

inline CommutationCheck commutation_check(const GaborSystem& sys) {
    const Matrix<std::complex<double>> op = frame_operator(synthesize(sys));
    std::vector<std::function<cvec(const cvec&)>> unitaries;
    for (std::size_t i = 0; i < sys.num_translates(); ++i) {
        for (std::size_t j = 0; j < sys.num_modulates(); ++j) {
            const long ti = static_cast<long>(sys.trans_step * i);
            const long mj = static_cast<long>(sys.mod_step * j);
            unitaries.push_back([ti, mj](const cvec& v) { return translate(modulate(v, mj), ti); });
        }
    }
    return commutation_check_ops(op, unitaries);
}

inline CommutationCheck commutation_check(const FilterBank& bank) {
    const Matrix<std::complex<double>> op = frame_operator(synthesize(bank));
    std::vector<std::function<cvec(const cvec&)>> unitaries;
    for (std::size_t i = 0; i < bank.num_translates(); ++i) {
        const long ti = static_cast<long>(bank.trans_step * i);
        unitaries.push_back([ti](const cvec& v) { return translate(v, ti); });
    }
    return commutation_check_ops(op, unitaries);
}

namespace detail {

/// FF* f for a Gabor system, via the orbit sum
/// FF* f = sum_{i,j} <f, T^(Ai) E^(Bj) f> T^(Ai) E^(Bj) f,
/// holding one orbit vector at a time rather than the synthesis matrix.
inline cvec gabor_frame_op_apply(const GaborSystem& sys, const cvec& f) {
    cvec acc(sys.signal_len, {0.0, 0.0});
    for (std::size_t i = 0; i < sys.num_translates(); ++i) {
        for (std::size_t j = 0; j < sys.num_modulates(); ++j) {
            const cvec u =
                translate(modulate(sys.generator, static_cast<long>(sys.mod_step * j)),
                          static_cast<long>(sys.trans_step * i));
            const std::complex<double> coeff = inner(f, u);
            for (std::size_t m = 0; m < sys.signal_len; ++m) acc[m] += coeff * u[m];
        }
    }
    return acc;
}

inline cvec filter_bank_frame_op_apply(const FilterBank& bank, const cvec& f) {
    cvec acc(bank.signal_len, {0.0, 0.0});
    for (std::size_t i = 0; i < bank.num_translates(); ++i) {
        for (const cvec& gen : bank.generators) {
            const cvec u = translate(gen, static_cast<long>(bank.trans_step * i));
            const std::complex<double> coeff = inner(f, u);
            for (std::size_t m = 0; m < bank.signal_len; ++m) acc[m] += coeff * u[m];
        }
    }
    return acc;
}

inline cvec tangent_part(const cvec& sf, const cvec& f) {
    const double gamma = real_of(inner(sf, f));
    cvec g(sf.size());
    for (std::size_t m = 0; m < sf.size(); ++m) g[m] = sf[m] - gamma * f[m];
    return g;
}

inline cvec generator_geodesic(const cvec& f, const cvec& g, double t) {
    const double w = norm(g);
    if (w == 0.0) return f;
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    cvec out(f.size());
    for (std::size_t m = 0; m < f.size(); ++m) out[m] = c * f[m] - s * (g[m] * (1.0 / w));
    const double inv = 1.0 / norm(out);
    for (auto& x : out) x *= inv;
    return out;
}

}  // namespace detail

/// Search direction for the generator alone: g = FF* f - <FF* f, f> f with
/// FF* f computed by the orbit sum. Deliberately a separate code path from
/// gradient(synthesize(sys)), which tests use as the oracle.
inline cvec structured_gradient(const GaborSystem& sys) {
    return detail::tangent_part(detail::gabor_frame_op_apply(sys, sys.generator), sys.generator);
}

/// Per-generator directions g_j = FF* f_j - <FF* f_j, f_j> f_j, with FF* the
/// frame operator of the whole orbit.
inline std::vector<cvec> structured_gradient(const FilterBank& bank) {
    std::vector<cvec> out;
    out.reserve(bank.generators.size());
    for (const cvec& g : bank.generators) {
        out.push_back(detail::tangent_part(detail::filter_bank_frame_op_apply(bank, g), g));
    }
    return out;
}

namespace detail {

inline void require_step(double t, std::size_t orbit) {
    if (!(t > 0.0) || !(t < 1.0 / (2.0 * static_cast<double>(orbit)))) {
        throw std::invalid_argument("structured_step: t must lie in (0, 1/(2N)) with N = " +
                                    std::to_string(orbit));
    }
}

}  // namespace detail

/// One geodesic step of the generator; the synthesized orbit of the result
/// equals the full-frame geodesic step of the synthesized orbit.
inline GaborSystem structured_step(const GaborSystem& sys, double t) {
    detail::require_step(t, sys.orbit_size());
    const cvec g = structured_gradient(sys);
    return GaborSystem(sys.signal_len, sys.trans_step, sys.mod_step,
                       detail::generator_geodesic(sys.generator, g, t));
}

inline FilterBank structured_step(const FilterBank& bank, double t) {
    detail::require_step(t, bank.orbit_size());
    const std::vector<cvec> gs = structured_gradient(bank);
    std::vector<cvec> next;
    next.reserve(bank.generators.size());
    for (std::size_t j = 0; j < bank.generators.size(); ++j) {
        next.push_back(detail::generator_geodesic(bank.generators[j], gs[j], t));
    }
    return FilterBank(bank.signal_len, bank.trans_step, std::move(next));
}

struct GaborDescentResult {
    GaborSystem system;
    std::size_t iterations = 0;
    StopReason reason = StopReason::budget;
    double final_distance = 0.0;
    double final_grad_sq = 0.0;
};

/// Iterates structured steps until the synthesized frame's distance from
/// tightness reaches the tolerance, the generator gradient vanishes, or the
/// budget runs out.
inline GaborDescentResult gabor_descend(const GaborSystem& start, double t, double untf_tol,
                                        double gradient_tol, std::size_t max_iter) {
    detail::require_step(t, start.orbit_size());
    if (untf_tol <= 0.0 || gradient_tol <= 0.0) {
        throw std::invalid_argument("gabor_descend: tolerances must be positive");
    }
    GaborDescentResult out{start, 0, StopReason::budget, 0.0, 0.0};
    while (true) {
        out.final_distance = distance_from_tightness(synthesize(out.system));
        const cvec g = structured_gradient(out.system);
        out.final_grad_sq = norm_sq(g);
        if (out.final_distance <= untf_tol) {
            out.reason = StopReason::tolerance;
            return out;
        }
        if (out.final_grad_sq <= gradient_tol * gradient_tol) {
            out.reason = StopReason::gradient_vanished;
            return out;
        }
        if (out.iterations >= max_iter) {
            out.reason = StopReason::budget;
            return out;
        }
        out.system = GaborSystem(out.system.signal_len, out.system.trans_step,
                                 out.system.mod_step,
                                 detail::generator_geodesic(out.system.generator, g, t));
        ++out.iterations;
    }
}

}  // namespace frametuner
