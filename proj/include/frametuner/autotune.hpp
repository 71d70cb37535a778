#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frametuner/descent.hpp"
#include "frametuner/frame.hpp"
#include "frametuner/matrix.hpp"
#include "frametuner/partition.hpp"

namespace frametuner {

/// The gates and coefficients of the convergence theorems, evaluated for one
/// (M, N) pair. All are asserted as one-sided bounds; none are empirically
/// sharp.
struct TheoremConstants {
    std::size_t space_dim = 0;  // M
    std::size_t count = 0;      // N
    double coprime_epsilon = 0.0;   // 1/(M^8 N^4): gated iterates are never this OP
    double coprime_gate_sq = 0.0;   // 2/M^3, on distance^2
    double noncoprime_gate = 0.0;   // 1/(2^21 M^27 N^14), on distance

    static TheoremConstants make(std::size_t space_dim, std::size_t count) {
        if (space_dim == 0 || count == 0) {
            throw std::invalid_argument("TheoremConstants: dimensions must be positive");
        }
        const double m = static_cast<double>(space_dim);
        const double n = static_cast<double>(count);
        TheoremConstants out;
        out.space_dim = space_dim;
        out.count = count;
        out.coprime_epsilon = 1.0 / (std::pow(m, 8.0) * std::pow(n, 4.0));
        out.coprime_gate_sq = 2.0 / (m * m * m);
        out.noncoprime_gate =
            1.0 / (std::pow(2.0, 21.0) * std::pow(m, 27.0) * std::pow(n, 14.0));
        return out;
    }

    /// 4 M^20 N^8.5 / (1 - 2Nt): displacement coefficient of the coprime
    /// convergence guarantee.
    double coprime_displacement_coeff(double t) const {
        const double m = static_cast<double>(space_dim);
        const double n = static_cast<double>(count);
        return 4.0 * std::pow(m, 20.0) * std::pow(n, 8.5) / (1.0 - 2.0 * n * t);
    }

    /// 3 M^(6/7) N^(1/2) d^(1/7): how far one descend-or-jump pass can move
    /// the frame when the non-coprime hypothesis holds.
    double pipeline_displacement_bound(double d0) const {
        const double m = static_cast<double>(space_dim);
        const double n = static_cast<double>(count);
        return 3.0 * std::pow(m, 6.0 / 7.0) * std::sqrt(n) * std::pow(d0, 1.0 / 7.0);
    }

    /// sqrt(2N) (M eps)^(1/3): displacement of a single jump.
    double jump_displacement_bound(double epsilon) const {
        const double m = static_cast<double>(space_dim);
        const double n = static_cast<double>(count);
        return std::sqrt(2.0 * n) * std::cbrt(m * epsilon);
    }
};

inline double paper_epsilon_unclamped(std::size_t space_dim, double d) {
    const double m = static_cast<double>(space_dim);
    return std::pow(2.0, 1.5) * std::pow(3.0, 3.0 / 7.0) * std::pow(m, 11.0 / 7.0) *
           std::pow(d, 3.0 / 7.0);
}

/// 2^(3/2) 3^(3/7) M^(11/7) d^(3/7), clamped from above to 1/(2M) so the jump
/// stays admissible. d = 0 yields 0, which switches OP monitoring off.
inline double paper_epsilon(std::size_t space_dim, std::size_t count, double d) {
    (void)count;  // the formula depends on M and d only
    if (space_dim == 0) throw std::invalid_argument("paper_epsilon: M must be positive");
    if (d < 0.0) throw std::invalid_argument("paper_epsilon: d must be >= 0");
    return std::min(paper_epsilon_unclamped(space_dim, d),
                    1.0 / (2.0 * static_cast<double>(space_dim)));
}

struct EpsilonPolicy {
    enum class Kind { paper, fixed };
    Kind kind = Kind::paper;
    double fixed_value = 0.0;
    /// Experimental: re-evaluate the built-in threshold formula from the current
    /// iterate's distance at every monitor check instead of fixing it from
    /// the recursion level's initial distance.
    bool recompute_per_check = false;

    static EpsilonPolicy paper() { return {}; }
    static EpsilonPolicy fixed(double value) {
        EpsilonPolicy p;
        p.kind = Kind::fixed;
        p.fixed_value = value;
        return p;
    }
};

enum class TuneOutcome { untf, op_split, stalled };

inline const char* to_string(TuneOutcome o) {
    switch (o) {
        case TuneOutcome::untf: return "untf";
        case TuneOutcome::op_split: return "op-split";
        case TuneOutcome::stalled: return "stalled";
    }
    return "unknown";
}

struct TuneBounds {
    bool coprime_path = false;
    bool coprime_gate_passed = false;
    double coprime_epsilon = 0.0;
    double coprime_displacement_bound = 0.0;  // coprime path only
    double epsilon_used = 0.0;
    bool epsilon_clamped = false;
    bool pipeline_hypothesis_holds = false;
    double pipeline_displacement_bound = 0.0;
    bool equal_redundancy = true;  // meaningful on op-split
    double jump_displacement = 0.0;
    double jump_displacement_bound = 0.0;
};

/// One node of the recursive pipeline's outcome tree.
struct TuneReport {
    TuneOutcome outcome = TuneOutcome::stalled;
    StopReason stop_reason = StopReason::budget;   // descent phase at this level
    std::size_t iterations = 0;                    // descent steps at this level
    double displacement = 0.0;                     // ||F_final - F_0||_HS at this level
    std::size_t depth = 0;
    double initial_distance = 0.0;
    double final_distance = 0.0;
    TuneBounds bounds;
    std::optional<Partition> partition;  // set on op-split
    std::vector<TuneReport> children;    // two sub-reports on op-split
};

template <class T>
struct TuneResult {
    Frame<T> frame;
    TuneReport report;
};

/// Coordinates of block vectors with respect to an orthonormal basis of the
/// subspace they span; the result is a unit norm frame in dimension
/// rank(basis). Vectors further than 1e-9 from the subspace are rejected.
template <class T>
Frame<T> restrict_to_subspace(const Matrix<T>& block, const Matrix<T>& basis) {
    const std::size_t dim = block.rows();
    if (basis.rows() != dim) {
        throw std::invalid_argument("restrict_to_subspace: basis/block dimension mismatch");
    }
    const Matrix<T> overlap = matmul(adjoint(basis), basis);
    if (hs_norm(overlap - Matrix<T>::identity(basis.cols())) > 1e-9) {
        throw std::invalid_argument("restrict_to_subspace: basis is not orthonormal");
    }
    Matrix<T> coords = matmul(adjoint(basis), block);
    const Matrix<T> rebuilt = matmul(basis, coords);
    for (std::size_t col = 0; col < block.cols(); ++col) {
        double residual_sq = 0.0;
        for (std::size_t m = 0; m < dim; ++m) {
            residual_sq += abs_sq(rebuilt(m, col) - block(m, col));
        }
        if (std::sqrt(residual_sq) > 1e-9) {
            throw std::invalid_argument("restrict_to_subspace: column " + std::to_string(col) +
                                        " lies outside the subspace (residual " +
                                        std::to_string(std::sqrt(residual_sq)) + ")");
        }
    }
    return normalize_columns(coords);
}

/// Inverse of restrict_to_subspace: basis * coordinates.
template <class T>
Matrix<T> embed_from_subspace(const Frame<T>& f, const Matrix<T>& basis) {
    return matmul(basis, f.synthesis());
}

namespace detail {

template <class T>
TuneResult<T> tune_impl(const Frame<T>& f0, const DescentConfig& cfg,
                        const EpsilonPolicy& policy, std::size_t depth, std::size_t root_dim,
                        DescentTrace* top_trace);

/// Coprime fast path: plain descent, with a sparse monitor confirming that no
/// iterate becomes 1/(M^8 N^4)-OP (the theorem rules it out while frame
/// potential keeps decreasing under the gate).
template <class T>
TuneResult<T> tune_coprime_impl(const Frame<T>& f0, const DescentConfig& cfg,
                                std::size_t depth, DescentTrace* top_trace) {
    const TheoremConstants tc = TheoremConstants::make(f0.space_dim(), f0.count());
    DescentConfig run_cfg = cfg;
    run_cfg.op_check_stride = 1000;
    RunResult<T> rr = run(f0, run_cfg, tc.coprime_epsilon);
    if (top_trace != nullptr) *top_trace = rr.trace;
    if (rr.trace.reason == StopReason::op_detected) {
        throw std::logic_error(
            "tune_coprime: a gated iterate became coprime-epsilon-OP, contradicting the "
            "non-partitionability guarantee");
    }

    TuneResult<T> out{std::move(rr.frame), {}};
    TuneReport& rep = out.report;
    rep.stop_reason = rr.trace.reason;
    rep.outcome =
        rr.trace.reason == StopReason::tolerance ? TuneOutcome::untf : TuneOutcome::stalled;
    rep.iterations = rr.trace.iterations;
    rep.depth = depth;
    rep.initial_distance = distance_from_tightness(f0);
    rep.final_distance = distance_from_tightness(out.frame);
    rep.displacement = hs_norm(out.frame.synthesis() - f0.synthesis());
    rep.bounds.coprime_path = true;
    rep.bounds.coprime_gate_passed = true;
    rep.bounds.coprime_epsilon = tc.coprime_epsilon;
    rep.bounds.coprime_displacement_bound =
        tc.coprime_displacement_coeff(cfg.step) * rep.initial_distance;
    if (rep.displacement > rep.bounds.coprime_displacement_bound + 1e-9) {
        throw std::logic_error("tune_coprime: displacement exceeded the guaranteed bound");
    }
    return out;
}

/// A child whose block cannot be tuned in its subspace (fewer vectors than
/// dimensions, or the recursion cap reached) reports a stalled outcome
/// instead of failing; the parent then reports stalled as well.
template <class T>
TuneResult<T> stalled_leaf(const Frame<T>& f0, std::size_t depth) {
    TuneResult<T> out{f0, {}};
    out.report.outcome = TuneOutcome::stalled;
    out.report.depth = depth;
    out.report.initial_distance = distance_from_tightness(f0);
    out.report.final_distance = out.report.initial_distance;
    return out;
}

template <class T>
TuneResult<T> tune_impl(const Frame<T>& f0, const DescentConfig& cfg,
                        const EpsilonPolicy& policy, std::size_t depth, std::size_t root_dim,
                        DescentTrace* top_trace) {
    const std::size_t dim = f0.space_dim();
    const std::size_t n = f0.count();
    if (n < dim) throw std::invalid_argument("tune: requires N >= M");
    cfg.validate(n);

    const TheoremConstants tc = TheoremConstants::make(dim, n);
    const double d0 = distance_from_tightness(f0);

    if (depth >= root_dim) {
        // Each split sheds at least one dimension, so this cannot trigger for
        // a valid recursion; it is a hard stop against malformed inputs.
        return stalled_leaf(f0, depth);
    }

    const bool coprime = std::gcd(dim, n) == 1;
    if (coprime && d0 * d0 <= tc.coprime_gate_sq) {
        return tune_coprime_impl(f0, cfg, depth, top_trace);
    }

    double eps = 0.0;
    bool clamped = false;
    if (policy.kind == EpsilonPolicy::Kind::paper) {
        eps = paper_epsilon(dim, n, d0);
        clamped = eps < paper_epsilon_unclamped(dim, d0);
    } else {
        const double cap = 1.0 / (2.0 * static_cast<double>(dim));
        eps = std::min(policy.fixed_value, cap);
        clamped = policy.fixed_value > cap;
        if (eps < 0.0) throw std::invalid_argument("tune: fixed epsilon must be >= 0");
    }

    std::optional<OpMonitor> monitor;
    if (eps > 0.0) {
        if (policy.kind == EpsilonPolicy::Kind::paper && policy.recompute_per_check) {
            const std::size_t m_dim = dim;
            const std::size_t m_count = n;
            monitor = OpMonitor{[m_dim, m_count](double d) {
                return paper_epsilon(m_dim, m_count, d);
            }};
        } else {
            monitor = OpMonitor{[eps](double) { return eps; }};
        }
    }

    RunResult<T> rr = run(f0, cfg, monitor);
    if (top_trace != nullptr) *top_trace = rr.trace;

    TuneResult<T> out{std::move(rr.frame), {}};
    TuneReport& rep = out.report;
    rep.stop_reason = rr.trace.reason;
    rep.iterations = rr.trace.iterations;
    rep.depth = depth;
    rep.initial_distance = d0;
    rep.bounds.coprime_gate_passed = false;
    rep.bounds.epsilon_used = eps;
    rep.bounds.epsilon_clamped = clamped;
    rep.bounds.pipeline_hypothesis_holds = !coprime && d0 <= tc.noncoprime_gate;
    rep.bounds.pipeline_displacement_bound = tc.pipeline_displacement_bound(d0);

    switch (rr.trace.reason) {
        case StopReason::tolerance:
            rep.outcome = TuneOutcome::untf;
            break;
        case StopReason::gradient_vanished:
        case StopReason::budget:
            rep.outcome = TuneOutcome::stalled;
            break;
        case StopReason::op_detected: {
            const double eps_fired = rr.trace.op_epsilon;
            JumpResult<T> jump = jump_to_op(out.frame, eps_fired, *rr.trace.op_partition);
            rep.bounds.jump_displacement = jump.displacement;
            rep.bounds.jump_displacement_bound = tc.jump_displacement_bound(eps_fired);
            rep.bounds.equal_redundancy =
                jump.partition.block_i.size() * dim == jump.dim_i * n &&
                jump.partition.block_j.size() * dim == jump.dim_j * n;
            rep.partition = jump.partition;

            const auto gather = [&](const std::vector<std::size_t>& block) {
                Matrix<T> cols(dim, block.size());
                for (std::size_t k = 0; k < block.size(); ++k) {
                    cols.set_col(k, jump.op_frame.column(block[k]));
                }
                return cols;
            };
            const Frame<T> child_i =
                restrict_to_subspace(gather(jump.partition.block_i), jump.basis_i);
            const Frame<T> child_j =
                restrict_to_subspace(gather(jump.partition.block_j), jump.basis_j);

            // A block with fewer vectors than subspace dimensions can never
            // span, so it is reported as stalled rather than descended.
            TuneResult<T> res_i =
                child_i.count() >= child_i.space_dim()
                    ? tune_impl(child_i, cfg, policy, depth + 1, root_dim, nullptr)
                    : stalled_leaf(child_i, depth + 1);
            TuneResult<T> res_j =
                child_j.count() >= child_j.space_dim()
                    ? tune_impl(child_j, cfg, policy, depth + 1, root_dim, nullptr)
                    : stalled_leaf(child_j, depth + 1);

            const Matrix<T> lifted_i = embed_from_subspace(res_i.frame, jump.basis_i);
            const Matrix<T> lifted_j = embed_from_subspace(res_j.frame, jump.basis_j);
            Matrix<T> assembled = jump.op_frame.synthesis();
            for (std::size_t k = 0; k < jump.partition.block_i.size(); ++k) {
                assembled.set_col(jump.partition.block_i[k], lifted_i.col(k));
            }
            for (std::size_t k = 0; k < jump.partition.block_j.size(); ++k) {
                assembled.set_col(jump.partition.block_j[k], lifted_j.col(k));
            }
            out.frame = normalize_columns(assembled);

            rep.outcome = TuneOutcome::op_split;
            if (res_i.report.outcome == TuneOutcome::stalled ||
                res_j.report.outcome == TuneOutcome::stalled) {
                rep.outcome = TuneOutcome::stalled;
            }
            rep.children.push_back(std::move(res_i.report));
            rep.children.push_back(std::move(res_j.report));
            break;
        }
    }

    rep.final_distance = distance_from_tightness(out.frame);
    rep.displacement = hs_norm(out.frame.synthesis() - f0.synthesis());
    return out;
}

}  // namespace detail

/// Descent without OP monitoring, valid when gcd(M, N) = 1 and the distance
/// gate distance^2 <= 2/M^3 holds; other inputs are rejected so the caller
/// can fall back to tune().
template <class T>
TuneResult<T> tune_coprime(const Frame<T>& f0, const DescentConfig& cfg) {
    cfg.validate(f0.count());
    if (f0.count() < f0.space_dim()) throw std::invalid_argument("tune_coprime: requires N >= M");
    const TheoremConstants tc = TheoremConstants::make(f0.space_dim(), f0.count());
    if (std::gcd(f0.space_dim(), f0.count()) != 1) {
        throw std::invalid_argument("tune_coprime: M and N are not relatively prime");
    }
    const double d0 = distance_from_tightness(f0);
    if (d0 * d0 > tc.coprime_gate_sq) {
        throw std::invalid_argument("tune_coprime: distance gate failed (d^2 = " +
                                    std::to_string(d0 * d0) + " > 2/M^3 = " +
                                    std::to_string(tc.coprime_gate_sq) + ")");
    }
    return detail::tune_coprime_impl(f0, cfg, 0, nullptr);
}

/// The full pipeline: coprime fast path when its gate passes, otherwise
/// descent with epsilon-OP monitoring; on detection, jump to an exactly OP
/// frame, recurse on the two subframes over their own subspaces, and embed
/// the results back. Epsilon is fixed per recursion level from that level's
/// initial distance (paper policy) or supplied (fixed policy); all gates and
/// bound evaluations land in the report rather than being silently assumed.
/// When top_trace is given it receives the top-level descent phase's trace.
template <class T>
TuneResult<T> tune(const Frame<T>& f0, const DescentConfig& cfg,
                   const EpsilonPolicy& policy = EpsilonPolicy::paper(),
                   DescentTrace* top_trace = nullptr) {
    return detail::tune_impl(f0, cfg, policy, 0, f0.space_dim(), top_trace);
}

}  // namespace frametuner
