#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frametuner/frame.hpp"
#include "frametuner/matrix.hpp"
#include "frametuner/partition.hpp"

namespace frametuner {

/// Projected gradient of the frame potential over the product of spheres:
/// column n holds g_n = FF* f_n - <FF* f_n, f_n> f_n, which is tangent to f_n.
template <class T>
struct Gradient {
    Matrix<T> directions;        // M x N
    std::vector<double> norms;   // ||g_n||
    double total_sq_norm = 0.0;  // sum of ||g_n||^2
};

struct DescentConfig {
    double step = 0.0;              // t; must lie in (0, 1/(2N))
    double untf_tol = 1e-8;         // stop when distance from tightness <= this
    double gradient_tol = 1e-10;    // stop when sqrt(sum ||g_n||^2) <= this
    std::size_t max_iter = 1000000;
    bool full_trace = false;        // record every iteration
    std::size_t trace_dense_rows = 10000;  // dense prefix before geometric thinning
    std::size_t op_check_stride = 1;       // OP monitor cadence

    void validate(std::size_t count) const {
        if (!(step > 0.0) || !(step < 1.0 / (2.0 * static_cast<double>(count)))) {
            throw std::invalid_argument("DescentConfig: step must lie in (0, 1/(2N)) with N = " +
                                        std::to_string(count));
        }
        if (untf_tol <= 0.0 || gradient_tol <= 0.0) {
            throw std::invalid_argument("DescentConfig: tolerances must be positive");
        }
        if (op_check_stride == 0) {
            throw std::invalid_argument("DescentConfig: op_check_stride must be positive");
        }
    }
};

/// The paper-optimal default step for an N-vector frame.
inline double default_step(std::size_t count) {
    return 1.0 / (4.0 * static_cast<double>(count));
}

enum class StopReason { tolerance, gradient_vanished, budget, op_detected };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::tolerance: return "tolerance";
        case StopReason::gradient_vanished: return "gradient-vanished";
        case StopReason::budget: return "budget";
        case StopReason::op_detected: return "op-detected";
    }
    return "unknown";
}

struct TraceRow {
    std::size_t iter = 0;
    double frame_potential = 0.0;
    double distance = 0.0;
    double grad_sq_norm = 0.0;
    double displacement = 0.0;  // ||F_k - F_0||_HS
};

struct DescentTrace {
    std::vector<TraceRow> rows;
    StopReason reason = StopReason::budget;
    std::size_t iterations = 0;               // geodesic steps actually taken
    std::optional<Partition> op_partition;    // set when reason == op_detected
    double op_epsilon = 0.0;                  // effective epsilon at detection
};

/// Monitor evaluated on each checked iterate: the frame stops as epsilon-OP
/// when tau(F_k) < epsilon(d_k). A constant function recovers the fixed-
/// epsilon monitoring of the convergence theorems.
struct OpMonitor {
    std::function<double(double current_distance)> epsilon;
};

template <class T>
Gradient<T> gradient(const Frame<T>& f) {
    const Matrix<T> op = frame_operator(f);
    const std::size_t dim = f.space_dim();
    const std::size_t n = f.count();
    Gradient<T> g{Matrix<T>(dim, n), std::vector<double>(n, 0.0), 0.0};
    for (std::size_t col = 0; col < n; ++col) {
        std::vector<T> fn = f.column(col);
        std::vector<T> sf = matvec(op, fn);
        // <FF* f_n, f_n> is real since FF* is Hermitian.
        const double gamma = real_of(inner(sf, fn));
        double sq = 0.0;
        for (std::size_t m = 0; m < dim; ++m) {
            const T val = sf[m] - gamma * fn[m];
            g.directions(m, col) = val;
            sq += abs_sq(val);
        }
        g.norms[col] = std::sqrt(sq);
        g.total_sq_norm += sq;
    }
    return g;
}

/// Pushes each f_n along the great circle against its tangent direction:
/// f_n(t) = cos(||g_n|| t) f_n - sin(||g_n|| t) g_n/||g_n||, with an explicit
/// renormalization to keep column norms from drifting over long runs.
template <class T>
Frame<T> geodesic_step(const Frame<T>& f, const Gradient<T>& g, double t) {
    const std::size_t dim = f.space_dim();
    const std::size_t n = f.count();
    if (g.directions.rows() != dim || g.directions.cols() != n) {
        throw std::invalid_argument("geodesic_step: gradient shape mismatch");
    }
    Matrix<T> syn = f.synthesis();
    for (std::size_t col = 0; col < n; ++col) {
        const double w = g.norms[col];
        if (w == 0.0) continue;
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        double out_sq = 0.0;
        for (std::size_t m = 0; m < dim; ++m) {
            const T val = c * syn(m, col) - s * (g.directions(m, col) * (1.0 / w));
            syn(m, col) = val;
            out_sq += abs_sq(val);
        }
        const double inv = 1.0 / std::sqrt(out_sq);
        for (std::size_t m = 0; m < dim; ++m) syn(m, col) *= inv;
    }
    return Frame<T>(std::move(syn));
}

template <class T>
struct StepOutcome {
    Frame<T> frame;
    double frame_potential = 0.0;
    double distance = 0.0;
};

namespace detail {

/// One step plus the guaranteed-decrease check
/// FP(F(t)) <= FP(F) - 4t(1-2Nt) sum ||g_n||^2 (up to 1e-9 float slack).
template <class T>
StepOutcome<T> checked_step(const Frame<T>& f, const Gradient<T>& g, double t,
                            double fp_before) {
    const double n = static_cast<double>(f.count());
    Frame<T> next = geodesic_step(f, g, t);
    const double fp_after = frame_potential(next);
    const double guaranteed = 4.0 * t * (1.0 - 2.0 * n * t) * g.total_sq_norm;
    if (fp_after > fp_before - guaranteed + 1e-9) {
        throw std::runtime_error("descent step failed the guaranteed decrease: FP " +
                                 std::to_string(fp_before) + " -> " + std::to_string(fp_after) +
                                 ", required drop " + std::to_string(guaranteed));
    }
    const double dist = distance_from_tightness(next);
    return {std::move(next), fp_after, dist};
}

}  // namespace detail

/// Single descent step with the Theorem-level decrease assertion.
template <class T>
StepOutcome<T> step_and_check(const Frame<T>& f, double t) {
    const double n = static_cast<double>(f.count());
    if (!(t > 0.0) || !(t < 1.0 / (2.0 * n))) {
        throw std::invalid_argument("step_and_check: t must lie in (0, 1/(2N))");
    }
    return detail::checked_step(f, gradient(f), t, frame_potential(f));
}

struct ConvergenceBounds {
    double displacement_bound = 0.0;  // on ||F_K - F_0||_HS
    double distance_bound = 0.0;      // on ||F_K F_K* - (N/M) I||_HS
};

/// Linear-convergence bounds for K steps from an initial distance d0, valid
/// while no iterate is epsilon-OP:
///   displacement <= 4 M^4 sqrt(N) / ((1-2Nt) eps^2) * d0
///   distance     <= (1 - t(1-2Nt) eps^2 / M^4)^(K/2) * d0
inline ConvergenceBounds convergence_bounds(std::size_t space_dim, std::size_t count, double t,
                                            double epsilon, std::size_t iterations, double d0) {
    const double m = static_cast<double>(space_dim);
    const double n = static_cast<double>(count);
    if (space_dim == 0 || count == 0) {
        throw std::invalid_argument("convergence_bounds: dimensions must be positive");
    }
    if (!(t > 0.0) || !(t < 1.0 / (2.0 * n))) {
        throw std::invalid_argument("convergence_bounds: t must lie in (0, 1/(2N))");
    }
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw std::invalid_argument("convergence_bounds: epsilon must lie in (0, 1]");
    }
    if (d0 < 0.0) throw std::invalid_argument("convergence_bounds: d0 must be >= 0");
    const double m4 = m * m * m * m;
    ConvergenceBounds out;
    out.displacement_bound =
        4.0 * m4 * std::sqrt(n) / ((1.0 - 2.0 * n * t) * epsilon * epsilon) * d0;
    const double rate = 1.0 - t * (1.0 - 2.0 * n * t) * epsilon * epsilon / m4;
    out.distance_bound = std::pow(rate, static_cast<double>(iterations) / 2.0) * d0;
    return out;
}

template <class T>
struct RunResult {
    Frame<T> frame;
    DescentTrace trace;
};

/// Iterates checked descent steps until the distance tolerance is met, the
/// gradient vanishes (a suboptimal critical frame: surfaced, not recovered),
/// the iterate becomes epsilon-OP under the optional monitor, or the budget
/// runs out. The trace records a dense prefix of iterations and then thins
/// geometrically (indices near 1.1^j) unless full_trace is set; the terminal
/// iterate is always recorded.
template <class T>
RunResult<T> run(const Frame<T>& f0, const DescentConfig& cfg,
                 const std::optional<OpMonitor>& monitor = std::nullopt) {
    cfg.validate(f0.count());
    if (f0.count() < f0.space_dim()) {
        throw std::invalid_argument("run: tuning requires N >= M");
    }

    RunResult<T> result{f0, {}};
    DescentTrace& trace = result.trace;
    const Matrix<T>& origin = f0.synthesis();

    double next_geo = static_cast<double>(cfg.trace_dense_rows);
    const auto should_record = [&](std::size_t k) {
        if (cfg.full_trace || k < cfg.trace_dense_rows) return true;
        if (static_cast<double>(k) >= next_geo) {
            while (next_geo <= static_cast<double>(k)) next_geo *= 1.1;
            return true;
        }
        return false;
    };
    const auto record = [&](std::size_t k, double fp, double dist, double grad_sq) {
        trace.rows.push_back(
            {k, fp, dist, grad_sq, hs_norm(result.frame.synthesis() - origin)});
    };

    double fp = frame_potential(result.frame);
    double prev_fp = fp;
    double prev_grad_sq = 0.0;
    std::size_t k = 0;
    while (true) {
        const double dist = distance_from_tightness(result.frame);
        if (k > 0) {
            // Same check as step_and_check, folded into the loop so the
            // gradient is only computed once per iterate.
            const double guaranteed =
                4.0 * cfg.step * (1.0 - 2.0 * static_cast<double>(f0.count()) * cfg.step) *
                prev_grad_sq;
            if (fp > prev_fp - guaranteed + 1e-9) {
                throw std::runtime_error("run: descent step failed the guaranteed decrease");
            }
        }
        const Gradient<T> g = gradient(result.frame);

        std::optional<StopReason> stop;
        if (dist <= cfg.untf_tol) {
            stop = StopReason::tolerance;
        } else if (monitor && k % cfg.op_check_stride == 0) {
            const double eps = monitor->epsilon(dist);
            if (eps > 0.0) {
                auto [tau, part] = op_threshold(result.frame);
                if (tau < eps) {
                    stop = StopReason::op_detected;
                    trace.op_partition = std::move(part);
                    trace.op_epsilon = eps;
                }
            }
        }
        if (!stop && g.total_sq_norm <= cfg.gradient_tol * cfg.gradient_tol) {
            stop = StopReason::gradient_vanished;
        }
        if (!stop && k >= cfg.max_iter) {
            stop = StopReason::budget;
        }
        if (stop) {
            record(k, fp, dist, g.total_sq_norm);
            trace.reason = *stop;
            trace.iterations = k;
            return result;
        }
        if (should_record(k)) record(k, fp, dist, g.total_sq_norm);

        result.frame = geodesic_step(result.frame, g, cfg.step);
        prev_fp = fp;
        prev_grad_sq = g.total_sq_norm;
        fp = frame_potential(result.frame);
        ++k;
    }
}

/// Convenience overload matching the fixed-epsilon monitoring of the theorems.
template <class T>
RunResult<T> run(const Frame<T>& f0, const DescentConfig& cfg, double op_epsilon) {
    OpMonitor monitor{[op_epsilon](double) { return op_epsilon; }};
    return run(f0, cfg, std::optional<OpMonitor>(std::move(monitor)));
}

}  // namespace frametuner
