#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <numeric>
#include <optional>
#include <string>
#include <variant>

#include <CLI11.hpp>

#include "frametuner/frametuner.hpp"

namespace {

using namespace frametuner;

enum ExitCode : int { kOk = 0, kInputError = 2, kInvariantError = 3, kStalled = 4 };

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("FRAME_TUNER_LOG");
        if (env == nullptr) return 0;
        if (std::strcmp(env, "debug") == 0) return 2;
        if (std::strcmp(env, "info") == 0) return 1;
        return 0;
    }();
    return level;
}

template <class... Args>
void log_info(const char* fmt, Args... args) {
    if (log_level() >= 1) {
        std::fprintf(stderr, "[info] ");
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

template <class... Args>
void log_debug(const char* fmt, Args... args) {
    if (log_level() >= 2) {
        std::fprintf(stderr, "[debug] ");
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

struct CliError {
    int code;
    std::string message;
};

AnyFrame load_frame(const std::string& path, bool normalize) {
    AnyMatrix raw = [&] {
        try {
            return read_frame_matrix(path);
        } catch (const FormatError& e) {
            throw CliError{kInputError, e.what()};
        }
    }();
    return std::visit(
        [&](auto&& m) -> AnyFrame {
            if (normalize) {
                try {
                    return normalize_columns(std::move(m));
                } catch (const std::invalid_argument& e) {
                    throw CliError{kInputError, path + ": " + e.what()};
                }
            }
            try {
                return Frame(std::move(m));
            } catch (const UnitNormError& e) {
                throw CliError{kInvariantError, path + ": " + e.what() +
                                                    " (pass --normalize to rescale columns)"};
            }
        },
        std::move(raw));
}

struct StepPolicy {
    std::string raw = "auto";

    double resolve(std::size_t count) const {
        if (raw == "auto") return default_step(count);
        double value = 0.0;
        try {
            std::size_t pos = 0;
            value = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            throw CliError{kInputError, "--step must be 'auto' or a number, got '" + raw + "'"};
        }
        const double limit = 1.0 / (2.0 * static_cast<double>(count));
        if (!(value > 0.0) || !(value < limit)) {
            throw CliError{kInputError,
                           "--step " + raw + " is outside the open interval (0, 1/(2N)) = (0, " +
                               std::to_string(limit) + ") for N = " + std::to_string(count)};
        }
        return value;
    }
};

struct EpsilonOption {
    std::string raw = "paper";

    EpsilonPolicy resolve() const {
        if (raw == "paper") return EpsilonPolicy::paper();
        try {
            std::size_t pos = 0;
            const double value = std::stod(raw, &pos);
            if (pos != raw.size() || value < 0.0) throw std::invalid_argument(raw);
            return EpsilonPolicy::fixed(value);
        } catch (const std::exception&) {
            throw CliError{kInputError,
                           "--epsilon must be 'paper' or a nonnegative number, got '" + raw + "'"};
        }
    }
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

std::string partition_brief(const Partition& p) {
    std::string out = "I = {";
    for (std::size_t k = 0; k < p.block_i.size(); ++k) {
        if (k > 0) out += ", ";
        out += std::to_string(p.block_i[k]);
    }
    out += "}, J = {";
    for (std::size_t k = 0; k < p.block_j.size(); ++k) {
        if (k > 0) out += ", ";
        out += std::to_string(p.block_j[k]);
    }
    out += "}";
    return out;
}

int run_analyze(const std::string& input, bool normalize) {
    const AnyFrame any = load_frame(input, normalize);
    return std::visit(
        [&](const auto& f) {
            const FrameAnalysis a = analyze(f);
            const std::size_t m = f.space_dim();
            const std::size_t n = f.count();
            std::printf("field: %s\n", std::holds_alternative<ComplexFrame>(any) ? "complex"
                                                                                 : "real");
            std::printf("M: %zu\n", m);
            std::printf("N: %zu\n", n);
            std::printf("gcd(M, N): %zu\n", std::gcd(m, n));
            std::printf("frame potential: %s\n", fmt(a.frame_potential).c_str());
            std::printf("N^2/M: %s\n",
                        fmt(static_cast<double>(n) * static_cast<double>(n) /
                            static_cast<double>(m))
                            .c_str());
            std::printf("distance from tightness: %s\n",
                        fmt(a.distance_from_tightness).c_str());
            std::printf("frame bounds: A = %s, B = %s\n", fmt(a.lower_frame_bound).c_str(),
                        fmt(a.upper_frame_bound).c_str());
            if (n >= 2) {
                const auto [tau, part] = op_threshold(f);
                std::printf("op threshold: %s  (%s)\n", fmt(tau).c_str(),
                            partition_brief(part).c_str());
            } else {
                std::printf("op threshold: n/a (N < 2)\n");
            }
            std::printf("UNTF: %s\n", a.is_untf ? "yes" : "no");
            return kOk;
        },
        any);
}

int run_tune(const std::string& input, const std::string& output, const std::string& report_path,
             const std::string& trace_path, const StepPolicy& step, double tol, double grad_tol,
             std::size_t max_iter, const EpsilonOption& epsilon, bool normalize) {
    const AnyFrame any = load_frame(input, normalize);
    return std::visit(
        [&](const auto& f) {
            if (f.count() < f.space_dim()) {
                throw CliError{kInputError, "tuning requires N >= M, got M = " +
                                                std::to_string(f.space_dim()) +
                                                ", N = " + std::to_string(f.count())};
            }
            DescentConfig cfg;
            cfg.step = step.resolve(f.count());
            cfg.untf_tol = tol;
            cfg.gradient_tol = grad_tol;
            cfg.max_iter = max_iter;
            cfg.full_trace = !trace_path.empty();

            DescentTrace top_trace;
            const auto result = tune(f, cfg, epsilon.resolve(),
                                     trace_path.empty() ? nullptr : &top_trace);
            if (!output.empty()) write_frame_file(output, result.frame);
            if (!report_path.empty()) write_report_json(report_path, result.report);
            if (!trace_path.empty()) write_trace_csv(trace_path, top_trace);

            std::printf("outcome: %s\n", to_string(result.report.outcome));
            std::printf("iterations: %zu\n", result.report.iterations);
            std::printf("displacement: %s\n", fmt(result.report.displacement).c_str());
            std::printf("final distance: %s\n", fmt(result.report.final_distance).c_str());
            log_info("tune finished: %s after %zu iterations",
                     to_string(result.report.outcome), result.report.iterations);
            return result.report.outcome == TuneOutcome::stalled ? kStalled : kOk;
        },
        any);
}

int run_gabor_tune(const std::string& input, const std::string& output,
                   const std::string& report_path, const StepPolicy& step, double tol,
                   double grad_tol, std::size_t max_iter) {
    const GaborSystem sys = [&] {
        try {
            return read_gabor_config(input);
        } catch (const FormatError& e) {
            throw CliError{kInputError, e.what()};
        }
    }();
    const double t = step.resolve(sys.orbit_size());

    // One verification step on the input system: generator route vs full
    // synthesized-frame route.
    const Frame<std::complex<double>> full0 = synthesize(sys);
    const Frame<std::complex<double>> via_full = geodesic_step(full0, gradient(full0), t);
    const Frame<std::complex<double>> via_gen = synthesize(structured_step(sys, t));
    double residual = 0.0;
    for (std::size_t m = 0; m < full0.space_dim(); ++m) {
        for (std::size_t n = 0; n < full0.count(); ++n) {
            residual = std::max(residual, std::sqrt(abs_sq(via_full.synthesis()(m, n) -
                                                           via_gen.synthesis()(m, n))));
        }
    }

    const GaborDescentResult result = gabor_descend(sys, t, tol, grad_tol, max_iter);
    if (!output.empty()) write_gabor_config(output, result.system);
    if (!report_path.empty()) {
        nlohmann::json j{
            {"M", sys.signal_len},
            {"A", sys.trans_step},
            {"B", sys.mod_step},
            {"orbit_size", sys.orbit_size()},
            {"iterations", result.iterations},
            {"stop_reason", to_string(result.reason)},
            {"final_distance", result.final_distance},
            {"final_grad_sq_norm", result.final_grad_sq},
            {"orbit_equality_residual", residual},
        };
        std::ofstream out(report_path);
        if (!out) throw IoError(report_path + ": cannot open for writing");
        out << j.dump(2) << "\n";
    }

    std::printf("stop reason: %s\n", to_string(result.reason));
    std::printf("iterations: %zu\n", result.iterations);
    std::printf("final distance: %s\n", fmt(result.final_distance).c_str());
    std::printf("orbit equality residual: %s\n", fmt(residual).c_str());
    return result.reason == StopReason::tolerance ? kOk : kStalled;
}

int run_step(const std::string& input, const std::string& output, const StepPolicy& step,
             bool normalize) {
    const AnyFrame any = load_frame(input, normalize);
    return std::visit(
        [&](const auto& f) {
            const double t = step.resolve(f.count());
            const double fp_before = frame_potential(f);
            const auto g = gradient(f);
            const auto outcome = step_and_check(f, t);
            if (!output.empty()) write_frame_file(output, outcome.frame);
            std::printf("t: %s\n", fmt(t).c_str());
            std::printf("frame potential: %s -> %s\n", fmt(fp_before).c_str(),
                        fmt(outcome.frame_potential).c_str());
            std::printf("distance: %s\n", fmt(outcome.distance).c_str());
            std::printf("gradient squared norm: %s\n", fmt(g.total_sq_norm).c_str());
            return kOk;
        },
        any);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frame-tuner: tune finite unit norm frames toward tightness"};
    app.require_subcommand(1);

    std::string input;
    std::string output;
    std::string report_path;
    std::string trace_path;
    StepPolicy step;
    EpsilonOption epsilon;
    double tol = kDefaultUntfTol;
    double grad_tol = 1e-10;
    std::size_t max_iter = 1000000;
    bool normalize = false;

    CLI::App* analyze_cmd = app.add_subcommand("analyze", "Report frame-theoretic diagnostics");
    analyze_cmd->add_option("--input", input)->required();
    analyze_cmd->add_flag("--normalize", normalize);

    CLI::App* tune_cmd = app.add_subcommand("tune", "Tune a frame toward a UNTF");
    tune_cmd->add_option("--input", input)->required();
    tune_cmd->add_option("--output", output);
    tune_cmd->add_option("--report", report_path);
    tune_cmd->add_option("--trace", trace_path);
    tune_cmd->add_option("--step", step.raw, "'auto' (= 1/(4N)) or a value in (0, 1/(2N))");
    tune_cmd->add_option("--tol", tol);
    tune_cmd->add_option("--grad-tol", grad_tol);
    tune_cmd->add_option("--max-iter", max_iter);
    tune_cmd->add_option("--epsilon", epsilon.raw, "'paper' or a fixed OP-detection threshold");
    tune_cmd->add_flag("--normalize", normalize);

    CLI::App* gabor_cmd = app.add_subcommand("gabor-tune", "Tune a Gabor generator");
    gabor_cmd->add_option("--input", input)->required();
    gabor_cmd->add_option("--output", output);
    gabor_cmd->add_option("--report", report_path);
    gabor_cmd->add_option("--step", step.raw);
    gabor_cmd->add_option("--tol", tol);
    gabor_cmd->add_option("--grad-tol", grad_tol);
    gabor_cmd->add_option("--max-iter", max_iter);

    CLI::App* step_cmd = app.add_subcommand("step", "Apply a single descent step");
    step_cmd->add_option("--input", input)->required();
    step_cmd->add_option("--output", output);
    step_cmd->add_option("--step", step.raw);
    step_cmd->add_flag("--normalize", normalize);

    CLI::App* make_cmd = app.add_subcommand("make", "Write fixture frames");
    std::string kind;
    std::size_t make_m = 0;
    std::size_t make_n = 0;
    std::uint64_t seed = 0;
    std::string field = "complex";
    double theta = 0.0;
    std::string tilde_output;
    make_cmd->add_option("kind", kind, "harmonic | random | example_theta")->required();
    make_cmd->add_option("--M", make_m);
    make_cmd->add_option("--N", make_n);
    make_cmd->add_option("--seed", seed);
    make_cmd->add_option("--field", field)->check(CLI::IsMember({"real", "complex"}));
    make_cmd->add_option("--theta", theta);
    make_cmd->add_option("--output", output)->required();
    make_cmd->add_option("--tilde-output", tilde_output,
                         "Also write the closest-UNTF fixture (example_theta only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kInputError;
    }

    try {
        if (*analyze_cmd) return run_analyze(input, normalize);
        if (*tune_cmd) {
            return run_tune(input, output, report_path, trace_path, step, tol, grad_tol,
                            max_iter, epsilon, normalize);
        }
        if (*gabor_cmd) {
            return run_gabor_tune(input, output, report_path, step, tol, grad_tol, max_iter);
        }
        if (*step_cmd) return run_step(input, output, step, normalize);
        if (*make_cmd) {
            if (kind == "harmonic") {
                if (make_m == 0 || make_n == 0) {
                    throw CliError{kInputError, "make harmonic requires --M and --N"};
                }
                write_frame_file(output, harmonic_frame(make_m, make_n));
                log_debug("wrote harmonic frame %zux%zu to %s", make_m, make_n, output.c_str());
            } else if (kind == "random") {
                if (make_m == 0 || make_n == 0) {
                    throw CliError{kInputError, "make random requires --M and --N"};
                }
                if (field == "real") {
                    write_frame_file(output, random_frame<double>(make_m, make_n, seed));
                } else {
                    write_frame_file(output,
                                     random_frame<std::complex<double>>(make_m, make_n, seed));
                }
            } else if (kind == "example_theta") {
                write_frame_file(output, example_theta_frame(theta));
                if (!tilde_output.empty()) {
                    write_frame_file(tilde_output, example_theta_tilde_frame(theta));
                }
            } else {
                throw CliError{kInputError,
                               "unknown make kind '" + kind +
                                   "' (expected harmonic, random, or example_theta)"};
            }
            return kOk;
        }
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    } catch (const UnitNormError& e) {
        std::fprintf(stderr, "error: %s (pass --normalize to rescale columns)\n", e.what());
        return kInvariantError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kOk;
}
