#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "frametuner/autotune.hpp"
#include "frametuner/descent.hpp"
#include "frametuner/frame.hpp"
#include "frametuner/matrix.hpp"
#include "frametuner/structured.hpp"

namespace frametuner {

using RealFrame = Frame<double>;
using ComplexFrame = Frame<std::complex<double>>;
using AnyMatrix = std::variant<Matrix<double>, Matrix<std::complex<double>>>;
using AnyFrame = std::variant<RealFrame, ComplexFrame>;

/// Malformed input file; the message names the offending field.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable or unwritable path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

/// 17 significant digits: enough to round-trip an IEEE double exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void append_entry(std::string& out, double x) { out += fmt17(x); }

inline void append_entry(std::string& out, const std::complex<double>& x) {
    out += '[';
    out += fmt17(x.real());
    out += ',';
    out += fmt17(x.imag());
    out += ']';
}

inline double require_number(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) throw FormatError(where + ": expected a number");
    return j.get<double>();
}

inline std::size_t require_positive_int(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() <= 0) {
        throw FormatError(where + ": expected a positive integer");
    }
    return static_cast<std::size_t>(j.get<long long>());
}

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": invalid JSON (" + e.what() + ")");
    }
    return j;
}

}  // namespace detail

/// Serializes a synthesis matrix in the frame file format: columns outermost,
/// real entries as plain numbers, complex entries as [re, im] pairs, all at
/// 17 significant digits.
template <class T>
std::string frame_to_json(const Matrix<T>& syn) {
    std::string out = "{\"field\":\"";
    out += field_name<T>();
    out += "\",\"rows\":" + std::to_string(syn.rows());
    out += ",\"cols\":" + std::to_string(syn.cols());
    out += ",\"columns\":[";
    for (std::size_t n = 0; n < syn.cols(); ++n) {
        if (n > 0) out += ',';
        out += '[';
        for (std::size_t m = 0; m < syn.rows(); ++m) {
            if (m > 0) out += ',';
            detail::append_entry(out, syn(m, n));
        }
        out += ']';
    }
    out += "]}";
    return out;
}

template <class T>
std::string frame_to_json(const Frame<T>& f) {
    return frame_to_json(f.synthesis());
}

template <class T>
void write_frame_file(const std::string& path, const T& frame_or_matrix) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << frame_to_json(frame_or_matrix) << "\n";
}

/// Reads a frame file without enforcing the unit-norm invariant, so callers
/// can distinguish a malformed file from a valid matrix that merely needs
/// normalizing.
inline AnyMatrix read_frame_matrix(const std::string& path) {
    const nlohmann::json j = detail::parse_file(path);
    if (!j.is_object()) throw FormatError(path + ": top level must be an object");
    if (!j.contains("field")) throw FormatError(path + ": missing \"field\"");
    if (!j.contains("rows")) throw FormatError(path + ": missing \"rows\"");
    if (!j.contains("cols")) throw FormatError(path + ": missing \"cols\"");
    if (!j.contains("columns")) throw FormatError(path + ": missing \"columns\"");

    const auto& field = j.at("field");
    if (!field.is_string() || (field != "real" && field != "complex")) {
        throw FormatError(path + ": \"field\" must be \"real\" or \"complex\"");
    }
    const bool complex_field = field == "complex";
    const std::size_t rows = detail::require_positive_int(j.at("rows"), path + ": \"rows\"");
    const std::size_t cols = detail::require_positive_int(j.at("cols"), path + ": \"cols\"");
    constexpr std::size_t kMaxDim = 65536;
    if (rows > kMaxDim || cols > kMaxDim) {
        throw FormatError(path + ": dimensions exceed the supported maximum (" +
                          std::to_string(kMaxDim) + ")");
    }

    const auto& columns = j.at("columns");
    if (!columns.is_array() || columns.size() != cols) {
        throw FormatError(path + ": \"columns\" must be an array of " + std::to_string(cols) +
                          " columns");
    }

    const auto entry_where = [&](std::size_t n, std::size_t m) {
        return path + ": columns[" + std::to_string(n) + "][" + std::to_string(m) + "]";
    };

    if (complex_field) {
        Matrix<std::complex<double>> syn(rows, cols);
        for (std::size_t n = 0; n < cols; ++n) {
            const auto& col = columns.at(n);
            if (!col.is_array() || col.size() != rows) {
                throw FormatError(path + ": columns[" + std::to_string(n) + "] must hold " +
                                  std::to_string(rows) + " entries");
            }
            for (std::size_t m = 0; m < rows; ++m) {
                const auto& e = col.at(m);
                if (!e.is_array() || e.size() != 2) {
                    throw FormatError(entry_where(n, m) +
                                      ": complex entries must be [re, im] pairs");
                }
                syn(m, n) = {detail::require_number(e.at(0), entry_where(n, m) + "[0]"),
                             detail::require_number(e.at(1), entry_where(n, m) + "[1]")};
            }
        }
        if (!syn.all_finite()) throw FormatError(path + ": non-finite entry");
        return syn;
    }

    Matrix<double> syn(rows, cols);
    for (std::size_t n = 0; n < cols; ++n) {
        const auto& col = columns.at(n);
        if (!col.is_array() || col.size() != rows) {
            throw FormatError(path + ": columns[" + std::to_string(n) + "] must hold " +
                              std::to_string(rows) + " entries");
        }
        for (std::size_t m = 0; m < rows; ++m) {
            syn(m, n) = detail::require_number(col.at(m), entry_where(n, m));
        }
    }
    if (!syn.all_finite()) throw FormatError(path + ": non-finite entry");
    return syn;
}

/// Reads and validates a unit norm frame. Throws FormatError for malformed
/// files and UnitNormError for well-formed matrices with non-unit columns.
inline AnyFrame read_frame_file(const std::string& path) {
    AnyMatrix raw = read_frame_matrix(path);
    return std::visit([](auto&& m) -> AnyFrame { return Frame(std::move(m)); }, std::move(raw));
}

inline void write_trace_csv(const std::string& path, const DescentTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "iter,frame_potential,distance,grad_sq_norm,displacement\n";
    for (const TraceRow& row : trace.rows) {
        out << row.iter << ',' << detail::fmt17(row.frame_potential) << ','
            << detail::fmt17(row.distance) << ',' << detail::fmt17(row.grad_sq_norm) << ','
            << detail::fmt17(row.displacement) << "\n";
    }
}

inline nlohmann::json partition_to_json(const Partition& p) {
    return {{"I", p.block_i}, {"J", p.block_j}, {"bottleneck", p.bottleneck}};
}

inline nlohmann::json tune_report_to_json(const TuneReport& rep) {
    nlohmann::json bounds{
        {"coprime_path", rep.bounds.coprime_path},
        {"coprime_gate_passed", rep.bounds.coprime_gate_passed},
        {"epsilon_used", rep.bounds.epsilon_used},
        {"epsilon_clamped", rep.bounds.epsilon_clamped},
        {"pipeline_hypothesis_holds", rep.bounds.pipeline_hypothesis_holds},
        {"pipeline_displacement_bound", rep.bounds.pipeline_displacement_bound},
    };
    if (rep.bounds.coprime_path) {
        bounds["coprime_epsilon"] = rep.bounds.coprime_epsilon;
        bounds["coprime_displacement_bound"] = rep.bounds.coprime_displacement_bound;
    }
    nlohmann::json j{
        {"outcome", to_string(rep.outcome)},
        {"stop_reason", to_string(rep.stop_reason)},
        {"iterations", rep.iterations},
        {"displacement", rep.displacement},
        {"depth", rep.depth},
        {"initial_distance", rep.initial_distance},
        {"final_distance", rep.final_distance},
        {"bounds", std::move(bounds)},
    };
    if (rep.partition) {
        j["partition"] = partition_to_json(*rep.partition);
        j["bounds"]["equal_redundancy"] = rep.bounds.equal_redundancy;
        j["bounds"]["jump_displacement"] = rep.bounds.jump_displacement;
        j["bounds"]["jump_displacement_bound"] = rep.bounds.jump_displacement_bound;
    }
    if (!rep.children.empty()) {
        nlohmann::json children = nlohmann::json::array();
        for (const TuneReport& child : rep.children) {
            children.push_back(tune_report_to_json(child));
        }
        j["children"] = std::move(children);
    }
    return j;
}

inline void write_report_json(const std::string& path, const TuneReport& rep) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << tune_report_to_json(rep).dump(2) << "\n";
}

/// Gabor configuration: {"M":, "A":, "B":, "generator": [[re, im], ...]}.
inline GaborSystem read_gabor_config(const std::string& path) {
    const nlohmann::json j = detail::parse_file(path);
    if (!j.is_object()) throw FormatError(path + ": top level must be an object");
    for (const char* key : {"M", "A", "B", "generator"}) {
        if (!j.contains(key)) throw FormatError(path + ": missing \"" + std::string(key) + "\"");
    }
    const std::size_t m = detail::require_positive_int(j.at("M"), path + ": \"M\"");
    const std::size_t a = detail::require_positive_int(j.at("A"), path + ": \"A\"");
    const std::size_t b = detail::require_positive_int(j.at("B"), path + ": \"B\"");
    const auto& gen = j.at("generator");
    if (!gen.is_array() || gen.size() != m) {
        throw FormatError(path + ": \"generator\" must hold " + std::to_string(m) + " entries");
    }
    cvec v(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& e = gen.at(i);
        const std::string where = path + ": generator[" + std::to_string(i) + "]";
        if (!e.is_array() || e.size() != 2) {
            throw FormatError(where + ": complex entries must be [re, im] pairs");
        }
        v[i] = {detail::require_number(e.at(0), where + "[0]"),
                detail::require_number(e.at(1), where + "[1]")};
    }
    try {
        return GaborSystem(m, a, b, std::move(v));
    } catch (const std::invalid_argument& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline std::string gabor_to_json(const GaborSystem& sys) {
    std::string out = "{\"M\":" + std::to_string(sys.signal_len);
    out += ",\"A\":" + std::to_string(sys.trans_step);
    out += ",\"B\":" + std::to_string(sys.mod_step);
    out += ",\"generator\":[";
    for (std::size_t i = 0; i < sys.generator.size(); ++i) {
        if (i > 0) out += ',';
        detail::append_entry(out, sys.generator[i]);
    }
    out += "]}";
    return out;
}

inline void write_gabor_config(const std::string& path, const GaborSystem& sys) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << gabor_to_json(sys) << "\n";
}

}  // namespace frametuner
