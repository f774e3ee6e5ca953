#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fracdiff {

enum class RunMode { mlf, dn_apply, reduce, laplace_check, direct, inverse_space, inverse_time, verify_all };

/// Command-line spelling ("dn-apply", "verify-all", ...).
std::string_view to_string(RunMode mode) noexcept;
/// Throws ParseError for an unknown name.
RunMode parse_mode(std::string_view name);

/// sum_n coef_n sin(n x) on [0, pi]; keys are the sine frequencies.
struct SpaceProfile {
    std::map<int, double> sine;

    double operator()(double x) const;
    bool operator==(const SpaceProfile&) const = default;
};

/// sum c t^p + sum c sin(w t) + sum c exp(-r t); keys are p, w and r.
struct TimeFunction {
    std::map<double, double> power;
    std::map<double, double> sine;
    std::map<double, double> exp;

    double operator()(double t) const;
    bool empty() const noexcept { return power.empty() && sine.empty() && exp.empty(); }
    bool operator==(const TimeFunction&) const = default;
};

struct ProblemConfig {
    double epsilon = 0.0;
    std::vector<double> schedule{1.0, 0.5};  ///< zeta_0 .. zeta_m
    double T = 1.0;
    /// One profile per initial condition. Empty means all zero.
    std::vector<SpaceProfile> initial;
    SpaceProfile source;
    /// Time factor of a separable source. Absent means a space-only source
    /// (direct, inverse-space) or a unit amplitude (inverse-time).
    std::optional<TimeFunction> amplitude;
    /// inverse-space: observed u(x, T). Absent means it is synthesized by a
    /// forward solve with `source`.
    std::optional<SpaceProfile> final_data;

    // mlf
    double beta = 1.0;
    double zeta = 1.0;
    std::vector<double> z{1.0};

    // dn-apply and laplace-check
    TimeFunction function{{{1.0, 1.0}}, {}, {}};
    std::vector<double> s{1.0, 2.0, 5.0, 10.0};

    bool operator==(const ProblemConfig&) const = default;
};

struct NumericsConfig {
    std::size_t K = 32;          ///< modes per family
    std::size_t N_time = 2048;   ///< time intervals
    std::size_t N_space = 256;   ///< space intervals
    double grid_gamma = 2.0;
    double tol = 1e-10;
    std::uint64_t seed = 20261016;
    std::size_t max_iter = 200;
    bool smooth_end_check = true;

    bool operator==(const NumericsConfig&) const = default;
};

enum class OutputFormat { csv, json };

struct OutputConfig {
    std::string directory = "out";
    OutputFormat format = OutputFormat::csv;
    std::size_t time_stride = 16;  ///< every k-th time node goes to field files

    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    RunMode mode = RunMode::verify_all;
    ProblemConfig problem;
    NumericsConfig numerics;
    OutputConfig output;

    bool operator==(const RunConfig&) const = default;
};

/// Parses a YAML document with top-level keys mode, problem, numerics and
/// output. Missing keys keep their defaults. Throws ParseError (with the
/// dotted field path and line) for syntax errors, unknown keys and values of
/// the wrong type, and ValidationError listing every violated invariant.
/// With `mode` set the document may omit the mode key, and naming another
/// mode is a validation error.
RunConfig parse_config(std::string_view text, std::optional<RunMode> mode = std::nullopt);

/// parse_config on a file. ParseError when it cannot be read.
RunConfig load_config(const std::string& path, std::optional<RunMode> mode = std::nullopt);

/// Full YAML form; parse_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& config);

/// Every violated invariant of `config`, empty when it is valid.
std::vector<std::string> validation_errors(const RunConfig& config);

/// One pass/fail entry of a run.
struct HardCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool upper_bound = true;
    bool passed = false;
};

struct RunReport {
    RunConfig config;
    std::vector<HardCheck> checks;
    std::map<std::string, double> metrics;
    std::vector<std::pair<std::string, double>> timings;  ///< seconds, in run order
    std::vector<std::string> artifacts;                   ///< written files
    std::vector<std::string> warnings;
    std::string error;  ///< module error that aborted the run

    bool passed() const;
};

/// Runs the configured mode, writes the data files and report.json into the
/// output directory and returns the report. A module error is caught,
/// recorded in `error` and turns into a failed "completed" check.
RunReport run(const RunConfig& config);

}  // namespace fracdiff
