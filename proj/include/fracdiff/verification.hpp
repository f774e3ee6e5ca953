#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fracdiff {

/// One measured quantity of an acceptance check.
struct Metric {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool upper_bound = true;  ///< pass when value <= threshold (else value >= threshold)
    bool passed() const;
};

struct CheckResult {
    int criterion = 0;
    std::string name;
    std::vector<Metric> metrics;
    std::string error;  ///< set when the check threw

    bool passed() const;
};

struct VerifyOptions {
    std::uint64_t seed = 20261016;
};

CheckResult verify_mittag_leffler(const VerifyOptions& opt = {});
CheckResult verify_power_rule(const VerifyOptions& opt = {});
CheckResult verify_special_cases(const VerifyOptions& opt = {});
CheckResult verify_laplace(const VerifyOptions& opt = {});
CheckResult verify_spectral(const VerifyOptions& opt = {});
CheckResult verify_direct(const VerifyOptions& opt = {});
CheckResult verify_inverse_space(const VerifyOptions& opt = {});
CheckResult verify_inverse_time(const VerifyOptions& opt = {});

/// Criteria 1-8 in order. A check that throws is reported as failed with the
/// message in `error`.
std::vector<CheckResult> verify_all(const VerifyOptions& opt = {});

/// Reference schemes used by the special-case check, exposed for testing.
namespace reference {

/// Riemann-Liouville derivative of order alpha in (0, 1) at t by
/// Grunwald-Letnikov sums with step h, Richardson-extrapolated with h / 2.
double grunwald_letnikov(const std::function<double(double)>& g, double alpha, double t, double h);

/// Caputo derivative of order alpha in (0, 1) at t by the L1 scheme.
double l1_caputo(const std::function<double(double)>& g, double alpha, double t, double h);

/// Hilfer derivative of order alpha and type beta at t as the composition
/// J^{beta (1 - alpha)} D^{alpha + beta (1 - alpha)} of a Riemann-Liouville
/// integral and derivative.
double hilfer_composition(const std::function<double(double)>& g, double alpha, double beta, double t, double h);

}  // namespace reference

}  // namespace fracdiff
