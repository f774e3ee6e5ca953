#include "fracdiff/inverse_space.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fracdiff/errors.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/parallel.hpp"

namespace fracdiff {

namespace {

constexpr double kEvalTol = 1e-12;
constexpr double kUnderflow = 1e-300;
constexpr double kSecondDerivativeTol = 1e-6;

// Fourth-order one-sided second derivative at v[0] with spacing h.
double end_second_derivative(double v0, double v1, double v2, double v3, double v4, double v5, double h)
{
    return (45.0 * v0 - 154.0 * v1 + 214.0 * v2 - 156.0 * v3 + 61.0 * v4 - 10.0 * v5) / (12.0 * h * h);
}

void check_smooth_ends(const SpaceGridFn& psi)
{
    const auto& v = psi.values;
    const std::size_t n = v.size();
    if (n < 6) throw GridError("final data needs at least six samples");
    const double h = psi.x[1] - psi.x[0];
    const double left = end_second_derivative(v[0], v[1], v[2], v[3], v[4], v[5], h);
    const double right = end_second_derivative(v[n - 1], v[n - 2], v[n - 3], v[n - 4], v[n - 5], v[n - 6], h);
    double scale = 1.0;
    for (double s : v) scale = std::max(scale, std::abs(s));
    if (std::abs(left) > kSecondDerivativeTol * scale || std::abs(right) > kSecondDerivativeTol * scale) {
        throw PreconditionError("final data must have psi'' = 0 at both ends (got " + std::to_string(left) + ", " +
                                std::to_string(right) + ")");
    }
}

double e_type(double beta, double zeta, double T, double lambda)
{
    return ml_type_eval({beta, zeta, T, lambda}, kEvalTol).value;
}

void validate_problem(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis)
{
    ProblemSpec checked = spec;
    checked.source = SpaceOnlySource{};
    checked.validate();
    if (std::abs(spec.T - data.T) > 1e-12 * data.T) throw DomainError("final data time differs from the problem's T");
    if (basis.epsilon() != spec.epsilon) throw DomainError("basis built for a different epsilon");
}

// Per-mode quotient with precomputed initial-value contributions.
struct ModeFactors {
    std::vector<double> initial;  // sum_n phi_{k,n} e_{rho_m, rho_n + 1}(T; lambda_k)
    std::vector<double> denominators;
};

ModeFactors mode_factors(const ProblemSpec& spec, const SpectralBasis& basis, const std::vector<Mode>& modes)
{
    const double beta = spec.sched.order();
    std::vector<SineSeries> phi;
    for (const auto& p : spec.phis) phi.push_back(project(p, basis));

    ModeFactors out{std::vector<double>(modes.size(), 0.0), std::vector<double>(modes.size(), 0.0)};
    parallel_for(modes.size(), [&](std::size_t idx) {
        const double lambda = basis.eigenvalue(modes[idx]);
        double s = 0.0;
        for (std::size_t n = 0; n < phi.size(); ++n) {
            const double c = phi[n].at(modes[idx]);
            if (c != 0.0) s += c * e_type(beta, spec.sched.rho(n) + 1.0, spec.T, lambda);
        }
        out.initial[idx] = s;
        out.denominators[idx] = e_type(beta, beta + 1.0, spec.T, lambda);
    });
    for (std::size_t idx = 0; idx < modes.size(); ++idx) {
        if (!(out.denominators[idx] >= kUnderflow)) {
            throw DenominatorUnderflow("e_{rho_m, rho_m + 1}(T; lambda) = " + std::to_string(out.denominators[idx]) +
                                       " for lambda = " + std::to_string(basis.eigenvalue(modes[idx])));
        }
    }
    return out;
}

SineSeries quotient(const SineSeries& psi, const ModeFactors& fac, const std::vector<Mode>& modes)
{
    SineSeries f = SineSeries::zeros(psi.k_max());
    for (std::size_t idx = 0; idx < modes.size(); ++idx) {
        f.at(modes[idx]) = (psi.at(modes[idx]) - fac.initial[idx]) / fac.denominators[idx];
    }
    return f;
}

}  // namespace

SpaceReconstruction recover_f(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis,
                              const RecoveryOptions& options)
{
    validate_problem(spec, data, basis);

    SpaceReconstruction rec;
    rec.modes = basis.modes();
    rec.psi_coefficients = project(data.psi, basis);
    if (options.require_smooth_ends) check_smooth_ends(data.psi);
    const auto fac = mode_factors(spec, basis, rec.modes);
    rec.denominators = fac.denominators;
    rec.f = quotient(rec.psi_coefficients, fac, rec.modes);
    rec.f_grid = synthesize(rec.f, basis, data.psi.x);
    return rec;
}

SpaceReconstruction recover_f(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis,
                              std::span<const double> t_grid, std::span<const double> x_grid,
                              const RecoveryOptions& options)
{
    auto rec = recover_f(spec, data, basis, options);
    ProblemSpec forward = spec;
    forward.source = SpaceOnlySource{rec.f_grid};
    rec.u = solve_direct(forward, basis, t_grid, x_grid);
    return rec;
}

double decay_constant(const SineSeries& f)
{
    double c = std::abs(f.c1);
    for (std::size_t k = 1; k <= f.k_max(); ++k) {
        const double odd = static_cast<double>(2 * k + 1), even = static_cast<double>(2 * k);
        c = std::max({c, std::abs(f.odd[k - 1]) * odd * odd, std::abs(f.even[k - 1]) * even * even});
    }
    return c;
}

StabilityReport stability_probe(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis,
                                double noise_level, std::size_t trials, std::uint64_t seed)
{
    if (!(noise_level >= 0.0)) throw DomainError("noise level must be non-negative");
    validate_problem(spec, data, basis);

    StabilityReport rep;
    rep.modes = basis.modes();
    const std::size_t nm = rep.modes.size();
    const auto fac = mode_factors(spec, basis, rep.modes);
    const auto psi_clean = project(data.psi, basis);
    const auto f_clean = quotient(psi_clean, fac, rep.modes);

    double amplitude = 0.0;
    for (double v : data.psi.values) amplitude = std::max(amplitude, std::abs(v));
    amplitude *= noise_level;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);
    std::vector<double> df2(nm, 0.0), dpsi2(nm, 0.0), ratio2(nm, 0.0);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        SpaceGridFn noisy = data.psi;
        for (std::size_t i = 1; i + 1 < noisy.values.size(); ++i) noisy.values[i] += amplitude * noise(rng);
        const auto psi = project(noisy, basis);
        const auto f = quotient(psi, fac, rep.modes);
        for (std::size_t idx = 0; idx < nm; ++idx) {
            const Mode m = rep.modes[idx];
            const double df = f.at(m) - f_clean.at(m), dp = psi.at(m) - psi_clean.at(m);
            df2[idx] += df * df;
            dpsi2[idx] += dp * dp;
            const double r = f_clean.at(m) != 0.0 ? f.at(m) / f_clean.at(m) : 1.0;
            ratio2[idx] += r * r;
        }
    }
    const double inv = trials ? 1.0 / static_cast<double>(trials) : 0.0;
    for (std::size_t idx = 0; idx < nm; ++idx) {
        rep.amplification.push_back(dpsi2[idx] > 0.0 ? std::sqrt(df2[idx] / dpsi2[idx]) : 0.0);
        rep.predicted.push_back(1.0 / fac.denominators[idx]);
        rep.relative_to_clean.push_back(trials ? std::sqrt(ratio2[idx] * inv) : 1.0);
    }
    return rep;
}

}  // namespace fracdiff
