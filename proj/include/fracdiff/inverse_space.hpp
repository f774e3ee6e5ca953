#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fracdiff/direct_solver.hpp"
#include "fracdiff/spectral_basis.hpp"

namespace fracdiff {

/// Observation u(x, T) = psi(x).
struct FinalData {
    SpaceGridFn psi;
    double T = 1.0;
};

struct SpaceReconstruction {
    SineSeries f;
    SpaceGridFn f_grid;                  ///< f synthesized on the data grid
    SineSeries psi_coefficients;
    std::vector<Mode> modes;             ///< basis order
    std::vector<double> denominators;    ///< e_{rho_m, rho_m + 1}(T; lambda) per mode
    std::optional<DirectSolution> u;     ///< forward solve with the recovered source, when requested
};

/// Options for recover_f.
struct RecoveryOptions {
    /// Reject psi whose second derivative does not vanish at the ends
    /// (one-sided differences, tolerance 1e-6 relative to max(1, max|psi|)).
    bool require_smooth_ends = true;
};

/// Space source f from final data: per mode
///   f_k = (psi_k - sum_n phi_{k,n} e_{rho_m, rho_n + 1}(T; lambda_k)) / e_{rho_m, rho_m + 1}(T; lambda_k).
/// The source field of `spec` is ignored; spec.T must equal data.T.
/// Throws DomainError / BoundaryError for invalid problem data,
/// BoundaryError when psi is nonzero at an end, PreconditionError when psi''
/// is (with the check enabled), DenominatorUnderflow when a denominator falls
/// below 1e-300.
SpaceReconstruction recover_f(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis,
                              const RecoveryOptions& options = {});

/// Same, and assembles u on t_grid x x_grid by a forward solve with the
/// recovered f.
SpaceReconstruction recover_f(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis,
                              std::span<const double> t_grid, std::span<const double> x_grid,
                              const RecoveryOptions& options = {});

/// max_n |f_n| n^2 over the sine frequencies n of the series.
double decay_constant(const SineSeries& f);

struct StabilityReport {
    std::vector<Mode> modes;
    /// rms over trials of |delta f_k| / rms of |delta psi_k| (0 without noise).
    std::vector<double> amplification;
    /// 1 / e_{rho_m, rho_m + 1}(T; lambda_k).
    std::vector<double> predicted;
    /// rms over trials of f_k(noisy) / f_k(clean), 1 where f_k(clean) = 0.
    std::vector<double> relative_to_clean;
};

/// Adds seeded uniform noise of amplitude noise_level * max|psi| to the
/// interior psi samples, recovers f for each trial without the smoothness
/// check and reports per-mode statistics. Deterministic for a given seed.
StabilityReport stability_probe(const ProblemSpec& spec, const FinalData& data, const SpectralBasis& basis,
                                double noise_level, std::size_t trials, std::uint64_t seed);

}  // namespace fracdiff
