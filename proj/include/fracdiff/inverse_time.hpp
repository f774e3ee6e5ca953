#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/direct_solver.hpp"
#include "fracdiff/frac_calculus.hpp"
#include "fracdiff/spectral_basis.hpp"
#include "fracdiff/time_grid.hpp"

namespace fracdiff {

/// Energy observation E(t) = integral of u(x, t) over (0, pi) and its
/// D^{rho_m} derivative, both on the solver time grid.
struct EnergyData {
    TimeGridFn E;
    std::vector<double> dnE;  ///< unweighted; finite at t > 0
};

/// Simpson rule in x (trapezoid when the interval count is odd) of every time
/// row of `field`. The field must live on a uniform grid over [0, pi].
std::vector<double> integrate_space(const SpaceTimeField& field);

/// E(t) of a forward solution, summed over its components and carried at
/// the smallest non-negative weight that keeps it finite at t = 0.
TimeGridFn energy_of(const DirectSolution& sol);

/// D^{rho_m} E as unweighted samples. At t = 0 the value is the weighted
/// limit when the output weight is zero, and a quadratic extrapolation
/// otherwise.
std::vector<double> dn_of_energy(const TimeGridFn& E, const FractionalSchedule& sched);

EnergyData make_energy_data(const TimeGridFn& E, const FractionalSchedule& sched);

/// Energy data of a forward solution. dnE is taken component by component,
/// each at its own weight, which keeps the samples smooth.
EnergyData energy_data_of(const DirectSolution& sol, const FractionalSchedule& sched);

/// How the odd-mode weights of the x-integrated equation are formed.
/// `derived`: lambda_n times the integral of X_n, with lambda_n of the mode
/// itself. `printed`: prefactor 2 (1 + eps) sqrt(2/pi) (2k + 1), kernel using
/// lambda_1 for every mode. Kept for comparison only.
enum class KernelVariant { derived, printed };

/// a(t) mass(t) = dnE(t) + forcing(t) + int_0^t K(t, s) a(s) ds, discretized:
/// the integral at node i is sum_j weights[i][j] a_j (product integration,
/// exact for piecewise linear a f_n).
struct VolterraSystem {
    std::vector<double> t;
    std::vector<double> forcing;  ///< unweighted; may be non-finite at t = 0
    std::vector<std::vector<double>> weights;  ///< row i has i + 1 entries
    std::vector<double> mass;
    double bound_M2 = 0.0;
    /// max over t, s of |K(t, s)| (t - s)^{1 - rho_m} (upper bound).
    double kernel_bound = 0.0;
    /// max_i sum_j |weights[i][j]| / T, so that T * K * M2 bounds the
    /// Lipschitz constant of the fixed-point map in the sup norm.
    double kernel_bound_integrated = 0.0;

    double contraction_factor() const;
};

/// Builds the system for the source profile of `spec` (a SpaceOnlySource
/// profile, or the f field of a SeparableSource whose amplitude is ignored).
/// With bound_M2 <= 0 the bound is set to 1 / min |mass|. Throws
/// MassBoundViolation if |mass| falls below 1 / bound_M2 or vanishes.
VolterraSystem build_volterra(const ProblemSpec& spec, const SpectralBasis& basis, std::span<const double> t_grid,
                              double bound_M2 = 0.0, KernelVariant variant = KernelVariant::derived);

struct TimeReconstruction {
    std::vector<double> a;
    std::size_t iterations = 0;
    double contraction_estimate = 0.0;  ///< largest successive-update ratio
    std::vector<double> update_norms;
    bool damped = false;
    std::vector<std::string> warnings;
    std::optional<DirectSolution> u;
};

/// Picard iteration a <- (dnE + forcing + W a) / mass from a = 0, stopping
/// when the sup-norm update is <= tol. When the contraction factor is >= 1 the
/// iteration is damped by 0.5 and a warning is recorded. Throws NoConvergence
/// after max_iter sweeps and ContractionViolated when the update ratio is >= 1
/// three times in a row.
TimeReconstruction picard_solve(const VolterraSystem& sys, const EnergyData& data, double tol = 1e-10,
                                std::size_t max_iter = 200);

/// sup over nodes of |a - (dnE + forcing + W a) / mass| (t = 0 skipped when
/// the forcing there is non-finite).
double volterra_residual(const VolterraSystem& sys, const EnergyData& data, std::span<const double> a);

/// Builds the system, solves for a and assembles u on t_grid x x_grid.
TimeReconstruction recover_a(const ProblemSpec& spec, const SpectralBasis& basis, const EnergyData& data,
                             std::span<const double> t_grid, std::span<const double> x_grid, double tol = 1e-10,
                             std::size_t max_iter = 200);

}  // namespace fracdiff
