#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fracdiff/frac_calculus.hpp"
#include "fracdiff/spectral_basis.hpp"
#include "fracdiff/time_grid.hpp"

namespace fracdiff {

/// Samples on a tensor grid: values[j * x.size() + i] at (x_i, t_j).
struct SpaceTimeField {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<double> values;

    static SpaceTimeField zeros(std::span<const double> x, std::span<const double> t);
    /// g(x) repeated at every time node.
    static SpaceTimeField constant_in_time(const SpaceGridFn& g, std::span<const double> t);

    double& at(std::size_t ix, std::size_t jt) { return values[jt * x.size() + ix]; }
    double at(std::size_t ix, std::size_t jt) const { return values[jt * x.size() + ix]; }

    SpaceGridFn at_time(std::size_t jt) const;
    std::vector<double> at_point(std::size_t ix) const;
};

/// F(x, t) = f(x).
struct SpaceOnlySource {
    SpaceGridFn f;
};

/// F(x, t) = a(t) f(x, t), with a sampled on the solver time grid.
struct SeparableSource {
    std::vector<double> a;
    SpaceTimeField f;
};

using Source = std::variant<SpaceOnlySource, SeparableSource>;

/// Data of D^{rho_m} u - u_xx + eps u_xx(pi - x) = F on (0, pi) x (0, T]
/// with u(0, t) = u(pi, t) = 0 and D^{rho_n} u(x, 0+) = phis[n].
struct ProblemSpec {
    double epsilon = 0.0;
    FractionalSchedule sched = FractionalSchedule::caputo(0.5);
    double T = 1.0;
    std::vector<SpaceGridFn> phis;
    Source source = SpaceOnlySource{};

    /// DomainError for |eps| >= 1, T <= 0, rho_m outside (0, 1) or a wrong
    /// number of initial functions; BoundaryError when an initial function
    /// or the source does not vanish at the ends.
    void validate() const;
};

/// Weight carried by modal samples: rho_m, raised to -rho_0 when
/// rho_m + rho_0 < 0 so the t^{rho_0} initial term stays bounded.
double modal_weight(const FractionalSchedule& sched);

/// Modal right-hand side: a constant, or samples on the time grid.
using ModalForcing = std::variant<double, std::vector<double>>;

/// Solution of D^{rho_m} v + lambda v = forcing with D^{rho_n} v(0+) = phi[n],
/// split by datum:
///   initial[n] = phi[n] e_{rho_m, rho_n + 1}(t; lambda)   with weight -rho_n,
///   forcing    = f e_{rho_m, rho_m + 1}(t; lambda)        with weight -rho_m
/// for constant f, or e_{rho_m, rho_m}(.; lambda) * forcing for sampled
/// forcing. At these weights every term is a smooth function of t^{rho_m}.
struct ModalTerms {
    std::vector<TimeGridFn> initial;
    TimeGridFn forcing;

    /// Sum of all terms carried at the given weight, which must not be below
    /// any term's own weight.
    TimeGridFn sum(double weight) const;
};

ModalTerms solve_modal_terms(double lambda, std::span<const double> phi, const ModalForcing& forcing,
                             const FractionalSchedule& sched, std::span<const double> t_grid);

/// solve_modal_terms summed at modal_weight(sched).
TimeGridFn solve_modal_ode(double lambda, std::span<const double> phi, const ModalForcing& forcing,
                           const FractionalSchedule& sched, std::span<const double> t_grid);

struct ModalSolution {
    Mode mode;
    double lambda = 0.0;
    ModalTerms terms;
    TimeGridFn u;  ///< terms summed at the modal weight
};

struct WeightedField {
    double weight = 0.0;
    SpaceTimeField weighted;
};

struct DirectSolution {
    double weight = 0.0;          ///< modal_weight(sched)
    SpaceTimeField weighted;      ///< t^weight u, finite at t = 0
    SpaceTimeField u;             ///< u itself; the t = 0 row is NaN where u(x, 0) is unbounded
    /// u split as in ModalTerms: one field per initial function, then the
    /// source part, each at its own weight.
    std::vector<WeightedField> components;
    std::vector<ModalSolution> modes;
    std::vector<SineSeries> initial_coefficients;
    SineSeries source_coefficients;  ///< projection of f (SpaceOnlySource only)
    std::vector<std::string> warnings;
};

/// Last retained coefficient relative to the largest one above which the
/// solver reports a truncation warning.
inline constexpr double kTruncationThreshold = 1e-8;

/// Projects the data onto the basis, solves every mode and synthesizes u on
/// x_grid x t_grid. Modes are solved concurrently. A "TruncationWarning"
/// entry is added when the last retained mode of any datum exceeds
/// kTruncationThreshold of its largest coefficient.
DirectSolution solve_direct(const ProblemSpec& spec, const SpectralBasis& basis, std::span<const double> t_grid,
                            std::span<const double> x_grid);

/// Max over interior x nodes and time nodes t_j >= t_min (t_j > 0) of
/// |D^{rho_m} u - u_xx + eps u_xx(pi - x) - F|, evaluated from the sampled
/// components alone. The time derivative is dn_apply on each component, u_xx
/// comes from fourth-order central differences (odd reflection at the ends)
/// and the involution term from the mirrored node. GridError unless x is
/// uniform on [0, pi].
double pde_residual(const DirectSolution& sol, const ProblemSpec& spec, double t_min = 0.0);

}  // namespace fracdiff
