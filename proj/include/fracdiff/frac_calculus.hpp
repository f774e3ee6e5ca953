#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/time_grid.hpp"

namespace fracdiff {

/// Orders zeta_0..zeta_m of one Dzherbashian-Nersesian operator
///   D^{rho_m} = J^{1-zeta_m} D^{zeta_{m-1}} ... D^{zeta_0},
/// with partial orders rho_n = sum_{j<=n} zeta_j - 1.
class FractionalSchedule {
public:
    /// Throws DomainError unless m >= 1, every zeta_j lies in (0, 1] and
    /// rho_m > 0.
    explicit FractionalSchedule(std::vector<double> zetas);

    /// Classical fixings (m = 1 unless stated).
    static FractionalSchedule caputo(double order);           // (1, order)
    static FractionalSchedule riemann_liouville(double order);  // (order, 1)
    static FractionalSchedule hilfer(double order, double type);
    /// Order in (m-1, m): (1,...,1, 1+order-m) and (1+order-m, 1,...,1).
    static FractionalSchedule caputo(double order, std::size_t m);
    static FractionalSchedule riemann_liouville(double order, std::size_t m);

    std::size_t m() const noexcept { return zetas_.size() - 1; }
    double zeta(std::size_t j) const { return zetas_.at(j); }
    const std::vector<double>& zetas() const noexcept { return zetas_; }
    double rho(std::size_t n) const;
    double order() const { return rho(m()); }

    bool operator==(const FractionalSchedule&) const = default;

private:
    std::vector<double> zetas_;
};

/// Riemann-Liouville integral J^xi, 0 < xi <= 1, by product integration that
/// is exact for piecewise-linear weighted samples. The leading t^{-w} part of
/// the input is integrated in closed form; the remainder against exact kernel
/// moments. Output weight is input weight - xi.
TimeGridFn rl_integral(const TimeGridFn& g, double xi);

/// Riemann-Liouville derivative D^xi = d/dt J^{1-xi}, 0 < xi <= 1: product
/// integration followed by five-point finite differencing of the weighted
/// samples. Output weight is input weight + xi.
///
/// With `resolution_tol` finite, throws ResolutionError when the gap between
/// the five- and three-point derivatives on t >= T/10 exceeds it (relative
/// to the derivative's magnitude). Throws GridError with fewer than 5 nodes.
TimeGridFn rl_derivative(const TimeGridFn& g, double xi,
                         double resolution_tol = std::numeric_limits<double>::infinity());

/// D^{rho_m} g applied stage by stage, right to left. Stage failures are
/// rethrown as StageError carrying the stage index.
TimeGridFn dn_apply(const TimeGridFn& g, const FractionalSchedule& sched);

/// Partial operator D^{rho_n} = J^{1-zeta_n} D^{zeta_{n-1}} ... D^{zeta_0}.
TimeGridFn dn_partial(const TimeGridFn& g, const FractionalSchedule& sched, std::size_t n);

/// c * t^exponent, or exact zero when a stage lands on a pole of Gamma.
struct PowerRuleResult {
    double coef = 0.0;
    double exponent = 0.0;
    bool exact_zero = false;
};

/// Closed form of D^{rho_m} t^mu (or D^{rho_n} with `upto` = n) obtained by
/// composing RL power rules stage by stage. Throws PoleError when a stage
/// would integrate a non-integrable power.
PowerRuleResult dn_power_rule(double mu, const FractionalSchedule& sched);
PowerRuleResult dn_power_rule(double mu, const FractionalSchedule& sched, std::size_t upto);

enum class ClassicalKind { RiemannLiouville, Caputo, Hilfer, General };

const char* to_string(ClassicalKind k) noexcept;

struct ClassicalReduction {
    ClassicalKind kind = ClassicalKind::General;
    double order = 0.0;  ///< classical order (unused for General)
    double type = 0.0;   ///< Hilfer type beta (Hilfer only)
};

/// Recognises the Riemann-Liouville, Caputo and Hilfer parameter fixings
/// within 1e-12; anything else is General.
ClassicalReduction reduce_special_case(const FractionalSchedule& sched);

/// Test function with a closed-form Laplace transform:
///  - power sum: g(t) = sum_i coef_i t^{mu_i}
///  - exp-like:  g(t) = exp(-rate t)
struct LaplaceTestFunction {
    struct Term {
        double coef;
        double mu;
    };
    enum class Kind { PowerSum, Exponential } kind = Kind::PowerSum;
    std::vector<Term> terms;
    double rate = 1.0;

    static LaplaceTestFunction power(double mu, double coef = 1.0);
    static LaplaceTestFunction polynomial(std::vector<double> coefs);  // coefs[k] t^k
    static LaplaceTestFunction exponential(double rate);

    double transform(double s) const;
    std::string name() const;
};

struct LaplaceCheckReport {
    std::vector<double> s_samples;
    std::vector<double> lhs;  ///< numerical transform of D^{rho_m} g
    std::vector<double> rhs;  ///< transform formula with initial-value terms
    double max_rel_err = 0.0;
};

/// Checks L{D^{rho_m} g}(s) = s^{rho_m} g^(s) - sum_k s^{rho_m - rho_{m-k} - 1}
/// (D^{rho_{m-k}} g)(0+). The left side integrates the closed-form operator
/// image numerically, truncated where the tail bound drops below 1e-13.
/// Throws TailError if no truncation point up to t = 1e4 meets it, and
/// DomainError if an initial-value term is infinite.
LaplaceCheckReport laplace_check(const LaplaceTestFunction& g, const FractionalSchedule& sched,
                                 std::span<const double> s_samples);

/// D^{rho_n} g at time t for a Laplace test function, in closed form.
double dn_closed_form(const LaplaceTestFunction& g, const FractionalSchedule& sched, std::size_t n,
                      double t);

}  // namespace fracdiff
