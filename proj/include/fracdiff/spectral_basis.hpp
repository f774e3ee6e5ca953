#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fracdiff {

/// Eigenfunction families of X'' (x) - eps X''(pi - x) + lambda X(x) = 0 with
/// X(0) = X(pi) = 0:
///   first:   X_1      = sqrt(2/pi) sin x,        lambda = 1 - eps
///   odd(k):  X_{2k+1} = sqrt(2/pi) sin (2k+1)x,  lambda = (1 - eps)(2k+1)^2
///   even(k): X_{2k}   = sqrt(2/pi) sin 2kx,      lambda = (1 + eps) 4k^2
enum class Family { first, odd, even };

struct Mode {
    Family family = Family::first;
    std::size_t k = 0;  ///< 0 for the first mode, >= 1 otherwise

    static Mode first() { return {Family::first, 0}; }
    static Mode odd(std::size_t k) { return {Family::odd, k}; }
    static Mode even(std::size_t k) { return {Family::even, k}; }

    /// Sine frequency: 1, 2k+1 or 2k.
    std::size_t frequency() const;
};

class SpectralBasis {
public:
    /// Throws DomainError unless |epsilon| < 1 - 1e-8 and k_max >= 1.
    SpectralBasis(double epsilon, std::size_t k_max);

    double epsilon() const noexcept { return epsilon_; }
    std::size_t k_max() const noexcept { return k_max_; }

    /// Throws IndexError for k < 1 on the odd and even families.
    double eigenvalue(Mode mode) const;
    double eigenfunction(Mode mode, double x) const;
    double eigenfunction_d2(Mode mode, double x) const;

    /// X_1, then X_{2k+1}, X_{2k} for k = 1..k_max.
    std::vector<Mode> modes() const;

private:
    double epsilon_;
    std::size_t k_max_;
};

/// Coefficients in the basis: c1 for X_1, odd[k-1] for X_{2k+1} and
/// even[k-1] for X_{2k}, k = 1..K.
struct SineSeries {
    double c1 = 0.0;
    std::vector<double> odd;
    std::vector<double> even;

    static SineSeries zeros(std::size_t k_max);

    std::size_t k_max() const noexcept { return odd.size(); }
    double& at(Mode mode);
    double at(Mode mode) const;

    /// Euclidean norm of the coefficient vector.
    double norm() const;
};

/// a*f + b*g on matching truncations.
SineSeries linear_combination(double a, const SineSeries& f, double b, const SineSeries& g);

/// Samples on a uniform grid over [0, pi].
struct SpaceGridFn {
    std::vector<double> x;
    std::vector<double> values;
};

/// N + 1 uniform nodes on [0, pi].
std::vector<double> space_grid(std::size_t intervals);

SpaceGridFn sample_space(std::span<const double> x, const std::function<double(double)>& g);

/// Max over interior nodes of |X''(x) - eps X''(pi - x) + lambda X(x)|,
/// using the analytic second derivative.
double eigenfunction_residual(const SpectralBasis& basis, Mode mode, std::span<const double> x);

/// Coefficients of grid samples. Uses the trapezoidal rule on the uniform
/// grid, which reproduces every retained mode exactly when the grid has more
/// than 2 k_max + 1 intervals. Throws BoundaryError when |g(0)| or |g(pi)|
/// exceeds 1e-10, GridError for a non-uniform or too coarse grid.
SineSeries project(const SpaceGridFn& g, const SpectralBasis& basis);

/// Coefficients of a function given pointwise, by composite 8-point
/// Gauss-Legendre quadrature on 4 k_max panels.
SineSeries project(const std::function<double(double)>& g, const SpectralBasis& basis);

/// L2(0, pi) inner product by the same composite Gauss-Legendre rule.
double inner_product(const std::function<double(double)>& f, const std::function<double(double)>& g,
                     std::size_t panels);

/// c1 X_1 + sum_k (odd_k X_{2k+1} + even_k X_{2k}) at the nodes.
SpaceGridFn synthesize(const SineSeries& s, const SpectralBasis& basis, std::span<const double> x);

/// Gram matrix of the basis under the Gauss-Legendre rule, in modes() order.
std::vector<std::vector<double>> gram_matrix(const SpectralBasis& basis);

/// Function with the analytic derivatives needed by the decay estimates.
struct SmoothProfile {
    std::function<double(double)> value;
    std::function<double(double)> d2;
    std::function<double(double)> d4;  ///< only needed for the fourth-order check
};

enum class DecayOrder { two = 2, four = 4 };

/// Worst |g_n| n^p / ||g^(p)|| over the basis (n the sine frequency),
/// separately per family.
struct DecayReport {
    double first = 0.0;
    double odd = 0.0;
    double even = 0.0;
    double worst() const;
};

/// Throws PreconditionError when g(0), g(pi) (and for order four g''(0),
/// g''(pi)) are not zero within 1e-10, or the needed derivative is missing.
DecayReport decay_check(const SmoothProfile& g, DecayOrder order, const SpectralBasis& basis);

}  // namespace fracdiff
