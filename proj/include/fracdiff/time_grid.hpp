#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fracdiff {

/// Sampled function of time on [0, T]. `values[i]` holds t_i^weight * g(t_i),
/// so a weight w > 0 tames a t^{-w} endpoint singularity and w < 0 absorbs a
/// vanishing power. The value at t = 0 is the limit of the weighted function.
struct TimeGridFn {
    std::vector<double> t;
    std::vector<double> values;
    double weight = 0.0;

    std::size_t size() const noexcept { return t.size(); }

    /// Unweighted g(t_i). At t = 0 this is the limit implied by the weight:
    /// 0 for w < 0, values[0] for w == 0, +-inf for w > 0 (0 if values[0] == 0).
    double unweighted(std::size_t i) const;
    std::vector<double> unweighted() const;

    /// Same function carried with a different weight. The t = 0 sample for a
    /// larger weight is 0; for a smaller weight it is extrapolated.
    TimeGridFn reweighted(double new_weight) const;
};

/// Throws GridError unless t is strictly increasing from exactly 0 and
/// finite. Requires at least `min_nodes` nodes.
void validate_grid(std::span<const double> t, std::size_t min_nodes = 2);

/// N + 1 uniform nodes on [0, T].
std::vector<double> uniform_grid(double T, std::size_t intervals);

/// N + 1 nodes t_i = T (i/N)^gamma; gamma = 1 is uniform.
std::vector<double> graded_grid(double T, std::size_t intervals, double gamma = 2.0);

/// Samples g at the nodes with weight 0.
TimeGridFn sample(std::span<const double> t, const std::function<double(double)>& g);

/// Samples t^w g(t); `limit_at_zero` supplies the weighted value at t = 0.
TimeGridFn sample_weighted(std::span<const double> t, double weight,
                           const std::function<double(double)>& g, double limit_at_zero);

/// Quadratic extrapolation to t = 0 from the three smallest positive nodes.
double extrapolate_to_zero(std::span<const double> t, std::span<const double> v);

/// Pointwise a*f + b*g; the operands must share grid and weight.
TimeGridFn linear_combination(double a, const TimeGridFn& f, double b, const TimeGridFn& g);

/// Trapezoidal integral of samples over the grid.
double trapezoid(std::span<const double> t, std::span<const double> v);

}  // namespace fracdiff
