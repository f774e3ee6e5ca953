#include "fracdiff/time_grid.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fracdiff/errors.hpp"

namespace fracdiff {

double TimeGridFn::unweighted(std::size_t i) const
{
    if (t[i] > 0.0) return values[i] * std::pow(t[i], -weight);
    if (weight < 0.0) return 0.0;
    if (weight == 0.0) return values[i];
    if (values[i] == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), values[i]);
}

std::vector<double> TimeGridFn::unweighted() const
{
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = unweighted(i);
    return out;
}

TimeGridFn TimeGridFn::reweighted(double new_weight) const
{
    TimeGridFn out{t, values, new_weight};
    double shift = new_weight - weight;
    if (shift == 0.0) return out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (t[i] > 0.0) out.values[i] = values[i] * std::pow(t[i], shift);
    }
    if (!t.empty() && t[0] == 0.0) {
        out.values[0] = shift > 0.0 ? 0.0 : extrapolate_to_zero(out.t, out.values);
    }
    return out;
}

void validate_grid(std::span<const double> t, std::size_t min_nodes)
{
    if (t.size() < min_nodes) {
        throw GridError("time grid needs at least " + std::to_string(min_nodes) + " nodes, got " +
                        std::to_string(t.size()));
    }
    if (t[0] != 0.0) throw GridError("time grid must start at t = 0");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !(t[i] > t[i - 1])) {
            throw GridError("time grid not strictly increasing at node " + std::to_string(i));
        }
    }
}

std::vector<double> uniform_grid(double T, std::size_t intervals)
{
    return graded_grid(T, intervals, 1.0);
}

std::vector<double> graded_grid(double T, std::size_t intervals, double gamma)
{
    if (!(T > 0.0) || intervals == 0 || !(gamma >= 1.0)) {
        throw GridError("graded grid needs T > 0, at least one interval and gamma >= 1");
    }
    std::vector<double> t(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        double s = static_cast<double>(i) / static_cast<double>(intervals);
        t[i] = gamma == 1.0 ? T * s : T * std::pow(s, gamma);
    }
    t.back() = T;
    return t;
}

TimeGridFn sample(std::span<const double> t, const std::function<double(double)>& g)
{
    TimeGridFn out{{t.begin(), t.end()}, std::vector<double>(t.size()), 0.0};
    for (std::size_t i = 0; i < t.size(); ++i) out.values[i] = g(t[i]);
    return out;
}

TimeGridFn sample_weighted(std::span<const double> t, double weight,
                           const std::function<double(double)>& g, double limit_at_zero)
{
    TimeGridFn out{{t.begin(), t.end()}, std::vector<double>(t.size()), weight};
    for (std::size_t i = 0; i < t.size(); ++i) {
        out.values[i] = t[i] > 0.0 ? std::pow(t[i], weight) * g(t[i]) : limit_at_zero;
    }
    return out;
}

double extrapolate_to_zero(std::span<const double> t, std::span<const double> v)
{
    if (t.size() < 4) throw GridError("extrapolation needs three positive nodes");
    double t1 = t[1], t2 = t[2], t3 = t[3];
    // Lagrange basis at 0.
    double l1 = (t2 * t3) / ((t1 - t2) * (t1 - t3));
    double l2 = (t1 * t3) / ((t2 - t1) * (t2 - t3));
    double l3 = (t1 * t2) / ((t3 - t1) * (t3 - t2));
    return l1 * v[1] + l2 * v[2] + l3 * v[3];
}

TimeGridFn linear_combination(double a, const TimeGridFn& f, double b, const TimeGridFn& g)
{
    if (f.t != g.t) throw GridError("linear combination of functions on different grids");
    TimeGridFn h = g.weight == f.weight ? g : g.reweighted(f.weight);
    TimeGridFn out{f.t, std::vector<double>(f.size()), f.weight};
    for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = a * f.values[i] + b * h.values[i];
    return out;
}

double trapezoid(std::span<const double> t, std::span<const double> v)
{
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
    return s;
}

}  // namespace fracdiff
