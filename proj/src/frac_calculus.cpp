#include "fracdiff/frac_calculus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/parallel.hpp"

namespace fracdiff {

FractionalSchedule::FractionalSchedule(std::vector<double> zetas) : zetas_(std::move(zetas))
{
    if (zetas_.size() < 2) throw DomainError("a fractional schedule needs m >= 1 (at least two orders)");
    for (std::size_t j = 0; j < zetas_.size(); ++j) {
        double z = zetas_[j];
        if (!(z > 0.0 && z <= 1.0)) {
            throw DomainError("schedule order zeta_" + std::to_string(j) + " = " + std::to_string(z) +
                              " is outside (0, 1]");
        }
    }
    if (!(order() > 0.0)) throw DomainError("schedule total order rho_m must be positive");
}

FractionalSchedule FractionalSchedule::caputo(double order) { return caputo(order, 1); }

FractionalSchedule FractionalSchedule::riemann_liouville(double order) { return riemann_liouville(order, 1); }

FractionalSchedule FractionalSchedule::caputo(double order, std::size_t m)
{
    std::vector<double> z(m + 1, 1.0);
    z[m] = order - static_cast<double>(m - 1);
    return FractionalSchedule(std::move(z));
}

FractionalSchedule FractionalSchedule::riemann_liouville(double order, std::size_t m)
{
    std::vector<double> z(m + 1, 1.0);
    z[0] = order - static_cast<double>(m - 1);
    return FractionalSchedule(std::move(z));
}

FractionalSchedule FractionalSchedule::hilfer(double order, double type)
{
    if (!(type >= 0.0 && type <= 1.0)) throw DomainError("Hilfer type must lie in [0, 1]");
    return FractionalSchedule({1.0 - (1.0 - order) * (1.0 - type), 1.0 - type * (1.0 - order)});
}

double FractionalSchedule::rho(std::size_t n) const
{
    if (n >= zetas_.size()) throw IndexError("partial order index out of range");
    double s = 0.0;
    for (std::size_t j = 0; j <= n; ++j) s += zetas_[j];
    return s - 1.0;
}

namespace {

constexpr std::size_t kSeriesTerms = 20;
constexpr double kSeriesCutoff = 0.1;

// Product-integration weights for the kernel (t - tau)^{a-1} / Gamma(a)
// against piecewise-linear data. For an interval at normalised width
// delta = dtau / s0 (s0 = distance from the row time to the interval's
// left end) the two weights are s0^a * {left, right} / Gamma(a), where
//   left  = int_0^delta (1-u)^{a-1} (1 - u/delta) du
//   right = int_0^delta (1-u)^{a-1} u/delta du.
// Small delta uses the binomial series of (1-u)^{a-1} to avoid cancellation.
class KernelMoments {
public:
    explicit KernelMoments(double a) : a_(a), reach_(std::max(1.0, std::abs(a - 1.0)))
    {
        coef_[0] = 1.0;
        for (std::size_t n = 1; n < kSeriesTerms; ++n) {
            coef_[n] = coef_[n - 1] * (static_cast<double>(n) - a) / static_cast<double>(n);
        }
        for (std::size_t n = 0; n < kSeriesTerms; ++n) {
            double dn = static_cast<double>(n);
            scaled_[0][n] = coef_[n] / (dn + 1.0);
            scaled_[1][n] = coef_[n] / (dn + 2.0);
            scaled_[2][n] = coef_[n] / (dn + 3.0);
        }
    }

    void operator()(double delta, double& left, double& right) const
    {
        if (delta * reach_ < kSeriesCutoff) {
            double x = delta * reach_;
            std::size_t terms = x < 1e-3 ? 6 : x < 1e-2 ? 9 : x < 0.05 ? 14 : kSeriesTerms;
            double l = 0.0, r = 0.0;
            for (std::size_t n = terms; n-- > 0;) {
                double dn = static_cast<double>(n);
                l = l * delta + coef_[n] / ((dn + 1.0) * (dn + 2.0));
                r = r * delta + coef_[n] / (dn + 2.0);
            }
            left = l * delta;
            right = r * delta;
            return;
        }
        double lg = std::log1p(-delta);
        double p = -std::expm1(a_ * lg) / a_;
        double q = p + std::expm1((a_ + 1.0) * lg) / (a_ + 1.0);
        right = q / delta;
        left = p - right;
    }

    // Scaled power moments m_k = delta^{-k-1} int_0^delta (1-u)^{a-1} u^k du
    // for k = 0, 1, 2.
    void power_moments(double delta, double& m0, double& m1, double& m2) const
    {
        if (delta * reach_ < kSeriesCutoff) {
            double x = delta * reach_;
            std::size_t terms = x < 1e-3 ? 6 : x < 1e-2 ? 9 : x < 0.05 ? 14 : kSeriesTerms;
            m0 = m1 = m2 = 0.0;
            for (std::size_t n = terms; n-- > 0;) {
                m0 = m0 * delta + scaled_[0][n];
                m1 = m1 * delta + scaled_[1][n];
                m2 = m2 * delta + scaled_[2][n];
            }
            return;
        }
        double lg = std::log1p(-delta);
        double e0 = -std::expm1(a_ * lg) / a_;
        double e1 = -std::expm1((a_ + 1.0) * lg) / (a_ + 1.0);
        double e2 = -std::expm1((a_ + 2.0) * lg) / (a_ + 2.0);
        m0 = e0 / delta;
        m1 = (e0 - e1) / (delta * delta);
        m2 = (e0 - 2.0 * e1 + e2) / (delta * delta * delta);
    }

    // Whether the series branch (and hence the power recurrence) applies.
    bool series(double delta) const { return delta * reach_ < kSeriesCutoff; }

private:
    double a_;
    double reach_;
    std::array<double, kSeriesTerms> coef_{};
    std::array<std::array<double, kSeriesTerms>, 3> scaled_{};
};

constexpr std::size_t kNearTerms = 56;
constexpr std::size_t kExactRows = 128;

// Integrals of the three Lagrange basis polynomials through x0, x1, x2
// against a measure with moments m_k = int x^k.
std::array<double, 3> lagrange3(double m0, double m1, double m2, double x0, double x1, double x2)
{
    auto basis = [&](double xk, double p, double q) { return (m2 - (p + q) * m1 + p * q * m0) / ((xk - p) * (xk - q)); };
    return {basis(x0, x1, x2), basis(x1, x0, x2), basis(x2, x0, x1)};
}

// Third interpolation node for interval [t_j, t_{j+1}]: the next node when
// it does not pass `last`, otherwise the previous one.
std::size_t extra_node(std::size_t j, std::size_t last) { return j + 2 <= last ? j + 2 : j - 1; }

// Row i for small t, integrating (t - tau)^{a-1} tau^{-w} exactly against the
// interpolant of d. Moments come from incomplete beta functions in x = tau/t.
double exact_row(const std::vector<double>& t, const std::vector<double>& d, double w, double a, std::size_t i)
{
    const double ti = t[i];
    const double scale = std::pow(ti, a - w);
    if (i == 1) return scale * d[1] * boost::math::beta(2.0 - w, a);
    double acc = 0.0;
    std::array<double, 3> prev{0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < i; ++j) {
        std::array<double, 3> cur{};
        for (std::size_t k = 0; k < 3; ++k) {
            double b = static_cast<double>(k) + 1.0 - w;
            cur[k] = j + 1 == i ? boost::math::beta(b, a) : boost::math::beta(b, a, t[j + 1] / ti);
        }
        const std::size_t e = extra_node(j, i);
        auto wts = lagrange3(cur[0] - prev[0], cur[1] - prev[1], cur[2] - prev[2], t[j] / ti, t[j + 1] / ti,
                             t[e] / ti);
        acc += scale * (wts[0] * d[j] + wts[1] * d[j + 1] + wts[2] * d[e]);
        prev = cur;
    }
    return acc;
}

// J^a [tau^{-w} d(tau)] at every node, d interpolated piecewise quadratically
// with d(0) = 0.
//
// On [0, t/2] the kernel is expanded as (t - tau)^{a-1} = t^{a-1} sum_p b_p
// (tau/t)^p, so each row only needs prefix sums over intervals of the
// moments of tau^{p-w} against the interpolant (kept in long double to
// survive t^{-p}). The remaining intervals integrate the kernel exactly
// against the interpolated tau^{-w} d. Rows close to t = 0 use exact
// incomplete-beta moments throughout.
std::vector<double> weighted_product_integrate(const std::vector<double>& t, const std::vector<double>& d,
                                               double w, double a)
{
    using ld = long double;
    const std::size_t n = t.size();
    std::vector<double> out(n, 0.0);

    std::array<double, kNearTerms> binom{};
    binom[0] = 1.0;
    for (std::size_t k = 1; k < kNearTerms; ++k) {
        binom[k] = binom[k - 1] * (static_cast<double>(k) - a) / static_cast<double>(k);
    }

    // near_sum[J][p] = int_0^{t_J} tau^{p-w} (interpolant of d) dtau.
    std::vector<std::array<ld, kNearTerms>> near_sum(n > kExactRows ? n : 0);
    if (!near_sum.empty()) {
        std::vector<KernelMoments> moments;
        moments.reserve(kNearTerms);
        for (std::size_t p = 0; p < kNearTerms; ++p) moments.emplace_back(static_cast<double>(p) + 1.0 - w);
        std::array<ld, kNearTerms> acc{};
        near_sum[0] = acc;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double right = t[j + 1];
            const double dt = right - t[j];
            const double delta = dt / right;
            const std::size_t e = j + 2 < n ? j + 2 : j - 1;
            // phi = (t_{j+1} - tau) / dt runs from 1 at node j to 0 at node j+1.
            const double phi_e = (right - t[e]) / dt;
            ld scale = std::pow(static_cast<ld>(right), static_cast<ld>(1.0 - w)) * static_cast<ld>(delta);
            for (std::size_t p = 0; p < kNearTerms; ++p) {
                double m0, m1, m2;
                moments[p].power_moments(delta, m0, m1, m2);
                auto wts = lagrange3(m0, m1, m2, 1.0, 0.0, phi_e);
                acc[p] += scale * static_cast<ld>(wts[0] * d[j] + wts[1] * d[j + 1] + wts[2] * d[e]);
                scale *= right;
            }
            near_sum[j + 1] = acc;
        }
    }

    std::vector<double> r(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) r[k] = w == 0.0 ? d[k] : std::pow(t[k], -w) * d[k];

    // Quadratic basis through theta = 0, 1, th on interval j, where
    // th = (t_{j+2} - t_j) / dt; stores th and the three inverse denominators.
    struct Basis {
        double th, inv0, inv1, inv2;
    };
    auto make_basis = [](double th) { return Basis{th, 1.0 / th, 1.0 / (1.0 - th), 1.0 / (th * (th - 1.0))}; };
    std::vector<Basis> basis_next(n);
    for (std::size_t j = 0; j + 2 < n; ++j) basis_next[j] = make_basis((t[j + 2] - t[j]) / (t[j + 1] - t[j]));

    const KernelMoments kernel(a);
    const double inv_gamma = 1.0 / std::tgamma(a);
    parallel_for(n - 1, [&](std::size_t idx) {
        const std::size_t i = idx + 1;
        const double ti = t[i];
        if (i < kExactRows) {
            out[i] = exact_row(t, d, w, a, i) * inv_gamma;
            return;
        }

        // Intervals below node `j` lie in [0, t/2].
        std::size_t j = static_cast<std::size_t>(
            std::upper_bound(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(i), 0.5 * ti) - t.begin()) - 1;
        const ld inv_t = 1.0L / static_cast<ld>(ti);
        ld near = 0.0L, power = 1.0L;
        for (std::size_t p = 0; p < kNearTerms; ++p) {
            near += binom[p] * power * near_sum[j][p];
            power *= inv_t;
        }
        double acc = static_cast<double>(near * std::pow(static_cast<ld>(ti), static_cast<ld>(a - 1.0)));

        double s0 = ti - t[j];
        double pw = std::pow(s0, a);
        for (; j < i; ++j) {
            const double dt = t[j + 1] - t[j];
            const double delta = dt / s0;
            double m0, m1, m2;
            kernel.power_moments(delta, m0, m1, m2);
            const std::size_t e = extra_node(j, i);
            // theta = (tau - t_j) / dt runs from 0 at node j to 1 at node j+1.
            const Basis bs = e > j ? basis_next[j] : make_basis((t[e] - t[j]) / dt);
            const double w0 = (m2 - (1.0 + bs.th) * m1 + bs.th * m0) * bs.inv0;
            const double w1 = (m2 - bs.th * m1) * bs.inv1;
            const double w2 = (m2 - m1) * bs.inv2;
            acc += pw * delta * (w0 * r[j] + w1 * r[j + 1] + w2 * r[e]);
            // s1^a = s0^a (1 - a * delta * m0); fall back to pow when the
            // factor would lose digits.
            const double s1 = ti - t[j + 1];
            pw = kernel.series(delta) ? pw * (1.0 - a * delta * m0) : std::pow(s1, a);
            s0 = s1;
        }
        out[i] = acc * inv_gamma;
    });
    return out;
}

// Weighted samples at or above weight 1 can only be integrated when they
// vanish at t = 0; shift the weight down by whole units until it is below 1.
// A value at t = 0 that is only extrapolation noise is treated as zero.
TimeGridFn lower_weight(const TimeGridFn& g)
{
    if (g.weight < 1.0 - 1e-12) return g;
    double scale = 0.0;
    for (double v : g.values) scale = std::max(scale, std::abs(v));
    if (std::abs(g.values[0]) > 1e-6 * scale) {
        throw DomainError("integrand behaves like t^" + std::to_string(-g.weight) +
                          " at t = 0 and is not integrable");
    }
    TimeGridFn zeroed = g;
    zeroed.values[0] = 0.0;
    return zeroed.reweighted(g.weight - std::floor(g.weight + 1e-12));
}

void check_input(const TimeGridFn& g, std::size_t min_nodes)
{
    validate_grid(g.t, min_nodes);
    if (g.values.size() != g.t.size()) throw GridError("sample count does not match the time grid");
    for (double v : g.values) {
        if (!std::isfinite(v)) throw DomainError("non-finite sample in grid function");
    }
}

TimeGridFn integrate_any(const TimeGridFn& input, double a)
{
    if (a == 0.0) return input;
    TimeGridFn g = lower_weight(input);
    const double w = g.weight;
    const std::size_t n = g.size();
    const double h0 = g.values[0];
    const double lead = h0 * std::tgamma(1.0 - w) / std::tgamma(1.0 + a - w);

    std::vector<double> diff(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) diff[j] = g.values[j] - h0;
    std::vector<double> integral = weighted_product_integrate(g.t, diff, w, a);

    TimeGridFn out{g.t, std::vector<double>(n), w - a};
    out.values[0] = lead;
    for (std::size_t i = 1; i < n; ++i) out.values[i] = lead + std::pow(g.t[i], w - a) * integral[i];
    return out;
}

// First-derivative weights at x[at] from the given stencil nodes.
template <std::size_t K>
std::array<double, K> derivative_weights(const double* x, std::size_t at)
{
    std::array<double, K> w{};
    const double x0 = x[at];
    for (std::size_t k = 0; k < K; ++k) {
        double denom = 1.0;
        for (std::size_t l = 0; l < K; ++l) {
            if (l != k) denom *= x[k] - x[l];
        }
        double num = 0.0;
        for (std::size_t m = 0; m < K; ++m) {
            if (m == k) continue;
            double prod = 1.0;
            for (std::size_t l = 0; l < K; ++l) {
                if (l != k && l != m) prod *= x0 - x[l];
            }
            num += prod;
        }
        w[k] = num / denom;
    }
    return w;
}

template <std::size_t K>
double stencil_derivative(const std::vector<double>& t, const std::vector<double>& v, std::size_t i)
{
    const std::size_t n = t.size();
    std::size_t start = i >= K / 2 ? i - K / 2 : 0;
    if (start + K > n) start = n - K;
    auto w = derivative_weights<K>(t.data() + start, i - start);
    double d = 0.0;
    for (std::size_t k = 0; k < K; ++k) d += w[k] * v[start + k];
    return d;
}

}  // namespace

TimeGridFn rl_integral(const TimeGridFn& g, double xi)
{
    if (!(xi > 0.0 && xi <= 1.0)) throw DomainError("integral order must lie in (0, 1]");
    check_input(g, 2);
    return integrate_any(g, xi);
}

TimeGridFn rl_derivative(const TimeGridFn& g, double xi, double resolution_tol)
{
    if (!(xi > 0.0 && xi <= 1.0)) throw DomainError("derivative order must lie in (0, 1]");
    check_input(g, 5);
    TimeGridFn f = integrate_any(g, 1.0 - xi);
    const std::size_t n = f.size();
    const double wf = f.weight;

    std::vector<double> deriv(n);
    for (std::size_t i = 1; i < n; ++i) deriv[i] = stencil_derivative<5>(f.t, f.values, i);

    if (std::isfinite(resolution_tol)) {
        const double t_min = 0.1 * f.t.back();
        double gap = 0.0, scale = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            if (f.t[i] < t_min) continue;
            double coarse = stencil_derivative<3>(f.t, f.values, i);
            gap = std::max(gap, std::abs(coarse - deriv[i]));
            scale = std::max({scale, std::abs(deriv[i]), std::abs(f.values[i]) / f.t.back()});
        }
        if (scale > 0.0 && gap > resolution_tol * scale) {
            throw ResolutionError("grid too coarse for derivative: estimated relative error " +
                                  std::to_string(gap / scale) + " exceeds " + std::to_string(resolution_tol));
        }
    }

    TimeGridFn out{f.t, std::vector<double>(n), wf + 1.0};
    out.values[0] = -wf * f.values[0];
    for (std::size_t i = 1; i < n; ++i) out.values[i] = f.t[i] * deriv[i] - wf * f.values[i];
    return out;
}

TimeGridFn dn_partial(const TimeGridFn& g, const FractionalSchedule& sched, std::size_t n)
{
    if (n > sched.m()) throw IndexError("partial operator index exceeds m");
    check_input(g, 5);
    TimeGridFn cur = g;
    for (std::size_t j = 0; j <= n; ++j) {
        try {
            if (j < n) {
                cur = rl_derivative(cur, sched.zeta(j));
            } else {
                cur = integrate_any(cur, 1.0 - sched.zeta(j));
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError("stage " + std::to_string(j) + ": " + e.what(), static_cast<int>(j));
        }
    }
    return cur;
}

TimeGridFn dn_apply(const TimeGridFn& g, const FractionalSchedule& sched)
{
    return dn_partial(g, sched, sched.m());
}

}  // namespace fracdiff
