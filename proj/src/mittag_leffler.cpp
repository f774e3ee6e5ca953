#include "fracdiff/mittag_leffler.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <quadmath.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/math/special_functions/cos_pi.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/time_grid.hpp"

namespace fracdiff {

namespace {

using ld = long double;

constexpr ld kEpsLd = LDBL_EPSILON;
constexpr double kPi = 3.141592653589793238462643383279502884;

struct Attempt {
    double value = 0.0;
    double err = std::numeric_limits<double>::infinity();
    EvalMethod method = EvalMethod::taylor;
};

bool is_nonpositive_integer(ld x) { return x <= 0 && x == std::floor(x); }

// log|1/Gamma(x)| and sign of 1/Gamma(x); nullopt at the poles.
std::optional<std::pair<ld, int>> log_rgamma(ld x)
{
    if (is_nonpositive_integer(x)) return std::nullopt;
    int sign = 1;
    ld lg = ::lgammal_r(x, &sign);
    return std::make_pair(-lg, sign);
}

bool accepted(const Attempt& a, double tol)
{
    return std::isfinite(a.value) && a.err <= tol * std::max(1.0, std::fabs(a.value));
}

Attempt taylor_branch(double beta, double zeta, double z, double tol)
{
    Attempt out;
    out.method = EvalMethod::taylor;
    const ld lz = std::log(std::fabs(static_cast<ld>(z)));
    ld sum = 0, comp = 0, round = 0;
    ld tail = std::numeric_limits<ld>::infinity();
    constexpr int kMaxTerms = 20000;
    for (int k = 0; k < kMaxTerms; ++k) {
        ld term = 0;
        ld arg = static_cast<ld>(beta) * k + zeta;
        if (auto lr = log_rgamma(arg)) {
            ld lm = k * lz + lr->first;
            if (lm > 11000) return out;
            term = lr->second * std::exp(lm);
            if (z < 0 && (k & 1)) term = -term;
            round += std::fabs(term) * kEpsLd * (4 + std::fabs(lm));
        }
        // Neumaier compensated accumulation.
        ld s = sum + term;
        comp += std::fabs(sum) >= std::fabs(term) ? (sum - s) + term : (term - s) + sum;
        sum = s;
        if (round > tol * std::max<ld>(1, std::fabs(sum + comp)) && round > 1e300L) return out;
        if (round > 1e4L * tol * std::max<ld>(1, std::fabs(sum + comp))) return out;

        // Tail bound once the term ratio is below one.
        ld next_arg = arg + beta;
        auto ln = log_rgamma(next_arg);
        if (!ln) continue;
        ld next_lm = (k + 1) * lz + ln->first;
        ld next_mag = std::exp(next_lm);
        ld ratio_arg = next_arg + beta;
        auto ln2 = log_rgamma(ratio_arg);
        if (!ln2 || arg <= 1) continue;
        ld ratio = std::exp(lz + ln2->first - ln->first);
        if (ratio < 0.9L) {
            tail = next_mag / (1 - ratio);
            ld target = std::max<ld>(1e-6L * tol, kEpsLd * std::fabs(sum + comp));
            if (tail <= target) break;
        }
    }
    ld total = sum + comp;
    out.value = static_cast<double>(total);
    out.err = static_cast<double>(round + tail) + std::fabs(out.value) * DBL_EPSILON;
    return out;
}

// Reciprocal gamma coefficients 1/Gamma(beta k + zeta) in quad precision,
// cached per thread for the most recent (beta, zeta) pairs.
class QuadCoefficients {
public:
    const std::vector<__float128>& get(double beta, double zeta, std::size_t count)
    {
        Entry* hit = nullptr;
        for (auto& e : entries_) {
            if (e.beta == beta && e.zeta == zeta) hit = &e;
        }
        if (!hit) {
            if (entries_.size() == kSlots) entries_.erase(entries_.begin());
            entries_.push_back({beta, zeta, {}});
            hit = &entries_.back();
        }
        auto& c = hit->coef;
        for (std::size_t k = c.size(); k < count; ++k) {
            __float128 arg = static_cast<__float128>(beta) * k + zeta;
            if (arg <= 0 && arg == floorq(arg)) {
                c.push_back(0);
                continue;
            }
            int sign = 1;
            __float128 lg = lgammaq(arg);
            if (arg < 0 && static_cast<long long>(floorq(arg)) % 2 != 0) sign = -1;
            c.push_back(sign * expq(-lg));
        }
        return c;
    }

private:
    static constexpr std::size_t kSlots = 8;
    struct Entry {
        double beta, zeta;
        std::vector<__float128> coef;
    };
    std::vector<Entry> entries_;
};

// Taylor series in quad precision for moderate negative arguments where the
// alternating terms cancel beyond long double reach.
Attempt quad_taylor_branch(double beta, double zeta, double x)
{
    thread_local QuadCoefficients cache;
    Attempt out;
    out.method = EvalMethod::taylor;
    const double peak = std::pow(x, 1.0 / beta);
    const std::size_t count = static_cast<std::size_t>(3.0 * peak / beta + 60.0 / beta + 40.0);
    const auto& c = cache.get(beta, zeta, count);
    const __float128 qx = x;
    __float128 sum = 0, abs_sum = 0, power = 1, last = 0;
    for (std::size_t k = 0; k < count; ++k) {
        __float128 term = power * c[k];
        if (k & 1) term = -term;
        sum += term;
        abs_sum += fabsq(term);
        last = fabsq(term);
        power *= qx;
    }
    // Terms decay faster than geometrically past the peak; twice the last
    // magnitude bounds the remainder.
    const __float128 err = abs_sum * FLT128_EPSILON * (16 + peak) + 2 * last;
    out.value = static_cast<double>(sum);
    out.err = static_cast<double>(err) + std::fabs(out.value) * DBL_EPSILON;
    return out;
}

Attempt asymptotic_branch(double beta, double zeta, double z)
{
    Attempt out;
    out.method = EvalMethod::asymptotic;
    const ld x = -static_cast<ld>(z);
    const ld lx = std::log(x);

    ld expo = 0, expo_err = 0;
    if (beta >= 1.0) {
        using cld = std::complex<ld>;
        ld r = std::exp(lx / beta);
        ld theta = static_cast<ld>(kPi) / beta;
        cld logw(lx / beta, theta);
        cld val = std::exp((1 - static_cast<ld>(zeta)) * logw + cld(r * std::cos(theta), r * std::sin(theta)));
        ld factor = (beta == 1.0 ? 1.0L : 2.0L) / beta;
        expo = factor * val.real();
        expo_err = factor * std::abs(val) * kEpsLd * (10 + r);
    }

    constexpr int kMaxTerms = 400;
    ld sum = 0, abs_sum = 0;
    // Truncation is decided on the envelope x^{-k} |Gamma(1-a)| / pi rather
    // than on the terms themselves: the sin(pi a) factor makes isolated terms
    // tiny near the poles of Gamma without the series having converged.
    // The most recent term is held back; once the envelope grows, the held
    // envelope bounds the remainder.
    ld held = 0, held_mag = 0;
    bool have_held = false;
    ld err_trunc = 0;
    bool stopped = false;
    for (int k = 1; k <= kMaxTerms; ++k) {
        ld a = static_cast<ld>(zeta) - static_cast<ld>(beta) * k;
        ld lenv;
        ld term = 0;
        if (a >= 0.5L) {
            auto lr = log_rgamma(a);
            lenv = lr->first;
            term = lr->second * std::exp(-k * lx + lenv);
        } else {
            int sg = 1;
            ld lg = ::lgammal_r(1 - a, &sg);
            lenv = lg - std::log(static_cast<ld>(kPi));
            ld s = is_nonpositive_integer(a) ? 0 : boost::math::sin_pi(a);
            term = sg * s * std::exp(-k * lx + lenv);
        }
        ld env = std::exp(-k * lx + lenv);
        if (!(k & 1)) term = -term;
        if (have_held && env > held_mag) {
            err_trunc = 4 * held_mag;
            stopped = true;
            break;
        }
        if (have_held) sum += held;
        held = term;
        held_mag = env;
        have_held = true;
        abs_sum += std::fabs(term);
        if (env < 1e-40L) {
            err_trunc = 4 * env;
            stopped = true;
            break;
        }
    }
    if (!stopped && have_held) err_trunc = held_mag;
    ld total = expo + sum;
    out.value = static_cast<double>(total);
    out.err = static_cast<double>(err_trunc + expo_err + abs_sum * kEpsLd * 8) +
              std::fabs(out.value) * DBL_EPSILON;
    return out;
}

// Collapsed inverse-Laplace contour for 0 < beta < 1 on the negative axis:
// E_{b,z}(-x) = (1/pi) int_0^inf e^{-r} r^{b-z}
//                 [r^b sin(pi z) + x sin(pi(z-b))] / (r^{2b} + 2 x r^b cos(pi b) + x^2) dr
// valid for zeta < 1 + beta; zeta = 1 + beta picks up the residue 1/x at the
// origin, larger zeta is reduced by E_{b,z}(w) = 1/Gamma(z) + w E_{b,z+b}(w).
Attempt integral_branch(double beta, double zeta, double x)
{
    constexpr double kEdge = 1e-12;
    if (zeta > 1.0 + beta + kEdge) {
        Attempt inner = integral_branch(beta, zeta - beta, x);
        Attempt out;
        out.method = EvalMethod::integral;
        out.value = (inner.value - rgamma(zeta - beta)) / (-x);
        out.err = inner.err / x + std::fabs(out.value) * DBL_EPSILON;
        return out;
    }
    const bool at_edge = std::fabs(zeta - (1.0 + beta)) <= kEdge;
    const double s1 = boost::math::sin_pi(zeta);
    const double s2 = at_edge ? 0.0 : boost::math::sin_pi(zeta - beta);
    const double c = boost::math::cos_pi(beta);
    const double expo = beta - zeta;
    auto f = [&](double r) -> double {
        if (r <= 0.0) return 0.0;
        double rb = std::pow(r, beta);
        double den = rb * rb + 2.0 * x * rb * c + x * x;
        return std::exp(-r) * std::pow(r, expo) * (rb * s1 + x * s2) / (kPi * den);
    };
    double rstar = std::min(std::pow(x, 1.0 / beta), 40.0);
    double e1 = 0, e2 = 0, l1 = 0, l2 = 0;
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    double i1 = ts.integrate(f, 0.0, rstar, 1e-13, &e1, &l1);
    double i2 = es.integrate(f, rstar, std::numeric_limits<double>::infinity(), 1e-13, &e2, &l2);
    Attempt out;
    out.method = EvalMethod::integral;
    out.value = i1 + i2 + (at_edge ? 1.0 / x : 0.0);
    out.err = e1 + e2 + (l1 + l2) * 4 * DBL_EPSILON + std::fabs(out.value) * DBL_EPSILON;
    return out;
}

// Piecewise Chebyshev interpolant of y -> E_{beta,zeta}(-lambda y) on
// [0, y_max], with dyadic panels toward y = 0. Only used for beta <= 1, where
// the function is completely monotone and each panel is resolved to rounding
// level by a fixed degree.
class DecayTable {
public:
    static constexpr int kDegree = 24;

    DecayTable(double beta, double zeta, double lambda, double y_max, double tol) : y_max_(y_max)
    {
        levels_ = 0;
        while (levels_ < 60 && lambda * std::ldexp(y_max, -levels_) > 1.0) ++levels_;
        nodes_.resize(kDegree + 1);
        for (int j = 0; j <= kDegree; ++j) nodes_[j] = std::cos(kPi * j / kDegree);
        values_.resize(static_cast<std::size_t>(levels_ + 1) * (kDegree + 1));
        for (int p = 0; p <= levels_; ++p) {
            auto [lo, hi] = panel(p);
            for (int j = 0; j <= kDegree; ++j) {
                double y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes_[j];
                values_[static_cast<std::size_t>(p) * (kDegree + 1) + j] = ml_eval({beta, zeta, -lambda * y}, tol).value;
            }
        }
    }

    double operator()(double y) const
    {
        int p = 0;
        if (y > std::ldexp(y_max_, -levels_)) {
            int e;
            std::frexp(y / y_max_, &e);  // y / y_max in [2^(e-1), 2^e)
            p = std::clamp(levels_ + e, 1, levels_);
        }
        auto [lo, hi] = panel(p);
        const double x = (2.0 * y - lo - hi) / (hi - lo);
        const double* v = values_.data() + static_cast<std::size_t>(p) * (kDegree + 1);
        double num = 0.0, den = 0.0;
        for (int j = 0; j <= kDegree; ++j) {
            double d = x - nodes_[j];
            if (d == 0.0) return v[j];
            double w = ((j & 1) ? -1.0 : 1.0) / d;
            if (j == 0 || j == kDegree) w *= 0.5;
            num += w * v[j];
            den += w;
        }
        return num / den;
    }

private:
    // Panel 0 is [0, y_max 2^-L]; panel p >= 1 is [y_max 2^(p-1-L), y_max 2^(p-L)].
    std::pair<double, double> panel(int p) const
    {
        if (p == 0) return {0.0, std::ldexp(y_max_, -levels_)};
        return {std::ldexp(y_max_, p - 1 - levels_), std::ldexp(y_max_, p - levels_)};
    }

    double y_max_;
    int levels_ = 0;
    std::vector<double> nodes_;
    std::vector<double> values_;
};

void validate_tol(double tol)
{
    if (!(tol >= 1e-14 && tol <= 1e-6)) {
        throw DomainError("tolerance must lie in [1e-14, 1e-6], got " + std::to_string(tol));
    }
}

}  // namespace

const char* to_string(EvalMethod m) noexcept
{
    switch (m) {
        case EvalMethod::taylor: return "taylor";
        case EvalMethod::asymptotic: return "asymptotic";
        case EvalMethod::integral: return "integral";
    }
    return "unknown";
}

double rgamma(double x)
{
    auto lr = log_rgamma(x);
    if (!lr) return 0.0;
    return static_cast<double>(lr->second * std::exp(lr->first));
}

EvalReport ml_eval(const MLParams& p, double tol)
{
    validate_tol(tol);
    if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw DomainError("Mittag-Leffler order beta must be > 0");
    if (!std::isfinite(p.zeta) || !std::isfinite(p.z)) throw DomainError("non-finite Mittag-Leffler argument");
    if (p.z == 0.0) return {rgamma(p.zeta), 0.0, EvalMethod::taylor};

    Attempt best;
    auto consider = [&](const Attempt& a) {
        if (std::isfinite(a.value) && a.err < best.err) best = a;
        return accepted(a, tol);
    };
    const bool negative = p.z < 0.0;
    const double x = -p.z;
    auto try_taylor = [&] {
        // Hopeless when the peak term exceeds ~e^{60}.
        if (negative && std::pow(x, 1.0 / p.beta) > 60.0) return false;
        return consider(taylor_branch(p.beta, p.zeta, p.z, tol));
    };
    auto try_asymptotic = [&] { return negative && p.beta < 2.0 && consider(asymptotic_branch(p.beta, p.zeta, p.z)); };
    auto try_integral = [&] { return negative && p.beta < 1.0 && consider(integral_branch(p.beta, p.zeta, x)); };
    auto try_quad = [&] {
        return negative && std::pow(x, 1.0 / p.beta) <= 45.0 && consider(quad_taylor_branch(p.beta, p.zeta, x));
    };

    bool done = p.z < -5.0 ? (try_asymptotic() || try_taylor() || try_integral() || try_quad())
                           : (try_taylor() || try_asymptotic() || try_integral() || try_quad());
    if (!done) {
        throw NonConvergent("Mittag-Leffler evaluation did not reach tolerance (beta=" + std::to_string(p.beta) +
                                ", zeta=" + std::to_string(p.zeta) + ", z=" + std::to_string(p.z) + ")",
                            best.value, best.err);
    }
    return {best.value, best.err, best.method};
}

EvalReport ml_type_eval(const MLTypeParams& p, double tol)
{
    validate_tol(tol);
    if (!(p.beta > 0.0)) throw DomainError("Mittag-Leffler type function needs beta > 0");
    if (!(p.lambda > 0.0)) throw DomainError("Mittag-Leffler type function needs lambda > 0");
    if (!(p.t >= 0.0) || !std::isfinite(p.t)) throw DomainError("Mittag-Leffler type function needs t >= 0");
    if (p.t == 0.0) {
        if (p.zeta < 1.0) throw SingularAtZero("e_{beta,zeta}(t; lambda) is singular at t = 0 for zeta < 1");
        return {p.zeta == 1.0 ? 1.0 : 0.0, 0.0, EvalMethod::taylor};
    }
    double pre = std::pow(p.t, p.zeta - 1.0);
    double inner_tol = std::clamp(tol / std::max(1.0, pre), 1e-14, 1e-6);
    EvalReport r = ml_eval({p.beta, p.zeta, -p.lambda * std::pow(p.t, p.beta)}, inner_tol);
    return {pre * r.value, pre * r.abs_error_estimate, r.method};
}

std::vector<double> ml_decay_samples(double beta, double zeta, double lambda, std::span<const double> t, double tol)
{
    validate_grid(t, 1);
    if (!(beta > 0.0)) throw DomainError("Mittag-Leffler order must be > 0");
    std::vector<double> out(t.size());
    if (beta <= 1.0 && lambda > 0.0 && t.size() > 256) {
        const double y_max = std::pow(t.back(), beta);
        DecayTable table(beta, zeta, lambda, y_max, tol);
        for (std::size_t i = 0; i < t.size(); ++i) out[i] = table(std::min(std::pow(t[i], beta), y_max));
        return out;
    }
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = ml_eval({beta, zeta, -lambda * std::pow(t[i], beta)}, tol).value;
    return out;
}

MLBoundSample check_ml_bound(const MLParams& p)
{
    if (!(p.beta > 0.0 && p.beta < 2.0)) throw DomainError("Mittag-Leffler bound requires 0 < beta < 2");
    if (p.z > 0.0) throw DomainError("Mittag-Leffler bound is checked on the negative real axis only");
    double v = ml_eval(p).value;
    return {std::fabs(v), 1.0 / (1.0 + std::fabs(p.z))};
}

double fit_ml_bound_constant(double beta, double zeta, std::span<const double> z)
{
    double c = 0.0;
    for (double zi : z) {
        auto s = check_ml_bound({beta, zeta, zi});
        c = std::max(c, s.lhs / s.rhs_shape);
    }
    return c;
}

MLConvolution::MLConvolution(double beta, double lambda, std::span<const double> t_grid, double tol)
    : t_(t_grid.begin(), t_grid.end())
{
    validate_grid(t_);
    if (!(beta > 0.0)) throw DomainError("convolution kernel order must be > 0");
    if (!(lambda > 0.0)) throw DomainError("convolution kernel needs lambda > 0");

    const std::size_t n = t_.size();
    const double h = t_[1];
    uniform_ = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(t_[i] - static_cast<double>(i) * h) > 1e-12 * t_.back()) {
            uniform_ = false;
            break;
        }
    }
    auto a1 = [&](double s) { return s <= 0.0 ? 0.0 : ml_type_eval({beta, beta + 1.0, s, lambda}, tol).value; };
    auto a2 = [&](double s) { return s <= 0.0 ? 0.0 : ml_type_eval({beta, beta + 2.0, s, lambda}, tol).value; };

    if (uniform_) {
        std::vector<double> A1(n), A2(n);
        for (std::size_t m = 0; m < n; ++m) {
            A1[m] = a1(static_cast<double>(m) * h);
            A2[m] = a2(static_cast<double>(m) * h);
        }
        left_.resize(n - 1);
        right_.resize(n - 1);
        for (std::size_t m = 0; m + 1 < n; ++m) {
            double P = A1[m + 1] - A1[m];
            double Q = A2[m + 1] - A2[m] - h * A1[m];
            left_[m] = P - Q / h;
            right_[m] = Q / h;
        }
        return;
    }

    std::optional<DecayTable> p1, p2;
    if (beta <= 1.0) {
        const double y_max = std::pow(t_.back(), beta);
        p1.emplace(beta, beta + 1.0, lambda, y_max, tol);
        p2.emplace(beta, beta + 2.0, lambda, y_max, tol);
    }

    dense_.assign(n * (n + 1) / 2, 0.0);
    std::vector<double> A1(n), A2(n);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double s = t_[i] - t_[j];
            if (s <= 0.0) {
                A1[j] = A2[j] = 0.0;
            } else if (p1) {
                const double y = std::pow(s, beta);
                A1[j] = y * (*p1)(y);
                A2[j] = s * y * (*p2)(y);
            } else {
                A1[j] = a1(s);
                A2[j] = a2(s);
            }
        }
        double* row = dense_.data() + i * (i + 1) / 2;
        for (std::size_t j = 0; j < i; ++j) {
            // s runs from s1 = t_i - t_{j+1} to s0 = t_i - t_j.
            double d = t_[j + 1] - t_[j];
            double P = A1[j] - A1[j + 1];
            double Q = A2[j] - A2[j + 1] - d * A1[j + 1];
            row[j] += P - Q / d;
            row[j + 1] += Q / d;
        }
    }
}

double MLConvolution::weight(std::size_t i, std::size_t j) const
{
    if (j > i || i == 0) return 0.0;
    if (!uniform_) return dense_[i * (i + 1) / 2 + j];
    if (j == 0) return left_[i - 1];
    if (j == i) return right_[0];
    return left_[i - j - 1] + right_[i - j];
}

std::vector<double> MLConvolution::apply(std::span<const double> g) const
{
    const std::size_t n = t_.size();
    if (g.size() != n) throw GridError("convolution data length does not match the grid");
    std::vector<double> out(n, 0.0);
    if (uniform_) {
        for (std::size_t i = 1; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < i; ++j) s += left_[i - j - 1] * g[j] + right_[i - j - 1] * g[j + 1];
            out[i] = s;
        }
        return out;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double* row = dense_.data() + i * (i + 1) / 2;
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += row[j] * g[j];
        out[i] = s;
    }
    return out;
}

std::vector<double> conv_ml(std::span<const double> g, double beta, std::span<const double> t_grid,
                            double lambda, double tol)
{
    if (g.size() != t_grid.size()) throw GridError("convolution data length does not match the grid");
    return MLConvolution(beta, lambda, t_grid, tol).apply(g);
}

}  // namespace fracdiff
