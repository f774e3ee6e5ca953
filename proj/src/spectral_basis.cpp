#include "fracdiff/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "fracdiff/errors.hpp"

namespace fracdiff {

namespace {

const double kNorm = std::sqrt(2.0 / std::numbers::pi);
constexpr double kBoundaryTol = 1e-10;

template <class F>
double composite_gauss(F&& f, std::size_t panels)
{
    using Rule = boost::math::quadrature::gauss<double, 8>;
    const double h = std::numbers::pi / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        double a = h * static_cast<double>(p);
        total += Rule::integrate(f, a, a + h);
    }
    return total;
}

std::size_t panels_for(const SpectralBasis& basis) { return 4 * basis.k_max(); }

void require_index(Mode mode)
{
    if (mode.family != Family::first && mode.k < 1) {
        throw IndexError("odd and even eigenfunction indices start at k = 1");
    }
}

}  // namespace

std::size_t Mode::frequency() const
{
    switch (family) {
        case Family::first: return 1;
        case Family::odd: return 2 * k + 1;
        case Family::even: return 2 * k;
    }
    return 0;
}

SpectralBasis::SpectralBasis(double epsilon, std::size_t k_max) : epsilon_(epsilon), k_max_(k_max)
{
    if (!(std::abs(epsilon) < 1.0 - 1e-8)) {
        throw DomainError("involution coupling must satisfy |epsilon| < 1, got " + std::to_string(epsilon));
    }
    if (k_max < 1) throw DomainError("spectral truncation needs k_max >= 1");
}

double SpectralBasis::eigenvalue(Mode mode) const
{
    require_index(mode);
    const double f = static_cast<double>(mode.frequency());
    return (mode.family == Family::even ? 1.0 + epsilon_ : 1.0 - epsilon_) * f * f;
}

double SpectralBasis::eigenfunction(Mode mode, double x) const
{
    require_index(mode);
    return kNorm * std::sin(static_cast<double>(mode.frequency()) * x);
}

double SpectralBasis::eigenfunction_d2(Mode mode, double x) const
{
    const double f = static_cast<double>(mode.frequency());
    return -f * f * eigenfunction(mode, x);
}

std::vector<Mode> SpectralBasis::modes() const
{
    std::vector<Mode> out{Mode::first()};
    for (std::size_t k = 1; k <= k_max_; ++k) {
        out.push_back(Mode::odd(k));
        out.push_back(Mode::even(k));
    }
    return out;
}

SineSeries SineSeries::zeros(std::size_t k_max)
{
    return {0.0, std::vector<double>(k_max, 0.0), std::vector<double>(k_max, 0.0)};
}

double& SineSeries::at(Mode mode)
{
    require_index(mode);
    switch (mode.family) {
        case Family::first: return c1;
        case Family::odd: return odd.at(mode.k - 1);
        case Family::even: return even.at(mode.k - 1);
    }
    return c1;
}

double SineSeries::at(Mode mode) const { return const_cast<SineSeries&>(*this).at(mode); }

double SineSeries::norm() const
{
    double s = c1 * c1;
    for (double v : odd) s += v * v;
    for (double v : even) s += v * v;
    return std::sqrt(s);
}

SineSeries linear_combination(double a, const SineSeries& f, double b, const SineSeries& g)
{
    if (f.odd.size() != g.odd.size() || f.even.size() != g.even.size()) {
        throw DomainError("sine series truncations differ");
    }
    SineSeries out = SineSeries::zeros(f.k_max());
    out.c1 = a * f.c1 + b * g.c1;
    for (std::size_t k = 0; k < f.k_max(); ++k) {
        out.odd[k] = a * f.odd[k] + b * g.odd[k];
        out.even[k] = a * f.even[k] + b * g.even[k];
    }
    return out;
}

std::vector<double> space_grid(std::size_t intervals)
{
    if (intervals < 2) throw GridError("space grid needs at least two intervals");
    std::vector<double> x(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        x[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(intervals);
    }
    x.back() = std::numbers::pi;
    return x;
}

SpaceGridFn sample_space(std::span<const double> x, const std::function<double(double)>& g)
{
    SpaceGridFn out{{x.begin(), x.end()}, std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = g(x[i]);
    return out;
}

double eigenfunction_residual(const SpectralBasis& basis, Mode mode, std::span<const double> x)
{
    const double lambda = basis.eigenvalue(mode);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        double r = basis.eigenfunction_d2(mode, x[i]) - basis.epsilon() * basis.eigenfunction_d2(mode, std::numbers::pi - x[i]) +
                   lambda * basis.eigenfunction(mode, x[i]);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

SineSeries project(const SpaceGridFn& g, const SpectralBasis& basis)
{
    const std::size_t n = g.x.size();
    if (g.values.size() != n) throw GridError("space sample count does not match the grid");
    if (n < 3 || g.x.front() != 0.0 || std::abs(g.x.back() - std::numbers::pi) > 1e-12) {
        throw GridError("space grid must run from 0 to pi");
    }
    const std::size_t intervals = n - 1;
    const double h = std::numbers::pi / static_cast<double>(intervals);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(g.x[i] - h * static_cast<double>(i)) > 1e-12) throw GridError("space grid must be uniform");
    }
    if (intervals <= 2 * basis.k_max() + 1) {
        throw GridError("space grid too coarse for " + std::to_string(basis.k_max()) + " modes per family");
    }
    if (std::abs(g.values.front()) > kBoundaryTol || std::abs(g.values.back()) > kBoundaryTol) {
        throw BoundaryError("projected function must vanish at x = 0 and x = pi");
    }

    SineSeries out = SineSeries::zeros(basis.k_max());
    for (Mode mode : basis.modes()) {
        // The boundary samples carry zero weight in the sine sum.
        const double freq = static_cast<double>(mode.frequency());
        double s = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) s += g.values[i] * std::sin(freq * g.x[i]);
        out.at(mode) = kNorm * h * s;
    }
    return out;
}

SineSeries project(const std::function<double(double)>& g, const SpectralBasis& basis)
{
    SineSeries out = SineSeries::zeros(basis.k_max());
    const std::size_t panels = panels_for(basis);
    for (Mode mode : basis.modes()) {
        out.at(mode) = composite_gauss([&](double x) { return g(x) * basis.eigenfunction(mode, x); }, panels);
    }
    return out;
}

double inner_product(const std::function<double(double)>& f, const std::function<double(double)>& g,
                     std::size_t panels)
{
    return composite_gauss([&](double x) { return f(x) * g(x); }, std::max<std::size_t>(panels, 1));
}

SpaceGridFn synthesize(const SineSeries& s, const SpectralBasis& basis, std::span<const double> x)
{
    if (s.k_max() != basis.k_max() || s.even.size() != basis.k_max()) {
        throw DomainError("sine series truncation does not match the basis");
    }
    SpaceGridFn out{{x.begin(), x.end()}, std::vector<double>(x.size(), 0.0)};
    for (Mode mode : basis.modes()) {
        const double c = s.at(mode);
        if (c == 0.0) continue;
        for (std::size_t i = 0; i < x.size(); ++i) out.values[i] += c * basis.eigenfunction(mode, x[i]);
    }
    return out;
}

std::vector<std::vector<double>> gram_matrix(const SpectralBasis& basis)
{
    const auto modes = basis.modes();
    const std::size_t panels = panels_for(basis);
    std::vector<std::vector<double>> gram(modes.size(), std::vector<double>(modes.size(), 0.0));
    for (std::size_t i = 0; i < modes.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            gram[i][j] = composite_gauss(
                [&](double x) { return basis.eigenfunction(modes[i], x) * basis.eigenfunction(modes[j], x); }, panels);
            gram[j][i] = gram[i][j];
        }
    }
    return gram;
}

double DecayReport::worst() const { return std::max({first, odd, even}); }

DecayReport decay_check(const SmoothProfile& g, DecayOrder order, const SpectralBasis& basis)
{
    const int p = static_cast<int>(order);
    if (!g.value || !g.d2 || (order == DecayOrder::four && !g.d4)) {
        throw PreconditionError("decay check needs the function and its required derivatives");
    }
    auto vanishes = [](const std::function<double(double)>& f) {
        return std::abs(f(0.0)) <= kBoundaryTol && std::abs(f(std::numbers::pi)) <= kBoundaryTol;
    };
    if (!vanishes(g.value)) throw PreconditionError("decay estimate requires g(0) = g(pi) = 0");
    if (order == DecayOrder::four && !vanishes(g.d2)) {
        throw PreconditionError("fourth-order decay estimate also requires g''(0) = g''(pi) = 0");
    }

    const auto& deriv = order == DecayOrder::two ? g.d2 : g.d4;
    // Enough panels to resolve both the basis and a generic smooth profile.
    const std::size_t panels = std::max<std::size_t>(panels_for(basis), 64);
    const double dnorm = std::sqrt(inner_product(deriv, deriv, panels));
    if (!(dnorm > 0.0)) throw PreconditionError("derivative norm vanishes; decay ratio undefined");

    DecayReport rep;
    for (Mode mode : basis.modes()) {
        double c = composite_gauss([&](double x) { return g.value(x) * basis.eigenfunction(mode, x); }, panels);
        double ratio = std::abs(c) * std::pow(static_cast<double>(mode.frequency()), p) / dnorm;
        double& slot = mode.family == Family::first ? rep.first : (mode.family == Family::odd ? rep.odd : rep.even);
        slot = std::max(slot, ratio);
    }
    return rep;
}

}  // namespace fracdiff
