#include "fracdiff/inverse_time.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fracdiff/errors.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/parallel.hpp"

namespace fracdiff {

namespace {

constexpr double kEvalTol = 1e-12;

const double kNorm = std::sqrt(2.0 / std::numbers::pi);

// Integral of the normalized sine of frequency n over (0, pi).
double mode_integral(std::size_t n) { return n % 2 == 1 ? kNorm * 2.0 / static_cast<double>(n) : 0.0; }

std::vector<Mode> odd_family(const SpectralBasis& basis)
{
    std::vector<Mode> modes{Mode::first()};
    for (std::size_t k = 1; k <= basis.k_max(); ++k) modes.push_back(Mode::odd(k));
    return modes;
}

// Source profile coefficients f_n(t_j), one row per odd-family mode.
std::vector<std::vector<double>> source_coefficients(const ProblemSpec& spec, const SpectralBasis& basis,
                                                     const std::vector<Mode>& modes, std::span<const double> t)
{
    std::vector<std::vector<double>> out(modes.size(), std::vector<double>(t.size(), 0.0));
    if (const auto* s = std::get_if<SpaceOnlySource>(&spec.source)) {
        const auto c = project(s->f, basis);
        for (std::size_t n = 0; n < modes.size(); ++n) std::fill(out[n].begin(), out[n].end(), c.at(modes[n]));
        return out;
    }
    const auto& f = std::get<SeparableSource>(spec.source).f;
    if (f.t.size() != t.size()) throw GridError("source profile and solver use different time grids");
    for (std::size_t j = 0; j < t.size(); ++j) {
        const auto c = project(f.at_time(j), basis);
        for (std::size_t n = 0; n < modes.size(); ++n) out[n][j] = c.at(modes[n]);
    }
    return out;
}

double sup_norm(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        if (std::isfinite(x)) m = std::max(m, std::abs(x));
    }
    return m;
}

// One application of the fixed-point map. Non-finite entries at t = 0 are
// replaced by extrapolation from the next nodes.
std::vector<double> apply_map(const VolterraSystem& sys, const EnergyData& data, std::span<const double> a)
{
    const std::size_t n = sys.t.size();
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) {
        double s = 0.0;
        const auto& row = sys.weights[i];
        for (std::size_t j = 0; j <= i; ++j) s += row[j] * a[j];
        out[i] = (data.dnE[i] + sys.forcing[i] + s) / sys.mass[i];
    });
    if (!std::isfinite(out[0]) && n >= 4) out[0] = extrapolate_to_zero(sys.t, out);
    return out;
}

}  // namespace

std::vector<double> integrate_space(const SpaceTimeField& field)
{
    const std::size_t nx = field.x.size();
    if (nx < 3 || field.x.front() != 0.0 || std::abs(field.x.back() - std::numbers::pi) > 1e-12) {
        throw GridError("space grid must run from 0 to pi");
    }
    const std::size_t intervals = nx - 1;
    const double h = std::numbers::pi / static_cast<double>(intervals);
    std::vector<double> w(nx, h);
    if (intervals % 2 == 0) {
        for (std::size_t i = 0; i < nx; ++i) w[i] = (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
        w.front() = w.back() = h / 3.0;
    } else {
        w.front() = w.back() = h / 2.0;
    }
    std::vector<double> out(field.t.size(), 0.0);
    for (std::size_t j = 0; j < field.t.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < nx; ++i) s += w[i] * field.at(i, j);
        out[j] = s;
    }
    return out;
}

TimeGridFn energy_of(const DirectSolution& sol)
{
    std::vector<WeightedField> single;
    const auto& parts = sol.components.empty() ? (single = {{sol.weight, sol.weighted}}) : sol.components;
    double weight = 0.0;
    for (const auto& p : parts) weight = std::max(weight, p.weight);
    const auto& t = parts.front().weighted.t;
    TimeGridFn E{t, std::vector<double>(t.size(), 0.0), weight};
    for (const auto& p : parts) {
        const auto shifted = TimeGridFn{t, integrate_space(p.weighted), p.weight}.reweighted(weight);
        for (std::size_t j = 0; j < t.size(); ++j) E.values[j] += shifted.values[j];
    }
    return E;
}

std::vector<double> dn_of_energy(const TimeGridFn& E, const FractionalSchedule& sched)
{
    const auto d = dn_apply(E, sched);
    auto out = d.unweighted();
    if (!std::isfinite(out[0]) || d.weight != 0.0) {
        out[0] = out.size() >= 4 ? extrapolate_to_zero(d.t, out) : out[1];
    }
    return out;
}

EnergyData make_energy_data(const TimeGridFn& E, const FractionalSchedule& sched)
{
    return {E, dn_of_energy(E, sched)};
}

EnergyData energy_data_of(const DirectSolution& sol, const FractionalSchedule& sched)
{
    const auto& t = sol.weighted.t;
    EnergyData data{energy_of(sol), std::vector<double>(t.size(), 0.0)};
    if (sol.components.empty()) {
        data.dnE = dn_of_energy(data.E, sched);
        return data;
    }
    // Initial-data terms solve the homogeneous modal equation, so their
    // derivative is -lambda times the term.
    for (const auto& m : sol.modes) {
        const double c = mode_integral(m.mode.frequency());
        if (c == 0.0) continue;
        for (const auto& term : m.terms.initial) {
            for (std::size_t j = 0; j < t.size(); ++j) data.dnE[j] -= m.lambda * c * term.unweighted(j);
        }
    }
    const auto& source = sol.components.back();
    TimeGridFn part{t, integrate_space(source.weighted), source.weight};
    if (std::any_of(part.values.begin(), part.values.end(), [](double v) { return v != 0.0; })) {
        const auto d = dn_of_energy(part, sched);
        for (std::size_t j = 0; j < t.size(); ++j) data.dnE[j] += d[j];
    }
    return data;
}

double VolterraSystem::contraction_factor() const { return t.back() * kernel_bound_integrated * bound_M2; }

VolterraSystem build_volterra(const ProblemSpec& spec, const SpectralBasis& basis, std::span<const double> t_grid,
                              double bound_M2, KernelVariant variant)
{
    {
        ProblemSpec checked = spec;
        if (auto* s = std::get_if<SeparableSource>(&checked.source)) s->a.assign(s->f.t.size(), 0.0);
        checked.validate();
    }
    if (basis.epsilon() != spec.epsilon) throw DomainError("basis built for a different epsilon");
    validate_grid(t_grid, 4);
    if (std::abs(t_grid.back() - spec.T) > 1e-12 * spec.T) throw GridError("time grid must end at the final time");

    const std::size_t nt = t_grid.size();
    const double beta = spec.sched.order();
    const auto modes = odd_family(basis);
    const auto fc = source_coefficients(spec, basis, modes, t_grid);
    std::vector<SineSeries> phi;
    for (const auto& p : spec.phis) phi.push_back(project(p, basis));

    // Per-mode weight of the x-integrated equation and the eigenvalue used in
    // the kernel.
    std::vector<double> mu(modes.size()), kernel_lambda(modes.size());
    for (std::size_t n = 0; n < modes.size(); ++n) {
        const std::size_t freq = modes[n].frequency();
        if (variant == KernelVariant::derived) {
            mu[n] = basis.eigenvalue(modes[n]) * mode_integral(freq);
            kernel_lambda[n] = basis.eigenvalue(modes[n]);
        } else {
            mu[n] = 2.0 * (1.0 + spec.epsilon) * kNorm * static_cast<double>(freq);
            kernel_lambda[n] = basis.eigenvalue(Mode::first());
        }
    }

    VolterraSystem sys;
    sys.t.assign(t_grid.begin(), t_grid.end());
    sys.forcing.assign(nt, 0.0);
    sys.mass.assign(nt, 0.0);
    for (std::size_t j = 0; j < nt; ++j) {
        for (std::size_t n = 0; n < modes.size(); ++n) sys.mass[j] += fc[n][j] * mode_integral(modes[n].frequency());
    }

    double min_mass = std::numeric_limits<double>::infinity(), max_mass = 0.0;
    for (double m : sys.mass) {
        min_mass = std::min(min_mass, std::abs(m));
        max_mass = std::max(max_mass, std::abs(m));
    }
    if (!(min_mass > 1e-12 * std::max(1.0, max_mass))) {
        throw MassBoundViolation("integral of the source profile vanishes (min |mass| = " + std::to_string(min_mass) +
                                 ")");
    }
    if (bound_M2 > 0.0) {
        if (min_mass < 1.0 / bound_M2) {
            throw MassBoundViolation("min |mass| = " + std::to_string(min_mass) + " is below 1/M2 = " +
                                     std::to_string(1.0 / bound_M2));
        }
        sys.bound_M2 = bound_M2;
    } else {
        sys.bound_M2 = 1.0 / min_mass;
    }

    // Forcing from the initial data.
    std::vector<std::vector<double>> forcing_parts(modes.size(), std::vector<double>(nt, 0.0));
    parallel_for(modes.size(), [&](std::size_t n) {
        const double lambda = basis.eigenvalue(modes[n]);
        for (std::size_t k = 0; k < phi.size(); ++k) {
            const double c = phi[k].at(modes[n]);
            if (c == 0.0) continue;
            const double rho = spec.sched.rho(k);
            const auto e = ml_decay_samples(beta, rho + 1.0, lambda, t_grid, kEvalTol);
            for (std::size_t j = 0; j < nt; ++j) forcing_parts[n][j] += mu[n] * c * std::pow(t_grid[j], rho) * e[j];
        }
    });
    for (std::size_t n = 0; n < modes.size(); ++n) {
        for (std::size_t j = 0; j < nt; ++j) sys.forcing[j] += forcing_parts[n][j];
    }

    // Kernel weights, accumulated mode by mode in a fixed order.
    sys.weights.resize(nt);
    for (std::size_t i = 0; i < nt; ++i) sys.weights[i].assign(i + 1, 0.0);
    for (std::size_t n = 0; n < modes.size(); ++n) {
        const bool active = std::any_of(fc[n].begin(), fc[n].end(), [](double v) { return v != 0.0; });
        if (!active) continue;
        MLConvolution conv(beta, kernel_lambda[n], t_grid, kEvalTol);
        parallel_for(nt, [&](std::size_t i) {
            auto& row = sys.weights[i];
            for (std::size_t j = 0; j <= i; ++j) row[j] += mu[n] * conv.weight(i, j) * fc[n][j];
        });
    }

    double integrated = 0.0;
    for (const auto& row : sys.weights) {
        double s = 0.0;
        for (double w : row) s += std::abs(w);
        integrated = std::max(integrated, s);
    }
    sys.kernel_bound_integrated = integrated / spec.T;

    double weighted = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
        double s = 0.0;
        for (std::size_t n = 0; n < modes.size(); ++n) s += std::abs(mu[n] * fc[n][j]);
        weighted = std::max(weighted, s);
    }
    sys.kernel_bound = weighted * rgamma(beta);
    return sys;
}

TimeReconstruction picard_solve(const VolterraSystem& sys, const EnergyData& data, double tol, std::size_t max_iter)
{
    const std::size_t n = sys.t.size();
    if (data.dnE.size() != n || data.E.t.size() != n) throw GridError("energy data and system use different grids");
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    for (std::size_t i = 1; i < n; ++i) {
        if (!std::isfinite(data.dnE[i])) throw DomainError("energy derivative must be finite for t > 0");
    }

    TimeReconstruction rec;
    rec.a.assign(n, 0.0);
    const double factor = sys.contraction_factor();
    rec.damped = !(factor < 1.0);
    if (rec.damped) {
        rec.warnings.push_back("ContractionPrecheck: T*K*M2 = " + std::to_string(factor) +
                               " >= 1, iterating with relaxation 0.5");
    }

    std::size_t violations = 0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        auto next = apply_map(sys, data, rec.a);
        if (rec.damped) {
            for (std::size_t i = 0; i < n; ++i) next[i] = 0.5 * (rec.a[i] + next[i]);
        }
        double update = 0.0;
        for (std::size_t i = 0; i < n; ++i) update = std::max(update, std::abs(next[i] - rec.a[i]));
        rec.a = std::move(next);
        rec.iterations = it;
        if (!std::isfinite(update)) throw NoConvergence("Picard iterate became non-finite");

        if (!rec.update_norms.empty() && rec.update_norms.back() > 0.0) {
            const double ratio = update / rec.update_norms.back();
            rec.contraction_estimate = std::max(rec.contraction_estimate, ratio);
            violations = ratio >= 1.0 ? violations + 1 : 0;
            if (violations >= 3) {
                throw ContractionViolated("update ratio >= 1 for three consecutive sweeps (last " +
                                          std::to_string(ratio) + ")");
            }
        }
        rec.update_norms.push_back(update);
        if (update <= tol) return rec;
    }
    throw NoConvergence("Picard iteration did not reach tol " + std::to_string(tol) + " in " +
                        std::to_string(max_iter) + " sweeps");
}

double volterra_residual(const VolterraSystem& sys, const EnergyData& data, std::span<const double> a)
{
    const auto image = apply_map(sys, data, a);
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - image[i];
    if (!std::isfinite(sys.forcing[0])) diff[0] = 0.0;
    return sup_norm(diff);
}

TimeReconstruction recover_a(const ProblemSpec& spec, const SpectralBasis& basis, const EnergyData& data,
                             std::span<const double> t_grid, std::span<const double> x_grid, double tol,
                             std::size_t max_iter)
{
    const auto sys = build_volterra(spec, basis, t_grid);
    auto rec = picard_solve(sys, data, tol, max_iter);

    ProblemSpec forward = spec;
    SeparableSource src;
    src.a = rec.a;
    if (const auto* s = std::get_if<SpaceOnlySource>(&spec.source)) {
        src.f = SpaceTimeField::constant_in_time(s->f, t_grid);
    } else {
        src.f = std::get<SeparableSource>(spec.source).f;
    }
    forward.source = std::move(src);
    rec.u = solve_direct(forward, basis, t_grid, x_grid);
    return rec;
}

}  // namespace fracdiff
