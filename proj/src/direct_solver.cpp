#include "fracdiff/direct_solver.hpp"

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

constexpr double kBoundaryTol = 1e-10;
constexpr double kSolverTol = 1e-12;

bool vanishes_at_ends(const SpaceGridFn& g)
{
    return g.values.empty() ||
           (std::abs(g.values.front()) <= kBoundaryTol && std::abs(g.values.back()) <= kBoundaryTol);
}

void require_uniform_space_grid(std::span<const double> x, std::size_t min_intervals)
{
    if (x.size() < min_intervals + 1 || x.front() != 0.0 || std::abs(x.back() - std::numbers::pi) > 1e-12) {
        throw GridError("space grid must run from 0 to pi with at least " + std::to_string(min_intervals) +
                        " intervals");
    }
    const double h = std::numbers::pi / static_cast<double>(x.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i] - h * static_cast<double>(i)) > 1e-12) {
            throw GridError("space grid must be uniform so that pi - x is a node");
        }
    }
}

// Largest |coefficient| and the larger of the two highest-index ones.
std::pair<double, double> head_and_tail(const SineSeries& s)
{
    double head = std::abs(s.c1);
    for (double v : s.odd) head = std::max(head, std::abs(v));
    for (double v : s.even) head = std::max(head, std::abs(v));
    const double tail = s.odd.empty() ? 0.0 : std::max(std::abs(s.odd.back()), std::abs(s.even.back()));
    return {head, tail};
}

}  // namespace

SpaceTimeField SpaceTimeField::zeros(std::span<const double> x, std::span<const double> t)
{
    return {{x.begin(), x.end()}, {t.begin(), t.end()}, std::vector<double>(x.size() * t.size(), 0.0)};
}

SpaceTimeField SpaceTimeField::constant_in_time(const SpaceGridFn& g, std::span<const double> t)
{
    auto out = zeros(g.x, t);
    for (std::size_t j = 0; j < t.size(); ++j) {
        std::copy(g.values.begin(), g.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(j * g.x.size()));
    }
    return out;
}

SpaceGridFn SpaceTimeField::at_time(std::size_t jt) const
{
    auto first = values.begin() + static_cast<std::ptrdiff_t>(jt * x.size());
    return {x, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(x.size()))};
}

std::vector<double> SpaceTimeField::at_point(std::size_t ix) const
{
    std::vector<double> out(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) out[j] = at(ix, j);
    return out;
}

void ProblemSpec::validate() const
{
    if (!(std::abs(epsilon) < 1.0)) throw DomainError("involution coupling must satisfy |epsilon| < 1");
    if (!(T > 0.0)) throw DomainError("final time must be positive");
    const double order = sched.order();
    if (!(order > 0.0 && order < 1.0)) {
        throw DomainError("total order rho_m must lie in (0, 1), got " + std::to_string(order));
    }
    if (phis.size() != sched.m()) {
        throw DomainError("expected " + std::to_string(sched.m()) + " initial functions, got " +
                          std::to_string(phis.size()));
    }
    for (std::size_t n = 0; n < phis.size(); ++n) {
        if (!vanishes_at_ends(phis[n])) {
            throw BoundaryError("initial function " + std::to_string(n) + " must vanish at x = 0 and x = pi");
        }
    }
    if (const auto* s = std::get_if<SpaceOnlySource>(&source)) {
        if (!vanishes_at_ends(s->f)) throw BoundaryError("source must vanish at x = 0 and x = pi");
    } else {
        const auto& sep = std::get<SeparableSource>(source);
        if (sep.a.size() != sep.f.t.size()) throw GridError("source amplitude and profile use different time grids");
        for (std::size_t j = 0; j < sep.f.t.size(); ++j) {
            if (!vanishes_at_ends(sep.f.at_time(j))) {
                throw BoundaryError("source profile must vanish at x = 0 and x = pi at every time");
            }
        }
    }
}

double modal_weight(const FractionalSchedule& sched) { return std::max(sched.order(), -sched.rho(0)); }

TimeGridFn ModalTerms::sum(double weight) const
{
    TimeGridFn out{forcing.t, std::vector<double>(forcing.size(), 0.0), weight};
    auto add = [&](const TimeGridFn& term) {
        if (weight < term.weight - 1e-12) throw DomainError("modal sum weight below a term's own weight");
        const auto shifted = term.reweighted(weight);
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += shifted.values[i];
    };
    for (const auto& term : initial) add(term);
    add(forcing);
    return out;
}

ModalTerms solve_modal_terms(double lambda, std::span<const double> phi, const ModalForcing& forcing,
                             const FractionalSchedule& sched, std::span<const double> t_grid)
{
    if (!(lambda > 0.0)) throw DomainError("modal equation needs lambda > 0");
    if (phi.size() != sched.m()) throw DomainError("one initial value per partial order is required");
    validate_grid(t_grid);

    const std::size_t n = t_grid.size();
    const double beta = sched.order();
    auto zero_term = [&](double weight) {
        return TimeGridFn{{t_grid.begin(), t_grid.end()}, std::vector<double>(n, 0.0), weight};
    };
    // coef * E_{beta,zeta}(-lambda t^beta), i.e. coef e_{beta,zeta} at weight 1 - zeta.
    auto closed_form = [&](double coef, double zeta) {
        auto term = zero_term(1.0 - zeta);
        if (coef == 0.0) return term;
        const auto e = ml_decay_samples(beta, zeta, lambda, t_grid, kSolverTol);
        for (std::size_t i = 0; i < n; ++i) term.values[i] = coef * e[i];
        return term;
    };

    ModalTerms out;
    for (std::size_t k = 0; k < phi.size(); ++k) out.initial.push_back(closed_form(phi[k], sched.rho(k) + 1.0));

    if (const auto* f = std::get_if<double>(&forcing)) {
        out.forcing = closed_form(*f, beta + 1.0);
        return out;
    }
    const auto& g = std::get<std::vector<double>>(forcing);
    if (g.size() != n) throw GridError("modal forcing samples do not match the time grid");
    out.forcing = zero_term(-beta);
    if (std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; })) {
        const auto c = conv_ml(g, beta, t_grid, lambda, kSolverTol);
        // (e_{beta,beta} * g)(t) = g(0) t^beta / Gamma(beta + 1) + O(t^{beta + 1}).
        out.forcing.values[0] = g[0] * rgamma(beta + 1.0);
        for (std::size_t i = 1; i < n; ++i) out.forcing.values[i] = std::pow(t_grid[i], -beta) * c[i];
    }
    return out;
}

TimeGridFn solve_modal_ode(double lambda, std::span<const double> phi, const ModalForcing& forcing,
                           const FractionalSchedule& sched, std::span<const double> t_grid)
{
    return solve_modal_terms(lambda, phi, forcing, sched, t_grid).sum(modal_weight(sched));
}

DirectSolution solve_direct(const ProblemSpec& spec, const SpectralBasis& basis, std::span<const double> t_grid,
                            std::span<const double> x_grid)
{
    spec.validate();
    validate_grid(t_grid);
    if (basis.epsilon() != spec.epsilon) throw DomainError("basis built for a different epsilon");
    if (std::abs(t_grid.back() - spec.T) > 1e-12 * spec.T) throw GridError("time grid must end at the final time");

    DirectSolution sol;
    sol.weight = modal_weight(spec.sched);
    const std::size_t K = basis.k_max();
    const std::size_t nt = t_grid.size();
    const std::size_t m = spec.sched.m();

    auto note_truncation = [&](const SineSeries& s, const std::string& what) {
        auto [head, tail] = head_and_tail(s);
        if (head > 0.0 && tail > kTruncationThreshold * head) {
            sol.warnings.push_back("TruncationWarning: " + what + " retains " + std::to_string(tail / head) +
                                   " of its peak coefficient at k = " + std::to_string(K));
        }
    };

    std::vector<SineSeries> phi_c;
    for (std::size_t n = 0; n < m; ++n) {
        phi_c.push_back(project(spec.phis[n], basis));
        note_truncation(phi_c.back(), "initial function " + std::to_string(n));
    }

    std::vector<SineSeries> source_rows;  // separable branch: projection at every time node
    const auto* separable = std::get_if<SeparableSource>(&spec.source);
    if (separable) {
        if (separable->f.t.size() != nt) throw GridError("source profile must be sampled on the solver time grid");
        source_rows.resize(nt);
        parallel_for(nt, [&](std::size_t j) { source_rows[j] = project(separable->f.at_time(j), basis); });
        for (std::size_t j = 0; j < nt; j += std::max<std::size_t>(1, nt / 8)) {
            note_truncation(source_rows[j], "source profile at t = " + std::to_string(t_grid[j]));
        }
        sol.source_coefficients = SineSeries::zeros(K);
    } else {
        sol.source_coefficients = project(std::get<SpaceOnlySource>(spec.source).f, basis);
        note_truncation(sol.source_coefficients, "source");
    }

    const auto modes = basis.modes();
    sol.modes.resize(modes.size());
    parallel_for(modes.size(), [&](std::size_t idx) {
        const Mode mode = modes[idx];
        std::vector<double> phi(m);
        for (std::size_t n = 0; n < m; ++n) phi[n] = phi_c[n].at(mode);
        ModalForcing forcing = sol.source_coefficients.at(mode);
        if (separable) {
            std::vector<double> g(nt);
            for (std::size_t j = 0; j < nt; ++j) g[j] = separable->a[j] * source_rows[j].at(mode);
            forcing = std::move(g);
        }
        auto terms = solve_modal_terms(basis.eigenvalue(mode), phi, forcing, spec.sched, t_grid);
        auto summed = terms.sum(sol.weight);
        sol.modes[idx] = {mode, basis.eigenvalue(mode), std::move(terms), std::move(summed)};
    });

    const std::size_t nx = x_grid.size();
    std::vector<double> shape(modes.size() * nx);
    for (std::size_t idx = 0; idx < modes.size(); ++idx) {
        for (std::size_t i = 0; i < nx; ++i) shape[idx * nx + i] = basis.eigenfunction(modes[idx], x_grid[i]);
    }

    // Field of one per-mode time series, synthesized on the tensor grid.
    auto synthesize_field = [&](auto&& series_of) {
        auto field = SpaceTimeField::zeros(x_grid, t_grid);
        parallel_for(nt, [&](std::size_t j) {
            for (std::size_t idx = 0; idx < modes.size(); ++idx) {
                const double c = series_of(sol.modes[idx]).values[j];
                if (c == 0.0) continue;
                for (std::size_t i = 0; i < nx; ++i) field.at(i, j) += c * shape[idx * nx + i];
            }
        });
        return field;
    };

    sol.weighted = synthesize_field([](const ModalSolution& s) -> const TimeGridFn& { return s.u; });
    for (std::size_t n = 0; n < m; ++n) {
        sol.components.push_back(
            {-spec.sched.rho(n),
             synthesize_field([n](const ModalSolution& s) -> const TimeGridFn& { return s.terms.initial[n]; })});
    }
    sol.components.push_back({sol.modes.front().terms.forcing.weight,
                              synthesize_field([](const ModalSolution& s) -> const TimeGridFn& { return s.terms.forcing; })});
    sol.initial_coefficients = phi_c;

    sol.u = sol.weighted;
    for (std::size_t j = 1; j < nt; ++j) {
        const double scale = std::pow(t_grid[j], -sol.weight);
        for (std::size_t i = 0; i < nx; ++i) sol.u.at(i, j) *= scale;
    }

    // u(x, 0) = sum of the initial functions with rho_n = 0; unbounded if any
    // initial function with rho_n < 0 is present.
    bool bounded = true;
    auto row0 = SineSeries::zeros(K);
    for (std::size_t n = 0; n < m; ++n) {
        const double rho = spec.sched.rho(n);
        if (std::abs(rho) < 1e-12) row0 = linear_combination(1.0, row0, 1.0, phi_c[n]);
        else if (rho < 0.0 && head_and_tail(phi_c[n]).first > 0.0) bounded = false;
    }
    const auto u0 = synthesize(row0, basis, x_grid);
    for (std::size_t i = 0; i < nx; ++i) {
        sol.u.at(i, 0) = bounded ? u0.values[i] : std::numeric_limits<double>::quiet_NaN();
    }
    return sol;
}

double pde_residual(const DirectSolution& sol, const ProblemSpec& spec, double t_min)
{
    std::vector<WeightedField> single;
    const auto& parts = sol.components.empty() ? (single = {{sol.weight, sol.weighted}}) : sol.components;
    const auto& x = parts.front().weighted.x;
    const auto& t = parts.front().weighted.t;
    require_uniform_space_grid(x, 4);
    const std::size_t nx = x.size();
    const std::size_t N = nx - 1;
    const std::size_t nt = t.size();
    const double h = std::numbers::pi / static_cast<double>(N);
    for (const auto& p : parts) {
        if (p.weighted.x.size() != nx || p.weighted.t.size() != nt) throw GridError("solution components disagree on the grid");
    }

    std::vector<double> f_space;
    const auto* separable = std::get_if<SeparableSource>(&spec.source);
    if (separable) {
        if (separable->f.x.size() != nx || separable->f.t.size() != nt) {
            throw GridError("source profile grid does not match the solution grid");
        }
    } else {
        f_space = std::get<SpaceOnlySource>(spec.source).f.values;
        if (f_space.size() != nx) throw GridError("source grid does not match the solution grid");
    }

    // u and D^{rho_m} u at every node, unweighted, row-major like the field.
    std::vector<double> u(nx * nt, 0.0), dn(nx * nt, 0.0);
    for (const auto& p : parts) {
        for (std::size_t j = 1; j < nt; ++j) {
            const double scale = std::pow(t[j], -p.weight);
            for (std::size_t i = 0; i < nx; ++i) u[j * nx + i] += p.weighted.at(i, j) * scale;
        }
    }
    parallel_for(N - 1, [&](std::size_t k) {
        const std::size_t i = k + 1;
        for (const auto& p : parts) {
            TimeGridFn column{t, p.weighted.at_point(i), p.weight};
            if (std::all_of(column.values.begin(), column.values.end(), [](double v) { return v == 0.0; })) continue;
            const auto d = dn_apply(column, spec.sched);
            for (std::size_t j = 1; j < nt; ++j) dn[j * nx + i] += d.unweighted(j);
        }
    });

    double worst = 0.0;
    std::vector<double> row(nx + 4), uxx(nx);
    for (std::size_t j = 1; j < nt; ++j) {
        if (t[j] < t_min) continue;
        // Odd extension across both ends: u(-x) = -u(x), u(pi + x) = -u(pi - x).
        std::copy_n(u.begin() + static_cast<std::ptrdiff_t>(j * nx), nx, row.begin() + 2);
        row[1] = -row[3];
        row[0] = -row[4];
        row[nx + 2] = -row[nx];
        row[nx + 3] = -row[nx - 1];
        for (std::size_t i = 0; i < nx; ++i) {
            const double* v = row.data() + i + 2;
            uxx[i] = (-v[-2] + 16.0 * v[-1] - 30.0 * v[0] + 16.0 * v[1] - v[2]) / (12.0 * h * h);
        }
        for (std::size_t i = 1; i < N; ++i) {
            const double F = separable ? separable->a[j] * separable->f.at(i, j) : f_space[i];
            const double r = dn[j * nx + i] - uxx[i] + spec.epsilon * uxx[N - i] - F;
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

}  // namespace fracdiff
