#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracdiff/errors.hpp"
#include "fracdiff/inverse_time.hpp"
#include "fracdiff/mittag_leffler.hpp"

using namespace fracdiff;
using std::numbers::pi;

namespace {

struct Synthetic {
    ProblemSpec spec;
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> a;
    DirectSolution sol;
};

// Forward run of D^{rho_m} u - u_xx + eps u_xx(pi - x) = a(t) f(x).
Synthetic synthesize_run(const SpectralBasis& basis, const FractionalSchedule& sched, double T, std::size_t steps,
                         const std::function<double(double)>& a, const std::function<double(double)>& f,
                         const std::function<double(double)>& phi, std::size_t x_intervals = 128)
{
    Synthetic s;
    s.t = graded_grid(T, steps);
    s.x = space_grid(x_intervals);
    s.spec.epsilon = basis.epsilon();
    s.spec.sched = sched;
    s.spec.T = T;
    for (std::size_t n = 0; n < sched.m(); ++n) s.spec.phis.push_back(sample_space(s.x, phi));
    for (double v : s.t) s.a.push_back(a(v));
    s.spec.source = SeparableSource{s.a, SpaceTimeField::constant_in_time(sample_space(s.x, f), s.t)};
    s.sol = solve_direct(s.spec, basis, s.t, s.x);
    return s;
}

double max_relative_error(std::span<const double> got, std::span<const double> want)
{
    double e = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, std::abs(got[i] - want[i]) / std::abs(want[i]));
    return e;
}

double sine(double v) { return std::sin(v); }
double zero(double) { return 0.0; }

}  // namespace

TEST_CASE("energy derivative of simple samples")
{
    const auto t = graded_grid(1.0, 256);
    const auto constant = sample(t, [](double) { return 3.0; });
    for (double d : dn_of_energy(constant, FractionalSchedule::caputo(0.4))) CHECK(std::abs(d) <= 1e-9);

    const auto linear = sample(t, [](double v) { return v; });
    const auto d = dn_of_energy(linear, FractionalSchedule::riemann_liouville(0.5));
    for (std::size_t i = 1; i < t.size(); ++i) {
        CHECK(d[i] == doctest::Approx(std::sqrt(t[i]) / std::tgamma(1.5)).epsilon(1e-6).scale(1e-9));
    }
}

TEST_CASE("energy derivative of a forward run matches the modal form")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.5, 1024,
                                    [](double v) { return 1.0 + v; }, sine,
                                    [](double v) { return std::sin(v) + 0.3 * std::sin(3.0 * v); });
    // D^{rho_m} E = a mass - sum over odd modes of lambda_n u_n times the mode integral.
    const double mass = 2.0;
    std::vector<double> modal(run.t.size());
    for (std::size_t j = 0; j < run.t.size(); ++j) {
        double s = run.a[j] * mass;
        for (const auto& m : run.sol.modes) {
            const std::size_t n = m.mode.frequency();
            if (n % 2 == 0) continue;
            s -= basis.eigenvalue(m.mode) * std::sqrt(2.0 / pi) * 2.0 / n * m.u.unweighted(j);
        }
        modal[j] = s;
    }
    const auto from_components = energy_data_of(run.sol, run.spec.sched);
    const auto from_samples = make_energy_data(energy_of(run.sol), run.spec.sched);
    for (std::size_t j = 1; j < run.t.size(); ++j) {
        CHECK(from_components.dnE[j] == doctest::Approx(modal[j]).epsilon(1e-3));
        if (run.t[j] >= 0.01 * run.spec.T) CHECK(from_samples.dnE[j] == doctest::Approx(modal[j]).epsilon(1e-3));
    }
}

TEST_CASE("single-mode source gives a single-term kernel")
{
    SpectralBasis basis(0.3, 6);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.6), 0.5, 64, [](double) { return 1.0; }, sine,
                                    zero);
    const auto sys = build_volterra(run.spec, basis, run.t);
    const double lambda = 1.0 - 0.3;
    // lambda_1 * integral of X_1 * coefficient of sin x on X_1.
    const double scale = lambda * std::sqrt(2.0 / pi) * 2.0 * std::sqrt(pi / 2.0);
    MLConvolution conv(run.spec.sched.order(), lambda, run.t, 1e-12);
    for (std::size_t i = 0; i < run.t.size(); ++i) {
        CHECK(sys.forcing[i] == 0.0);
        CHECK(sys.mass[i] == doctest::Approx(2.0).epsilon(1e-12));
        for (std::size_t j = 0; j <= i; ++j) {
            CHECK(sys.weights[i][j] == doctest::Approx(scale * conv.weight(i, j)).epsilon(1e-10).scale(1e-14));
        }
    }
}

TEST_CASE("assembled operator matches the boundary fluxes of the forward solution")
{
    // The x-integral of -u_xx + eps u_xx(pi - x) equals (1 - eps)(u_x(0) - u_x(pi)).
    const double eps = 0.3;
    SpectralBasis basis(eps, 8);
    const auto run = synthesize_run(
        basis, FractionalSchedule::caputo(0.6), 0.5, 256, [](double v) { return 1.0 + v * v; }, sine,
        [](double v) { return v * (pi - v); }, 1024);
    const auto sys = build_volterra(run.spec, basis, run.t);
    const double h = pi / 1024.0;
    const auto& u = run.sol.u;
    const std::size_t nx = run.x.size();
    for (std::size_t j = 8; j < run.t.size(); j += 8) {
        const auto row = u.at_time(j).values;
        const double left = (-25.0 * row[0] + 48.0 * row[1] - 36.0 * row[2] + 16.0 * row[3] - 3.0 * row[4]) / (12.0 * h);
        const double right = (25.0 * row[nx - 1] - 48.0 * row[nx - 2] + 36.0 * row[nx - 3] - 16.0 * row[nx - 4] +
                              3.0 * row[nx - 5]) / (12.0 * h);
        const double flux = (1.0 - eps) * (left - right);
        double assembled = sys.forcing[j];
        for (std::size_t k = 0; k <= j; ++k) assembled += sys.weights[j][k] * run.a[k];
        CHECK(assembled == doctest::Approx(flux).epsilon(1e-5));
    }
}

TEST_CASE("zero amplitude is recovered as zero")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.2, 512, [](double) { return 0.0; }, sine,
                                    [](double v) { return std::sin(v) - 0.5 * std::sin(2.0 * v); });
    const auto sys = build_volterra(run.spec, basis, run.t);
    const double tol = 1e-10;
    const auto rec = picard_solve(sys, energy_data_of(run.sol, run.spec.sched), tol, 200);
    for (double v : rec.a) CHECK(std::abs(v) <= 1e-6);
}

TEST_CASE("linear amplitude recovered from the energy")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.2, 1024,
                                    [](double v) { return 1.0 + v; }, sine, zero);
    const auto sys = build_volterra(run.spec, basis, run.t);
    const auto data = energy_data_of(run.sol, run.spec.sched);
    const double tol = 1e-12;
    const auto rec = picard_solve(sys, data, tol, 200);

    CHECK(max_relative_error(rec.a, run.a) <= 1e-4);
    CHECK(volterra_residual(sys, data, rec.a) <= 10.0 * tol);
    REQUIRE(sys.contraction_factor() < 1.0);
    CHECK_FALSE(rec.damped);
    CHECK(rec.contraction_estimate <= sys.contraction_factor() + 0.05);
    for (std::size_t k = 2; k < rec.update_norms.size(); ++k) {
        CHECK(rec.update_norms[k] < rec.update_norms[k - 1]);
    }
    CHECK(std::isfinite(sys.kernel_bound));
    CHECK(sys.kernel_bound > 0.0);
}

TEST_CASE("random smooth amplitudes round trip")
{
    SpectralBasis basis(-0.2, 4);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coef(-0.5, 0.5), freq(1.0, 6.0);
    const auto profile = [](double v) { return std::sin(v) + 0.2 * std::sin(3.0 * v); };
    const auto phi = [](double v) { return std::sin(v) - 0.1 * std::sin(5.0 * v); };
    const double T = 0.1;
    for (int trial = 0; trial < 10; ++trial) {
        const double c1 = coef(rng), c2 = coef(rng), w = freq(rng);
        const auto a = [=](double v) { return 1.0 + c1 * v + c2 * std::sin(w * v); };
        const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.5), T, 2048, a, profile, phi);
        const auto sys = build_volterra(run.spec, basis, run.t);
        REQUIRE(sys.contraction_factor() <= 0.5);
        const auto data = energy_data_of(run.sol, run.spec.sched);
        const auto rec = picard_solve(sys, data, 1e-12, 200);
        CHECK(max_relative_error(rec.a, run.a) <= 1e-3);
    }
}

TEST_CASE("forward solution from the recovered amplitude reproduces the energy")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.2, 512,
                                    [](double v) { return 2.0 - v; }, sine,
                                    [](double v) { return std::sin(v) + 0.2 * std::sin(3.0 * v); });
    const auto data = energy_data_of(run.sol, run.spec.sched);
    ProblemSpec spec = run.spec;
    spec.source = SpaceOnlySource{sample_space(run.x, sine)};
    const auto rec = recover_a(spec, basis, data, run.t, run.x, 1e-12, 200);
    REQUIRE(rec.u.has_value());
    const auto E = energy_of(*rec.u);
    const auto Eu = E.unweighted();
    const auto Ed = data.E.unweighted();
    for (std::size_t j = 0; j < run.t.size(); ++j) CHECK(Eu[j] == doctest::Approx(Ed[j]).epsilon(1e-3));
}

TEST_CASE("printed kernel constants do not reproduce the amplitude")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.2, 512,
                                    [](double v) { return 1.0 + v; },
                                    [](double v) { return std::sin(v) + 0.5 * std::sin(3.0 * v); },
                                    [](double v) { return std::sin(v) + 0.3 * std::sin(3.0 * v); });
    const auto data = energy_data_of(run.sol, run.spec.sched);
    const auto derived = picard_solve(build_volterra(run.spec, basis, run.t, 0.0, KernelVariant::derived), data);
    const auto printed = picard_solve(build_volterra(run.spec, basis, run.t, 0.0, KernelVariant::printed), data);
    const double derived_error = max_relative_error(derived.a, run.a);
    const double printed_error = max_relative_error(printed.a, run.a);
    MESSAGE("derived kernel error " << derived_error << ", printed kernel error " << printed_error);
    CHECK(derived_error <= 1e-4);
    CHECK(printed_error >= 1e-2);
}

TEST_CASE("mass bound violations")
{
    SpectralBasis basis(0.3, 6);
    const auto even = synthesize_run(basis, FractionalSchedule::caputo(0.6), 0.5, 32, [](double) { return 1.0; },
                                     [](double v) { return std::sin(2.0 * v); }, zero);
    CHECK_THROWS_AS(build_volterra(even.spec, basis, even.t), MassBoundViolation);

    const auto odd = synthesize_run(basis, FractionalSchedule::caputo(0.6), 0.5, 32, [](double) { return 1.0; }, sine,
                                    zero);
    CHECK_THROWS_AS(build_volterra(odd.spec, basis, odd.t, 0.4), MassBoundViolation);
    CHECK_NOTHROW(build_volterra(odd.spec, basis, odd.t, 0.6));
}

TEST_CASE("iteration failures are reported")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.2, 128,
                                    [](double v) { return 1.0 + v; }, sine, zero);
    const auto sys = build_volterra(run.spec, basis, run.t);
    const auto data = energy_data_of(run.sol, run.spec.sched);
    CHECK_THROWS_AS(picard_solve(sys, data, 1e-12, 2), NoConvergence);

    // An expansive map: a <- dnE + 2 a on every node.
    VolterraSystem bad = sys;
    for (std::size_t i = 0; i < bad.t.size(); ++i) {
        std::fill(bad.weights[i].begin(), bad.weights[i].end(), 0.0);
        bad.weights[i][i] = 2.0;
        bad.mass[i] = 1.0;
        bad.forcing[i] = 0.0;
    }
    bad.kernel_bound_integrated = 2.0 / bad.t.back();
    bad.bound_M2 = 1.0;
    CHECK_THROWS_AS(picard_solve(bad, data, 1e-12, 50), ContractionViolated);
}

TEST_CASE("failed precheck switches to damped iteration")
{
    SpectralBasis basis(0.3, 8);
    const auto run = synthesize_run(basis, FractionalSchedule::caputo(0.7), 0.2, 128,
                                    [](double v) { return 1.0 + v; }, sine, zero);
    auto sys = build_volterra(run.spec, basis, run.t);
    const auto data = energy_data_of(run.sol, run.spec.sched);
    sys.bound_M2 = 10.0 / (sys.t.back() * sys.kernel_bound_integrated);
    const auto rec = picard_solve(sys, data, 1e-12, 400);
    CHECK(rec.damped);
    REQUIRE(rec.warnings.size() == 1);
    CHECK(max_relative_error(rec.a, run.a) <= 1e-3);
}
