#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/frac_calculus.hpp"
#include "fracdiff/time_grid.hpp"

using namespace fracdiff;

namespace {

// t^mu stored with weight -frac(mu), so the samples are the integer power.
TimeGridFn sample_power(const std::vector<double>& t, double mu)
{
    double whole = std::floor(mu);
    return sample_weighted(t, whole - mu, [mu](double x) { return std::pow(x, mu); }, whole == 0.0 ? 1.0 : 0.0);
}

double max_rel_error(const TimeGridFn& f, double coef, double exponent, double t_from)
{
    double err = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (f.t[i] < t_from) continue;
        double ref = coef * std::pow(f.t[i], exponent);
        err = std::max(err, std::fabs(f.unweighted(i) - ref) / std::fabs(ref));
    }
    return err;
}

// L1 discretisation of the Caputo derivative of order alpha in (0, 1).
std::vector<double> l1_caputo(const std::vector<double>& t, const std::vector<double>& g, double alpha)
{
    std::vector<double> out(t.size(), 0.0);
    const double scale = 1.0 / std::tgamma(2.0 - alpha);
    for (std::size_t n = 1; n < t.size(); ++n) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double slope = (g[j + 1] - g[j]) / (t[j + 1] - t[j]);
            s += slope * (std::pow(t[n] - t[j], 1.0 - alpha) - std::pow(t[n] - t[j + 1], 1.0 - alpha));
        }
        out[n] = scale * s;
    }
    return out;
}

}  // namespace

TEST_CASE("schedule validation and partial orders")
{
    FractionalSchedule s({0.9, 1.0, 0.8});
    CHECK(s.m() == 2);
    CHECK(s.rho(0) == doctest::Approx(-0.1));
    CHECK(s.rho(1) == doctest::Approx(0.9));
    CHECK(s.order() == doctest::Approx(1.7));
    CHECK_THROWS_AS(s.rho(3), IndexError);

    CHECK_THROWS_AS(FractionalSchedule({0.5}), DomainError);
    CHECK_THROWS_AS(FractionalSchedule({0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(FractionalSchedule({1.2, 0.5}), DomainError);
    CHECK_THROWS_AS(FractionalSchedule({0.4, 0.5}), DomainError);
    CHECK_THROWS_AS(FractionalSchedule::hilfer(0.5, 1.5), DomainError);

    CHECK(FractionalSchedule::caputo(0.3) == FractionalSchedule({1.0, 0.3}));
    auto rl = FractionalSchedule::riemann_liouville(1.4, 2);
    CHECK(rl.m() == 2);
    CHECK(rl.zeta(0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(rl.zeta(1) == 1.0);
    CHECK(rl.zeta(2) == 1.0);
}

TEST_CASE("rl_integral power rule examples")
{
    auto t = graded_grid(1.0, 512);
    auto one = rl_integral(sample(t, [](double) { return 1.0; }), 0.5);
    CHECK(max_rel_error(one, 1.0 / std::tgamma(1.5), 0.5, 0.0) <= 1e-12);
    CHECK(one.weight == doctest::Approx(-0.5));

    auto lin = rl_integral(sample(t, [](double x) { return x; }), 0.5);
    CHECK(max_rel_error(lin, 1.0 / std::tgamma(2.5), 1.5, 1e-3) <= 1e-9);
}

TEST_CASE("rl_integral of sin against quadrature oracle")
{
    constexpr double expected = 0.74903216991747084093;
    auto t = graded_grid(1.0, 1024);
    auto r = rl_integral(sample(t, [](double x) { return std::sin(x); }), 0.3);
    CHECK(std::fabs(r.unweighted(t.size() - 1) - expected) <= 1e-9);
}

TEST_CASE("rl_integral rejects malformed grids")
{
    TimeGridFn g;
    g.t = {0.0, 0.3, 0.2, 1.0};
    g.values = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(rl_integral(g, 0.5), GridError);
    g.t = {0.1, 0.2, 0.3, 1.0};
    CHECK_THROWS_AS(rl_integral(g, 0.5), GridError);
    g.t = {0.0, 0.2, 0.3};
    CHECK_THROWS_AS(rl_integral(g, 0.5), GridError);
    auto ok = sample(uniform_grid(1.0, 8), [](double) { return 1.0; });
    CHECK_THROWS_AS(rl_integral(ok, 0.0), DomainError);
    CHECK_THROWS_AS(rl_integral(ok, 1.5), DomainError);
}

TEST_CASE("rl_derivative power rule examples")
{
    auto t = graded_grid(1.0, 2048);
    auto lin = rl_derivative(sample(t, [](double x) { return x; }), 0.5);
    CHECK(max_rel_error(lin, 1.0 / std::tgamma(1.5), 0.5, 1e-3) <= 1e-6);

    auto one = rl_derivative(sample(t, [](double) { return 1.0; }), 0.5);
    CHECK(max_rel_error(one, 1.0 / std::tgamma(0.5), -0.5, 1e-3) <= 1e-6);
    CHECK(one.weight == doctest::Approx(0.5));

    auto d1 = rl_derivative(sample(t, [](double x) { return x * x * x; }), 1.0);
    CHECK(max_rel_error(d1, 3.0, 2.0, 1e-2) <= 1e-6);
}

TEST_CASE("rl_derivative of a Mittag-Leffler series against term-wise oracle")
{
    constexpr double expected = 0.19763280005067158214;
    auto t = graded_grid(0.7, 2048);
    // E_{1/2,1}(-t^{1/2}) = sum_k (-1)^k t^{k/2} / Gamma(k/2 + 1)
    auto g = sample(t, [](double x) {
        double s = 0.0, r = std::sqrt(x);
        for (int k = 0; k < 200; ++k) s += std::pow(-r, k) / std::tgamma(0.5 * k + 1.0);
        return s;
    });
    auto d = rl_derivative(g, 0.5);
    CHECK(std::fabs(d.unweighted(t.size() - 1) - expected) <= 1e-5 * expected);
}

TEST_CASE("rl_derivative resolution flag")
{
    auto coarse = uniform_grid(1.0, 8);
    auto g = sample(coarse, [](double x) { return std::sin(25.0 * x); });
    CHECK_THROWS_AS(rl_derivative(g, 0.5, 1e-6), ResolutionError);
    auto fine = graded_grid(1.0, 2048);
    CHECK_NOTHROW(rl_derivative(sample(fine, [](double x) { return std::exp(x); }), 0.5, 1e-4));
    CHECK_THROWS_AS(rl_derivative(sample(uniform_grid(1.0, 3), [](double x) { return x; }), 0.5), GridError);
}

TEST_CASE("semigroup of integrals")
{
    auto t = graded_grid(1.0, 2048);
    auto g = sample(t, [](double x) { return std::sin(x) + std::exp(-x); });
    for (auto [a, b] : {std::pair{0.3, 0.4}, std::pair{0.5, 0.5}, std::pair{0.1, 0.2}}) {
        auto lhs = rl_integral(rl_integral(g, a), b);
        auto rhs = rl_integral(g, a + b);
        double err = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) err = std::max(err, std::fabs(lhs.unweighted(i) - rhs.unweighted(i)));
        CHECK(err <= 1e-8);
    }
}

TEST_CASE("derivative is a left inverse of the integral")
{
    auto t = graded_grid(1.0, 4096);
    auto g = sample(t, [](double x) { return std::sin(x) + std::cos(3.0 * x); });
    double scale = 0.0;
    for (double v : g.values) scale = std::max(scale, std::fabs(v));
    for (double xi : {0.1, 0.4, 0.9}) {
        auto back = rl_derivative(rl_integral(g, xi), xi);
        double err = 0.0;
        for (std::size_t i = 1; i + 1 < t.size(); ++i) err = std::max(err, std::fabs(back.unweighted(i) - g.values[i]));
        CHECK(err / scale <= 1e-6);
    }
}

TEST_CASE("dn_power_rule examples")
{
    for (double z : {0.2, 0.5, 0.9}) {
        auto r = dn_power_rule(1.0, FractionalSchedule::caputo(z));
        CHECK(r.coef == doctest::Approx(1.0 / std::tgamma(2.0 - z)).epsilon(1e-14));
        CHECK(r.exponent == doctest::Approx(1.0 - z));
        CHECK_FALSE(r.exact_zero);
        CHECK(dn_power_rule(0.0, FractionalSchedule::caputo(z)).exact_zero);
    }
    auto rl = dn_power_rule(0.0, FractionalSchedule::riemann_liouville(0.3));
    CHECK(rl.coef == doctest::Approx(1.0 / std::tgamma(0.7)).epsilon(1e-14));
    CHECK(rl.exponent == doctest::Approx(-0.3));

    CHECK_THROWS_AS(dn_power_rule(0.0, FractionalSchedule({0.9, 0.9, 0.5})), PoleError);
    CHECK_THROWS_AS(dn_power_rule(1.0, FractionalSchedule({0.9, 0.9}), 3), IndexError);
}

TEST_CASE("dn_apply classical examples")
{
    auto t = graded_grid(1.0, 4096);
    for (double z : {0.3, 0.7}) {
        auto caputo = dn_apply(sample(t, [](double x) { return x; }), FractionalSchedule::caputo(z));
        CHECK(max_rel_error(caputo, 1.0 / std::tgamma(2.0 - z), 1.0 - z, 0.1) <= 1e-4);
    }
    for (double mu : {1.0, 1.5, 2.0}) {
        auto rl = dn_apply(sample_power(t, mu), FractionalSchedule::riemann_liouville(0.4));
        double coef = std::tgamma(mu + 1.0) / std::tgamma(mu + 0.6);
        CHECK(max_rel_error(rl, coef, mu - 0.4, 0.1) <= 1e-4);
    }
}

TEST_CASE("dn_apply on a two-stage schedule")
{
    // D^{0.9} t^2 = Gamma(3)/Gamma(2.1) t^{1.1}; d/dt gives 1.1 t^{0.1};
    // J^{0.2} t^{0.1} = Gamma(1.1)/Gamma(1.3) t^{0.3}.
    const double coef = 2.0 / std::tgamma(2.1) * 1.1 * std::tgamma(1.1) / std::tgamma(1.3);
    FractionalSchedule s({0.9, 1.0, 0.8});
    auto r = dn_power_rule(2.0, s);
    CHECK(r.coef == doctest::Approx(coef).epsilon(1e-13));
    CHECK(r.exponent == doctest::Approx(0.3));

    auto t = graded_grid(1.0, 4096);
    auto d = dn_apply(sample(t, [](double x) { return x * x; }), s);
    CHECK(max_rel_error(d, coef, 0.3, 0.1) <= 1e-4);
}

TEST_CASE("dn_apply agrees with the power rule on random schedules")
{
    std::mt19937 rng(20261016);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    auto t = graded_grid(1.0, 4096);
    int compared = 0, schedules = 0;
    while (schedules < 20) {
        std::size_t m = 1 + static_cast<std::size_t>(schedules % 3);
        std::vector<double> z(m + 1);
        for (auto& v : z) v = unit(rng);
        if (schedules % 4 == 0) z[m] = 1.0;
        double total = 0.0;
        for (double v : z) total += v;
        if (total <= 1.0) continue;
        ++schedules;
        FractionalSchedule s(z);
        for (double mu : {0.5, 1.0, 1.5, 2.0, 3.0}) {
            PowerRuleResult pr;
            try {
                pr = dn_power_rule(mu, s);
            } catch (const PoleError&) {
                CHECK_THROWS_AS(dn_apply(sample_power(t, mu), s), StageError);
                continue;
            }
            auto d = dn_apply(sample_power(t, mu), s);
            ++compared;
            if (pr.exact_zero) {
                double big = 0.0;
                for (std::size_t i = 1; i < t.size(); ++i) {
                    if (t[i] >= 0.1) big = std::max(big, std::fabs(d.unweighted(i)));
                }
                CHECK(big <= 1e-4);
            } else {
                INFO("schedule m=" << m << " mu=" << mu);
                CHECK(max_rel_error(d, pr.coef, pr.exponent, 0.1) <= 1e-4);
            }
        }
    }
    CHECK(compared >= 60);
}

TEST_CASE("dn_apply is linear")
{
    const std::vector<std::vector<double>> schedules{
        {0.6, 1.0}, {1.0, 0.4}, {0.8, 0.7}, {0.3, 0.9}, {0.6, 1.0, 0.7}, {0.5, 0.5, 0.5, 0.5}};
    for (const auto& z : schedules) {
        FractionalSchedule s(z);
        for (std::size_t n : {128ul, 1024ul}) {
            if (n > 128 && s.m() > 1) continue;
            auto t = graded_grid(1.0, n);
            auto g = sample(t, [](double x) { return std::sin(2.0 * x); });
            auto h = sample(t, [](double x) { return x * x * std::exp(x); });
            auto lhs = dn_apply(linear_combination(1.5, g, -0.75, h), s);
            auto dg = dn_apply(g, s), dh = dn_apply(h, s);
            double scale = 0.0, err = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                scale = std::max(scale, std::fabs(lhs.values[i]));
                err = std::max(err, std::fabs(lhs.values[i] - (1.5 * dg.values[i] - 0.75 * dh.values[i])));
            }
            INFO("m=" << s.m() << " zeta0=" << z[0] << " nodes=" << n);
            CHECK(err <= 1e-12 * scale);
        }
    }
}

TEST_CASE("dn_apply reports the failing stage")
{
    auto t = graded_grid(1.0, 256);
    // t^{-1.5} is not integrable at the origin.
    auto g = sample_weighted(t, 1.5, [](double x) { return std::pow(x, -1.5); }, 1.0);
    try {
        dn_apply(g, FractionalSchedule({0.5, 0.9}));
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == 0);
    }
}

TEST_CASE("special-case recognition")
{
    auto rl = reduce_special_case(FractionalSchedule({0.3, 1.0}));
    CHECK(rl.kind == ClassicalKind::RiemannLiouville);
    CHECK(rl.order == doctest::Approx(0.3));

    auto cap = reduce_special_case(FractionalSchedule({1.0, 0.3}));
    CHECK(cap.kind == ClassicalKind::Caputo);
    CHECK(cap.order == doctest::Approx(0.3));

    auto hil = reduce_special_case(FractionalSchedule({1.0 - 0.5 * 0.4, 1.0 - 0.5 * 0.6}));
    CHECK(hil.kind == ClassicalKind::Hilfer);
    CHECK(hil.order == doctest::Approx(0.5));
    CHECK(hil.type == doctest::Approx(0.6));

    for (double order : {0.2, 0.5, 0.8})
        for (double type : {0.1, 0.5, 0.9}) {
            auto r = reduce_special_case(FractionalSchedule::hilfer(order, type));
            CHECK(r.kind == ClassicalKind::Hilfer);
            CHECK(r.order == doctest::Approx(order).epsilon(1e-12));
            CHECK(r.type == doctest::Approx(type).epsilon(1e-12));
        }

    auto rl2 = reduce_special_case(FractionalSchedule::riemann_liouville(2.4, 3));
    CHECK(rl2.kind == ClassicalKind::RiemannLiouville);
    CHECK(rl2.order == doctest::Approx(2.4));
    auto cap2 = reduce_special_case(FractionalSchedule::caputo(1.6, 2));
    CHECK(cap2.kind == ClassicalKind::Caputo);
    CHECK(cap2.order == doctest::Approx(1.6));

    CHECK(reduce_special_case(FractionalSchedule({0.9, 0.5, 0.8})).kind == ClassicalKind::General);
    CHECK(std::string(to_string(ClassicalKind::Hilfer)) == "hilfer");
}

TEST_CASE("Caputo reduction agrees with the L1 scheme")
{
    auto t = uniform_grid(1.0, 2000);
    auto f = [](double x) { return std::sin(x) + x * x; };
    for (double alpha : {0.3, 0.6}) {
        auto sched = FractionalSchedule::caputo(alpha);
        REQUIRE(reduce_special_case(sched).kind == ClassicalKind::Caputo);
        auto g = sample(t, f);
        auto d = dn_apply(g, sched);
        auto ref = l1_caputo(t, g.values, alpha);
        double err = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (t[i] >= 0.1) err = std::max(err, std::fabs(d.unweighted(i) - ref[i]) / std::fabs(ref[i]));
        }
        CHECK(err <= 1e-3);
    }
}

TEST_CASE("Laplace identity examples")
{
    const double s2[] = {2.0};
    auto cap = laplace_check(LaplaceTestFunction::power(1.0), FractionalSchedule::caputo(0.5), s2);
    CHECK(cap.rhs[0] == doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(1e-14));
    CHECK(cap.max_rel_err <= 1e-6);

    const double s13[] = {1.0, 3.0};
    auto rl = laplace_check(LaplaceTestFunction::power(0.3), FractionalSchedule::riemann_liouville(0.3), s13);
    for (std::size_t i = 0; i < 2; ++i) {
        double s = s13[i];
        CHECK(rl.rhs[i] == doctest::Approx(std::pow(s, 0.3) * std::tgamma(1.3) * std::pow(s, -1.3)).epsilon(1e-13));
    }
    CHECK(rl.max_rel_err <= 1e-6);

    const double s125[] = {1.0, 2.0, 5.0};
    auto two = laplace_check(LaplaceTestFunction::power(2.0), FractionalSchedule({0.9, 1.0, 0.8}), s125);
    for (std::size_t i = 0; i < 3; ++i) CHECK(two.rhs[i] == doctest::Approx(std::pow(s125[i], 1.7) * 2.0 / std::pow(s125[i], 3)).epsilon(1e-13));
    CHECK(two.max_rel_err <= 1e-6);
}

TEST_CASE("Laplace identity for polynomials with m up to 3")
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unit(0.05, 1.0), coef(-2.0, 2.0);
    const double s[] = {0.5, 1.0, 2.5, 6.0};
    int checked = 0, rejected = 0;
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t m = 1 + static_cast<std::size_t>(trial % 3);
        std::vector<double> z(m + 1);
        for (auto& v : z) v = unit(rng);
        if (trial % 2 == 0) std::fill(z.begin(), z.end() - 1, 1.0);
        double total = 0.0;
        for (double v : z) total += v;
        if (total <= 1.0) continue;
        FractionalSchedule sched(z);
        std::vector<double> c(static_cast<std::size_t>(2 + trial % 4));
        for (auto& v : c) v = coef(rng);
        auto g = LaplaceTestFunction::polynomial(c);

        bool infinite_start = false;
        try {
            for (const auto& term : g.terms) dn_power_rule(term.mu, sched);
        } catch (const PoleError&) {
            // Either precondition may be reported first.
            CHECK_THROWS_AS(laplace_check(g, sched, s), Error);
            ++rejected;
            continue;
        }
        for (std::size_t n = 0; n < m; ++n)
            for (const auto& term : g.terms) {
                auto r = dn_power_rule(term.mu, sched, n);
                if (!r.exact_zero && r.coef != 0.0 && r.exponent < -1e-12) infinite_start = true;
            }
        if (infinite_start) {
            CHECK_THROWS_AS(laplace_check(g, sched, s), DomainError);
            ++rejected;
            continue;
        }
        INFO(g.name() << " m=" << m);
        CHECK(laplace_check(g, sched, s).max_rel_err <= 1e-6);
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("Laplace identity for the exponential")
{
    const double s[] = {0.5, 1.0, 4.0};
    CHECK(laplace_check(LaplaceTestFunction::exponential(1.0), FractionalSchedule::caputo(0.5), s).max_rel_err <= 1e-6);
    CHECK(laplace_check(LaplaceTestFunction::exponential(2.0), FractionalSchedule::riemann_liouville(0.5), s).max_rel_err <= 1e-6);
    CHECK(laplace_check(LaplaceTestFunction::exponential(1.0), FractionalSchedule::caputo(1.7, 2), s).max_rel_err <= 1e-6);
    CHECK_THROWS_AS(laplace_check(LaplaceTestFunction::exponential(1.0), FractionalSchedule({0.9, 1.0, 0.8}), s), DomainError);
}

TEST_CASE("Laplace tail and sample validation")
{
    const double tiny[] = {1e-3};
    CHECK_THROWS_AS(laplace_check(LaplaceTestFunction::power(2.0), FractionalSchedule::caputo(0.5), tiny), TailError);
    const double bad[] = {-1.0};
    CHECK_THROWS_AS(laplace_check(LaplaceTestFunction::power(2.0), FractionalSchedule::caputo(0.5), bad), DomainError);
}
