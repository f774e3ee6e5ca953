#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/time_grid.hpp"

using namespace fracdiff;

TEST_CASE("ml_eval reduces to exp and cos")
{
    CHECK(ml_eval({1.0, 1.0, 1.0}).value == doctest::Approx(2.718281828459045).epsilon(1e-14));
    CHECK(ml_eval({2.0, 1.0, -4.0}).value == doctest::Approx(std::cos(2.0)).epsilon(1e-12));
}

TEST_CASE("ml_eval matches extended-precision oracle")
{
    constexpr double expected = 0.02718613000358643569;
    auto r = ml_eval({0.5, 0.5, -3.0});
    CHECK(std::fabs(r.value - expected) <= 1e-10);
    CHECK(std::fabs(r.value - expected) <= r.abs_error_estimate + 1e-16);
    CHECK(r.abs_error_estimate <= 1e-10);
}

TEST_CASE("ml_eval validates its inputs")
{
    CHECK_THROWS_AS(ml_eval({1.0, 1.0, 1.0}, 1e-3), DomainError);
    CHECK_THROWS_AS(ml_eval({1.0, 1.0, 1.0}, 1e-16), DomainError);
    CHECK_THROWS_AS(ml_eval({0.0, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(ml_eval({-1.0, 1.0, 1.0}), DomainError);
}

TEST_CASE("exp reduction on random arguments")
{
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        double z = dist(rng);
        CHECK(std::fabs(ml_eval({1.0, 1.0, z}).value - std::exp(z)) <= 1e-10);
    }
}

TEST_CASE("cos reduction")
{
    for (double z = 0.0; z <= 12.0; z += 0.125) {
        CHECK(std::fabs(ml_eval({2.0, 1.0, -z * z}).value - std::cos(z)) <= 1e-10);
    }
}

TEST_CASE("closed forms at unit order across the moderate negative range")
{
    for (double x = 1.0; x <= 80.0; x *= 1.3) {
        auto r2 = ml_eval({1.0, 2.0, -x}, 1e-12);
        CHECK(std::fabs(r2.value + std::expm1(-x) / x) <= 1e-12);
        auto r1 = ml_eval({1.0, 1.0, -x}, 1e-12);
        CHECK(std::fabs(r1.value - std::exp(-x)) <= 1e-12);
        double y = std::sqrt(x);
        CHECK(std::fabs(ml_eval({2.0, 2.0, -x}, 1e-12).value - std::sin(y) / y) <= 1e-12);
    }
}

TEST_CASE("every evaluation reports a finite error estimate")
{
    for (double beta : {0.2, 0.5, 0.9, 1.0, 1.3, 1.8})
        for (double zeta : {-0.5, 0.5, 1.0, 2.5})
            for (double z : {-500.0, -40.0, -6.0, -0.5, 0.5, 3.0}) {
                auto r = ml_eval({beta, zeta, z});
                CHECK(std::isfinite(r.value));
                CHECK(std::isfinite(r.abs_error_estimate));
                CHECK(r.abs_error_estimate >= 0.0);
                CHECK(r.abs_error_estimate <= 1e-10 * std::max(1.0, std::fabs(r.value)));
            }
}

TEST_CASE("ml_type_eval examples")
{
    CHECK(ml_type_eval({0.6, 1.0, 0.0, 7.0}).value == 1.0);
    CHECK_THROWS_AS(ml_type_eval({0.6, 0.5, 0.0, 7.0}), SingularAtZero);

    double lhs = ml_type_eval({0.6, 1.6, 2.0, 3.0}).value;
    double rhs = (1.0 - ml_eval({0.6, 1.0, -3.0 * std::pow(2.0, 0.6)}).value) / 3.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    constexpr double expected = 0.053398230926744799218;
    CHECK(std::fabs(ml_type_eval({0.5, 0.5, 1.0, 2.0}).value - expected) <= 1e-10);

    CHECK_THROWS_AS(ml_type_eval({0.5, 1.0, 1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(ml_type_eval({0.5, 1.0, -1.0, 1.0}), DomainError);
}

TEST_CASE("antiderivative identity on random parameters")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ub(0.05, 0.95), ut(1e-3, 2.0), ul(1e-3, 50.0);
    for (int i = 0; i < 300; ++i) {
        double beta = ub(rng), t = ut(rng), lambda = ul(rng);
        double a = lambda * ml_type_eval({beta, beta + 1.0, t, lambda}).value;
        double b = 1.0 - ml_type_eval({beta, 1.0, t, lambda}).value;
        CHECK(std::fabs(a - b) <= 1e-9);
    }
}

TEST_CASE("e_{beta,1} lies strictly between 0 and 1")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ub(0.05, 0.95), ut(1e-3, 5.0), ul(1e-3, 1e3);
    for (int i = 0; i < 300; ++i) {
        double v = ml_type_eval({ub(rng), 1.0, ut(rng), ul(rng)}).value;
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        double inv = 1.0 / (1.0 - v);
        CHECK(std::isfinite(inv));
        CHECK(inv > 0.0);
    }
}

TEST_CASE("monotone decay on the negative axis")
{
    for (double beta : {0.1, 0.4, 0.7, 0.95, 1.0}) {
        double prev = ml_eval({beta, 1.0, 0.0}).value;
        for (double x = 1e-3; x <= 1e4; x *= 1.1) {
            double v = ml_eval({beta, 1.0, -x}).value;
            if (prev > 0.0) {
                CHECK(v < prev);
            } else {
                CHECK(v == 0.0);
            }
            prev = v;
        }
    }
}

TEST_CASE("bound samples and fitted constant")
{
    auto s0 = check_ml_bound({0.7, 1.0, 0.0});
    CHECK(s0.lhs == 1.0);
    CHECK(s0.rhs_shape == 1.0);

    auto s1 = check_ml_bound({0.7, 1.0, -10.0});
    CHECK(s1.lhs < 1.0);

    CHECK_THROWS_AS(check_ml_bound({2.0, 1.0, -1.0}), DomainError);
    CHECK_THROWS_AS(check_ml_bound({0.5, 1.0, 1.0}), DomainError);

    std::vector<double> zs{0.0};
    for (double x = 1e-3; x <= 1e4; x *= 1.25) zs.push_back(-x);
    double c = fit_ml_bound_constant(0.5, 0.5, zs);
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);
    auto s = check_ml_bound({0.5, 0.5, -100.0});
    CHECK(s.lhs <= c * s.rhs_shape);
    CHECK(s.lhs * 101.0 <= c);
}

TEST_CASE("conv_ml of the zero function")
{
    auto t = uniform_grid(1.0, 50);
    std::vector<double> zero(t.size(), 0.0);
    for (double v : conv_ml(zero, 0.5, t, 2.0)) CHECK(v == 0.0);
}

TEST_CASE("conv_ml of a constant is the antiderivative kernel")
{
    for (auto t : {uniform_grid(2.0, 80), graded_grid(2.0, 80)}) {
        std::vector<double> one(t.size(), 1.0);
        auto c = conv_ml(one, 0.7, t, 3.0);
        for (std::size_t i = 1; i < t.size(); ++i) {
            double ref = ml_type_eval({0.7, 1.7, t[i], 3.0}).value;
            CHECK(std::fabs(c[i] - ref) <= 1e-9);
        }
    }
}

TEST_CASE("conv_ml of t against quadrature oracle")
{
    const double nodes[] = {0.25, 0.5, 1.0};
    const double expected[] = {0.070120072259317838181, 0.17895885546688790076, 0.44403725674868042169};
    auto t = uniform_grid(1.0, 400);
    std::vector<double> g(t.begin(), t.end());
    auto c = conv_ml(g, 0.5, t, 1.0);
    for (int k = 0; k < 3; ++k) {
        std::size_t i = static_cast<std::size_t>(std::lround(nodes[k] * 400));
        CHECK(std::fabs(c[i] - expected[k]) <= 1e-9);
    }

    auto tg = graded_grid(1.0, 200);
    std::vector<double> gg(tg.begin(), tg.end());
    auto cg = conv_ml(gg, 0.5, tg, 1.0);
    CHECK(std::fabs(cg.back() - expected[2]) <= 1e-9);
}

TEST_CASE("conv_ml is linear")
{
    auto t = graded_grid(1.5, 120);
    std::vector<double> g(t.size()), h(t.size()), mix(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        g[i] = std::sin(3.0 * t[i]);
        h[i] = t[i] * t[i] - 0.5;
        mix[i] = 2.5 * g[i] - 1.25 * h[i];
    }
    MLConvolution conv(0.4, 5.0, t);
    auto cg = conv.apply(g), ch = conv.apply(h), cm = conv.apply(mix);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::fabs(cm[i] - (2.5 * cg[i] - 1.25 * ch[i])) <= 1e-12);
}

TEST_CASE("conv_ml rejects malformed grids")
{
    std::vector<double> bad{0.0, 0.5, 0.4, 1.0};
    std::vector<double> g(4, 1.0);
    CHECK_THROWS_AS(conv_ml(g, 0.5, bad, 1.0), GridError);
    std::vector<double> shifted{0.1, 0.5, 1.0};
    CHECK_THROWS_AS(conv_ml(std::vector<double>(3, 1.0), 0.5, shifted, 1.0), GridError);
    CHECK_THROWS_AS(conv_ml(g, 0.5, uniform_grid(1.0, 4), 1.0), GridError);
    CHECK_THROWS_AS(conv_ml(g, 0.5, uniform_grid(1.0, 3), -1.0), DomainError);
}

TEST_CASE("conv_ml on a fine graded grid against quadrature oracle")
{
    // Kernel e_{0.95,0.95}(.; 50) against cos 3t.
    auto t = graded_grid(1.0, 1024);
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = std::cos(3.0 * t[i]);
    auto c = conv_ml(g, 0.95, t, 50.0);
    CHECK(std::fabs(c[512] - 0.015241432314151353797) <= 1e-7);
    CHECK(std::fabs(c[1024] + 0.019494317034802799548) <= 1e-7);
}
