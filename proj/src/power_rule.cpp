#include <cmath>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/frac_calculus.hpp"
#include "fracdiff/mittag_leffler.hpp"

namespace fracdiff {

namespace {

constexpr double kPoleTol = 1e-12;

bool near_nonpositive_integer(double x)
{
    double r = std::round(x);
    return r <= 0.0 && std::abs(x - r) <= kPoleTol;
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

}  // namespace

PowerRuleResult dn_power_rule(double mu, const FractionalSchedule& sched)
{
    return dn_power_rule(mu, sched, sched.m());
}

PowerRuleResult dn_power_rule(double mu, const FractionalSchedule& sched, std::size_t upto)
{
    if (upto > sched.m()) throw IndexError("partial operator index exceeds m");
    PowerRuleResult res;
    res.exponent = mu - sched.rho(upto);
    double nu = mu;
    double coef = 1.0;
    auto require_integrable = [&](std::size_t stage) {
        if (!(nu > -1.0)) {
            std::ostringstream msg;
            msg << "stage " << stage << " integrates t^" << nu << ", which is not integrable at 0";
            throw PoleError(msg.str());
        }
    };
    for (std::size_t j = 0; j < upto; ++j) {
        double z = sched.zeta(j);
        if (z == 1.0) {
            if (std::abs(nu) <= kPoleTol) {
                res.exact_zero = true;
                return res;
            }
            coef *= nu;
        } else {
            require_integrable(j);
            double x = nu + 1.0 - z;
            if (near_nonpositive_integer(x)) {
                res.exact_zero = true;
                return res;
            }
            coef *= std::tgamma(nu + 1.0) / std::tgamma(x);
        }
        nu -= z;
    }
    double a = 1.0 - sched.zeta(upto);
    if (a > 0.0) {
        require_integrable(upto);
        coef *= std::tgamma(nu + 1.0) / std::tgamma(nu + 1.0 + a);
    }
    res.coef = coef;
    return res;
}

const char* to_string(ClassicalKind k) noexcept
{
    switch (k) {
    case ClassicalKind::RiemannLiouville: return "riemann-liouville";
    case ClassicalKind::Caputo: return "caputo";
    case ClassicalKind::Hilfer: return "hilfer";
    case ClassicalKind::General: return "general";
    }
    return "unknown";
}

ClassicalReduction reduce_special_case(const FractionalSchedule& sched)
{
    const std::size_t m = sched.m();
    const double md = static_cast<double>(m);
    auto all_one = [&](std::size_t from, std::size_t to) {
        for (std::size_t j = from; j <= to; ++j) {
            if (!near(sched.zeta(j), 1.0)) return false;
        }
        return true;
    };
    if (all_one(1, m)) return {ClassicalKind::RiemannLiouville, sched.zeta(0) + md - 1.0, 0.0};
    if (all_one(0, m - 1)) return {ClassicalKind::Caputo, sched.zeta(m) + md - 1.0, 0.0};
    if (m == 1 || all_one(1, m - 1)) {
        double gap = 2.0 - sched.zeta(0) - sched.zeta(m);  // m - order
        if (gap > 1e-12 && gap < 1.0 - 1e-12) {
            return {ClassicalKind::Hilfer, md - gap, (1.0 - sched.zeta(m)) / gap};
        }
    }
    return {};
}

LaplaceTestFunction LaplaceTestFunction::power(double mu, double coef)
{
    if (!(mu > -1.0)) throw DomainError("power test function needs mu > -1");
    LaplaceTestFunction f;
    f.terms.push_back({coef, mu});
    return f;
}

LaplaceTestFunction LaplaceTestFunction::polynomial(std::vector<double> coefs)
{
    LaplaceTestFunction f;
    for (std::size_t k = 0; k < coefs.size(); ++k) {
        if (coefs[k] != 0.0) f.terms.push_back({coefs[k], static_cast<double>(k)});
    }
    return f;
}

LaplaceTestFunction LaplaceTestFunction::exponential(double rate)
{
    if (!(rate > 0.0)) throw DomainError("exponential test function needs a positive rate");
    LaplaceTestFunction f;
    f.kind = Kind::Exponential;
    f.rate = rate;
    return f;
}

double LaplaceTestFunction::transform(double s) const
{
    if (kind == Kind::Exponential) return 1.0 / (s + rate);
    double sum = 0.0;
    for (const auto& term : terms) sum += term.coef * std::tgamma(term.mu + 1.0) * std::pow(s, -term.mu - 1.0);
    return sum;
}

std::string LaplaceTestFunction::name() const
{
    std::ostringstream os;
    if (kind == Kind::Exponential) {
        os << "exp(-" << rate << " t)";
        return os.str();
    }
    if (terms.empty()) return "0";
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i > 0) os << " + ";
        os << terms[i].coef << " t^" << terms[i].mu;
    }
    return os.str();
}

namespace {

struct PowerTerm {
    double coef;
    double exponent;
};

// The operator image as a finite sum of powers (power sums), or the
// exponential's image split into the Mittag-Leffler series and the finitely
// many low-order terms that the stages annihilate.
std::vector<PowerTerm> image_power_terms(const LaplaceTestFunction& g, const FractionalSchedule& sched,
                                         std::size_t n)
{
    std::vector<PowerTerm> out;
    if (g.kind == LaplaceTestFunction::Kind::PowerSum) {
        for (const auto& term : g.terms) {
            PowerRuleResult r = dn_power_rule(term.mu, sched, n);
            if (!r.exact_zero && r.coef != 0.0) out.push_back({term.coef * r.coef, r.exponent});
        }
    }
    return out;
}

// Terms k of exp(-a t) = sum (-a t)^k / k! that the operator kills although
// the plain series t^{-rho} E_{1,1-rho}(-a t) keeps them.
std::vector<PowerTerm> killed_exponential_terms(const LaplaceTestFunction& g, const FractionalSchedule& sched,
                                                std::size_t n)
{
    std::vector<PowerTerm> out;
    const double rho = sched.rho(n);
    for (std::size_t k = 0; k <= sched.m() + 1; ++k) {
        double kd = static_cast<double>(k);
        PowerRuleResult r = dn_power_rule(kd, sched, n);
        double full = rgamma(kd + 1.0 - rho);
        if (r.exact_zero && full != 0.0) out.push_back({std::pow(-g.rate, kd) * full, kd - rho});
    }
    return out;
}

// Surviving low-order terms of the exponential's image (used for t -> 0).
std::vector<PowerTerm> leading_exponential_terms(const LaplaceTestFunction& g, const FractionalSchedule& sched,
                                                 std::size_t n)
{
    std::vector<PowerTerm> out;
    for (std::size_t k = 0; k <= sched.m() + 1; ++k) {
        double kd = static_cast<double>(k);
        PowerRuleResult r = dn_power_rule(kd, sched, n);
        if (!r.exact_zero && r.coef != 0.0) {
            out.push_back({std::pow(-g.rate, kd) / std::tgamma(kd + 1.0) * r.coef, r.exponent});
        }
    }
    return out;
}

double initial_value(const LaplaceTestFunction& g, const FractionalSchedule& sched, std::size_t n)
{
    std::vector<PowerTerm> terms = g.kind == LaplaceTestFunction::Kind::PowerSum
                                       ? image_power_terms(g, sched, n)
                                       : leading_exponential_terms(g, sched, n);
    double value = 0.0;
    for (const auto& term : terms) {
        if (std::abs(term.exponent) <= 1e-12) {
            value += term.coef;
        } else if (term.exponent < 0.0) {
            std::ostringstream msg;
            msg << "initial value of partial operator " << n << " is infinite (term t^" << term.exponent << ")";
            throw DomainError(msg.str());
        }
    }
    return value;
}

}  // namespace

double dn_closed_form(const LaplaceTestFunction& g, const FractionalSchedule& sched, std::size_t n, double t)
{
    if (!(t >= 0.0)) throw DomainError("closed-form operator image needs t >= 0");
    if (t == 0.0) return initial_value(g, sched, n);
    double sum = 0.0;
    if (g.kind == LaplaceTestFunction::Kind::PowerSum) {
        for (const auto& term : image_power_terms(g, sched, n)) sum += term.coef * std::pow(t, term.exponent);
        return sum;
    }
    if (g.rate * t <= 1.0) {
        // Term-wise power rule on the Taylor series avoids the cancellation
        // between the Mittag-Leffler form and the annihilated terms.
        double factor = 1.0;
        for (int k = 0; k < 40; ++k) {
            PowerRuleResult r = dn_power_rule(static_cast<double>(k), sched, n);
            if (!r.exact_zero) sum += factor * r.coef * std::pow(t, r.exponent);
            factor *= -g.rate / (k + 1);
        }
        return sum;
    }
    const double rho = sched.rho(n);
    sum = std::pow(t, -rho) * ml_eval({1.0, 1.0 - rho, -g.rate * t}, 1e-11).value;
    for (const auto& term : killed_exponential_terms(g, sched, n)) sum -= term.coef * std::pow(t, term.exponent);
    return sum;
}

LaplaceCheckReport laplace_check(const LaplaceTestFunction& g, const FractionalSchedule& sched,
                                 std::span<const double> s_samples)
{
    const std::size_t m = sched.m();
    const double rho_m = sched.order();

    std::vector<double> init(m);
    for (std::size_t k = 1; k <= m; ++k) init[k - 1] = initial_value(g, sched, m - k);

    std::vector<PowerTerm> envelope = g.kind == LaplaceTestFunction::Kind::PowerSum
                                          ? image_power_terms(g, sched, m)
                                          : leading_exponential_terms(g, sched, m);
    for (const auto& term : envelope) {
        if (!(term.exponent > -1.0)) {
            throw DomainError("operator image is not integrable at t = 0, no Laplace transform");
        }
    }

    auto image = [&](double t) { return dn_closed_form(g, sched, m, t); };
    boost::math::quadrature::tanh_sinh<double> finite;
    boost::math::quadrature::exp_sinh<double> infinite;

    LaplaceCheckReport rep;
    rep.s_samples.assign(s_samples.begin(), s_samples.end());
    for (double s : s_samples) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("Laplace samples must be positive");

        double rhs = std::pow(s, rho_m) * g.transform(s);
        const double scale = std::abs(rhs);
        for (std::size_t k = 1; k <= m; ++k) rhs -= std::pow(s, rho_m - sched.rho(m - k) - 1.0) * init[k - 1];
        const double floor = std::max(std::abs(rhs), scale);

        auto weighted = [&](double t) { return std::exp(-s * t) * image(t); };
        double t_star = std::max(1.0, 30.0 / s);
        double tail = 0.0;
        for (;; t_star *= 2.0) {
            if (t_star > 1e4) {
                throw TailError("Laplace integral tail above tolerance at s = " + std::to_string(s));
            }
            if (g.kind == LaplaceTestFunction::Kind::PowerSum) {
                tail = 0.0;
                for (const auto& term : envelope) {
                    tail += std::abs(term.coef) * boost::math::tgamma(term.exponent + 1.0, s * t_star) *
                            std::pow(s, -term.exponent - 1.0);
                }
            } else {
                tail = std::abs(infinite.integrate([&](double u) { return weighted(t_star + u); }, 1e-10));
            }
            if (tail <= 1e-13 * floor) break;
        }

        double split = std::min(1.0 / s, t_star);
        double lhs = finite.integrate(weighted, 0.0, split, 1e-13);
        if (split < t_star) lhs += finite.integrate(weighted, split, t_star, 1e-13);

        rep.lhs.push_back(lhs);
        rep.rhs.push_back(rhs);
        rep.max_rel_err = std::max(rep.max_rel_err, std::abs(lhs - rhs) / floor);
    }
    return rep;
}

}  // namespace fracdiff
