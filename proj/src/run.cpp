#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <variant>

#include "fracdiff/cli_harness.hpp"
#include "fracdiff/direct_solver.hpp"
#include "fracdiff/errors.hpp"
#include "fracdiff/frac_calculus.hpp"
#include "fracdiff/inverse_space.hpp"
#include "fracdiff/inverse_time.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/spectral_basis.hpp"
#include "fracdiff/time_grid.hpp"
#include "fracdiff/verification.hpp"

namespace fracdiff {

namespace {

namespace fs = std::filesystem;

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string csv_cell(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", *d);
        return buf;
    }
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

nlohmann::json json_cell(const Cell& c)
{
    return std::visit([](const auto& v) { return nlohmann::json(v); }, c);
}

std::string write_table(const Table& table, const fs::path& dir, OutputFormat format)
{
    const fs::path path = dir / (table.name + (format == OutputFormat::csv ? ".csv" : ".json"));
    std::ofstream out(path, std::ios::binary);
    if (format == OutputFormat::csv) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
            out << '\n';
        }
    } else {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : table.rows) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& c : row) r.push_back(json_cell(c));
            rows.push_back(std::move(r));
        }
        out << nlohmann::json{{"columns", table.columns}, {"rows", std::move(rows)}}.dump(1) << '\n';
    }
    if (!out) throw Error("cannot write " + path.string());
    return path.string();
}

const char* family_name(Family f)
{
    switch (f) {
    case Family::first: return "first";
    case Family::odd: return "odd";
    case Family::even: return "even";
    }
    return "?";
}

Table series_table(std::string name, const SineSeries& s, const SpectralBasis& basis)
{
    Table t{std::move(name), {"k", "family", "coefficient"}, {}};
    for (const Mode m : basis.modes()) {
        t.rows.push_back({static_cast<long long>(m.k), std::string(family_name(m.family)), s.at(m)});
    }
    return t;
}

Table time_table(std::string name, std::span<const double> t, std::span<const double> v)
{
    Table out{std::move(name), {"t", "value"}, {}};
    for (std::size_t j = 0; j < t.size(); ++j) out.rows.push_back({t[j], v[j]});
    return out;
}

Table field_table(std::string name, const SpaceTimeField& f, std::size_t stride)
{
    Table out{std::move(name), {"x", "t", "value"}, {}};
    for (std::size_t j = 0; j < f.t.size(); ++j) {
        if (j % stride != 0 && j + 1 != f.t.size()) continue;
        for (std::size_t i = 0; i < f.x.size(); ++i) out.rows.push_back({f.x[i], f.t[j], f.at(i, j)});
    }
    return out;
}

// Collects tables, checks and timings while a mode runs.
struct Session {
    RunReport& report;
    std::vector<Table> tables;

    void check(std::string name, double value, double threshold, bool upper = true)
    {
        const bool ok = upper ? value <= threshold : value >= threshold;
        report.checks.push_back({std::move(name), value, threshold, upper, ok && std::isfinite(value)});
    }

    template <class F>
    auto timed(const std::string& label, F&& body)
    {
        const auto start = std::chrono::steady_clock::now();
        struct Record {
            RunReport& r;
            std::string label;
            std::chrono::steady_clock::time_point start;
            ~Record()
            {
                r.timings.emplace_back(label,
                                       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            }
        } record{report, label, start};
        return body();
    }
};

struct Setup {
    SpectralBasis basis;
    std::vector<double> x;
    std::vector<double> t;
    ProblemSpec spec;
};

Setup pde_setup(const RunConfig& c, bool with_amplitude)
{
    const auto& p = c.problem;
    Setup s{SpectralBasis(p.epsilon, c.numerics.K), space_grid(c.numerics.N_space),
            graded_grid(p.T, c.numerics.N_time, c.numerics.grid_gamma), {}};
    s.spec.epsilon = p.epsilon;
    s.spec.sched = FractionalSchedule(p.schedule);
    s.spec.T = p.T;
    for (std::size_t n = 0; n < s.spec.sched.m(); ++n) {
        const SpaceProfile prof = p.initial.empty() ? SpaceProfile{} : p.initial[n];
        s.spec.phis.push_back(sample_space(s.x, prof));
    }
    const auto profile = sample_space(s.x, p.source);
    if (with_amplitude) {
        const TimeFunction amp = p.amplitude.value_or(TimeFunction{{{0.0, 1.0}}, {}, {}});
        std::vector<double> a;
        for (double v : s.t) a.push_back(amp(v));
        s.spec.source = SeparableSource{std::move(a), SpaceTimeField::constant_in_time(profile, s.t)};
    } else {
        s.spec.source = SpaceOnlySource{profile};
    }
    return s;
}

// Power sums and the plain decaying exponential have closed-form images.
bool has_closed_form(const TimeFunction& f)
{
    if (!f.sine.empty()) return false;
    if (f.exp.empty()) return true;
    return f.power.empty() && f.exp.size() == 1 && f.exp.begin()->second == 1.0;
}

LaplaceTestFunction laplace_function(const TimeFunction& f)
{
    if (!f.exp.empty()) return LaplaceTestFunction::exponential(f.exp.begin()->first);
    LaplaceTestFunction g;
    for (const auto& [mu, coef] : f.power) g.terms.push_back({coef, mu});
    return g;
}

void run_mlf(const RunConfig& c, Session& s)
{
    const auto& p = c.problem;
    Table t{"mlf", {"beta", "zeta", "z", "value"}, {}};
    double non_finite = 0.0;
    s.timed("mlf", [&] {
        for (double z : p.z) {
            const double v = ml_eval({p.beta, p.zeta, z}, c.numerics.tol).value;
            non_finite += std::isfinite(v) ? 0.0 : 1.0;
            t.rows.push_back({p.beta, p.zeta, z, v});
        }
    });
    s.tables.push_back(std::move(t));
    s.check("non_finite_values", non_finite, 0.0);
}

void run_dn_apply(const RunConfig& c, Session& s)
{
    const auto& p = c.problem;
    const FractionalSchedule sched(p.schedule);
    const auto t = graded_grid(p.T, c.numerics.N_time, c.numerics.grid_gamma);
    const auto d = s.timed("dn_apply", [&] { return dn_apply(sample(t, p.function), sched); });
    s.tables.push_back(time_table("dn", t, d.unweighted()));
    if (has_closed_form(p.function)) {
        const auto g = laplace_function(p.function);
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (t[i] < 0.1 * p.T) continue;
            const double ref = dn_closed_form(g, sched, sched.m(), t[i]);
            err = std::max(err, std::abs(d.unweighted(i) - ref));
            scale = std::max(scale, std::abs(ref));
        }
        s.report.metrics["closed_form_abs_err"] = err;
        s.check("closed_form_rel_err", scale > 0.0 ? err / scale : err, 1e-4);
    }
}

void run_reduce(const RunConfig& c, Session& s)
{
    const FractionalSchedule sched(c.problem.schedule);
    const auto r = reduce_special_case(sched);
    Table orders{"schedule", {"n", "zeta", "rho"}, {}};
    for (std::size_t n = 0; n <= sched.m(); ++n)
        orders.rows.push_back({static_cast<long long>(n), sched.zeta(n), sched.rho(n)});
    s.tables.push_back(std::move(orders));
    s.tables.push_back({"reduction", {"kind", "order", "type"}, {{std::string(to_string(r.kind)), r.order, r.type}}});
}

void run_laplace(const RunConfig& c, Session& s)
{
    const auto& p = c.problem;
    const auto rep = s.timed("laplace_check", [&] {
        return laplace_check(laplace_function(p.function), FractionalSchedule(p.schedule), p.s);
    });
    Table t{"laplace", {"s", "lhs", "rhs"}, {}};
    for (std::size_t i = 0; i < rep.s_samples.size(); ++i) t.rows.push_back({rep.s_samples[i], rep.lhs[i], rep.rhs[i]});
    s.tables.push_back(std::move(t));
    s.check("max_rel_err", rep.max_rel_err, 1e-6);
}

void run_direct(const RunConfig& c, Session& s)
{
    auto st = pde_setup(c, c.problem.amplitude.has_value());
    const auto sol = s.timed("solve_direct", [&] { return solve_direct(st.spec, st.basis, st.t, st.x); });
    s.report.warnings.insert(s.report.warnings.end(), sol.warnings.begin(), sol.warnings.end());
    s.tables.push_back(field_table("u", sol.u, c.output.time_stride));
    for (std::size_t n = 0; n < sol.initial_coefficients.size(); ++n)
        s.tables.push_back(series_table("initial_" + std::to_string(n) + "_coefficients", sol.initial_coefficients[n], st.basis));
    if (!c.problem.amplitude) s.tables.push_back(series_table("source_coefficients", sol.source_coefficients, st.basis));

    const double residual = s.timed("pde_residual", [&] { return pde_residual(sol, st.spec, 1e-3 * st.spec.T); });
    double boundary = 0.0;
    for (std::size_t j = 0; j < st.t.size(); ++j)
        boundary = std::max({boundary, std::abs(sol.weighted.at(0, j)), std::abs(sol.weighted.at(st.x.size() - 1, j))});
    s.check("pde_residual_interior", residual, 1e-2);
    s.check("boundary_abs", boundary, 1e-10);
}

void run_inverse_space(const RunConfig& c, Session& s)
{
    auto st = pde_setup(c, false);
    std::optional<SineSeries> truth;
    SpaceGridFn psi;
    if (c.problem.final_data) {
        psi = sample_space(st.x, *c.problem.final_data);
    } else {
        const auto sol = s.timed("forward_solve", [&] { return solve_direct(st.spec, st.basis, st.t, st.x); });
        psi = sol.u.at_time(st.t.size() - 1);
        truth = project(std::get<SpaceOnlySource>(st.spec.source).f, st.basis);
    }
    const auto rec = s.timed("recover_f", [&] {
        return recover_f(st.spec, FinalData{psi, st.spec.T}, st.basis, RecoveryOptions{c.numerics.smooth_end_check});
    });
    s.tables.push_back(series_table("f_recovered", rec.f, st.basis));
    Table grid{"f_recovered_grid", {"x", "value"}, {}};
    for (std::size_t i = 0; i < st.x.size(); ++i) grid.rows.push_back({st.x[i], rec.f_grid.values[i]});
    s.tables.push_back(std::move(grid));
    Table den{"denominators", {"k", "family", "denominator"}, {}};
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rec.modes.size(); ++i) {
        den.rows.push_back({static_cast<long long>(rec.modes[i].k), std::string(family_name(rec.modes[i].family)), rec.denominators[i]});
        smallest = std::min(smallest, rec.denominators[i]);
    }
    s.tables.push_back(std::move(den));
    s.report.metrics["min_denominator"] = smallest;
    s.report.metrics["decay_constant"] = decay_constant(rec.f);
    s.check("denominators_positive", smallest > 0.0 ? 1.0 : 0.0, 1.0, false);
    if (truth) {
        s.tables.push_back(series_table("f_true", *truth, st.basis));
        const double diff = linear_combination(1.0, rec.f, -1.0, *truth).norm();
        if (truth->norm() > 0.0) s.check("coefficient_rel_l2", diff / truth->norm(), 1e-5);
        else s.check("zero_source_norm", diff, 1e-8);
    }
}

void run_inverse_time(const RunConfig& c, Session& s)
{
    auto st = pde_setup(c, true);
    const auto& a_true = std::get<SeparableSource>(st.spec.source).a;
    const auto sol = s.timed("forward_solve", [&] { return solve_direct(st.spec, st.basis, st.t, st.x); });
    const auto data = energy_data_of(sol, st.spec.sched);
    const auto sys = s.timed("build_volterra", [&] { return build_volterra(st.spec, st.basis, st.t); });
    const auto rec = s.timed("picard_solve", [&] { return picard_solve(sys, data, c.numerics.tol, c.numerics.max_iter); });
    s.report.warnings.insert(s.report.warnings.end(), rec.warnings.begin(), rec.warnings.end());

    s.tables.push_back(time_table("a_recovered", st.t, rec.a));
    s.tables.push_back(time_table("a_true", st.t, a_true));
    s.tables.push_back(time_table("energy", st.t, data.E.unweighted()));
    Table trace{"picard_trace", {"iteration", "update_norm"}, {}};
    for (std::size_t k = 0; k < rec.update_norms.size(); ++k)
        trace.rows.push_back({static_cast<long long>(k + 1), rec.update_norms[k]});
    s.tables.push_back(std::move(trace));

    double err = 0.0;
    for (std::size_t j = 0; j < st.t.size(); ++j) err = std::max(err, std::abs(rec.a[j] - a_true[j]) / std::abs(a_true[j]));
    s.report.metrics["contraction_factor"] = sys.contraction_factor();
    s.report.metrics["iterations"] = static_cast<double>(rec.iterations);
    s.check("sup_rel_err", err, 1e-3);
    s.check("picard_ratio_below_one", rec.contraction_estimate, 1.0 - 1e-12);
    s.check("picard_ratio_minus_bound", rec.contraction_estimate - sys.contraction_factor(), 0.05);
    s.check("volterra_residual_over_tol", volterra_residual(sys, data, rec.a) / c.numerics.tol, 10.0);
}

void run_verify_all(const RunConfig& c, Session& s)
{
    Table t{"verification", {"criterion", "check", "metric", "value", "threshold", "passed"}, {}};
    for (const auto& r : s.timed("verify_all", [&] { return verify_all({c.numerics.seed}); })) {
        const std::string prefix = "C" + std::to_string(r.criterion) + ".";
        if (!r.error.empty()) {
            s.report.warnings.push_back(prefix + r.name + ": " + r.error);
            s.check(prefix + "completed", 0.0, 1.0, false);
        }
        for (const auto& m : r.metrics) {
            t.rows.push_back({static_cast<long long>(r.criterion), r.name, m.name, m.value, m.threshold,
                              std::string(m.passed() ? "true" : "false")});
            s.check(prefix + m.name, m.value, m.threshold, m.upper_bound);
        }
    }
    s.tables.push_back(std::move(t));
}

nlohmann::json report_json(const RunReport& r)
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"comparison", c.upper_bound ? "<=" : ">="},
                          {"passed", c.passed}});
    }
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [k, v] : r.timings) timings[k] = v;
    return {{"mode", std::string(to_string(r.config.mode))},
            {"config", to_yaml(r.config)},
            {"passed", r.passed()},
            {"checks", std::move(checks)},
            {"metrics", r.metrics},
            {"timings_s", std::move(timings)},
            {"artifacts", r.artifacts},
            {"warnings", r.warnings},
            {"error", r.error}};
}

}  // namespace

bool RunReport::passed() const
{
    return error.empty() && std::all_of(checks.begin(), checks.end(), [](const HardCheck& c) { return c.passed; });
}

RunReport run(const RunConfig& config)
{
    RunReport report;
    report.config = config;
    Session session{report, {}};
    const fs::path dir = config.output.directory;
    fs::create_directories(dir);

    static const std::map<RunMode, std::function<void(const RunConfig&, Session&)>> dispatch{
        {RunMode::mlf, run_mlf},
        {RunMode::dn_apply, run_dn_apply},
        {RunMode::reduce, run_reduce},
        {RunMode::laplace_check, run_laplace},
        {RunMode::direct, run_direct},
        {RunMode::inverse_space, run_inverse_space},
        {RunMode::inverse_time, run_inverse_time},
        {RunMode::verify_all, run_verify_all},
    };
    try {
        dispatch.at(config.mode)(config, session);
    } catch (const std::exception& e) {
        report.error = std::string(to_string(config.mode)) + ": " + e.what();
    }
    session.check("completed", report.error.empty() ? 1.0 : 0.0, 1.0, false);

    for (const auto& t : session.tables) report.artifacts.push_back(write_table(t, dir, config.output.format));
    const fs::path report_path = dir / "report.json";
    report.artifacts.push_back(report_path.string());
    std::ofstream(report_path) << report_json(report).dump(2) << '\n';
    return report;
}

}  // namespace fracdiff
