#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fracdiff/cli_harness.hpp"
#include "fracdiff/errors.hpp"
#include "fracdiff/frac_calculus.hpp"

namespace fracdiff {

namespace {

constexpr std::array<std::pair<RunMode, std::string_view>, 8> kModeNames{{
    {RunMode::mlf, "mlf"},
    {RunMode::dn_apply, "dn-apply"},
    {RunMode::reduce, "reduce"},
    {RunMode::laplace_check, "laplace-check"},
    {RunMode::direct, "direct"},
    {RunMode::inverse_space, "inverse-space"},
    {RunMode::inverse_time, "inverse-time"},
    {RunMode::verify_all, "verify-all"},
}};

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

std::string join_path(const std::string& parent, const std::string& key)
{
    return parent.empty() ? key : parent + "." + key;
}

void require_map(const YAML::Node& n, const std::string& path)
{
    if (!n.IsMap()) throw ParseError(path + " must be a mapping", path, line_of(n));
}

void reject_unknown(const YAML::Node& map, const std::string& path, std::initializer_list<std::string_view> known)
{
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ParseError("unknown key '" + join_path(path, key) + "'", join_path(path, key), line_of(kv.first));
        }
    }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& path, const char* expected)
{
    if (!n.IsScalar()) throw ParseError(path + " must be " + expected, path, line_of(n));
    try {
        return n.as<T>();
    } catch (const YAML::BadConversion&) {
        throw ParseError(path + " must be " + expected + ", got '" + n.Scalar() + "'", path, line_of(n));
    }
}

double number(const YAML::Node& n, const std::string& path) { return scalar<double>(n, path, "a number"); }

std::size_t count(const YAML::Node& n, const std::string& path)
{
    const auto v = scalar<long long>(n, path, "an integer");
    if (v < 0) throw ParseError(path + " must be a non-negative integer", path, line_of(n));
    return static_cast<std::size_t>(v);
}

std::vector<double> numbers(const YAML::Node& n, const std::string& path)
{
    if (n.IsScalar()) return {number(n, path)};
    if (!n.IsSequence()) throw ParseError(path + " must be a number or a list of numbers", path, line_of(n));
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

template <class Key>
std::map<Key, double> coefficient_map(const YAML::Node& n, const std::string& path, const char* key_kind)
{
    require_map(n, path);
    std::map<Key, double> out;
    for (const auto& kv : n) {
        const std::string key_path = path + "[" + kv.first.Scalar() + "]";
        const Key k = scalar<Key>(kv.first, key_path, key_kind);
        if (out.count(k)) throw ParseError("duplicate key " + key_path, key_path, line_of(kv.first));
        out[k] = number(kv.second, key_path);
    }
    return out;
}

SpaceProfile space_profile(const YAML::Node& n, const std::string& path)
{
    require_map(n, path);
    reject_unknown(n, path, {"sine"});
    SpaceProfile p;
    if (n["sine"]) p.sine = coefficient_map<int>(n["sine"], path + ".sine", "an integer frequency");
    return p;
}

TimeFunction time_function(const YAML::Node& n, const std::string& path)
{
    require_map(n, path);
    reject_unknown(n, path, {"power", "sine", "exp"});
    TimeFunction f;
    if (n["power"]) f.power = coefficient_map<double>(n["power"], path + ".power", "a numeric exponent");
    if (n["sine"]) f.sine = coefficient_map<double>(n["sine"], path + ".sine", "a numeric frequency");
    if (n["exp"]) f.exp = coefficient_map<double>(n["exp"], path + ".exp", "a numeric rate");
    return f;
}

// A list of orders zeta_0..zeta_m, or one of the named fixings.
std::vector<double> schedule(const YAML::Node& n, const std::string& path)
{
    if (n.IsSequence()) return numbers(n, path);
    require_map(n, path);
    reject_unknown(n, path, {"caputo", "riemann_liouville", "hilfer"});
    if (n.size() != 1) throw ParseError(path + " must name exactly one fixing", path, line_of(n));
    if (n["caputo"]) return {1.0, number(n["caputo"], path + ".caputo")};
    if (n["riemann_liouville"]) return {number(n["riemann_liouville"], path + ".riemann_liouville"), 1.0};
    const auto ab = numbers(n["hilfer"], path + ".hilfer");
    if (ab.size() != 2) throw ParseError(path + ".hilfer must be [order, type]", path + ".hilfer", line_of(n["hilfer"]));
    return {1.0 - (1.0 - ab[0]) * (1.0 - ab[1]), 1.0 - ab[1] * (1.0 - ab[0])};
}

void read_problem(const YAML::Node& n, ProblemConfig& p)
{
    const std::string path = "problem";
    require_map(n, path);
    reject_unknown(n, path,
                   {"epsilon", "schedule", "T", "initial", "source", "amplitude", "final_data", "beta", "zeta", "z",
                    "function", "s"});
    if (n["epsilon"]) p.epsilon = number(n["epsilon"], "problem.epsilon");
    if (n["schedule"]) p.schedule = schedule(n["schedule"], "problem.schedule");
    if (n["T"]) p.T = number(n["T"], "problem.T");
    if (const auto init = n["initial"]) {
        if (!init.IsSequence()) throw ParseError("problem.initial must be a list of profiles", "problem.initial", line_of(init));
        p.initial.clear();
        for (std::size_t i = 0; i < init.size(); ++i)
            p.initial.push_back(space_profile(init[i], "problem.initial[" + std::to_string(i) + "]"));
    }
    if (n["source"]) p.source = space_profile(n["source"], "problem.source");
    if (n["amplitude"]) p.amplitude = time_function(n["amplitude"], "problem.amplitude");
    if (n["final_data"]) p.final_data = space_profile(n["final_data"], "problem.final_data");
    if (n["beta"]) p.beta = number(n["beta"], "problem.beta");
    if (n["zeta"]) p.zeta = number(n["zeta"], "problem.zeta");
    if (n["z"]) p.z = numbers(n["z"], "problem.z");
    if (n["function"]) p.function = time_function(n["function"], "problem.function");
    if (n["s"]) p.s = numbers(n["s"], "problem.s");
}

void read_numerics(const YAML::Node& n, NumericsConfig& c)
{
    require_map(n, "numerics");
    reject_unknown(n, "numerics",
                   {"K", "N_time", "N_space", "grid_gamma", "tol", "seed", "max_iter", "smooth_end_check"});
    if (n["K"]) c.K = count(n["K"], "numerics.K");
    if (n["N_time"]) c.N_time = count(n["N_time"], "numerics.N_time");
    if (n["N_space"]) c.N_space = count(n["N_space"], "numerics.N_space");
    if (n["grid_gamma"]) c.grid_gamma = number(n["grid_gamma"], "numerics.grid_gamma");
    if (n["tol"]) c.tol = number(n["tol"], "numerics.tol");
    if (n["seed"]) c.seed = scalar<std::uint64_t>(n["seed"], "numerics.seed", "an unsigned integer");
    if (n["max_iter"]) c.max_iter = count(n["max_iter"], "numerics.max_iter");
    if (n["smooth_end_check"]) c.smooth_end_check = scalar<bool>(n["smooth_end_check"], "numerics.smooth_end_check", "true or false");
}

void read_output(const YAML::Node& n, OutputConfig& c)
{
    require_map(n, "output");
    reject_unknown(n, "output", {"directory", "format", "time_stride"});
    if (n["directory"]) c.directory = scalar<std::string>(n["directory"], "output.directory", "a path");
    if (const auto f = n["format"]) {
        const auto v = scalar<std::string>(f, "output.format", "csv or json");
        if (v == "csv") c.format = OutputFormat::csv;
        else if (v == "json") c.format = OutputFormat::json;
        else throw ParseError("output.format must be csv or json, got '" + v + "'", "output.format", line_of(f));
    }
    if (n["time_stride"]) c.time_stride = count(n["time_stride"], "output.time_stride");
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit_map(YAML::Emitter& e, const std::map<double, double>& m)
{
    e << YAML::BeginMap;
    for (const auto& [k, v] : m) e << YAML::Key << fmt(k) << YAML::Value << fmt(v);
    e << YAML::EndMap;
}

void emit(YAML::Emitter& e, const SpaceProfile& p)
{
    e << YAML::BeginMap << YAML::Key << "sine" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : p.sine) e << YAML::Key << k << YAML::Value << fmt(v);
    e << YAML::EndMap << YAML::EndMap;
}

void emit(YAML::Emitter& e, const TimeFunction& f)
{
    e << YAML::BeginMap;
    e << YAML::Key << "power" << YAML::Value;
    emit_map(e, f.power);
    e << YAML::Key << "sine" << YAML::Value;
    emit_map(e, f.sine);
    e << YAML::Key << "exp" << YAML::Value;
    emit_map(e, f.exp);
    e << YAML::EndMap;
}

void emit_numbers(YAML::Emitter& e, const std::vector<double>& v)
{
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v) e << fmt(x);
    e << YAML::EndSeq;
}

}  // namespace

std::string_view to_string(RunMode mode) noexcept
{
    for (const auto& [m, name] : kModeNames)
        if (m == mode) return name;
    return "unknown";
}

RunMode parse_mode(std::string_view name)
{
    for (const auto& [m, n] : kModeNames)
        if (n == name) return m;
    throw ParseError("unknown mode '" + std::string(name) + "'", "mode");
}

double SpaceProfile::operator()(double x) const
{
    double s = 0.0;
    for (const auto& [n, c] : sine) s += c * std::sin(n * x);
    return s;
}

double TimeFunction::operator()(double t) const
{
    double s = 0.0;
    for (const auto& [p, c] : power) s += p == 0.0 ? c : c * std::pow(t, p);
    for (const auto& [w, c] : sine) s += c * std::sin(w * t);
    for (const auto& [r, c] : exp) s += c * std::exp(-r * t);
    return s;
}

std::vector<std::string> validation_errors(const RunConfig& c)
{
    std::vector<std::string> v;
    const auto& p = c.problem;
    const auto& n = c.numerics;
    const bool pde = c.mode == RunMode::direct || c.mode == RunMode::inverse_space || c.mode == RunMode::inverse_time;
    const bool uses_schedule = pde || c.mode == RunMode::dn_apply || c.mode == RunMode::reduce ||
                               c.mode == RunMode::laplace_check;

    if (uses_schedule) {
        try {
            const FractionalSchedule sched(p.schedule);
            if (pde && !(sched.order() < 1.0)) {
                v.push_back("problem.schedule: order rho_m = " + fmt(sched.order()) + " violates 0 < rho_m < 1");
            }
            if (pde && !p.initial.empty() && p.initial.size() != sched.m()) {
                v.push_back("problem.initial: " + std::to_string(p.initial.size()) + " profiles given, the schedule needs m = " +
                            std::to_string(sched.m()));
            }
        } catch (const DomainError& e) {
            v.push_back(std::string("problem.schedule: ") + e.what());
        }
    }
    if (pde) {
        if (!(std::abs(p.epsilon) < 1.0)) v.push_back("problem.epsilon = " + fmt(p.epsilon) + " violates |epsilon| < 1");
        if (!(p.T > 0.0) || !std::isfinite(p.T)) v.push_back("problem.T = " + fmt(p.T) + " must be positive");
        const auto check_profile = [&](const SpaceProfile& prof, const std::string& name) {
            for (const auto& [k, coef] : prof.sine) {
                if (k < 1) v.push_back(name + ": sine frequency " + std::to_string(k) + " must be >= 1");
                if (!std::isfinite(coef)) v.push_back(name + ": coefficient of sin(" + std::to_string(k) + " x) is not finite");
            }
        };
        for (std::size_t i = 0; i < p.initial.size(); ++i) check_profile(p.initial[i], "problem.initial[" + std::to_string(i) + "]");
        check_profile(p.source, "problem.source");
        if (p.final_data) check_profile(*p.final_data, "problem.final_data");
        if (n.K < 1) v.push_back("numerics.K must be >= 1");
        if (n.N_space < 8 || n.N_space % 2 != 0) v.push_back("numerics.N_space must be even and >= 8");
    }
    if (c.mode == RunMode::mlf) {
        if (!(p.beta > 0.0)) v.push_back("problem.beta = " + fmt(p.beta) + " must be positive");
        if (!(p.zeta > 0.0)) v.push_back("problem.zeta = " + fmt(p.zeta) + " must be positive");
        if (p.z.empty()) v.push_back("problem.z must list at least one argument");
        if (!(n.tol >= 1e-14 && n.tol <= 1e-6)) v.push_back("numerics.tol = " + fmt(n.tol) + " must lie in [1e-14, 1e-6] for mlf");
    }
    if (c.mode == RunMode::dn_apply || c.mode == RunMode::laplace_check) {
        if (p.function.empty()) v.push_back("problem.function has no terms");
        for (const auto& [pw, coef] : p.function.power)
            if (pw < 0.0) v.push_back("problem.function: power " + fmt(pw) + " must be >= 0");
    }
    if (c.mode == RunMode::dn_apply && !(p.T > 0.0)) v.push_back("problem.T = " + fmt(p.T) + " must be positive");
    if (c.mode == RunMode::laplace_check) {
        if (!p.function.sine.empty()) v.push_back("problem.function: sine terms have no closed-form check");
        if (!p.function.exp.empty() && (!p.function.power.empty() || p.function.exp.size() != 1 || p.function.exp.begin()->second != 1.0))
            v.push_back("problem.function: the exponential check takes a single exp term with coefficient 1");
        for (double s : p.s)
            if (!(s > 0.0)) v.push_back("problem.s: sample " + fmt(s) + " must be positive");
    }
    if (c.mode == RunMode::dn_apply || pde) {
        if (n.N_time < 4) v.push_back("numerics.N_time must be >= 4");
        if (!(n.grid_gamma >= 1.0)) v.push_back("numerics.grid_gamma must be >= 1");
    }
    if (!(n.tol > 0.0)) v.push_back("numerics.tol must be positive");
    if (n.max_iter < 1) v.push_back("numerics.max_iter must be >= 1");
    if (c.output.directory.empty()) v.push_back("output.directory must not be empty");
    if (c.output.time_stride < 1) v.push_back("output.time_stride must be >= 1");
    return v;
}

RunConfig parse_config(std::string_view text, std::optional<RunMode> mode)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, "", e.mark.line + 1);
    }
    RunConfig c;
    std::vector<std::string> conflicts;
    if (mode) c.mode = *mode;
    if (!root.IsNull()) {
        require_map(root, "document");
        reject_unknown(root, "", {"mode", "problem", "numerics", "output"});
        if (const auto m = root["mode"]) {
            const auto name = scalar<std::string>(m, "mode", "a mode name");
            RunMode named;
            try {
                named = parse_mode(name);
            } catch (const ParseError& e) {
                throw ParseError(e.what(), "mode", line_of(m));
            }
            if (mode && named != *mode) {
                conflicts.push_back("mode: document names '" + name + "' but '" + std::string(to_string(*mode)) +
                                    "' was requested");
            }
            c.mode = mode.value_or(named);
        }
        if (root["problem"]) read_problem(root["problem"], c.problem);
        if (root["numerics"]) read_numerics(root["numerics"], c.numerics);
        if (root["output"]) read_output(root["output"], c.output);
    }
    auto v = validation_errors(c);
    v.insert(v.begin(), conflicts.begin(), conflicts.end());
    if (!v.empty()) throw ValidationError(std::move(v));
    return c;
}

RunConfig load_config(const std::string& path, std::optional<RunMode> mode)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read configuration file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), mode);
}

std::string to_yaml(const RunConfig& c)
{
    YAML::Emitter e;
    const auto& p = c.problem;
    const auto& n = c.numerics;
    e << YAML::BeginMap;
    e << YAML::Key << "mode" << YAML::Value << std::string(to_string(c.mode));

    e << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "epsilon" << YAML::Value << fmt(p.epsilon);
    e << YAML::Key << "schedule" << YAML::Value;
    emit_numbers(e, p.schedule);
    e << YAML::Key << "T" << YAML::Value << fmt(p.T);
    e << YAML::Key << "initial" << YAML::Value << YAML::BeginSeq;
    for (const auto& prof : p.initial) emit(e, prof);
    e << YAML::EndSeq;
    e << YAML::Key << "source" << YAML::Value;
    emit(e, p.source);
    if (p.amplitude) {
        e << YAML::Key << "amplitude" << YAML::Value;
        emit(e, *p.amplitude);
    }
    if (p.final_data) {
        e << YAML::Key << "final_data" << YAML::Value;
        emit(e, *p.final_data);
    }
    e << YAML::Key << "beta" << YAML::Value << fmt(p.beta);
    e << YAML::Key << "zeta" << YAML::Value << fmt(p.zeta);
    e << YAML::Key << "z" << YAML::Value;
    emit_numbers(e, p.z);
    e << YAML::Key << "function" << YAML::Value;
    emit(e, p.function);
    e << YAML::Key << "s" << YAML::Value;
    emit_numbers(e, p.s);
    e << YAML::EndMap;

    e << YAML::Key << "numerics" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "K" << YAML::Value << n.K;
    e << YAML::Key << "N_time" << YAML::Value << n.N_time;
    e << YAML::Key << "N_space" << YAML::Value << n.N_space;
    e << YAML::Key << "grid_gamma" << YAML::Value << fmt(n.grid_gamma);
    e << YAML::Key << "tol" << YAML::Value << fmt(n.tol);
    e << YAML::Key << "seed" << YAML::Value << n.seed;
    e << YAML::Key << "max_iter" << YAML::Value << n.max_iter;
    e << YAML::Key << "smooth_end_check" << YAML::Value << n.smooth_end_check;
    e << YAML::EndMap;

    e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "directory" << YAML::Value << c.output.directory;
    e << YAML::Key << "format" << YAML::Value << (c.output.format == OutputFormat::csv ? "csv" : "json");
    e << YAML::Key << "time_stride" << YAML::Value << c.output.time_stride;
    e << YAML::EndMap;

    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

}  // namespace fracdiff
