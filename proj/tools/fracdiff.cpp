#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "fracdiff/cli_harness.hpp"
#include "fracdiff/errors.hpp"

namespace {

struct Options {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    bool quiet = false;
    std::optional<double> beta, zeta;
    std::vector<double> z;
};

void print_report(const fracdiff::RunReport& r)
{
    for (const auto& c : r.checks) {
        std::printf("%s  %-34s %.6g (%s %.3g)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.upper_bound ? "<=" : ">=", c.threshold);
    }
    for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
    if (!r.error.empty()) std::printf("error: %s\n", r.error.c_str());
    for (const auto& a : r.artifacts) std::printf("wrote %s\n", a.c_str());
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace fracdiff;
    CLI::App app{"Fractional diffusion with involution: forward and inverse solvers"};
    app.require_subcommand(1);
    Options opt;

    const RunMode modes[] = {RunMode::mlf,    RunMode::dn_apply,      RunMode::reduce,       RunMode::laplace_check,
                             RunMode::direct, RunMode::inverse_space, RunMode::inverse_time, RunMode::verify_all};
    std::optional<RunMode> chosen;
    for (RunMode mode : modes) {
        auto* sub = app.add_subcommand(std::string(to_string(mode)));
        sub->add_option("--config", opt.config_path, "YAML run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (overrides output.directory)");
        sub->add_option("--seed", opt.seed, "random seed (overrides numerics.seed)");
        sub->add_option("--tol", opt.tol, "tolerance (overrides numerics.tol)");
        sub->add_flag("--quiet", opt.quiet, "print nothing on success");
        if (mode == RunMode::mlf) {
            sub->add_option("--beta", opt.beta, "first parameter");
            sub->add_option("--zeta", opt.zeta, "second parameter");
            sub->add_option("--z", opt.z, "arguments");
        }
        sub->callback([&chosen, mode] { chosen = mode; });
    }
    CLI11_PARSE(app, argc, argv);

    RunConfig config;
    try {
        if (opt.config_path.empty()) {
            config = parse_config("", chosen);
        } else {
            config = load_config(opt.config_path, chosen);
        }
        if (opt.out) config.output.directory = *opt.out;
        if (opt.seed) config.numerics.seed = *opt.seed;
        if (opt.tol) config.numerics.tol = *opt.tol;
        if (opt.beta) config.problem.beta = *opt.beta;
        if (opt.zeta) config.problem.zeta = *opt.zeta;
        if (!opt.z.empty()) config.problem.z = opt.z;
        if (auto v = validation_errors(config); !v.empty()) throw ValidationError(std::move(v));
    } catch (const ParseError& e) {
        std::cerr << "configuration error: " << e.what();
        if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
        std::cerr << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    const auto report = run(config);
    if (!opt.quiet || !report.passed()) print_report(report);
    return report.passed() ? 0 : 1;
}
