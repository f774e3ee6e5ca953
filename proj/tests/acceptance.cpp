// Acceptance suite: one line per criterion, then the checked-in fixtures.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "fracdiff/cli_harness.hpp"

namespace fs = std::filesystem;
using namespace fracdiff;

namespace {

const std::map<int, std::string> kTitles{
    {1, "Mittag-Leffler identities"},   {2, "DN power-rule oracle"},  {3, "special-case reductions"},
    {4, "Laplace identity"},            {5, "spectral suite"},        {6, "direct solver"},
    {7, "inverse-space round trip"},    {8, "inverse-time round trip"}, {9, "determinism"},
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Byte comparison of every data file (report.json holds timings and is skipped).
bool same_outputs(const fs::path& a, const fs::path& b, std::string& detail)
{
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        if (name == "report.json") continue;
        ++files;
        if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) {
            detail = name.string() + " differs";
            return false;
        }
    }
    detail = std::to_string(files) + " file(s) identical";
    return files > 0;
}

RunReport run_into(RunConfig config, const fs::path& dir)
{
    fs::remove_all(dir);
    config.output.directory = dir.string();
    return run(config);
}

}  // namespace

int main(int argc, char** argv)
{
    const fs::path config_dir = argc > 1 ? argv[1] : "configs";
    const fs::path scratch = fs::temp_directory_path() / "fracdiff_acceptance";
    bool all = true;

    const RunConfig verify = parse_config("", RunMode::verify_all);
    const auto first = run_into(verify, scratch / "verify_a");
    const auto second = run_into(verify, scratch / "verify_b");

    for (int criterion = 1; criterion <= 8; ++criterion) {
        const std::string prefix = "C" + std::to_string(criterion) + ".";
        bool ok = true, seen = false;
        std::ostringstream detail;
        for (const auto& c : first.checks) {
            if (c.name.rfind(prefix, 0) != 0) continue;
            seen = true;
            ok = ok && c.passed;
            detail << ' ' << c.name.substr(prefix.size()) << '=' << c.value;
        }
        ok = ok && seen;
        all = all && ok;
        std::printf("criterion %d %-26s %s%s\n", criterion, kTitles.at(criterion).c_str(), ok ? "PASS" : "FAIL",
                    detail.str().c_str());
    }

    std::string detail;
    const bool deterministic = same_outputs(scratch / "verify_a", scratch / "verify_b", detail) && second.passed() == first.passed();
    all = all && deterministic;
    std::printf("criterion 9 %-26s %s %s\n", kTitles.at(9).c_str(), deterministic ? "PASS" : "FAIL", detail.c_str());

    for (const char* name : {"direct", "inverse-space", "inverse-time"}) {
        bool ok = false;
        std::string note;
        try {
            const auto report = run_into(load_config((config_dir / (std::string(name) + ".yaml")).string()),
                                         scratch / (std::string("fixture_") + name));
            ok = report.passed();
            note = report.error;
        } catch (const std::exception& e) {
            note = e.what();
        }
        all = all && ok;
        std::printf("fixture %-28s %s %s\n", name, ok ? "PASS" : "FAIL", note.c_str());
    }
    return all ? 0 : 1;
}
