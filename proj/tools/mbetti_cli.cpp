// Scenario runner: forward simulation, boundary-only recovery, oracle comparison.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mbetti/app/scenario.hpp"

namespace fs = std::filesystem;
using namespace mbetti;

namespace {

void write_error(const fs::path& dir, const std::exception& e) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "errors.json");
    out << std::setw(2) << error_json(e) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Betti numbers from boundary data of the anisotropic Maxwell/Dirac system"};
    app.require_subcommand(1);
    std::string scenario_path, out;
    int threads = 1;
    bool dump_grids = false;

    auto* run = app.add_subcommand("run", "simulate, recover from boundary data, compare with the homology oracle");
    auto* verify = app.add_subcommand("verify", "run the invariant suites without recovery");
    for (auto* sub : {run, verify}) {
        sub->add_option("scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides the scenario)");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }
    run->add_flag("--dump-grids", dump_grids, "write I^k grids of the first source pair");
    CLI11_PARSE(app, argc, argv);

    RunOptions opt;
    opt.threads = threads;
    opt.dump_grids = dump_grids;
    opt.out = out;
    fs::path dir = out.empty() ? fs::path("out") : fs::path(out);
    try {
        const Scenario s = Scenario::load(scenario_path);
        if (out.empty()) dir = s.out;
        if (run->parsed()) {
            const RunResult r = run_scenario(s, opt);
            std::cout << std::setw(2) << r.comparison << '\n';
            return r.pass ? 0 : 1;
        }
        const auto items = verify_scenario(s, opt);
        const auto report = checklist_json(items);
        for (const auto& it : items)
            std::cout << (it.pass ? "PASS " : "FAIL ") << it.name << "  value=" << it.value << " tol=" << it.tolerance
                      << (it.detail.empty() ? "" : "  " + it.detail) << '\n';
        return report.at("status") == "PASS" ? 0 : 1;
    } catch (const std::exception& e) {
        write_error(dir, e);
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
