// Command-line front end: steady states, time evolution, detuning sweeps and
// figure-reproduction jobs. Exit codes: 0 success, 1 invalid input, 2 solver failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sharpcool/sharpcool.hpp"

namespace fs = std::filesystem;
using namespace sharpcool;

namespace {

constexpr int exit_invalid = 1;
constexpr int exit_solver = 2;

void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ScenarioError("cannot write '" + path.string() + "'");
    out << content;
}

fs::path resolve(const fs::path& out_dir, const std::optional<std::string>& configured, const std::string& fallback)
{
    const fs::path name = configured.value_or(fallback);
    return name.is_absolute() ? name : out_dir / name;
}

Scenario build_scenario(const std::string& verb, const std::string& config, const std::vector<std::string>& sets)
{
    const Job job = parse_job(verb);
    nlohmann::json doc;
    if (!config.empty()) {
        std::ifstream in(config);
        if (!in)
            throw ScenarioError("cannot open scenario file '" + config + "'");
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ScenarioError(std::string("malformed scenario JSON: ") + e.what());
        }
    } else if (job == Job::figure2 || job == Job::figure3 || job == Job::figure4) {
        doc = scenario_to_json(figure_scenario(job));
    } else {
        throw ScenarioError("the '" + verb + "' command requires --config <path>");
    }
    for (const auto& s : sets)
        apply_override(doc, s);
    doc["job"] = verb;
    return scenario_from_json(doc);
}

int run(const std::string& verb, const std::string& config, const std::string& out_dir,
        const std::vector<std::string>& sets, unsigned workers)
{
    if (verb == "presets") {
        std::cout << presets_table();
        return 0;
    }
    const Scenario scenario = build_scenario(verb, config, sets);
    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    std::string csv, summary;
    switch (scenario.job) {
    case Job::steady:
    case Job::figure2:
    case Job::figure4: {
        const auto report = run_steady(scenario);
        csv = steady_csv(report);
        summary = steady_summary(report);
        break;
    }
    case Job::sweep:
    case Job::figure3: {
        const auto report = run_sweep(scenario, workers);
        csv = sweep_csv(report);
        summary = sweep_summary(report);
        break;
    }
    case Job::evolve: {
        const auto report = run_evolve(scenario);
        csv = evolve_csv(report);
        summary = evolve_summary(report);
        break;
    }
    }
    write_file(resolve(dir, scenario.output.csv, verb + ".csv"), csv);
    write_file(resolve(dir, scenario.output.summary, verb + "_summary.txt"), summary);
    std::cout << summary;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Doppler cooling on sharp one- and two-photon transitions"};
    std::string verb, config, out_dir;
    std::vector<std::string> sets;
    unsigned workers = 1;
    app.add_option("command", verb, "steady | evolve | sweep | figure2 | figure3 | figure4 | presets")
        ->required()
        ->check(CLI::IsMember({"steady", "evolve", "sweep", "figure2", "figure3", "figure4", "presets"}));
    app.add_option("--config", config, "Scenario JSON file");
    app.add_option("--out", out_dir, "Output directory (default: current directory)");
    app.add_option("--set", sets, "Override a scenario field, e.g. params.delta=-0.5")->take_all();
    app.add_option("--workers", workers, "Concurrent sweep workers")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_invalid;
    }

    try {
        return run(verb, config, out_dir, sets, workers);
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return exit_invalid;
    } catch (const RegimeError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_solver;
    }
}
