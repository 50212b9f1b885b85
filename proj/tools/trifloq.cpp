#include "trifloq/catalog.hpp"
#include "trifloq/errors.hpp"
#include "trifloq/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace trifloq;

    CLI::App app{"Floquet and spectral analysis of tridiagonal ODE systems"};
    app.set_version_flag("--version", std::string(TRIFLOQ_VERSION));
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the analysis described by a scenario file");
    std::string scenario_path;
    std::string output_dir;
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("-o,--output-dir", output_dir, "Overrides output.directory");

    auto* cat = app.add_subcommand("catalog", "List the built-in fixtures");
    bool check = false;
    bool as_json = false;
    cat->add_flag("--check", check, "Run each fixture's structure checks");
    cat->add_flag("--json", as_json, "Print JSON instead of a table");

    app.add_subcommand("schema", "Print the scenario JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (run->parsed()) {
        RunOptions opts;
        if (!output_dir.empty()) opts.output_dir = output_dir;
        try {
            opts.seed_override = seed_from_env();
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }
        const RunResult r = run_scenario_file(scenario_path, opts);
        if (r.exit_code != kExitOk) std::cerr << "error: " << r.message << "\n";
        for (const auto& f : r.files) std::cout << f.string() << "\n";
        return r.exit_code;
    }

    if (cat->parsed()) {
        auto listing = catalog_json();
        int code = kExitOk;
        if (check) {
            for (auto& entry : listing) {
                const FixtureCheck c = check_fixture(entry["id"].get<std::string>());
                entry["checks"] = c.checks;
                entry["ok"] = c.ok;
                if (!c.ok) {
                    entry["failure"] = c.failure;
                    code = kExitStructure;
                }
            }
        }
        if (as_json) {
            std::cout << listing.dump(2) << "\n";
        } else {
            for (const auto& e : listing) {
                std::cout << e["id"].get<std::string>() << "\t" << e["kind"].get<std::string>() << "\tn="
                          << e["n"].get<std::size_t>();
                if (check) std::cout << "\t" << (e["ok"].get<bool>() ? "ok" : "FAILED " + e["failure"].get<std::string>());
                std::cout << "\t" << e["description"].get<std::string>() << "\n";
            }
        }
        return code;
    }

    std::cout << scenario_schema().dump(2) << "\n";
    return kExitOk;
}
