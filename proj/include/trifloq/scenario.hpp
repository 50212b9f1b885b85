#pragma once

// Scenario files: validation, execution of one analysis, deterministic
// reports.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trifloq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitStructure = 2;

inline const std::vector<std::string> kAnalysisKinds{"sigma-profile", "periodic-floquet", "bundles", "separation",
                                                     "spectrum",      "omega",            "hyperbolicity", "cover"};

/// JSON Schema of the scenario format.
const nlohmann::json& scenario_schema();

struct Scenario {
    nlohmann::json raw;
    std::string hash;  // fnv1a64 of the canonical serialization

    struct System {
        std::string fixture;  // empty when bands are given
        nlohmann::json bands;
        std::optional<std::size_t> dimension;
        std::vector<int> deltas;
        double eps0 = 0.5;
    } system;

    struct Base {
        std::string kind = "constant";
        double period = 0.0;
        std::vector<double> omega;
        std::vector<double> theta0;
    } base;

    struct Analysis {
        std::string kind;
        std::vector<double> x0;
        std::vector<double> y0;
        std::vector<double> lambdas;
        std::string orbit = "omega";
        double shift = 0.0;
        int probes = 10;
        std::vector<std::vector<double>> probe_thetas;
        bool structure_checks = true;
        bool check_hyperbolicity = false;
    } analysis;

    struct Numeric {
        double rel_tol = 1e-9;
        double abs_tol = 1e-12;
        double horizon = 0.0;  // 0: per-analysis default
        std::vector<double> windows{10.0, 20.0, 50.0};
        std::uint64_t seed = 1;
        double max_step = 0.05;
        double transient = 100.0;
        double sample_dt = 0.0;  // 0: per-analysis default
        double eigen_tol = 1e-10;
        double cluster_tol = 1e-3;
        double r_fiber = 1e-2;
        int fiber_min = 30;
        int samples = 1000;
        double resolution = 1e-2;
    } numeric;

    struct Output {
        std::string directory = "trifloq-out";
        std::string basename = "report";
        std::vector<std::string> formats{"json", "csv"};
    } output;
};

/// Validates against the schema and fills defaults; throws InvalidInput
/// naming the offending key path. Unknown keys are rejected.
Scenario parse_scenario(const nlohmann::json& j);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Shortest decimal that parses back to the same double.
std::string csv_number(double v);
/// RFC 4180 quoting where needed.
std::string csv_field(std::string_view s);

/// Writes via a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Seed from TRIFLOQ_SEED, if set; throws InvalidInput when unparsable.
std::optional<std::uint64_t> seed_from_env();

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed_override;
    bool write_files = true;
};

struct RunResult {
    int exit_code = kExitOk;
    nlohmann::json report;
    std::vector<std::filesystem::path> files;
    std::string message;  // error text for exit codes 1 and 2
};

RunResult run_scenario(const nlohmann::json& scenario, const RunOptions& opts = {});
/// Reads the file; unreadable or malformed input yields exit code 1 and no files.
RunResult run_scenario_file(const std::filesystem::path& path, const RunOptions& opts = {});

}  // namespace trifloq
