#pragma once

// Built-in example systems referenced by id from scenarios.

#include "trifloq/skewflow.hpp"
#include "trifloq/tridiag.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace trifloq {

enum class FixtureKind { Linear, Nonlinear };

struct CatalogEntry {
    std::string id;
    FixtureKind kind;
    std::size_t n;
    std::string description;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& id);

/// x' = A x + b(theta): kept apart so bounded solutions can be built.
struct ForcedLinear {
    Mat a;
    std::vector<TrigPolynomial> forcing;
    std::vector<double> omega;
    double eps0 = 0.0;
};

/// Coefficients of a linear fixture; `period` > 0 declares a constant
/// fixture T-periodic.
TridiagCoefficients catalog_coefficients(const std::string& id, double period = 0.0);
QuasiPeriodicField catalog_field(const std::string& id);
std::optional<ForcedLinear> catalog_forced(const std::string& id);

nlohmann::json catalog_json();

struct FixtureCheck {
    std::string id;
    bool ok = true;
    std::vector<std::string> checks;  // names of the checks that ran
    std::string failure;              // "module/check: message" when !ok
};

/// Runs the structure checks that apply to a fixture at default tolerances:
/// the coupling floor, plus Floquet structure (constant), sigma along the
/// frame series (quasi-periodic) or a floor-checked orbit (nonlinear).
FixtureCheck check_fixture(const std::string& id);

}  // namespace trifloq
