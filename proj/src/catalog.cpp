#include "trifloq/catalog.hpp"

#include "trifloq/bundles.hpp"
#include "trifloq/errors.hpp"
#include "trifloq/periodic_floquet.hpp"

#include <cmath>
#include <numbers>

namespace trifloq {

namespace {

constexpr const char* kModule = "catalog";

Mat path_matrix(int n) {
    Mat a = Mat::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
    return a;
}

TrigPolynomial trig(double c, std::vector<double> cos_part, std::vector<double> sin_part) {
    return TrigPolynomial{c, std::move(cos_part), std::move(sin_part)};
}

ForcedLinear hurwitz() {
    Mat a(3, 3);
    a << -2, 1, 0, 1, -2, 1, 0, 1, -2;
    return {a, {trig(0.2, {0, 0}, {1, 0}), trig(0, {0, 1}, {0, 0}), trig(-0.1, {0, 0}, {0.5, 0.5})},
            default_frequencies(), 0.5};
}

ForcedLinear saddle() {
    Mat a(2, 2);
    a << 0, 1, 1, 0;
    return {a, {trig(0, {0, 0}, {1, 0}), trig(0, {0, 0.5}, {0, 0})}, default_frequencies(), 0.5};
}

// x_i' = -x_i + sum over neighbours of (0.1 y + 1.8 tanh y) + small forcing.
// Two stable states near +-1.92 on the diagonal, the origin is a saddle.
QuasiPeriodicField bistable() {
    QuasiPeriodicField f;
    f.n = 2;
    f.omega = default_frequencies();
    f.eps0 = 0.1;
    f.name = "bistable-cooperative";
    f.f = [](std::size_t i, std::span<const double> th, double l, double c, double r) {
        const double y = i == 0 ? r : l;
        const double forcing = i == 0 ? 0.1 * std::sin(2 * std::numbers::pi * th[0]) : 0.1 * std::cos(2 * std::numbers::pi * th[1]);
        return -c + 0.1 * y + 1.8 * std::tanh(y) + forcing;
    };
    f.partials = [](std::size_t i, std::span<const double>, double l, double, double r) {
        StencilPartials s;
        s.center = -1.0;
        const double y = i == 0 ? r : l;
        const double sech = 1.0 / std::cosh(y);
        (i == 0 ? s.right : s.left) = 0.1 + 1.8 * sech * sech;
        return s;
    };
    return f;
}

// Mutual inhibition: d f_i / d x_j <= -0.5.
QuasiPeriodicField competitive() {
    QuasiPeriodicField f;
    f.n = 2;
    f.omega = default_frequencies();
    f.eps0 = 0.5;
    f.deltas = {-1};
    f.name = "competitive-2d";
    f.f = [](std::size_t i, std::span<const double> th, double l, double c, double r) {
        const double y = i == 0 ? r : l;
        const double forcing = i == 0 ? 0.2 * std::sin(2 * std::numbers::pi * th[0]) : 0.2 * std::cos(2 * std::numbers::pi * th[1]);
        return 1.0 - c - 0.5 * y - 0.3 * std::tanh(y) + forcing;
    };
    f.partials = [](std::size_t i, std::span<const double>, double l, double, double r) {
        StencilPartials s;
        s.center = -1.0;
        const double y = i == 0 ? r : l;
        const double sech = 1.0 / std::cosh(y);
        (i == 0 ? s.right : s.left) = -0.5 - 0.3 * sech * sech;
        return s;
    };
    return f;
}

TridiagCoefficients quasi_periodic_linear() {
    std::vector<TrigPolynomial> diag{trig(0.0, {0.1, 0.05}, {0.0, 0.1}), trig(-1.5, {0.05, 0.0}, {0.1, 0.0}),
                                     trig(-3.0, {0.0, 0.1}, {0.05, 0.05})};
    std::vector<TrigPolynomial> upper{trig(1.0, {0.1, 0.0}, {0.0, 0.05}), trig(1.2, {0.0, 0.1}, {0.05, 0.0})};
    std::vector<TrigPolynomial> lower{trig(0.9, {0.0, 0.05}, {0.1, 0.0}), trig(1.1, {0.05, 0.05}, {0.0, 0.0})};
    return quasi_periodic_coefficients(diag, upper, lower, default_frequencies(), {0.0, 0.0}, 0.5);
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries{
        {"const-symmetric-n2", FixtureKind::Linear, 2, "constant path matrix, eigenvalues +-1"},
        {"const-symmetric-n3", FixtureKind::Linear, 3, "constant path matrix, eigenvalues sqrt(2), 0, -sqrt(2)"},
        {"const-symmetric-n4", FixtureKind::Linear, 4, "constant path matrix, eigenvalues 2 cos(k pi / 5)"},
        {"const-symmetric-n5", FixtureKind::Linear, 5, "constant path matrix, eigenvalues 2 cos(k pi / 6)"},
        {"const-symmetric-n6", FixtureKind::Linear, 6, "constant path matrix, eigenvalues 2 cos(k pi / 7)"},
        {"quasi-periodic-linear", FixtureKind::Linear, 3, "trigonometric bands on the 2-torus, off-diagonals >= 0.5"},
        {"hurwitz-nonhomogeneous", FixtureKind::Nonlinear, 3, "x' = A x + b(theta), A cooperative and Hurwitz"},
        {"saddle-nonhomogeneous", FixtureKind::Nonlinear, 2, "x' = [[0,1],[1,0]] x + b(theta), one unstable direction"},
        {"bistable-cooperative", FixtureKind::Nonlinear, 2, "tanh coupling with two stable invariant graphs"},
        {"competitive-2d", FixtureKind::Nonlinear, 2, "mutual inhibition, off-diagonal partials <= -0.5"},
    };
    return entries;
}

const CatalogEntry& catalog_entry(const std::string& id) {
    for (const auto& e : catalog())
        if (e.id == id) return e;
    throw InvalidInput(kModule, "fixture", "unknown fixture id '" + id + "'");
}

TridiagCoefficients catalog_coefficients(const std::string& id, double period) {
    const CatalogEntry& e = catalog_entry(id);
    if (e.kind != FixtureKind::Linear) throw InvalidInput(kModule, "fixture", "'" + id + "' is not a linear fixture");
    if (id == "quasi-periodic-linear") {
        if (period > 0.0) throw InvalidInput(kModule, "base", "quasi-periodic fixture cannot be declared periodic");
        return quasi_periodic_linear();
    }
    auto a = TridiagCoefficients::constant(path_matrix(static_cast<int>(e.n)), 0.5);
    if (period > 0.0) a = a.with_modulus(Periodic{period});
    return a;
}

std::optional<ForcedLinear> catalog_forced(const std::string& id) {
    if (id == "hurwitz-nonhomogeneous") return hurwitz();
    if (id == "saddle-nonhomogeneous") return saddle();
    return std::nullopt;
}

QuasiPeriodicField catalog_field(const std::string& id) {
    const CatalogEntry& e = catalog_entry(id);
    if (e.kind != FixtureKind::Nonlinear) throw InvalidInput(kModule, "fixture", "'" + id + "' is not a nonlinear fixture");
    if (auto lin = catalog_forced(id)) return linear_forced_field(lin->a, lin->forcing, lin->omega, lin->eps0, id);
    if (id == "bistable-cooperative") return bistable();
    return competitive();
}

nlohmann::json catalog_json() {
    auto arr = nlohmann::json::array();
    for (const auto& e : catalog()) {
        arr.push_back({{"id", e.id},
                       {"kind", e.kind == FixtureKind::Linear ? "linear" : "nonlinear"},
                       {"n", e.n},
                       {"description", e.description}});
    }
    return arr;
}

FixtureCheck check_fixture(const std::string& id) {
    const CatalogEntry& e = catalog_entry(id);
    FixtureCheck c{id, true, {}, {}};
    try {
        if (e.kind == FixtureKind::Linear) {
            const TridiagCoefficients a = catalog_coefficients(id);
            c.checks.push_back("floor");
            for (int k = 0; k <= 400; ++k) a.bands(0.25 * k);
            if (a.is_constant()) {
                c.checks.push_back("periodic-floquet");
                floquet_decompose_flow(catalog_coefficients(id, 1.0));
            } else {
                c.checks.push_back("sigma-along-frames");
                const FrameSeries s = frame_series(a, 0.0, 20.0, 0.05);
                const SigmaAlongSeries along = verify_sigma_along(a, s);
                if (along.failures > 0) {
                    throw StructureFailure("floquet-bundles", "sigma-along",
                                           std::to_string(along.failures) + " frame steps off their sigma label");
                }
            }
        } else {
            const QuasiPeriodicField f = catalog_field(id);
            c.checks.push_back("orbit-floor");
            const TorusBasePoint base(std::vector<double>(f.omega.size(), 0.0), f.omega);
            skew_orbit(f, Vec::Zero(static_cast<Eigen::Index>(f.n)), base, 50.0);
            if (auto forced = catalog_forced(id)) {
                c.checks.push_back("matrix-floor");
                TridiagCoefficients::constant(forced->a, forced->eps0, f.deltas).bands(0.0);
            }
        }
    } catch (const Error& err) {
        c.ok = false;
        c.failure = err.what();
    }
    return c;
}

}  // namespace trifloq
