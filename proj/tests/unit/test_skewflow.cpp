#include <doctest.h>
#include <trifloq/catalog.hpp>
#include <trifloq/errors.hpp>
#include <trifloq/skewflow.hpp>

#include <cmath>
#include <random>

using namespace trifloq;

namespace {

TorusBasePoint origin() { return TorusBasePoint({0.1, 0.3}, default_frequencies()); }

}  // namespace

TEST_CASE("torus phase returns exactly after t then -t") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    const TorusBasePoint b = origin().advanced(17.25);
    for (int k = 0; k < 200; ++k) {
        const double t = u(rng);
        CHECK(b.advanced(t).advanced(-t).theta() == b.theta());
    }
    CHECK(torus_distance(b.advanced(3.0).theta(), b.theta_at(3.0)) < 1e-14);
}

TEST_CASE("skew steps compose") {
    const auto f = catalog_field("bistable-cooperative");
    Vec x0(2);
    x0 << 0.4, -0.2;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const Tolerances tol{1e-11, 1e-13};
    for (int k = 0; k < 5; ++k) {
        const double t = u(rng), s = u(rng);
        const SkewState once = skew_step(f, x0, origin(), t + s, tol);
        const SkewState a = skew_step(f, x0, origin(), t, tol);
        const SkewState twice = skew_step(f, a.x, a.base, s, tol);
        CHECK((once.x - twice.x).norm() < 1e-8 * std::max(1.0, once.x.norm()));
        CHECK(torus_distance(once.base.theta(), twice.base.theta()) < 1e-12);
    }
}

TEST_CASE("autonomous fields reduce to plain integration") {
    Mat a(2, 2);
    a << -1, 1, 1, -2;
    const auto f = linear_forced_field(a, {TrigPolynomial{1.0, {}, {}}, TrigPolynomial{0.0, {}, {}}}, {}, 0.5, "auto");
    Vec x0(2);
    x0 << 1, 2;
    const auto s = skew_step(f, x0, TorusBasePoint({}, {}), 2.0);
    const auto direct = integrate_nonlinear(f.frozen({}), x0, 0.0, 2.0);
    CHECK(s.x == direct.states().back());
}

TEST_CASE("floor violations along the orbit are named") {
    QuasiPeriodicField f;
    f.n = 2;
    f.eps0 = 0.1;
    f.name = "saturating";
    f.f = [](std::size_t i, std::span<const double>, double l, double c, double r) {
        return -0.1 * c + std::tanh(i == 0 ? r : l) + 1.0;
    };
    Vec x0(2);
    x0 << 0.0, 0.0;
    try {
        skew_orbit(f, x0, TorusBasePoint({}, {}), 50.0);
        FAIL("expected a floor violation");
    } catch (const StructureFailure& e) {
        CHECK(std::string(e.what()).find("t=") != std::string::npos);
    }
}

TEST_CASE("Hurwitz fixture: one invariant graph, not hyperbolic") {
    const auto f = catalog_field("hurwitz-nonhomogeneous");
    OmegaOptions oo;
    oo.sample_dt = 0.005;
    oo.horizon = 800.0;
    const auto set = omega_limit(f, Vec::Zero(3), origin(), oo);
    CHECK(set.invariance_residual < 1e-9);
    const std::vector<double> probe{0.4, 0.7};
    CHECK(set.fiber_spread(probe) < 1e-4);
    const auto cover = cover_cardinality(set, probe);
    CHECK(cover.count == 1);
    CHECK(cover.diameters[0] <= 1e-3);
    CHECK(cover.warnings.empty());

    FiberOptions wide;
    wide.cluster_tol = 10.0 * set.diameter + 1.0;
    CHECK(cover_cardinality(set, probe, wide).warnings.size() == 1);
    FiberOptions strict;
    strict.fiber_min = 100000;
    CHECK_THROWS_AS(cover_cardinality(set, probe, strict), NumericalFailure);

    const auto rep = hyperbolicity_check(f, set);
    CHECK(rep.verdict == Verdict::NotHyperbolic);
    CHECK(rep.unstable_dim == 0);
    CHECK_FALSE(rep.contains_zero);
    REQUIRE(rep.spectrum.intervals.size() == 3);
    CHECK(std::abs(rep.spectrum.intervals[0].a - (-2.0 + std::sqrt(2.0))) < 1e-3);

    // Shifting by +1 moves the top rate past 0.
    const auto shifted = f.shifted_by(1.0);
    const auto lin = linearize_along(shifted, set.orbit, set.base);
    CHECK(std::abs(lin.matrix(200.0)(0, 0) + 1.0) < 1e-14);
    const auto rep2 = hyperbolicity_check(shifted, set);
    CHECK(rep2.verdict == Verdict::Hyperbolic);
    CHECK(rep2.unstable_dim == 1);
}

TEST_CASE("bounded solutions of hyperbolic linear systems") {
    const auto sad = *catalog_forced("saddle-nonhomogeneous");
    const auto zero = bounded_solution_linear(sad.a, {TrigPolynomial{}, TrigPolynomial{}}, origin(), 0.0, 5.0);
    CHECK(zero.orbit.at(2.5).norm() == 0.0);

    Mat a(2, 2);
    a << -2, 1, 1, -3;
    const auto eq = bounded_solution_linear(a, {TrigPolynomial{1.0, {}, {}}, TrigPolynomial{2.0, {}, {}}}, origin(), 0.0, 3.0);
    Vec b(2);
    b << 1, 2;
    CHECK((eq.orbit.at(1.5) + a.inverse() * b).norm() < 1e-10);

    const TorusBasePoint circle({0.0}, {1.0});
    const auto per = bounded_solution_linear(sad.a, {TrigPolynomial{0.0, {}, {1.0}}, TrigPolynomial{}}, circle, 0.0, 3.0);
    CHECK(per.residual <= 1e-8);
    CHECK(per.unstable_dim == 1);
    CHECK((per.orbit.at(0.5) - per.orbit.at(1.5)).norm() < 1e-8);

    Mat center(2, 2);
    center << 0, 1, -1, 0;
    CHECK_THROWS_AS(bounded_solution_linear(center, {TrigPolynomial{}, TrigPolynomial{}}, origin(), 0.0, 1.0), InvalidInput);
}

TEST_CASE("saddle fixture is hyperbolic with one unstable direction") {
    const auto sad = *catalog_forced("saddle-nonhomogeneous");
    const auto f = catalog_field("saddle-nonhomogeneous");
    const auto sol = bounded_solution_linear(sad.a, sad.forcing, origin(), 0.0, 200.0);
    CHECK(sol.residual <= 1e-8);
    OmegaOptions oo;
    oo.sample_dt = 0.01;
    oo.horizon = 200.0;
    const auto set = set_from_orbit(f, sol.orbit, sol.base, 0.0, oo);
    HyperbolicityOptions ho;
    ho.probes = 2;
    const auto rep = hyperbolicity_check(f, set, ho);
    CHECK(rep.verdict == Verdict::Hyperbolic);
    CHECK(rep.unstable_dim == 1);
    REQUIRE(rep.sigma_bounds);
    CHECK(rep.sigma_bounds->ok());
    CHECK(rep.sigma_bounds->samples == 2000);
}

TEST_CASE("bistable fixture: two graphs, constant sign changes of the difference") {
    const auto f = catalog_field("bistable-cooperative");
    OmegaOptions oo;
    oo.transient = 50.0;
    oo.horizon = 800.0;
    oo.sample_dt = 0.005;
    const auto up = omega_limit(f, Vec::Constant(2, 2.0), origin(), oo);
    const auto down = omega_limit(f, Vec::Constant(2, -2.0), origin(), oo);
    const std::vector<double> probe{0.25, 0.6};
    CHECK(cover_cardinality(up, probe).count == 1);
    const auto both = merge_sets(up, down);
    CHECK(cover_cardinality(both, probe).count == 2);

    const std::size_t k = 20000;
    const auto d = fiber_distal_profile(up, k, down, k, 50.0);
    CHECK(d.sigma_constant);
    CHECK(d.profile.segments.front().value == 0);
    CHECK(d.forward_gap > 1.0);
    CHECK(d.backward_gap > 1.0);
    const auto swapped = fiber_distal_profile(down, k, up, k, 50.0);
    CHECK(swapped.forward_gap == doctest::Approx(d.forward_gap));
    CHECK(swapped.profile.segments.front().value == d.profile.segments.front().value);

    Vec near = up.x[k];
    near[0] += 1e-3;
    const auto close = fiber_distal_profile(f, up.x[k], near, up.base.advanced(oo.transient + k * oo.sample_dt), 20.0);
    CHECK(close.forward_gap < 1e-8);
    CHECK(close.backward_gap > 5e-4);
    CHECK_THROWS_AS(fiber_distal_profile(f, up.x[k], up.x[k], up.base, 1.0), InvalidInput);
    CHECK_THROWS_AS(fiber_distal_profile(up, k, down, k + 1, 1.0), InvalidInput);
    CHECK_THROWS_AS(fiber_distal_profile(up, 10, down, 10, 50.0), InvalidInput);
}

TEST_CASE("competitive fixture linearizes with its sign pattern") {
    const auto f = catalog_field("competitive-2d");
    OmegaOptions oo;
    oo.horizon = 300.0;
    const auto set = omega_limit(f, Vec::Constant(2, 0.3), origin(), oo);
    const auto lin = linearize_along(f, set.orbit, set.base);
    CHECK(lin.matrix(150.0)(0, 1) <= -0.5);
    const auto rep = hyperbolicity_check(f, set);
    CHECK(rep.verdict == Verdict::NotHyperbolic);
}

TEST_CASE("divergent orbits abort with their last state") {
    const auto f = catalog_field("saddle-nonhomogeneous");
    OmegaOptions oo;
    oo.transient = 10.0;
    oo.horizon = 100.0;
    oo.bound = 1e3;
    CHECK_THROWS_AS(omega_limit(f, Vec::Constant(2, 1.0), origin(), oo), NumericalFailure);
}
