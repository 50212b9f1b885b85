#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <trifloq/bundles.hpp>
#include <trifloq/errors.hpp>

#include <cmath>
#include <random>

using namespace trifloq;

namespace {
Mat chain3() {
    Mat a(3, 3);
    a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    return a;
}
}  // namespace

TEST_CASE("constant system: truncation returns the eigenvectors") {
    const auto a = TridiagCoefficients::constant(chain3(), 0.5);
    const auto eig = oracle::tridiag_eig(chain3());
    const auto r = floquet_solution_truncation(a, 1);
    CHECK(line_angle(r.direction, eig.vectors[1]) < 1e-8);
    CHECK(r.gaps.back() < 1e-8);
    const auto frame = floquet_frame_truncation(a);
    for (std::size_t m = 0; m < 3; ++m) {
        CHECK(line_angle(frame.vectors[m], eig.vectors[m]) < 1e-8);
        CHECK(frame.sigma_check[m]);
    }
}

TEST_CASE("scalar perturbation leaves the directions unchanged") {
    const auto a = TridiagCoefficients::constant(chain3(), 0.5);
    const auto b = a.with_diagonal_shift([](double t) { return 0.1 * std::sin(t); });
    const auto fa = floquet_frame_truncation(a);
    const auto fb = floquet_frame_truncation(b);
    for (std::size_t m = 0; m < 3; ++m) CHECK(line_angle(fa.vectors[m], fb.vectors[m]) < 1e-8);
}

TEST_CASE("push-forward on constant systems") {
    std::mt19937_64 rng(3);
    const Mat m = fixtures::random_constant(5, rng);
    const auto a = TridiagCoefficients::constant(m, 0.4);
    const auto eig = oracle::tridiag_eig(m);
    const auto frame = floquet_bundle_pushforward(a, 0.0);
    for (std::size_t k = 0; k < 5; ++k) CHECK(line_angle(frame.vectors[k], eig.vectors[k]) < 1e-8);
    CHECK(frame.warmup > 0.0);
    CHECK(std::isfinite(frame.condition));

    Mat s2(2, 2);
    s2 << 0, 1, 1, 0;
    const auto f2 = floquet_bundle_pushforward(TridiagCoefficients::constant(s2, 0.5), 3.0);
    CHECK(std::abs(f2.vectors[0][0] - std::sqrt(0.5)) < 1e-9);
}

TEST_CASE("push-forward is independent of the initial frame") {
    std::mt19937_64 rng(17);
    const auto a = fixtures::random_quasi_periodic(4, rng);
    BundleOptions o;
    o.seed = 1;
    const auto ref = floquet_bundle_pushforward(a, 0.0, o);
    for (std::uint64_t seed = 2; seed <= 10; ++seed) {
        o.seed = seed;
        const auto f = floquet_bundle_pushforward(a, 0.0, o);
        for (std::size_t m = 0; m < 4; ++m) CHECK(line_angle(f.vectors[m], ref.vectors[m]) < 1e-8);
    }
}

TEST_CASE("truncation and push-forward agree on a quasi-periodic instance") {
    std::mt19937_64 rng(23);
    const auto a = fixtures::random_quasi_periodic(4, rng);
    const auto t = floquet_frame_truncation(a, 0.7);
    const auto p = floquet_bundle_pushforward(a, 0.7);
    for (std::size_t m = 0; m < 4; ++m) {
        CHECK(line_angle(t.vectors[m], p.vectors[m]) < 1e-6);
        CHECK(p.sigma_check[m]);
    }
}

TEST_CASE("transport") {
    Mat s2(2, 2);
    s2 << 0, 1, 1, 0;
    const auto c = TridiagCoefficients::constant(s2, 0.5);
    const auto f = floquet_bundle_pushforward(c, 0.0);
    const auto g = bundle_along_orbit(c, f, 1.5);
    CHECK(g.gains[0] == doctest::Approx(std::exp(1.5)).epsilon(1e-9));
    CHECK(g.gains[1] == doctest::Approx(std::exp(-1.5)).epsilon(1e-9));
    CHECK(line_angle(g.vectors[1], f.vectors[1]) < 1e-9);

    std::mt19937_64 rng(29);
    const auto a = fixtures::random_quasi_periodic(3, rng);
    const auto f0 = floquet_bundle_pushforward(a, 0.0);
    const auto moved = bundle_along_orbit(a, f0, 1.0);
    const auto fresh = floquet_bundle_pushforward(a, 1.0);
    const auto back = bundle_along_orbit(a, moved, 0.0);
    const auto two_step = bundle_along_orbit(a, bundle_along_orbit(a, f0, 0.4), 1.0);
    for (std::size_t m = 0; m < 3; ++m) {
        CHECK(line_angle(moved.vectors[m], fresh.vectors[m]) < 1e-6);
        CHECK(line_angle(back.vectors[m], f0.vectors[m]) < 1e-8);
        CHECK(line_angle(two_step.vectors[m], moved.vectors[m]) < 1e-8);
        CHECK(two_step.vectors[m][0] > 0.0);
    }
}

TEST_CASE("dimension of Floquet spaces") {
    std::mt19937_64 rng(31);
    const auto a = fixtures::random_quasi_periodic(4, rng);
    const auto f = floquet_bundle_pushforward(a, 0.0);
    for (int l = 0; l < 4; ++l) {
        for (int m = l; m < 4; ++m) {
            const auto rep = dimension_check(f, l, m, 300, 99);
            CHECK(rep.rank == m - l + 1);
            CHECK(rep.violations == 0);
            CHECK(rep.ok());
        }
    }
    BundleFrame bad = f;
    bad.vectors[1] = bad.vectors[0];
    CHECK_THROWS_AS(dimension_check(bad, 0, 1, 10, 1), StructureFailure);
}

TEST_CASE("frame series: gains, sigma and transport") {
    Mat m3 = chain3();
    const auto c = TridiagCoefficients::constant(m3, 0.5);
    const auto s = frame_series(c, 0.0, 5.0, 0.25);
    CHECK(s.cumulative(static_cast<Eigen::Index>(s.times.size()) - 1, 0) == doctest::Approx(5.0 * std::sqrt(2.0)).epsilon(1e-10));
    CHECK(std::abs(s.cumulative(static_cast<Eigen::Index>(s.times.size()) - 1, 1)) < 1e-9);
    CHECK(s.transport_defect < 1e-8);

    std::mt19937_64 rng(37);
    const auto a = fixtures::random_quasi_periodic(4, rng);
    const auto q = frame_series(a, -3.0, 3.0, 0.25);
    const auto rep = verify_sigma_along(a, q);
    CHECK(rep.failures == 0);
    CHECK(rep.checked_steps == 4 * static_cast<int>(q.times.size() - 1));
    const std::size_t mid = (q.times.size() - 1) / 2;
    const auto p = floquet_bundle_pushforward(a, q.times[mid]);
    for (Eigen::Index m = 0; m < 4; ++m) CHECK(line_angle(q.frames[mid].col(m), p.vectors[static_cast<std::size_t>(m)]) < 1e-7);
}
