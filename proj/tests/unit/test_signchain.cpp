#include "oracles.hpp"

#include <doctest.h>
#include <trifloq/errors.hpp>
#include <trifloq/integrator.hpp>
#include <trifloq/signchain.hpp>

#include <random>

using namespace trifloq;

namespace {
Vec v(std::initializer_list<double> xs) {
    Vec out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

TridiagCoefficients swap2() {
    Mat a(2, 2);
    a << 0, 1, 1, 0;
    return TridiagCoefficients::constant(a, 0.5);
}
}  // namespace

TEST_CASE("sigma counts sign changes and interior zeros") {
    CHECK(sigma(v({1, 1})).value == 0);
    CHECK(sigma(v({1, -1})).value == 1);
    CHECK(sigma(v({1, 0, -1})).value == 1);
    CHECK(sigma(v({1, -2, 3, -4})).value == 3);
    CHECK_FALSE(sigma(v({0, 1})).defined);
    CHECK_FALSE(sigma(v({1, 0, 1})).defined);
    CHECK_FALSE(sigma(v({1, 0, 0, -1})).defined);
    CHECK_FALSE(in_lambda(v({1, 2, 0})));
}

TEST_CASE("zero band snaps tiny coordinates and flags ambiguity") {
    const SigmaResult r = sigma(v({1, 1e-12, -1}));
    CHECK(r.defined);
    CHECK(r.ambiguous);
    CHECK(r.value == 1);
    CHECK_FALSE(sigma(v({1, 1e-12, 1})).defined);
    CHECK_FALSE(sigma(v({1, 1e-3, -1})).ambiguous);
}

TEST_CASE("bad inputs are rejected") {
    CHECK_THROWS_AS(sigma(v({0, 0, 0})), InvalidInput);
    CHECK_THROWS_AS(sigma(v({1})), InvalidInput);
}

TEST_CASE("lambda_margin") {
    CHECK(lambda_margin(v({2, 1})) == doctest::Approx(0.5));
    CHECK(lambda_margin(v({1, 0, -4})) == doctest::Approx(0.25));
    CHECK(lambda_margin(v({4, 0, -4})) == doctest::Approx(1.0));
    CHECK(lambda_margin(v({1, 0, 4})) == 0.0);
    CHECK(lambda_margin(v({0, 1})) == 0.0);
    CHECK(lambda_margin(3.0 * v({1, -0.2, 0.7})) == doctest::Approx(lambda_margin(v({1, -0.2, 0.7}))));
}

TEST_CASE("sigma is scale invariant") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 500; ++trial) {
        Vec x(6);
        for (auto& c : x) c = g(rng);
        const double alpha = (trial % 2 ? -1.0 : 1.0) * std::exp(g(rng) * 5.0);
        const auto a = sigma(x);
        const auto b = sigma(alpha * x);
        REQUIRE(a.defined == b.defined);
        if (a.defined) CHECK(a.value == b.value);
    }
}

TEST_CASE("agrees with the exact integer predicate") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coord(-2, 2);
    std::uniform_int_distribution<int> dim(2, 7);
    for (int trial = 0; trial < 5000; ++trial) {
        const int n = dim(rng);
        std::vector<long long> xi(n);
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = static_cast<double>(xi[i] = coord(rng));
        if (x.lpNorm<Eigen::Infinity>() == 0.0) continue;
        const int expect = oracle::sign_changes(xi);
        const auto r = sigma(x, 0.0);
        CHECK(in_lambda(x, 0.0) == (expect >= 0));
        CHECK(r.defined == (expect >= 0));
        if (expect >= 0) CHECK(r.value == expect);
    }
}

TEST_CASE("profile along the dominant eigendirection") {
    const auto a = swap2();
    const auto traj = integrate_linear(a, v({1, 1}), 0.0, 5.0);
    const auto p = sigma_profile(traj);
    REQUIRE(p.segments.size() == 1);
    CHECK(p.segments[0].value == 0);
    CHECK(p.monotone());
    CHECK(p.drop_times.empty());
}

TEST_CASE("profile along the subdominant eigendirection") {
    const auto traj = integrate_linear(swap2(), v({1, -1}), 0.0, 5.0);
    const auto p = sigma_profile(traj);
    REQUIRE(p.segments.size() == 1);
    CHECK(p.segments[0].value == 1);
}

TEST_CASE("profile starting on the boundary of Lambda") {
    const auto traj = integrate_linear(swap2(), v({0, 1}), 0.0, 3.0);
    const auto p = sigma_profile(traj);
    REQUIRE(!p.undefined_times.empty());
    CHECK(p.undefined_times.front() == 0.0);
    REQUIRE(p.segments.size() == 1);
    CHECK(p.segments[0].value == 0);
    CHECK(p.monotone());
}

TEST_CASE("drop is localized") {
    // x(t) = e^t (1,1) - c e^{-t} (1,-1) crosses x_1 = 0 at t* = ln(c)/2.
    const double c = std::exp(2.0);
    const auto traj = integrate_linear(swap2(), v({1 - c, 1 + c}), 0.0, 3.0);
    const auto p = sigma_profile(traj);
    REQUIRE(p.drop_times.size() == 1);
    CHECK(p.drop_times[0] == doctest::Approx(1.0).epsilon(1e-7));
    REQUIRE(p.segments.size() == 2);
    CHECK(p.segments[0].value == 1);
    CHECK(p.segments[1].value == 0);
}

TEST_CASE("backward trajectory is reported in increasing time") {
    const double c = std::exp(2.0);
    const auto traj = integrate_linear(swap2(), v({1 - c, 1 + c}), 3.0, 0.0);
    CHECK(traj.t_begin() == 0.0);
    const auto p = sigma_profile(traj);
    CHECK(p.monotone());
}

TEST_CASE("identically zero trajectory rejected") {
    const auto traj = integrate_linear(swap2(), v({0, 0}), 0.0, 1.0);
    CHECK_THROWS_AS(sigma_profile(traj), InvalidInput);
}
