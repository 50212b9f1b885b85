#include "oracles.hpp"

#include <doctest.h>
#include <trifloq/errors.hpp>
#include <trifloq/integrator.hpp>

#include <cmath>

using namespace trifloq;

TEST_CASE("scalar exponential with dense output") {
    Rhs f = [](double, const Vec& x, Vec& dx) { dx = -x; };
    Vec x0(1);
    x0 << 1.0;
    const auto traj = integrate(f, x0, 0.0, 4.0);
    CHECK(traj.t_begin() == 0.0);
    CHECK(traj.t_end() == 4.0);
    for (double t = 0.0; t <= 4.0; t += 0.013) CHECK(traj.at(t)[0] == doctest::Approx(std::exp(-t)).epsilon(1e-8));
    CHECK(traj.states().back()[0] == traj.at(4.0)[0]);
    CHECK_THROWS_AS(traj.at(4.5), InvalidInput);
}

TEST_CASE("grid values are the stored states") {
    Rhs f = [](double t, const Vec& x, Vec& dx) {
        dx.resize(2);
        dx << x[1], -x[0] + std::cos(t);
    };
    Vec x0(2);
    x0 << 1.0, 0.0;
    const auto traj = integrate(f, x0, 0.0, 10.0);
    for (std::size_t k = 0; k < traj.size(); ++k) CHECK((traj.at(traj.times()[k]) - traj.states()[k]).norm() == 0.0);
}

TEST_CASE("backward integration is stored increasing") {
    Rhs f = [](double, const Vec& x, Vec& dx) { dx = x; };
    Vec x0(1);
    x0 << 1.0;
    const auto traj = integrate(f, x0, 0.0, -3.0);
    CHECK(traj.t_begin() == -3.0);
    CHECK(traj.t_end() == 0.0);
    CHECK(traj.states().back()[0] == 1.0);
    CHECK(traj.at(-2.0)[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("fundamental matrix matches the matrix exponential") {
    Mat a(3, 3);
    a << -1, 2, 0, 0.5, 0.3, 1, 0, 1.5, -2;
    const auto coeffs = TridiagCoefficients::constant(a, 0.5);
    const auto phi = fundamental_matrix(coeffs, 0.0, 2.0);
    const Mat ref = oracle::expm(2.0 * a);
    CHECK((phi.at_end() - ref).norm() / ref.norm() < 1e-8);
    CHECK((phi(1.0) - oracle::expm(a)).norm() / ref.norm() < 1e-8);
    const auto back = fundamental_matrix(coeffs, 2.0, 0.0);
    CHECK(back.start() == 2.0);
    const Mat inv = oracle::expm(-2.0 * a);
    CHECK((back.at_end() - inv).norm() / inv.norm() < 1e-8);
}

TEST_CASE("Liouville log det") {
    Mat a(2, 2);
    a << -1, 2, 0.5, 0.3;
    const auto coeffs = TridiagCoefficients::constant(a, 0.5);
    CHECK(liouville_log_det(coeffs, 0.0, 3.0) == doctest::Approx(-2.1).epsilon(1e-12));
    const auto phi = fundamental_matrix(coeffs, 0.0, 3.0);
    CHECK(std::log(phi.at_end().determinant()) == doctest::Approx(-2.1).epsilon(1e-8));
}

TEST_CASE("blow-up reports a numerical failure") {
    Rhs f = [](double, const Vec& x, Vec& dx) { dx = x.cwiseProduct(x); };
    Vec x0(1);
    x0 << 1.0;
    CHECK_THROWS_AS(integrate(f, x0, 0.0, 2.0), NumericalFailure);
}

TEST_CASE("propagate_block agrees with fundamental matrix columns") {
    Mat a(2, 2);
    a << 0.2, 1, 1, -0.4;
    const auto coeffs = TridiagCoefficients::constant(a, 0.5);
    const Mat x0 = Mat::Identity(2, 2);
    const Mat out = propagate_block(coeffs, x0, 0.0, 1.5);
    CHECK((out - oracle::expm(1.5 * a)).norm() < 1e-8);
}
