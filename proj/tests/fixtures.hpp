#pragma once

// Random instance generators shared by unit and acceptance tests.

#include <trifloq/tridiag.hpp>

#include <random>
#include <vector>

namespace fixtures {

/// Trig-polynomial bands on the 2-torus. Diagonal levels are spaced by
/// `spacing` so consecutive modes stay separated; off-diagonals stay in
/// [off_floor, off_floor + 1.2].
inline trifloq::TridiagCoefficients random_quasi_periodic(int n, std::mt19937_64& rng, double spacing = 1.5,
                                                          double off_floor = 0.5, double wobble = 0.3) {
    using trifloq::TrigPolynomial;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    auto trig = [&](double c, double amp) {
        return TrigPolynomial{c, {amp * u(rng), amp * u(rng)}, {amp * u(rng), amp * u(rng)}};
    };
    std::vector<TrigPolynomial> diag, upper, lower;
    for (int i = 0; i < n; ++i) diag.push_back(trig(-spacing * i + 0.2 * u(rng), wobble / 2));
    for (int i = 0; i + 1 < n; ++i) {
        upper.push_back(trig(off_floor + 0.6 + 0.1 * u(rng), 0.12));
        lower.push_back(trig(off_floor + 0.6 + 0.1 * u(rng), 0.12));
    }
    return trifloq::quasi_periodic_coefficients(diag, upper, lower, trifloq::default_frequencies(),
                                                {phase(rng), phase(rng)}, off_floor);
}

/// Constant cooperative tridiagonal matrix with separated diagonal levels.
inline Eigen::MatrixXd random_constant(int n, std::mt19937_64& rng, double spacing = 1.0) {
    std::uniform_real_distribution<double> off(0.5, 1.5);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = -spacing * i + jitter(rng);
        if (i + 1 < n) {
            a(i, i + 1) = off(rng);
            a(i + 1, i) = off(rng);
        }
    }
    return a;
}

}  // namespace fixtures
