#pragma once

// Floquet multipliers and eigenvectors of T-periodic cooperative tridiagonal
// systems.

#include "trifloq/integrator.hpp"
#include "trifloq/linalg.hpp"
#include "trifloq/signchain.hpp"
#include "trifloq/tridiag.hpp"

#include <json.hpp>

#include <cstdint>

#include <string>
#include <vector>

namespace trifloq {

struct FloquetOptions {
    double eigen_tol = 1e-10;     // direction change at convergence
    double residual_tol = 1e-8;   // residual acceptance relative to |M|
    bool structure_checks = true; // false downgrades structure failures to warnings
    double zero_band = kDefaultZeroBand;
    std::size_t max_iterations = 20000;
    std::uint64_t seed = 0x7f1a9b3cu;
};

struct FloquetDecomposition {
    double period = 0.0;
    std::vector<double> multipliers;  // descending
    std::vector<double> exponents;    // ln(alpha_m) / T
    std::vector<Vec> eigenvectors;    // unit, first coordinate positive
    std::vector<int> sigma_labels;
    std::vector<double> residuals;    // |M v_m - alpha_m v_m|
    double monodromy_norm = 0.0;
    std::string method;
    /// Smallest multiplier from an independent path (inverse power iteration
    /// for the matrix path, the backward flag for the flow path).
    double smallest_cross_check = 0.0;
    std::vector<std::string> warnings;
};

/// Phi(T) with Phi(0) = I; rejects coefficients that are not declared periodic.
Mat monodromy(const TridiagCoefficients& a, const Tolerances& tol = tight_tolerances());

/// Eigen-decomposition of a monodromy matrix by power iteration with
/// deflation against left eigenvectors, polished by shifted inverse iteration.
FloquetDecomposition floquet_decompose(const Mat& m, double period, const FloquetOptions& opts = {});

/// Converged periodic flags at t = 0: forward (fast modes first) and
/// backward (slow modes first), with the log QR diagonals over one period.
struct PeriodicFlags {
    Mat forward;
    Mat backward;
    std::vector<double> forward_logs;
    std::vector<double> backward_logs;
    std::vector<std::string> warnings;
};
PeriodicFlags periodic_flags(const TridiagCoefficients& a, const FloquetOptions& opts = {});

/// Multipliers from products of QR diagonals over one period of the
/// converged periodic flag, eigenvectors from intersecting the forward and
/// backward flags at t = 0. Residuals are checked against monodromy(a).
FloquetDecomposition floquet_decompose_flow(const TridiagCoefficients& a, const FloquetOptions& opts = {});

struct FloquetSolution {
    Trajectory trajectory;
    SigmaProfile profile;
    /// max over whole periods kT in the horizon of | |x(kT)| / alpha^k - 1 |
    double gain_deviation = 0.0;
};

/// Integrates from v_m over [t0, t1] (t0 <= 0 <= t1) and checks sigma == m
/// throughout. Throws StructureFailure on a sigma deviation.
FloquetSolution floquet_solution_periodic(const FloquetDecomposition& dec, const TridiagCoefficients& a,
                                          int m, double t0, double t1,
                                          const Tolerances& tol = tight_tolerances());

nlohmann::json to_json(const FloquetDecomposition& dec);

}  // namespace trifloq
