#pragma once

// Sign-change counting on the open dense set Lambda of R^n and its
// behaviour along solutions of cooperative tridiagonal systems.

#include "trifloq/linalg.hpp"

#include <vector>

namespace trifloq {

class Trajectory;

inline constexpr double kDefaultZeroBand = 1e-9;
inline constexpr double kDefaultRefineTol = 1e-8;

struct SigmaResult {
    int value = -1;          // meaningful only when defined
    bool defined = false;    // x in Lambda after snapping
    bool ambiguous = false;  // a coordinate lies in (0, zero_band * |x|_inf]
    double margin = 0.0;     // lambda_margin of the raw vector
};

/// Membership in Lambda after snapping coordinates below zero_band*|x|_inf
/// to zero. Throws InvalidInput for the zero vector or n < 2.
bool in_lambda(const Vec& x, double zero_band = kDefaultZeroBand);

/// Number of indices i in [1, n-1] with x_i = 0 or x_i x_{i+1} < 0,
/// evaluated on the snapped vector.
SigmaResult sigma(const Vec& x, double zero_band = kDefaultZeroBand);

/// Normalized distance to the complement of Lambda:
///   min(|x_1|, |x_n|, min_i max(|x_i|, sqrt(max(0, -x_{i-1} x_{i+1})))) / |x|_inf
/// Scale invariant and positive exactly on Lambda.
double lambda_margin(const Vec& x);

struct SigmaSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    int value = 0;
};

struct SigmaProfile {
    std::vector<SigmaSegment> segments;
    std::vector<double> drop_times;
    std::vector<double> undefined_times;
    /// Times where sigma was seen to increase. Non-empty means the trajectory
    /// contradicts monotonicity: integration error or a bad zero band.
    std::vector<double> violations;

    bool monotone() const { return violations.empty(); }
};

struct SigmaProfileOptions {
    double zero_band = kDefaultZeroBand;
    double refine_tol = kDefaultRefineTol;
    int samples_per_step = 8;
};

/// Partition the trajectory's time span into maximal segments of constant
/// sigma. Drops are bracketed between samples and localized by bisection
/// to within refine_tol. Works for backward trajectories too; segments are
/// always reported in increasing time.
SigmaProfile sigma_profile(const Trajectory& traj, const SigmaProfileOptions& opts = {});

}  // namespace trifloq
