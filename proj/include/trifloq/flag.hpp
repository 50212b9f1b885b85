#pragma once

// Orthonormal frames carried along x' = A(t) x with QR re-orthonormalization.
// A sweep run forward converges to the fast flag span(x_0..x_m); run backward
// it converges to the slow flag span(x_m..x_{n-1}).

#include "trifloq/integrator.hpp"
#include "trifloq/linalg.hpp"
#include "trifloq/tridiag.hpp"

#include <cstdint>
#include <vector>

namespace trifloq {

struct FlagSweep {
    std::vector<double> times;  // sweep order, first entry is the start time
    std::vector<Mat> frames;    // Q_k at times[k]
    std::vector<Mat> r;         // Phi(times[k+1], times[k]) Q_k = Q_{k+1} r[k]
};

/// Largest re-orthonormalization step not exceeding max_interval such that
/// the frame condition grows by at most about e^2 per step, estimated from
/// sampled inf-norms of A on [t0, t1].
double reorth_interval(const TridiagCoefficients& a, double t0, double t1, double max_interval = 1.0);

/// Equispaced grid from t0 to t1 (either direction) with spacing at most h;
/// both endpoints are exact.
std::vector<double> uniform_grid(double t0, double t1, double h);

/// Thin QR with a positive R diagonal.
void qr_positive(const Mat& y, Mat& q, Mat& r);

/// Deterministic generic orthonormal n x k frame.
Mat generic_frame(std::size_t n, std::size_t k, std::uint64_t seed);

/// Sweeps q0 along grid (times in sweep order). keep_frames=false stores only
/// the last frame and all R factors.
FlagSweep flag_sweep(const TridiagCoefficients& a, const Mat& q0, const std::vector<double>& grid,
                     const Tolerances& tol = tight_tolerances(), bool keep_frames = true);

/// Largest sine of principal angles between the leading (m+1)-column spans
/// of p and q, over all m < cols.
double flag_distance(const Mat& p, const Mat& q);

}  // namespace trifloq
