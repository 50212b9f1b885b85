#pragma once

// Floquet directions x_m(t) and spaces W_{l,m} for general time-dependent
// cooperative tridiagonal systems.

#include "trifloq/integrator.hpp"
#include "trifloq/linalg.hpp"
#include "trifloq/signchain.hpp"
#include "trifloq/tridiag.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace trifloq {

struct BundleOptions {
    double dir_tol = 1e-8;
    std::vector<int> k_schedule{4, 8, 16, 32, 64};
    /// Warmup for the push-forward sweeps; 0 selects 20 / gamma from a pilot run.
    double warmup = 0.0;
    double fallback_warmup = 50.0;
    double pilot_length = 20.0;
    double max_reorth_interval = 1.0;
    double frame_tol = 1e-10;
    double intersection_ratio = 10.0;
    int max_extensions = 6;
    double verify_window = 1.0;
    double zero_band = kDefaultZeroBand;
    std::uint64_t seed = 0x2545f4914f6cdd1dull;
};

enum class BundleMethod { Truncation, Pushforward, Transport };
std::string to_string(BundleMethod m);

struct BundleFrame {
    double base_time = 0.0;
    std::vector<Vec> vectors;  // x_0 .. x_{n-1}, unit, first coordinate positive
    std::vector<bool> sigma_check;
    BundleMethod method = BundleMethod::Pushforward;
    std::vector<double> convergence_gap;
    double condition = 0.0;         // 2-norm condition of the frame matrix
    double warmup = 0.0;            // push-forward only
    std::vector<double> gains;      // transport only: |Phi(t1, t0) x_m(t0)|

    std::size_t dimension() const { return vectors.size(); }
    Mat matrix() const;
};

/// Pilot estimate of the smallest gap between consecutive QR growth rates
/// on [t0, t0 + length], clamped to [0.05, 10]; 0 if no positive gap is seen.
double separation_pilot(const TridiagCoefficients& a, double t0, double length, std::uint64_t seed);

struct TruncationResult {
    Vec direction;
    std::vector<int> ks;
    std::vector<double> gaps;  // direction change between consecutive ks
};

/// x_m(t0) from the periodic truncations of A(. + t0) along the schedule.
/// Throws NumericalFailure (message carries the gap sequence) without
/// Cauchy convergence and StructureFailure if sigma verification fails.
TruncationResult floquet_solution_truncation(const TridiagCoefficients& a, int m, double t0 = 0.0,
                                             const BundleOptions& opts = {});

/// All directions at t0 by truncation; shares the periodic runs across modes.
BundleFrame floquet_frame_truncation(const TridiagCoefficients& a, double t0 = 0.0,
                                     const BundleOptions& opts = {});

/// Forward and backward QR sweeps over [t_center - W, t_center + W] and
/// intersection of the fast and slow flags, extended until successive
/// warmups agree within dir_tol.
BundleFrame floquet_bundle_pushforward(const TridiagCoefficients& a, double t_center,
                                       const BundleOptions& opts = {});

/// Transports a frame to t1 by the flow and renormalizes; throws
/// StructureFailure if a first coordinate changes sign along the way.
BundleFrame bundle_along_orbit(const TridiagCoefficients& a, const BundleFrame& frame, double t1,
                               const Tolerances& tol = tight_tolerances());

struct DimensionReport {
    int l = 0;
    int m = 0;
    int rank = 0;
    double smallest_singular = 0.0;
    int samples = 0;
    int checked = 0;     // samples that landed in Lambda
    int violations = 0;  // sigma outside [l, m]
    bool ok() const { return rank == m - l + 1 && violations == 0; }
};

/// Rank of span(x_l..x_m) and sigma range of random members; throws
/// StructureFailure on rank deficiency.
DimensionReport dimension_check(const BundleFrame& frame, int l, int m, int samples,
                                std::uint64_t seed, const BundleOptions& opts = {});

/// Floquet directions on a grid along [t_begin, t_end] with exact per-step
/// log-gains: log_gains(k, m) = ln |Phi(t_{k+1}, t_k) x_m(t_k)|.
struct FrameSeries {
    std::vector<double> times;
    std::vector<Mat> frames;   // column m is x_m(t_k)
    Mat log_gains;             // (K-1) x n
    Mat cumulative;            // K x n, ln |x_m(t_k)| relative to t_begin
    Mat qr_logs;               // (K-1) x n, log diagonal of the forward R factors
    std::vector<Mat> fast_flags;  // converged forward QR frames: leading m+1 columns span W_{0,m}
    std::vector<Mat> slow_flags;  // converged backward QR frames: leading n-m columns span W_{m,n-1}
    double warmup = 0.0;
    double transport_defect = 0.0;    // max angle between transported and recomputed directions
    double min_angle_ratio = 0.0;     // min over grid and m of second / smallest principal angle
    double max_condition = 0.0;

    std::size_t dimension() const { return frames.empty() ? 0 : static_cast<std::size_t>(frames.front().cols()); }
    double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    BundleFrame frame_at(std::size_t k) const;
};

/// Grid spacing is at most max_step and divides the span evenly.
FrameSeries frame_series(const TridiagCoefficients& a, double t_begin, double t_end, double max_step,
                         const BundleOptions& opts = {});

struct SigmaAlongSeries {
    int checked_steps = 0;
    int failures = 0;
    double first_failure_time = 0.0;
    int first_failure_mode = -1;
};

/// Integrates every x_m(t_k) across [t_k, t_{k+1}] and checks sigma == m on
/// the dense output.
SigmaAlongSeries verify_sigma_along(const TridiagCoefficients& a, const FrameSeries& series,
                                   const BundleOptions& opts = {});

nlohmann::json to_json(const BundleFrame& frame);

}  // namespace trifloq
