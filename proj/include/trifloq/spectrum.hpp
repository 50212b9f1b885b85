#pragma once

// Growth rates of the Floquet modes, exponential separation, Sacker-Sell
// spectrum estimates and exponential-dichotomy projectors.

#include "trifloq/bundles.hpp"
#include "trifloq/integrator.hpp"
#include "trifloq/linalg.hpp"
#include "trifloq/tridiag.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace trifloq {

/// Recorded in every spectrum report: the estimate samples one orbit.
inline constexpr const char* kSingleOrbitAssumption =
    "spectrum estimated from a single orbit assumed recurrent; the hull is not constructed";

struct WindowMean {
    double window = 0.0;
    double mean = 0.0;
};

struct RateTrace {
    int m = 0;
    std::vector<double> times;
    std::vector<double> values;  // x^T A(t) x for unit x = x_m(t)
    std::vector<WindowMean> windowed_means;  // mean of lambda_m over [t_0, t_0 + w]
    double cross_validation_error = 0.0;     // vs d/dt ln|x_m| by a 5-point stencil
    int cross_validation_points = 0;
};

RateTrace rate_trace(const TridiagCoefficients& a, const FrameSeries& series, int m,
                     const std::vector<double>& windows = {}, int cv_points = 16);

/// Rows (t, lambda_0, ..., lambda_{n-1}) on the series grid.
Mat rate_table(const TridiagCoefficients& a, const FrameSeries& series);

struct Reconstruction {
    Trajectory trajectory;           // sampled on the series grid
    std::vector<double> coefficients;  // c_m with x0 = sum c_m x_m(t_0)
    double relative_error = 0.0;     // max over the grid vs direct integration
    double frame_condition = 0.0;
};

/// Evolves x0 mode by mode, c_m(t) = c_m |x_m(t)|, and compares with direct
/// integration. Throws NumericalFailure when the frame condition exceeds 1e8.
Reconstruction reconstruct_from_modes(const TridiagCoefficients& a, const Vec& x0, const FrameSeries& series);

struct SeparationReport {
    int m = 0;
    double log_k = 0.0;
    double k = 0.0;
    double nu = 0.0;
    double residual = 0.0;  // sup deviation of r(t) from the least-squares line
    double gamma = 0.0;
    double beta = 0.0;
    double span = 0.0;
    bool structure_failure = false;  // nu <= 0
};

/// Pair (m, m+1): r(t) = ln(|Phi x_{m+1}| / |Phi x_m|) for unit initial vectors.
SeparationReport fit_separation(const FrameSeries& series, int m);

struct ModeRange {
    int m = 0;
    double a = 0.0;
    double b = 0.0;
    struct PerWindow {
        double window;
        double min;
        double max;
    };
    std::vector<PerWindow> per_window;
};

struct SpectralInterval {
    double a = 0.0;
    double b = 0.0;
    int multiplicity = 0;
    std::vector<int> modes;
};

struct SpectrumEstimate {
    std::vector<SpectralInterval> intervals;  // right to left, disjoint
    std::vector<ModeRange> modes;
    double horizon = 0.0;
    std::vector<double> windows;  // effective window lengths on the grid
    std::string assumption = kSingleOrbitAssumption;

    int total_multiplicity() const;
};

/// Per-mode ranges of windowed Birkhoff averages of lambda_m; final ranges
/// use the longest window. Overlapping ranges merge.
SpectrumEstimate sacker_sell_estimate(const FrameSeries& series, std::vector<double> windows = {10.0, 20.0, 50.0});

/// Per-mode ranges combined over several orbit pieces, then re-merged.
SpectrumEstimate merge_estimates(const std::vector<SpectrumEstimate>& parts);

struct DichotomyProjector {
    double base_time = 0.0;
    double lambda = 0.0;
    int unstable_dim = 0;
    Mat unstable_basis;  // n x N
    Mat stable_basis;    // n x (n - N)
    Mat q;
    double k_const = 0.0;
    double alpha = 0.0;
    double gap_margin = 0.0;
};

/// Projector at grid index k for the lambda-shifted flow. Throws NoDichotomy
/// when lambda lies in an interval or within gap_fraction of the gap width
/// (unbounded gaps: gap_fraction * max(1, spread)).
DichotomyProjector dichotomy_projector(const FrameSeries& series, const SpectrumEstimate& spectrum, std::size_t k,
                                       double lambda = 0.0, double gap_fraction = 0.05);

/// Unstable dimension from the forward QR growth rates, an estimate that
/// does not use the flag intersections.
struct EdProbe {
    double lambda = 0.0;
    int unstable_dim = 0;
    double distance = 0.0;  // to the nearest QR rate range
    bool dichotomy = false;
};
EdProbe ed_probe(const FrameSeries& series, double lambda, double window = 0.0);

/// Largest principal-angle sine between the spectral bundle of interval i
/// taken from the converged flags (fast flag above, slow flag below) and the
/// span of the designated Floquet vectors.
double spectral_bundle_defect(const FrameSeries& series, const SpectrumEstimate& spectrum, std::size_t k,
                              std::size_t interval);

/// |Phi Q(t1) - Q(t2) Phi| / |Phi| with Phi = Phi(t2, t1).
double projector_invariance_defect(const TridiagCoefficients& a, const DichotomyProjector& p1,
                                   const DichotomyProjector& p2);

struct SigmaBoundsReport {
    int unstable_dim = 0;
    int samples = 0;
    int checked_unstable = 0;
    int checked_stable = 0;
    int skipped = 0;
    std::vector<Vec> violations;
    bool ok() const { return violations.empty(); }
};

/// Random unit vectors in V_u must have sigma <= N-1, in V_s sigma >= N;
/// samples outside Lambda are skipped. `samples` per subspace.
SigmaBoundsReport sigma_bounds_check(const DichotomyProjector& p, int samples, std::uint64_t seed,
                                     double zero_band = kDefaultZeroBand);

/// min of the smallest principal angles of (V_s(y1), V_u(y2)) and (V_u(y1), V_s(y2)).
double transversality_check(const DichotomyProjector& p1, const DichotomyProjector& p2);

nlohmann::json to_json(const RateTrace& r);
nlohmann::json to_json(const SeparationReport& r);
nlohmann::json to_json(const SpectrumEstimate& s);
nlohmann::json to_json(const DichotomyProjector& p);
nlohmann::json to_json(const SigmaBoundsReport& r);

}  // namespace trifloq
