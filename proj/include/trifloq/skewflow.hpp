#pragma once

// Nonlinear tridiagonal systems driven by a rotation on a d-torus, viewed as
// skew-product flows: orbits, omega-limit samples, linearization,
// hyperbolicity verdicts and fiber tests.

#include "trifloq/integrator.hpp"
#include "trifloq/linalg.hpp"
#include "trifloq/signchain.hpp"
#include "trifloq/spectrum.hpp"
#include "trifloq/tridiag.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace trifloq {

/// Point theta0 + omega * t on the torus. The elapsed time is kept as an
/// unevaluated sum hi + lo so that advancing by t and then by -t lands on
/// the same phase bit for bit.
class TorusBasePoint {
public:
    TorusBasePoint() = default;
    TorusBasePoint(std::vector<double> theta, std::vector<double> omega);

    std::size_t dimension() const { return omega_.size(); }
    const std::vector<double>& origin() const { return origin_; }
    const std::vector<double>& omega() const { return omega_; }
    double elapsed() const { return hi_ + lo_; }

    std::vector<double> theta() const { return theta_at(0.0); }
    /// Phase s time units after this point.
    std::vector<double> theta_at(double s) const;
    TorusBasePoint advanced(double t) const;

private:
    std::vector<double> origin_;
    std::vector<double> omega_;
    double hi_ = 0.0;
    double lo_ = 0.0;
};

using TorusCoordinateFn =
    std::function<double(std::size_t i, std::span<const double> theta, double left, double center, double right)>;
using TorusPartialsFn = std::function<StencilPartials(std::size_t i, std::span<const double> theta, double left,
                                                      double center, double right)>;

/// x_i' = F_i(theta, x_{i-1}, x_i, x_{i+1}) with theta rotating at omega.
/// An empty omega makes the field autonomous.
struct QuasiPeriodicField {
    std::size_t n = 0;
    std::vector<double> omega;
    TorusCoordinateFn f;
    TorusPartialsFn partials;  // optional
    double eps0 = 0.0;
    std::vector<int> deltas;
    std::string name;

    /// g(t, x) = F(theta0 + omega t, x).
    TridiagonalField frozen(std::span<const double> theta0) const;
    /// Adds c x_i to every coordinate.
    QuasiPeriodicField shifted_by(double c) const;
};

/// x' = A x + b(theta) with constant tridiagonal A and trigonometric forcing.
QuasiPeriodicField linear_forced_field(const Mat& a, std::vector<TrigPolynomial> forcing, std::vector<double> omega,
                                       double eps0, std::string name, std::vector<int> deltas = {});

struct SkewState {
    Vec x;
    TorusBasePoint base;
};

/// Orbit in local time s in [0, t] (or [t, 0]) from (x0, base). The coupling
/// floor is checked at every accepted step.
Trajectory skew_orbit(const QuasiPeriodicField& f, const Vec& x0, const TorusBasePoint& base, double t,
                      const Tolerances& tol = {});
SkewState skew_step(const QuasiPeriodicField& f, const Vec& x0, const TorusBasePoint& base, double t,
                    const Tolerances& tol = {});

/// Uniform cells on the torus; fiber queries return every sample whose
/// phase is within r (max-norm, wrapped) of the probe.
class FiberIndex {
public:
    FiberIndex() = default;
    FiberIndex(const std::vector<std::vector<double>>& thetas, double cell);
    std::vector<std::size_t> query(std::span<const double> theta, double r) const;

private:
    std::size_t dim_ = 0;
    int cells_ = 1;
    std::vector<std::vector<double>> thetas_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
    std::size_t count_ = 0;
    std::uint64_t key(const std::vector<int>& c) const;
};

struct FiberOptions {
    double r_fiber = 1e-2;
    int fiber_min = 30;
    double cluster_tol = 1e-3;
};

/// Fiber samples moved to the probe phase by a local quadratic fit in theta.
struct Fiber {
    std::vector<std::size_t> indices;
    std::vector<Vec> corrected;
    std::vector<int> cluster;  // cluster id per corrected point
    int clusters = 0;
    std::vector<double> diameters;
};

struct OmegaSetApproximation {
    std::vector<Vec> x;
    std::vector<std::vector<double>> theta;
    double transient = 0.0;
    double horizon = 0.0;
    double sample_dt = 0.0;
    std::size_t sample_count = 0;
    double invariance_residual = 0.0;
    double diameter = 0.0;     // bounding-box diagonal of the x samples
    Trajectory orbit;          // generating orbit, local time
    TorusBasePoint base;       // base point at local time 0
    FiberIndex index;
    double index_cell = 1e-2;

    std::vector<std::size_t> fiber(std::span<const double> theta_probe, double r) const;
    Fiber corrected_fiber(std::span<const double> theta_probe, const FiberOptions& opts = {}) const;
    /// Diameter of the corrected fiber treated as one group.
    double fiber_spread(std::span<const double> theta_probe, double r = 1e-2) const;
};

struct OmegaOptions {
    double transient = 100.0;
    double horizon = 400.0;
    double sample_dt = 0.05;
    double bound = 1e6;
    Tolerances tol{1e-10, 1e-12};
    int invariance_probes = 16;
    double invariance_time = 1.0;
    double index_cell = 1e-2;
};

/// Samples the orbit of (x0, base) on [transient, transient + horizon].
/// Throws NumericalFailure with the last state when |x| exceeds bound.
OmegaSetApproximation omega_limit(const QuasiPeriodicField& f, const Vec& x0, const TorusBasePoint& base,
                                  const OmegaOptions& opts = {});

/// Same sampling on an orbit the caller already has (local time, base at 0).
OmegaSetApproximation set_from_orbit(const QuasiPeriodicField& f, const Trajectory& orbit,
                                     const TorusBasePoint& base, double t_from, const OmegaOptions& opts = {});

/// Sets merged as one sample cloud; the orbit of the first is kept.
OmegaSetApproximation merge_sets(const OmegaSetApproximation& a, const OmegaSetApproximation& b);

/// B(t) = D_x F(theta(t), x(t)) along the orbit. Floor violations surface
/// as StructureFailure when the bands are sampled.
TridiagCoefficients linearize_along(const QuasiPeriodicField& f, const Trajectory& orbit, const TorusBasePoint& base);

enum class Verdict { Hyperbolic, NotHyperbolic, Undetermined };
std::string to_string(Verdict v);

struct HyperbolicityOptions {
    int probes = 3;
    double probe_horizon = 120.0;
    std::vector<double> windows{10.0, 20.0, 50.0};
    double max_step = 0.05;
    double warmup = 10.0;
    double resolution = 1e-2;
    int sigma_samples = 1000;
    std::uint64_t seed = 1;
};

struct HyperbolicityReport {
    SpectrumEstimate spectrum;
    bool contains_zero = false;
    int unstable_dim = 0;
    Verdict verdict = Verdict::Undetermined;
    std::string reason;
    std::optional<SpectralInterval> near_zero;
    double approximation_residual = 0.0;  // invariance residual of the sampled set
    std::vector<double> probe_starts;
    std::optional<SigmaBoundsReport> sigma_bounds;  // linearized, at the first probe
};

HyperbolicityReport hyperbolicity_check(const QuasiPeriodicField& f, const OmegaSetApproximation& set,
                                        const HyperbolicityOptions& opts = {});

struct BoundedSolution {
    Trajectory orbit;  // on the grid, local time
    TorusBasePoint base;
    double residual = 0.0;  // one-step defect against the ODE on the grid
    int unstable_dim = 0;
};

/// Unique bounded solution of x' = A x + b(theta(t)) for hyperbolic constant A,
/// x(t) = int G(t, s) b(s) ds with the dichotomy Green's function of A.
BoundedSolution bounded_solution_linear(const Mat& a, const std::vector<TrigPolynomial>& forcing,
                                        const TorusBasePoint& base, double t0, double t1, double step = 0.01,
                                        double tol = 1e-12);

struct CoverReport {
    int count = 0;
    std::vector<double> diameters;
    std::size_t fiber_points = 0;
    std::vector<std::string> warnings;
};

/// Throws NumericalFailure ("insufficient-sampling") when the fiber holds
/// fewer than fiber_min samples.
CoverReport cover_cardinality(const OmegaSetApproximation& set, std::span<const double> theta_probe,
                              const FiberOptions& opts = {});

struct DistalReport {
    double forward_gap = 0.0;
    double backward_gap = 0.0;
    SigmaProfile profile;  // of x1 - x2 over [-H, H]
    bool sigma_constant = false;
};

DistalReport fiber_distal_profile(const QuasiPeriodicField& f, const Vec& x1, const Vec& x2, const TorusBasePoint& base,
                                  double horizon, const Tolerances& tol = {1e-10, 1e-12});

/// Same diagnostics for samples k1, k2 of two sets over one base. Both legs
/// are read from the recorded orbits: backward integration leaves an
/// attracting set exponentially fast, the recorded forward orbit does not.
DistalReport fiber_distal_profile(const OmegaSetApproximation& s1, std::size_t k1, const OmegaSetApproximation& s2,
                                  std::size_t k2, double horizon, double step = 0.01);

nlohmann::json to_json(const OmegaSetApproximation& s);
nlohmann::json to_json(const HyperbolicityReport& r);
nlohmann::json to_json(const CoverReport& r);
nlohmann::json to_json(const DistalReport& r);

}  // namespace trifloq
