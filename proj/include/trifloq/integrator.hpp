#pragma once

// Adaptive Dormand-Prince 5(4) integration with PI step control and the
// pair's standard continuous extension.

#include "trifloq/linalg.hpp"
#include "trifloq/tridiag.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace trifloq {

struct Tolerances {
    double rel = 1e-9;
    double abs = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 20'000'000;
};

/// For frames and eigenvectors: states are O(1) and later QR products or
/// intersections amplify local error.
inline Tolerances tight_tolerances() { return Tolerances{1e-12, 1e-14}; }

using Rhs = std::function<void(double t, const Vec& x, Vec& dx)>;

/// Solution samples on a strictly increasing grid plus the integrator's
/// dense output. Values at grid points are the stored states, bit for bit.
class Trajectory {
public:
    struct Segment {
        double origin = 0.0;  // time where theta = 0
        double step = 0.0;    // signed step; theta = (t - origin) / step
        Mat coeffs;           // n x 5 continuous-extension coefficients
    };

    Trajectory() = default;
    Trajectory(std::vector<double> times, std::vector<Vec> states, std::vector<Segment> segments,
               std::string rhs_descriptor);

    std::size_t dimension() const { return states_.empty() ? 0 : static_cast<std::size_t>(states_.front().size()); }
    std::size_t size() const { return times_.size(); }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<Vec>& states() const { return states_; }
    const std::string& rhs_descriptor() const { return descriptor_; }

    bool has_dense_output() const { return !segments_.empty() || times_.size() < 2; }

    /// Dense-output value; throws InvalidInput outside [t_begin, t_end].
    /// Sampled trajectories without dense output interpolate linearly.
    Vec at(double t) const;

    /// Trajectory of P x(t), sharing the grid.
    Trajectory mapped(const Mat& p, std::string descriptor) const;

    /// Concatenation; later.t_begin() must equal t_end().
    Trajectory joined(const Trajectory& later) const;

private:
    std::vector<double> times_;
    std::vector<Vec> states_;
    std::vector<Segment> segments_;  // segments_[k] covers [times_[k], times_[k+1]]
    std::string descriptor_;
};

/// Integrates x' = f(t, x) from t0 to t1 (either direction) and keeps the
/// dense output. Throws NumericalFailure on step-size underflow, step-count
/// exhaustion or a non-finite state.
Trajectory integrate(const Rhs& f, const Vec& x0, double t0, double t1, const Tolerances& tol = {},
                     std::string descriptor = "rhs");

/// Same stepping as integrate() but only the final state is kept.
Vec propagate(const Rhs& f, const Vec& x0, double t0, double t1, const Tolerances& tol = {});

/// x' = A(t) x.
Trajectory integrate_linear(const TridiagCoefficients& a, const Vec& x0, double t0, double t1,
                            const Tolerances& tol = {});

/// X' = A(t) X for an n x k block, returned at t1.
Mat propagate_block(const TridiagCoefficients& a, const Mat& x0, double t0, double t1,
                    const Tolerances& tol = {});

/// Principal fundamental matrix on [t0, t1] with Phi(t0) = I.
class FundamentalMatrix {
public:
    FundamentalMatrix(Trajectory packed, std::size_t n);

    double start() const { return start_; }
    double finish() const { return finish_; }
    Mat operator()(double t) const;
    Mat at_end() const { return (*this)(finish_); }

private:
    Trajectory packed_;
    std::size_t n_;
    double start_;
    double finish_;
};

/// All n columns are integrated as one block system X' = A(t) X so every
/// column sees the same steps; the one-step map is then a single linear map.
FundamentalMatrix fundamental_matrix(const TridiagCoefficients& a, double t0, double t1,
                                     const Tolerances& tol = {});

/// log det Phi(t1, t0) predicted by Liouville: integral of trace A over [t0, t1]
/// by composite Gauss-Legendre quadrature.
double liouville_log_det(const TridiagCoefficients& a, double t0, double t1, int panels = 0);

Trajectory integrate_nonlinear(const TridiagonalField& f, const Vec& x0, double t0, double t1,
                               const Tolerances& tol = {});

}  // namespace trifloq
