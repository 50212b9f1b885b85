#pragma once

// Time-dependent tridiagonal coefficient matrices A(t), the sign change that
// turns a competitive-cooperative chain into a cooperative one, the periodic
// truncation family, and quasi-periodic generators.

#include "trifloq/linalg.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace trifloq {

/// Band values at one instant. upper[i] = a_{i,i+1}, lower[i] = a_{i+1,i}.
struct Bands {
    Vec diag;
    Vec upper;
    Vec lower;
};

using BandSampler = std::function<Vec(double)>;

struct ConstantInTime {};
struct Periodic {
    double period;
};
struct QuasiPeriodic {
    std::vector<double> frequencies;
};
struct Lipschitz {
    double constant;
};
/// Bounded and uniformly continuous, no further structure declared.
struct UniformlyContinuous {};

using Modulus = std::variant<ConstantInTime, Periodic, QuasiPeriodic, Lipschitz, UniformlyContinuous>;

std::string describe(const Modulus& m);

enum class FloorPolicy {
    Strict,       // delta_i * offdiag >= eps0
    Nonnegative,  // delta_i * offdiag >= 0 (ramps of the periodic truncation)
};

class TridiagCoefficients {
public:
    TridiagCoefficients(std::size_t n, BandSampler diag, BandSampler upper, BandSampler lower,
                        double eps0, Modulus modulus,
                        double bound = std::numeric_limits<double>::infinity(),
                        std::vector<int> deltas = {}, FloorPolicy floor = FloorPolicy::Strict);

    /// Time-independent coefficients from a dense tridiagonal matrix.
    static TridiagCoefficients constant(const Mat& a, double eps0,
                                        std::vector<int> deltas = {});

    std::size_t n() const { return n_; }
    double eps0() const { return eps0_; }
    double bound() const { return bound_; }
    const Modulus& modulus() const { return modulus_; }
    const std::vector<int>& deltas() const { return deltas_; }
    FloorPolicy floor_policy() const { return floor_; }
    bool cooperative() const;

    bool is_constant() const { return std::holds_alternative<ConstantInTime>(modulus_); }
    std::optional<double> period() const;

    /// Sampled bands; throws StructureFailure naming (i, t) when the floor or
    /// the declared bound is violated.
    Bands bands(double t) const;
    Mat matrix(double t) const;
    double trace(double t) const;

    void apply(double t, const Vec& x, Vec& y) const;
    void apply(double t, const Mat& x, Mat& y) const;

    /// A(t + tau).
    TridiagCoefficients shifted(double tau) const;
    /// A(t) + c(t) I. The modulus is kept; callers must keep c compatible.
    TridiagCoefficients with_diagonal_shift(std::function<double(double)> c) const;
    TridiagCoefficients with_modulus(Modulus m) const;
    TridiagCoefficients with_floor(FloorPolicy floor) const;

    const BandSampler& diag_sampler() const { return diag_; }
    const BandSampler& upper_sampler() const { return upper_; }
    const BandSampler& lower_sampler() const { return lower_; }

private:
    std::size_t n_;
    BandSampler diag_, upper_, lower_;
    double eps0_;
    Modulus modulus_;
    double bound_;
    std::vector<int> deltas_;
    FloorPolicy floor_;
};

struct SignPattern {
    std::vector<int> deltas;  // length n-1, entries +-1
    std::vector<int> mus;     // length n, mus[0] = 1, mus[i] = deltas[i-1] * mus[i-1]
};

/// mu_1 = 1, mu_i = delta_{i-1} mu_{i-1}.
SignPattern cooperativize(const std::vector<int>& deltas);

/// Bands a_ij -> mu_i mu_j a_ij with the sign pattern carried along, so the
/// operation is an involution for a fixed pattern.
TridiagCoefficients apply_sign_pattern(const TridiagCoefficients& a, const SignPattern& p);

/// apply_sign_pattern, required to land on a cooperative system.
TridiagCoefficients transform_coefficients(const TridiagCoefficients& a, const SignPattern& p);

/// Periodic truncation A_k of period 2(k+1): linear ramps (t+k+1)A(-k) on
/// (-k-1,-k) and (k+1-t)A(k) on (k,k+1), A itself on [-k,k]. The ramps touch
/// the zero matrix, so the result carries FloorPolicy::Nonnegative.
TridiagCoefficients truncated_periodic(const TridiagCoefficients& a, int k);

/// Phase arithmetic on the d-torus [0,1)^d.
std::vector<double> torus_advance(std::span<const double> theta, std::span<const double> omega,
                                  double t);
double torus_distance(std::span<const double> a, std::span<const double> b);

struct QuasiPeriodicSampler {
    std::vector<double> frequencies;
    std::function<double(std::span<const double>)> torus_function;
    std::vector<double> phase0;

    std::vector<double> phase_at(double t) const;
    double operator()(double t) const;
};

/// c + sum_j (cos_j cos(2 pi theta_j) + sin_j sin(2 pi theta_j)).
struct TrigPolynomial {
    double constant = 0.0;
    std::vector<double> cos;
    std::vector<double> sin;

    double operator()(std::span<const double> theta) const;
    double sup_bound() const;
    double inf_bound() const;
};

/// Default incommensurate frequencies: theta advances as (t, sqrt(2) t) / 2pi.
std::vector<double> default_frequencies();

/// Coefficients whose bands are trigonometric polynomials on the torus
/// driven by theta(t) = phase0 + omega t (mod 1). The declared bound is the
/// sum of absolute coefficients.
TridiagCoefficients quasi_periodic_coefficients(const std::vector<TrigPolynomial>& diag,
                                                const std::vector<TrigPolynomial>& upper,
                                                const std::vector<TrigPolynomial>& lower,
                                                std::vector<double> omega,
                                                std::vector<double> phase0, double eps0);

/// Coordinate function f_i(t, x_{i-1}, x_i, x_{i+1}). Neighbours outside the
/// chain are passed as 0 and must be ignored, so a field cannot reach beyond
/// its tridiagonal stencil.
using CoordinateFn =
    std::function<double(std::size_t i, double t, double left, double center, double right)>;

struct StencilPartials {
    double left = 0.0;
    double center = 0.0;
    double right = 0.0;
};
using PartialsFn =
    std::function<StencilPartials(std::size_t i, double t, double left, double center, double right)>;

/// Nonlinear tridiagonal field x_i' = f_i(t, x_{i-1}, x_i, x_{i+1}) with the
/// monotone coupling delta_i df_i/dx_{i+1} >= eps0, delta_i df_{i+1}/dx_i >= eps0.
/// The coupling floor is probed at construction; a field that fails it is
/// rejected with InvalidInput.
class TridiagonalField {
public:
    TridiagonalField(std::size_t n, CoordinateFn f, PartialsFn partials, double eps0,
                     std::vector<int> deltas = {});

    std::size_t n() const { return n_; }
    double eps0() const { return eps0_; }
    const std::vector<int>& deltas() const { return deltas_; }
    bool analytic_partials() const { return static_cast<bool>(partials_); }

    void eval(double t, const Vec& x, Vec& dx) const;
    Vec operator()(double t, const Vec& x) const;

    /// Analytic partials if supplied, else central differences with step
    /// eps^(1/3) max(1, |x_j|).
    StencilPartials partials(std::size_t i, double t, const Vec& x) const;
    Bands jacobian_bands(double t, const Vec& x) const;
    Mat jacobian(double t, const Vec& x) const;

    /// First coupling-floor violation at (t, x): returns the chain index or -1.
    int floor_violation(double t, const Vec& x) const;

    const CoordinateFn& coordinate_fn() const { return f_; }
    const PartialsFn& partials_fn() const { return partials_; }

private:
    std::size_t n_;
    CoordinateFn f_;
    PartialsFn partials_;
    double eps0_;
    std::vector<int> deltas_;
};

/// x^_i = mu_i x_i applied to a nonlinear field.
TridiagonalField transform_field(const TridiagonalField& f, const SignPattern& p);

/// Linear field A(t) x viewed as a tridiagonal field.
TridiagonalField linear_field(const TridiagCoefficients& a);

}  // namespace trifloq
