#include "trifloq/tridiag.hpp"

#include "trifloq/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace trifloq {

namespace {

constexpr const char* kModule = "tridiag";

std::vector<int> default_deltas(std::size_t n, std::vector<int> deltas) {
    if (deltas.empty()) return std::vector<int>(n > 0 ? n - 1 : 0, 1);
    if (deltas.size() != n - 1) {
        throw InvalidInput(kModule, "sign-pattern", "expected n-1 signs");
    }
    for (int d : deltas) {
        if (d != 1 && d != -1) throw InvalidInput(kModule, "sign-pattern", "signs must be +-1");
    }
    return deltas;
}

double frac(double v) {
    double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
}

}  // namespace

std::string describe(const Modulus& m) {
    struct Visitor {
        std::string operator()(const ConstantInTime&) const { return "constant"; }
        std::string operator()(const Periodic& p) const {
            std::ostringstream s;
            s << "periodic(T=" << p.period << ")";
            return s.str();
        }
        std::string operator()(const QuasiPeriodic& q) const {
            std::ostringstream s;
            s << "quasi-periodic(d=" << q.frequencies.size() << ")";
            return s.str();
        }
        std::string operator()(const Lipschitz& l) const {
            std::ostringstream s;
            s << "lipschitz(L=" << l.constant << ")";
            return s.str();
        }
        std::string operator()(const UniformlyContinuous&) const { return "uniformly-continuous"; }
    };
    return std::visit(Visitor{}, m);
}

TridiagCoefficients::TridiagCoefficients(std::size_t n, BandSampler diag, BandSampler upper,
                                         BandSampler lower, double eps0, Modulus modulus,
                                         double bound, std::vector<int> deltas, FloorPolicy floor)
    : n_(n), diag_(std::move(diag)), upper_(std::move(upper)), lower_(std::move(lower)),
      eps0_(eps0), modulus_(std::move(modulus)), bound_(bound),
      deltas_(default_deltas(n, std::move(deltas))), floor_(floor) {
    if (n_ < 2) throw InvalidInput(kModule, "dimension", "n must be at least 2");
    if (!(eps0_ > 0.0)) throw InvalidInput(kModule, "eps0", "eps0 must be positive");
    if (!diag_ || !upper_ || !lower_) throw InvalidInput(kModule, "samplers", "missing band sampler");
    if (const auto* p = std::get_if<Periodic>(&modulus_); p && !(p->period > 0.0)) {
        throw InvalidInput(kModule, "period", "period must be positive");
    }
}

TridiagCoefficients TridiagCoefficients::constant(const Mat& a, double eps0, std::vector<int> deltas) {
    const auto n = static_cast<std::size_t>(a.rows());
    if (a.rows() != a.cols() || n < 2) {
        throw InvalidInput(kModule, "dimension", "expected a square matrix with n >= 2");
    }
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (std::abs(i - j) > 1 && a(i, j) != 0.0) {
                throw InvalidInput(kModule, "tridiagonal", "matrix has entries off the three bands");
            }
        }
    }
    const Vec d = a.diagonal();
    const Vec up = a.diagonal(1);
    const Vec lo = a.diagonal(-1);
    const double bound = a.cwiseAbs().maxCoeff();
    TridiagCoefficients out(
        n, [d](double) { return d; }, [up](double) { return up; }, [lo](double) { return lo; },
        eps0, ConstantInTime{}, bound, std::move(deltas));
    // Constant input is checked once, up front.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double s = out.deltas_[i];
        const auto ii = static_cast<Eigen::Index>(i);
        if (s * up[ii] < eps0 || s * lo[ii] < eps0) {
            std::ostringstream msg;
            msg << "off-diagonal pair at i=" << i << " below eps0=" << eps0;
            throw InvalidInput(kModule, "cooperative-floor", msg.str());
        }
    }
    return out;
}

bool TridiagCoefficients::cooperative() const {
    for (int d : deltas_) {
        if (d != 1) return false;
    }
    return true;
}

std::optional<double> TridiagCoefficients::period() const {
    if (const auto* p = std::get_if<Periodic>(&modulus_)) return p->period;
    return std::nullopt;
}

Bands TridiagCoefficients::bands(double t) const {
    Bands b{diag_(t), upper_(t), lower_(t)};
    const auto n = static_cast<Eigen::Index>(n_);
    if (b.diag.size() != n || b.upper.size() != n - 1 || b.lower.size() != n - 1) {
        throw InvalidInput(kModule, "samplers", "band sampler returned the wrong length");
    }
    const double floor = floor_ == FloorPolicy::Strict ? eps0_ : 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double s = deltas_[static_cast<std::size_t>(i)];
        if (!(s * b.upper[i] >= floor) || !(s * b.lower[i] >= floor)) {
            std::ostringstream msg;
            msg << "coupling a(" << i << "," << i + 1 << ")=" << b.upper[i] << ", a(" << i + 1 << ","
                << i << ")=" << b.lower[i] << " violates floor " << floor << " at i=" << i
                << ", t=" << t;
            throw StructureFailure(kModule, "cooperative-floor", msg.str());
        }
    }
    if (std::isfinite(bound_)) {
        const double slack = bound_ * (1.0 + 1e-12) + 1e-300;
        const double m = std::max({b.diag.cwiseAbs().maxCoeff(), b.upper.cwiseAbs().maxCoeff(),
                                   b.lower.cwiseAbs().maxCoeff()});
        if (m > slack) {
            std::ostringstream msg;
            msg << "sample " << m << " exceeds declared bound " << bound_ << " at t=" << t;
            throw StructureFailure(kModule, "bound", msg.str());
        }
    }
    return b;
}

Mat TridiagCoefficients::matrix(double t) const {
    const Bands b = bands(t);
    const auto n = static_cast<Eigen::Index>(n_);
    Mat a = Mat::Zero(n, n);
    a.diagonal() = b.diag;
    a.diagonal(1) = b.upper;
    a.diagonal(-1) = b.lower;
    return a;
}

double TridiagCoefficients::trace(double t) const { return diag_(t).sum(); }

void TridiagCoefficients::apply(double t, const Vec& x, Vec& y) const {
    const Bands b = bands(t);
    const auto n = static_cast<Eigen::Index>(n_);
    y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = b.diag[i] * x[i];
        if (i > 0) v += b.lower[i - 1] * x[i - 1];
        if (i + 1 < n) v += b.upper[i] * x[i + 1];
        y[i] = v;
    }
}

void TridiagCoefficients::apply(double t, const Mat& x, Mat& y) const {
    const Bands b = bands(t);
    const auto n = static_cast<Eigen::Index>(n_);
    y.resize(n, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        y.row(i) = b.diag[i] * x.row(i);
        if (i > 0) y.row(i) += b.lower[i - 1] * x.row(i - 1);
        if (i + 1 < n) y.row(i) += b.upper[i] * x.row(i + 1);
    }
}

TridiagCoefficients TridiagCoefficients::shifted(double tau) const {
    auto d = diag_;
    auto u = upper_;
    auto l = lower_;
    return TridiagCoefficients(
        n_, [d, tau](double t) { return d(t + tau); }, [u, tau](double t) { return u(t + tau); },
        [l, tau](double t) { return l(t + tau); }, eps0_, modulus_, bound_, deltas_, floor_);
}

TridiagCoefficients TridiagCoefficients::with_diagonal_shift(std::function<double(double)> c) const {
    auto d = diag_;
    return TridiagCoefficients(
        n_, [d, c](double t) { return Vec(d(t).array() + c(t)); }, upper_, lower_, eps0_, modulus_,
        std::numeric_limits<double>::infinity(), deltas_, floor_);
}

TridiagCoefficients TridiagCoefficients::with_modulus(Modulus m) const {
    return TridiagCoefficients(n_, diag_, upper_, lower_, eps0_, std::move(m), bound_, deltas_, floor_);
}

TridiagCoefficients TridiagCoefficients::with_floor(FloorPolicy floor) const {
    return TridiagCoefficients(n_, diag_, upper_, lower_, eps0_, modulus_, bound_, deltas_, floor);
}

SignPattern cooperativize(const std::vector<int>& deltas) {
    SignPattern p;
    p.deltas = deltas;
    p.mus.resize(deltas.size() + 1);
    p.mus[0] = 1;
    for (std::size_t i = 1; i < p.mus.size(); ++i) {
        const int d = deltas[i - 1];
        if (d != 1 && d != -1) throw InvalidInput(kModule, "sign-pattern", "signs must be +-1");
        p.mus[i] = d * p.mus[i - 1];
    }
    return p;
}

TridiagCoefficients apply_sign_pattern(const TridiagCoefficients& a, const SignPattern& p) {
    const std::size_t n = a.n();
    if (p.mus.size() != n) throw InvalidInput(kModule, "sign-pattern", "pattern length mismatch");
    Vec flip(static_cast<Eigen::Index>(n - 1));
    std::vector<int> deltas(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        flip[static_cast<Eigen::Index>(i)] = p.mus[i] * p.mus[i + 1];
        deltas[i] = a.deltas()[i] * p.mus[i] * p.mus[i + 1];
    }
    auto up = a.upper_sampler();
    auto lo = a.lower_sampler();
    return TridiagCoefficients(
        n, a.diag_sampler(), [up, flip](double t) { return Vec(up(t).cwiseProduct(flip)); },
        [lo, flip](double t) { return Vec(lo(t).cwiseProduct(flip)); }, a.eps0(), a.modulus(),
        a.bound(), std::move(deltas), a.floor_policy());
}

TridiagCoefficients transform_coefficients(const TridiagCoefficients& a, const SignPattern& p) {
    if (p.deltas != a.deltas()) {
        throw InvalidInput(kModule, "sign-pattern", "pattern does not match the system's signs");
    }
    TridiagCoefficients out = apply_sign_pattern(a, p);
    if (!out.cooperative()) {
        throw InvalidInput(kModule, "sign-pattern", "transformed system is not cooperative");
    }
    return out;
}

TridiagCoefficients truncated_periodic(const TridiagCoefficients& a, int k) {
    if (k < 1) throw InvalidInput(kModule, "truncation", "k must be a positive integer");
    const double kk = k;
    const double period = 2.0 * (kk + 1.0);
    // Reduce t into [-k-1, k+1) and apply the ramp profile.
    auto reduce = [kk, period](double t) {
        double s = std::fmod(t + kk + 1.0, period);
        if (s < 0.0) s += period;
        return s - kk - 1.0;
    };
    auto make = [reduce, kk](BandSampler band) {
        return [band, reduce, kk](double t) -> Vec {
            const double s = reduce(t);
            if (s < -kk) return (s + kk + 1.0) * band(-kk);
            if (s > kk) return (kk + 1.0 - s) * band(kk);
            return band(s);
        };
    };
    return TridiagCoefficients(a.n(), make(a.diag_sampler()), make(a.upper_sampler()),
                               make(a.lower_sampler()), a.eps0(), Periodic{period}, a.bound(),
                               a.deltas(), FloorPolicy::Nonnegative);
}

std::vector<double> torus_advance(std::span<const double> theta, std::span<const double> omega,
                                  double t) {
    if (theta.size() != omega.size()) {
        throw InvalidInput(kModule, "torus", "phase and frequency dimensions differ");
    }
    std::vector<double> out(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) out[j] = frac(theta[j] + omega[j] * t);
    return out;
}

double torus_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double diff = std::abs(frac(a[j]) - frac(b[j]));
        diff = std::min(diff, 1.0 - diff);
        d = std::max(d, diff);
    }
    return d;
}

std::vector<double> QuasiPeriodicSampler::phase_at(double t) const {
    return torus_advance(phase0, frequencies, t);
}

double QuasiPeriodicSampler::operator()(double t) const {
    const auto theta = phase_at(t);
    return torus_function(theta);
}

double TrigPolynomial::operator()(std::span<const double> theta) const {
    double v = constant;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t j = 0; j < cos.size() && j < theta.size(); ++j) {
        if (cos[j] != 0.0) v += cos[j] * std::cos(two_pi * theta[j]);
    }
    for (std::size_t j = 0; j < sin.size() && j < theta.size(); ++j) {
        if (sin[j] != 0.0) v += sin[j] * std::sin(two_pi * theta[j]);
    }
    return v;
}

double TrigPolynomial::sup_bound() const {
    double s = std::abs(constant);
    for (double c : cos) s += std::abs(c);
    for (double c : sin) s += std::abs(c);
    return s;
}

double TrigPolynomial::inf_bound() const {
    double s = constant;
    for (double c : cos) s -= std::abs(c);
    for (double c : sin) s -= std::abs(c);
    return s;
}

std::vector<double> default_frequencies() {
    return {1.0 / (2.0 * std::numbers::pi), std::numbers::sqrt2 / (2.0 * std::numbers::pi)};
}

TridiagCoefficients quasi_periodic_coefficients(const std::vector<TrigPolynomial>& diag,
                                                const std::vector<TrigPolynomial>& upper,
                                                const std::vector<TrigPolynomial>& lower,
                                                std::vector<double> omega,
                                                std::vector<double> phase0, double eps0) {
    const std::size_t n = diag.size();
    if (n < 2 || upper.size() != n - 1 || lower.size() != n - 1) {
        throw InvalidInput(kModule, "dimension", "band lengths must be n, n-1, n-1 with n >= 2");
    }
    if (phase0.empty()) phase0.assign(omega.size(), 0.0);
    if (phase0.size() != omega.size()) {
        throw InvalidInput(kModule, "torus", "phase0 and omega dimensions differ");
    }
    double bound = 0.0;
    for (const auto* group : {&diag, &upper, &lower}) {
        for (const auto& p : *group) bound = std::max(bound, p.sup_bound());
    }
    auto sampler = [omega, phase0](std::vector<TrigPolynomial> polys) -> BandSampler {
        return [polys = std::move(polys), omega, phase0](double t) {
            const auto theta = torus_advance(phase0, omega, t);
            Vec v(static_cast<Eigen::Index>(polys.size()));
            for (std::size_t i = 0; i < polys.size(); ++i) v[static_cast<Eigen::Index>(i)] = polys[i](theta);
            return v;
        };
    };
    Modulus modulus = QuasiPeriodic{omega};
    if (omega.size() == 1 && omega[0] != 0.0) modulus = Periodic{1.0 / std::abs(omega[0])};
    return TridiagCoefficients(n, sampler(diag), sampler(upper), sampler(lower), eps0,
                               std::move(modulus), bound);
}

// ---------------------------------------------------------------------------

TridiagonalField::TridiagonalField(std::size_t n, CoordinateFn f, PartialsFn partials, double eps0,
                                   std::vector<int> deltas)
    : n_(n), f_(std::move(f)), partials_(std::move(partials)), eps0_(eps0),
      deltas_(default_deltas(n, std::move(deltas))) {
    if (n_ < 2) throw InvalidInput(kModule, "dimension", "n must be at least 2");
    if (!f_) throw InvalidInput(kModule, "field", "missing coordinate function");
    if (!(eps0_ > 0.0)) throw InvalidInput(kModule, "eps0", "eps0 must be positive");

    // Probe the coupling floor on a small deterministic set of states.
    const auto nn = static_cast<Eigen::Index>(n_);
    std::vector<Vec> probes{Vec::Zero(nn), Vec::Ones(nn), Vec::LinSpaced(nn, -1.0, 1.0)};
    Vec alt(nn);
    for (Eigen::Index i = 0; i < nn; ++i) alt[i] = (i % 2 == 0 ? 0.5 : -0.5);
    probes.push_back(alt);
    for (double t : {0.0, 0.37, 1.1}) {
        for (const Vec& x : probes) {
            const int bad = floor_violation(t, x);
            if (bad >= 0) {
                std::ostringstream msg;
                msg << "coupling partials at i=" << bad << " fall below eps0=" << eps0_
                    << " (probe t=" << t << ")";
                throw InvalidInput(kModule, "cooperative-floor", msg.str());
            }
        }
    }
}

void TridiagonalField::eval(double t, const Vec& x, Vec& dx) const {
    const auto n = static_cast<Eigen::Index>(n_);
    dx.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double left = i > 0 ? x[i - 1] : 0.0;
        const double right = i + 1 < n ? x[i + 1] : 0.0;
        dx[i] = f_(static_cast<std::size_t>(i), t, left, x[i], right);
    }
}

Vec TridiagonalField::operator()(double t, const Vec& x) const {
    Vec dx;
    eval(t, x, dx);
    return dx;
}

StencilPartials TridiagonalField::partials(std::size_t i, double t, const Vec& x) const {
    const auto n = static_cast<Eigen::Index>(n_);
    const auto ii = static_cast<Eigen::Index>(i);
    const double left = ii > 0 ? x[ii - 1] : 0.0;
    const double center = x[ii];
    const double right = ii + 1 < n ? x[ii + 1] : 0.0;
    if (partials_) return partials_(i, t, left, center, right);

    const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
    auto diff = [&](double l, double c, double r, int which) {
        const double v = which == 0 ? l : (which == 1 ? c : r);
        const double h = h0 * std::max(1.0, std::abs(v));
        auto bump = [&](double s) {
            return f_(i, t, which == 0 ? l + s : l, which == 1 ? c + s : c, which == 2 ? r + s : r);
        };
        return (bump(h) - bump(-h)) / (2.0 * h);
    };
    StencilPartials p;
    p.left = ii > 0 ? diff(left, center, right, 0) : 0.0;
    p.center = diff(left, center, right, 1);
    p.right = ii + 1 < n ? diff(left, center, right, 2) : 0.0;
    return p;
}

Bands TridiagonalField::jacobian_bands(double t, const Vec& x) const {
    const auto n = static_cast<Eigen::Index>(n_);
    Bands b{Vec(n), Vec(n - 1), Vec(n - 1)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const StencilPartials p = partials(static_cast<std::size_t>(i), t, x);
        b.diag[i] = p.center;
        if (i + 1 < n) b.upper[i] = p.right;
        if (i > 0) b.lower[i - 1] = p.left;
    }
    return b;
}

Mat TridiagonalField::jacobian(double t, const Vec& x) const {
    const Bands b = jacobian_bands(t, x);
    const auto n = static_cast<Eigen::Index>(n_);
    Mat a = Mat::Zero(n, n);
    a.diagonal() = b.diag;
    a.diagonal(1) = b.upper;
    a.diagonal(-1) = b.lower;
    return a;
}

int TridiagonalField::floor_violation(double t, const Vec& x) const {
    const Bands b = jacobian_bands(t, x);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double s = deltas_[i];
        // Central differences carry O(h^2) error; allow a relative sliver.
        const double slack = partials_ ? 0.0 : 1e-7 * std::max(1.0, eps0_);
        if (!(s * b.upper[ii] >= eps0_ - slack) || !(s * b.lower[ii] >= eps0_ - slack)) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

TridiagonalField transform_field(const TridiagonalField& f, const SignPattern& p) {
    const std::size_t n = f.n();
    if (p.mus.size() != n || p.deltas != f.deltas()) {
        throw InvalidInput(kModule, "sign-pattern", "pattern does not match the field's signs");
    }
    const auto mus = p.mus;
    const auto g = f.coordinate_fn();
    CoordinateFn fh = [g, mus, n](std::size_t i, double t, double l, double c, double r) {
        const double ml = i > 0 ? mus[i - 1] : 1.0;
        const double mr = i + 1 < n ? mus[i + 1] : 1.0;
        return mus[i] * g(i, t, ml * l, mus[i] * c, mr * r);
    };
    PartialsFn ph;
    if (f.analytic_partials()) {
        const auto dg = f.partials_fn();
        ph = [dg, mus, n](std::size_t i, double t, double l, double c, double r) {
            const double ml = i > 0 ? mus[i - 1] : 1.0;
            const double mr = i + 1 < n ? mus[i + 1] : 1.0;
            const StencilPartials q = dg(i, t, ml * l, mus[i] * c, mr * r);
            return StencilPartials{mus[i] * ml * q.left, q.center, mus[i] * mr * q.right};
        };
    }
    std::vector<int> ones(n - 1, 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (f.deltas()[i] * p.mus[i] * p.mus[i + 1] != 1) {
            throw InvalidInput(kModule, "sign-pattern", "transformed field is not cooperative");
        }
    }
    return TridiagonalField(n, std::move(fh), std::move(ph), f.eps0(), std::move(ones));
}

TridiagonalField linear_field(const TridiagCoefficients& a) {
    const auto n = a.n();
    CoordinateFn f = [a, n](std::size_t i, double t, double l, double c, double r) {
        const Bands b = a.bands(t);
        const auto ii = static_cast<Eigen::Index>(i);
        double v = b.diag[ii] * c;
        if (i > 0) v += b.lower[ii - 1] * l;
        if (i + 1 < n) v += b.upper[ii] * r;
        return v;
    };
    PartialsFn p = [a, n](std::size_t i, double t, double, double, double) {
        const Bands b = a.bands(t);
        const auto ii = static_cast<Eigen::Index>(i);
        return StencilPartials{i > 0 ? b.lower[ii - 1] : 0.0, b.diag[ii],
                               i + 1 < n ? b.upper[ii] : 0.0};
    };
    return TridiagonalField(n, std::move(f), std::move(p), a.eps0(), a.deltas());
}

}  // namespace trifloq
