#include "trifloq/integrator.hpp"

#include "trifloq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trifloq {

namespace {

constexpr const char* kModule = "integrator";

// Dormand-Prince 5(4) tableau with the Hairer-Wanner dense output.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Step {
    double t0, h;
    const Vec* y0;
    const Vec* y1;
    const Vec* k1;
    const Vec* k3;
    const Vec* k4;
    const Vec* k5;
    const Vec* k6;
    const Vec* k7;
};

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, const Tolerances& tol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = tol.abs + tol.rel * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const Rhs& f, double t0, const Vec& y0, const Vec& f0, double dir,
                    const Tolerances& tol) {
    Vec sc = (tol.abs + tol.rel * y0.array().abs()).matrix();
    const double dnf = std::sqrt((f0.array() / sc.array()).square().mean());
    const double dny = std::sqrt((y0.array() / sc.array()).square().mean());
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min(h, tol.max_step);
    Vec y1 = y0 + dir * h * f0;
    Vec f1;
    f(t0 + dir * h, y1, f1);
    const double der2 = std::sqrt(((f1 - f0).array() / sc.array()).square().mean()) / h;
    const double der12 = std::max(std::abs(der2), dnf);
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                     : std::pow(0.01 / der12, 1.0 / 5.0);
    return std::min({100.0 * std::abs(h), h1, tol.max_step});
}

// Drives the stepper and hands every accepted step to on_step.
template <class OnStep>
Vec drive(const Rhs& f, const Vec& x0, double t0, double t1, const Tolerances& tol, OnStep&& on_step) {
    if (!x0.allFinite()) throw InvalidInput(kModule, "initial-state", "x0 is not finite");
    if (!(tol.rel > 0.0) || !(tol.abs >= 0.0)) {
        throw InvalidInput(kModule, "tolerances", "rel_tol must be positive and abs_tol nonnegative");
    }
    Vec y = x0;
    if (t0 == t1) return y;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const auto n = x0.size();

    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
    f(t0, y, k1);
    double h = initial_step(f, t0, y, k1, dir, tol);
    double t = t0;
    double facold = 1e-4;
    bool last_rejected = false;
    constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
    constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;

    for (std::size_t steps = 0;; ++steps) {
        if (steps >= tol.max_steps) {
            std::ostringstream msg;
            msg << "step budget exhausted at t=" << t;
            throw NumericalFailure(kModule, "max-steps", msg.str());
        }
        bool final_step = false;
        if (dir * (t + dir * h - t1) >= 0.0) {
            h = std::abs(t1 - t);
            final_step = true;
        }
        if (h < 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
            std::ostringstream msg;
            msg << "step size underflow at t=" << t;
            throw NumericalFailure(kModule, "step-underflow", msg.str());
        }
        const double hs = dir * h;

        ytmp = y + hs * a21 * k1;
        f(t + c2 * hs, ytmp, k2);
        ytmp = y + hs * (a31 * k1 + a32 * k2);
        f(t + c3 * hs, ytmp, k3);
        ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * hs, ytmp, k4);
        ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * hs, ytmp, k5);
        ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double tnew = final_step ? t1 : t + hs;
        f(tnew, ytmp, k6);
        y1 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        f(tnew, y1, k7);
        err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        if (!y1.allFinite() || !k7.allFinite()) {
            std::ostringstream msg;
            msg << "non-finite state near t=" << t;
            throw NumericalFailure(kModule, "non-finite", msg.str());
        }
        const double e = error_norm(err, y, y1, tol);
        const double fac11 = std::pow(std::max(e, 1e-300), expo1);
        if (e <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(fac / safe, facc2, facc1);
            double hnew = h / fac;
            facold = std::max(e, 1e-4);
            on_step(Step{t, hs, &y, &y1, &k1, &k3, &k4, &k5, &k6, &k7});
            t = tnew;
            y.swap(y1);
            k1.swap(k7);
            if (final_step) return y;
            if (last_rejected) hnew = std::min(hnew, h);
            h = std::min(hnew, tol.max_step);
            last_rejected = false;
        } else {
            h = h / std::min(facc1, fac11 / safe);
            last_rejected = true;
        }
    }
}

Mat dense_coeffs(const Step& s) {
    const auto n = s.y0->size();
    Mat c(n, 5);
    const Vec ydiff = *s.y1 - *s.y0;
    const Vec bspl = s.h * *s.k1 - ydiff;
    c.col(0) = *s.y0;
    c.col(1) = ydiff;
    c.col(2) = bspl;
    c.col(3) = ydiff - s.h * *s.k7 - bspl;
    c.col(4) = s.h * (d1 * *s.k1 + d3 * *s.k3 + d4 * *s.k4 + d5 * *s.k5 + d6 * *s.k6 + d7 * *s.k7);
    return c;
}

// Gauss-Legendre nodes/weights on [-1, 1], 8 points.
constexpr double kGlNodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                  0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                  0.2223810344533745, 0.1012285362903763};

}  // namespace

Trajectory::Trajectory(std::vector<double> times, std::vector<Vec> states,
                       std::vector<Segment> segments, std::string rhs_descriptor)
    : times_(std::move(times)), states_(std::move(states)), segments_(std::move(segments)),
      descriptor_(std::move(rhs_descriptor)) {}

Vec Trajectory::at(double t) const {
    if (times_.empty()) throw InvalidInput(kModule, "trajectory", "empty trajectory");
    if (t < times_.front() || t > times_.back()) {
        std::ostringstream msg;
        msg << "t=" << t << " outside [" << times_.front() << ", " << times_.back() << "]";
        throw InvalidInput(kModule, "trajectory-range", msg.str());
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times_.begin());
    k = k == 0 ? 0 : k - 1;
    if (times_[k] == t) return states_[k];
    if (k + 1 >= times_.size()) return states_.back();
    if (segments_.empty()) {
        const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
        return (1.0 - w) * states_[k] + w * states_[k + 1];
    }
    const Segment& s = segments_[k];
    const double th = (t - s.origin) / s.step;
    const double th1 = 1.0 - th;
    const Mat& c = s.coeffs;
    return c.col(0) + th * (c.col(1) + th1 * (c.col(2) + th * (c.col(3) + th1 * c.col(4))));
}

Trajectory Trajectory::mapped(const Mat& p, std::string descriptor) const {
    std::vector<Vec> states;
    states.reserve(states_.size());
    for (const Vec& x : states_) states.push_back(p * x);
    std::vector<Segment> segs;
    segs.reserve(segments_.size());
    for (const Segment& s : segments_) segs.push_back(Segment{s.origin, s.step, p * s.coeffs});
    return Trajectory(times_, std::move(states), std::move(segs), std::move(descriptor));
}

Trajectory Trajectory::joined(const Trajectory& later) const {
    if (times_.empty()) return later;
    if (later.times_.empty()) return *this;
    if (later.t_begin() != t_end()) {
        throw InvalidInput(kModule, "join", "trajectories do not meet");
    }
    if (has_dense_output() != later.has_dense_output()) {
        throw InvalidInput(kModule, "join", "cannot join dense and sampled trajectories");
    }
    Trajectory out = *this;
    out.times_.insert(out.times_.end(), later.times_.begin() + 1, later.times_.end());
    out.states_.insert(out.states_.end(), later.states_.begin() + 1, later.states_.end());
    out.segments_.insert(out.segments_.end(), later.segments_.begin(), later.segments_.end());
    return out;
}

Trajectory integrate(const Rhs& f, const Vec& x0, double t0, double t1, const Tolerances& tol,
                     std::string descriptor) {
    std::vector<double> times{t0};
    std::vector<Vec> states{x0};
    std::vector<Trajectory::Segment> segs;
    drive(f, x0, t0, t1, tol, [&](const Step& s) {
        segs.push_back(Trajectory::Segment{s.t0, s.h, dense_coeffs(s)});
        times.push_back(s.t0 + s.h == t1 ? t1 : s.t0 + s.h);
        states.push_back(*s.y1);
    });
    // The final step lands exactly on t1; keep the stored time exact.
    times.back() = t1;
    if (t1 < t0) {
        std::reverse(times.begin(), times.end());
        std::reverse(states.begin(), states.end());
        std::reverse(segs.begin(), segs.end());
    }
    return Trajectory(std::move(times), std::move(states), std::move(segs), std::move(descriptor));
}

Vec propagate(const Rhs& f, const Vec& x0, double t0, double t1, const Tolerances& tol) {
    return drive(f, x0, t0, t1, tol, [](const Step&) {});
}

Trajectory integrate_linear(const TridiagCoefficients& a, const Vec& x0, double t0, double t1,
                            const Tolerances& tol) {
    if (static_cast<std::size_t>(x0.size()) != a.n()) {
        throw InvalidInput(kModule, "dimension", "x0 does not match the system dimension");
    }
    Rhs f = [&a](double t, const Vec& x, Vec& dx) { a.apply(t, x, dx); };
    return integrate(f, x0, t0, t1, tol, "linear:" + describe(a.modulus()));
}

Mat propagate_block(const TridiagCoefficients& a, const Mat& x0, double t0, double t1,
                    const Tolerances& tol) {
    const auto n = x0.rows();
    const auto k = x0.cols();
    if (static_cast<std::size_t>(n) != a.n()) {
        throw InvalidInput(kModule, "dimension", "block does not match the system dimension");
    }
    Rhs f = [&a, n, k](double t, const Vec& x, Vec& dx) {
        Eigen::Map<const Mat> xm(x.data(), n, k);
        Mat y;
        a.apply(t, Mat(xm), y);
        dx = Eigen::Map<const Vec>(y.data(), n * k);
    };
    const Vec packed = Eigen::Map<const Vec>(x0.data(), n * k);
    const Vec out = propagate(f, packed, t0, t1, tol);
    return Eigen::Map<const Mat>(out.data(), n, k);
}

FundamentalMatrix::FundamentalMatrix(Trajectory packed, std::size_t n)
    : packed_(std::move(packed)), n_(n) {
    start_ = packed_.t_begin();
    finish_ = packed_.t_end();
    // A backward run is stored increasing; the identity sits at the far end.
    const auto nn = static_cast<Eigen::Index>(n_);
    const Vec& first = packed_.states().front();
    if (!Eigen::Map<const Mat>(first.data(), nn, nn).isIdentity(0.0)) std::swap(start_, finish_);
}

Mat FundamentalMatrix::operator()(double t) const {
    const Vec v = packed_.at(t);
    const auto nn = static_cast<Eigen::Index>(n_);
    return Eigen::Map<const Mat>(v.data(), nn, nn);
}

FundamentalMatrix fundamental_matrix(const TridiagCoefficients& a, double t0, double t1,
                                     const Tolerances& tol) {
    const auto n = static_cast<Eigen::Index>(a.n());
    Rhs f = [&a, n](double t, const Vec& x, Vec& dx) {
        Eigen::Map<const Mat> xm(x.data(), n, n);
        Mat y;
        a.apply(t, Mat(xm), y);
        dx = Eigen::Map<const Vec>(y.data(), n * n);
    };
    const Mat id = Mat::Identity(n, n);
    const Vec packed = Eigen::Map<const Vec>(id.data(), n * n);
    return FundamentalMatrix(integrate(f, packed, t0, t1, tol, "fundamental"), a.n());
}

double liouville_log_det(const TridiagCoefficients& a, double t0, double t1, int panels) {
    if (panels <= 0) panels = std::max(1, static_cast<int>(std::ceil(std::abs(t1 - t0) * 8.0)));
    const double w = (t1 - t0) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = t0 + (p + 0.5) * w;
        for (int j = 0; j < 8; ++j) sum += kGlWeights[j] * a.trace(mid + 0.5 * w * kGlNodes[j]);
    }
    return 0.5 * w * sum;
}

Trajectory integrate_nonlinear(const TridiagonalField& f, const Vec& x0, double t0, double t1,
                               const Tolerances& tol) {
    if (static_cast<std::size_t>(x0.size()) != f.n()) {
        throw InvalidInput(kModule, "dimension", "x0 does not match the field dimension");
    }
    Rhs rhs = [&f](double t, const Vec& x, Vec& dx) { f.eval(t, x, dx); };
    return integrate(rhs, x0, t0, t1, tol, "nonlinear-tridiagonal");
}

}  // namespace trifloq
