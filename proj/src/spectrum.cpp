#include "trifloq/spectrum.hpp"

#include "trifloq/errors.hpp"
#include "trifloq/signchain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace trifloq {

namespace {

constexpr const char* kModule = "spectrum";

void require_series(const FrameSeries& s) {
    if (s.times.size() < 2) throw InvalidInput(kModule, "series", "frame series needs at least two grid points");
}

void require_mode(const FrameSeries& s, int m, int hi) {
    if (m < 0 || m >= hi) throw InvalidInput(kModule, "mode", "mode index out of range");
    (void)s;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double nx = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= nx;
    my /= nx;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

// max over s < t of g(t) - g(s).
double max_rise(const std::vector<double>& g) {
    double lo = g.front();
    double best = 0.0;
    for (double v : g) {
        best = std::max(best, v - lo);
        lo = std::min(lo, v);
    }
    return best;
}

std::vector<double> offsets(const FrameSeries& s) {
    std::vector<double> t(s.times.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = s.times[k] - s.times.front();
    return t;
}

std::size_t window_steps(const FrameSeries& s, double w) {
    const double h = s.step();
    return static_cast<std::size_t>(std::max(1.0, std::round(w / h)));
}

// Range of windowed means of a cumulative column.
std::pair<double, double> window_range(const Mat& cumulative, Eigen::Index m, std::size_t steps, double eff) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const auto kk = static_cast<std::size_t>(cumulative.rows());
    for (std::size_t k = 0; k + steps < kk; ++k) {
        const double mean = (cumulative(static_cast<Eigen::Index>(k + steps), m) - cumulative(static_cast<Eigen::Index>(k), m)) / eff;
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
    }
    return {lo, hi};
}

Vec random_unit_in(const Mat& basis, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec c(basis.cols());
    for (auto& ci : c) ci = g(rng);
    const Vec v = basis * c;
    return v / v.norm();
}

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(r);
    }
    return rows;
}

void merge_modes(SpectrumEstimate& est) {
    est.intervals.clear();
    std::vector<ModeRange> order = est.modes;
    std::sort(order.begin(), order.end(), [](const ModeRange& x, const ModeRange& y) { return x.b > y.b; });
    for (const ModeRange& mr : order) {
        if (!est.intervals.empty() && mr.b >= est.intervals.back().a) {
            auto& cur = est.intervals.back();
            cur.a = std::min(cur.a, mr.a);
            cur.multiplicity += 1;
            cur.modes.push_back(mr.m);
        } else {
            est.intervals.push_back({mr.a, mr.b, 1, {mr.m}});
        }
    }
    for (auto& i : est.intervals) std::sort(i.modes.begin(), i.modes.end());
}

}  // namespace

RateTrace rate_trace(const TridiagCoefficients& a, const FrameSeries& series, int m,
                     const std::vector<double>& windows, int cv_points) {
    require_series(series);
    require_mode(series, m, static_cast<int>(series.dimension()));
    RateTrace r;
    r.m = m;
    r.times = series.times;
    const auto kk = series.times.size();
    for (std::size_t k = 0; k < kk; ++k) {
        const Vec x = series.frames[k].col(m);
        Vec ax;
        a.apply(series.times[k], x, ax);
        r.values.push_back(x.dot(ax));
    }
    const double span = series.times.back() - series.times.front();
    for (double w : windows) {
        if (w > span + 1e-9) continue;
        const std::size_t steps = window_steps(series, w);
        if (steps >= kk) continue;
        const double eff = static_cast<double>(steps) * series.step();
        r.windowed_means.push_back({eff, series.cumulative(static_cast<Eigen::Index>(steps), m) / eff});
    }

    const double delta = 1e-2;
    const Tolerances tol = tight_tolerances();
    std::vector<std::size_t> picks;
    for (int j = 0; j < cv_points; ++j) {
        const auto k = static_cast<std::size_t>(std::llround((static_cast<double>(j) + 0.5) / cv_points * static_cast<double>(kk - 1)));
        if (series.times[k] - 2 * delta < series.times.front() || series.times[k] + 2 * delta > series.times.back()) continue;
        if (picks.empty() || picks.back() != k) picks.push_back(k);
    }
    for (std::size_t k : picks) {
        const double t = series.times[k];
        const Vec x = series.frames[k].col(m);
        const Trajectory fw = integrate_linear(a, x, t, t + 2 * delta, tol);
        const Trajectory bw = integrate_linear(a, x, t, t - 2 * delta, tol);
        auto f = [&](double s) { return std::log((s >= t ? fw : bw).at(s).norm()); };
        const double d = (-f(t + 2 * delta) + 8 * f(t + delta) - 8 * f(t - delta) + f(t - 2 * delta)) / (12 * delta);
        r.cross_validation_error = std::max(r.cross_validation_error, std::abs(d - r.values[k]));
        ++r.cross_validation_points;
    }
    return r;
}

Mat rate_table(const TridiagCoefficients& a, const FrameSeries& series) {
    require_series(series);
    const auto n = static_cast<Eigen::Index>(series.dimension());
    Mat out(static_cast<Eigen::Index>(series.times.size()), n + 1);
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        out(ki, 0) = series.times[k];
        const Mat ax = a.matrix(series.times[k]) * series.frames[k];
        for (Eigen::Index m = 0; m < n; ++m) out(ki, m + 1) = series.frames[k].col(m).dot(ax.col(m));
    }
    return out;
}

Reconstruction reconstruct_from_modes(const TridiagCoefficients& a, const Vec& x0, const FrameSeries& series) {
    require_series(series);
    const Mat& x = series.frames.front();
    if (x0.size() != x.rows()) throw InvalidInput(kModule, "dimension", "x0 does not match the frame");
    Reconstruction rec;
    rec.frame_condition = 1.0 / std::max(inverse_condition(x), 1e-300);
    if (rec.frame_condition > 1e8) {
        std::ostringstream msg;
        msg << "frame condition " << rec.frame_condition << " exceeds 1e8";
        throw NumericalFailure(kModule, "expansion-conditioning", msg.str());
    }
    const Vec c = x.colPivHouseholderQr().solve(x0);
    rec.coefficients.assign(c.data(), c.data() + c.size());
    std::vector<Vec> states;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        Vec s = Vec::Zero(x0.size());
        for (Eigen::Index m = 0; m < c.size(); ++m)
            s += c[m] * std::exp(series.cumulative(static_cast<Eigen::Index>(k), m)) * series.frames[k].col(m);
        states.push_back(s);
    }
    if (x0.lpNorm<Eigen::Infinity>() > 0.0) {
        const Trajectory direct = integrate_linear(a, x0, series.times.front(), series.times.back(), tight_tolerances());
        for (std::size_t k = 0; k < states.size(); ++k) {
            const Vec ref = direct.at(series.times[k]);
            rec.relative_error = std::max(rec.relative_error, (states[k] - ref).norm() / ref.norm());
        }
    }
    rec.trajectory = Trajectory(series.times, std::move(states), {}, "modal-reconstruction");
    return rec;
}

SeparationReport fit_separation(const FrameSeries& series, int m) {
    require_series(series);
    require_mode(series, m, static_cast<int>(series.dimension()) - 1);
    const std::vector<double> t = offsets(series);
    std::vector<double> r(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        r[k] = series.cumulative(ki, m + 1) - series.cumulative(ki, m);
    }
    const LineFit fit = least_squares(t, r);
    SeparationReport rep;
    rep.m = m;
    rep.nu = -fit.slope;
    rep.span = t.back();
    rep.log_k = -std::numeric_limits<double>::infinity();
    std::vector<double> g(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        rep.residual = std::max(rep.residual, std::abs(r[k] - (fit.intercept + fit.slope * t[k])));
        rep.log_k = std::max(rep.log_k, r[k] + rep.nu * t[k]);
        g[k] = r[k] + rep.nu * t[k];
    }
    rep.k = std::exp(rep.log_k);
    rep.gamma = rep.nu;
    rep.beta = max_rise(g);
    rep.structure_failure = !(rep.nu > 0.0);
    return rep;
}

int SpectrumEstimate::total_multiplicity() const {
    int total = 0;
    for (const auto& i : intervals) total += i.multiplicity;
    return total;
}

SpectrumEstimate sacker_sell_estimate(const FrameSeries& series, std::vector<double> windows) {
    require_series(series);
    if (windows.empty()) throw InvalidInput(kModule, "windows", "no window lengths given");
    const double span = series.times.back() - series.times.front();
    SpectrumEstimate est;
    est.horizon = span;
    std::vector<std::size_t> steps;
    for (double w : windows) {
        if (!(w > 0.0) || w > span + 1e-9) {
            std::ostringstream msg;
            msg << "window " << w << " is not within the horizon " << span;
            throw InvalidInput(kModule, "window", msg.str());
        }
        steps.push_back(window_steps(series, w));
        if (steps.back() >= series.times.size()) steps.back() = series.times.size() - 1;
        est.windows.push_back(static_cast<double>(steps.back()) * series.step());
    }
    const auto n = static_cast<int>(series.dimension());
    for (int m = 0; m < n; ++m) {
        ModeRange mr;
        mr.m = m;
        mr.a = std::numeric_limits<double>::infinity();
        mr.b = -mr.a;
        for (std::size_t j = 0; j < steps.size(); ++j) {
            const auto [lo, hi] = window_range(series.cumulative, m, steps[j], est.windows[j]);
            mr.per_window.push_back({est.windows[j], lo, hi});
            mr.a = std::min(mr.a, lo);
            mr.b = std::max(mr.b, hi);
        }
        est.modes.push_back(mr);
    }
    merge_modes(est);
    return est;
}

SpectrumEstimate merge_estimates(const std::vector<SpectrumEstimate>& parts) {
    if (parts.empty()) throw InvalidInput(kModule, "spectrum", "nothing to merge");
    SpectrumEstimate est = parts.front();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        if (parts[p].modes.size() != est.modes.size()) throw InvalidInput(kModule, "dimension", "estimates differ in dimension");
        est.horizon += parts[p].horizon;
        for (std::size_t m = 0; m < est.modes.size(); ++m) {
            est.modes[m].a = std::min(est.modes[m].a, parts[p].modes[m].a);
            est.modes[m].b = std::max(est.modes[m].b, parts[p].modes[m].b);
            const auto& pw = parts[p].modes[m].per_window;
            est.modes[m].per_window.insert(est.modes[m].per_window.end(), pw.begin(), pw.end());
        }
    }
    merge_modes(est);
    return est;
}

DichotomyProjector dichotomy_projector(const FrameSeries& series, const SpectrumEstimate& spectrum, std::size_t k,
                                       double lambda, double gap_fraction) {
    require_series(series);
    if (k >= series.times.size()) throw InvalidInput(kModule, "grid-index", "grid index out of range");
    const auto& iv = spectrum.intervals;
    if (iv.empty()) throw InvalidInput(kModule, "spectrum", "empty spectrum estimate");
    const SpectralInterval* right = nullptr;
    const SpectralInterval* left = nullptr;
    for (const auto& i : iv) {
        if (lambda >= i.a && lambda <= i.b) {
            std::ostringstream msg;
            msg << "lambda=" << lambda << " lies in the spectral interval [" << i.a << ", " << i.b << "]";
            throw NoDichotomy(kModule, "no-dichotomy", msg.str());
        }
        if (i.a > lambda) right = &i;
        if (i.b < lambda && left == nullptr) left = &i;
    }
    const double spread = iv.front().b - iv.back().a;
    DichotomyProjector p;
    p.base_time = series.times[k];
    p.lambda = lambda;
    p.gap_margin = (right && left) ? gap_fraction * (right->a - left->b) : gap_fraction * std::max(1.0, spread);
    if ((right && right->a - lambda <= p.gap_margin) || (left && lambda - left->b <= p.gap_margin)) {
        std::ostringstream msg;
        msg << "lambda=" << lambda << " is within the gap margin " << p.gap_margin << " of an interval";
        throw NoDichotomy(kModule, "no-dichotomy", msg.str());
    }

    std::vector<int> unstable;
    for (const auto& i : iv)
        if (i.a > lambda) unstable.insert(unstable.end(), i.modes.begin(), i.modes.end());
    std::sort(unstable.begin(), unstable.end());
    for (std::size_t j = 0; j < unstable.size(); ++j) {
        if (unstable[j] != static_cast<int>(j)) {
            throw StructureFailure(kModule, "mode-order", "modes right of lambda are not the leading Floquet modes");
        }
    }
    const int n = static_cast<int>(series.dimension());
    const int nu = static_cast<int>(unstable.size());
    p.unstable_dim = nu;
    const Mat& x = series.frames[k];
    p.unstable_basis = x.leftCols(nu);
    p.stable_basis = x.rightCols(n - nu);
    Mat d = Mat::Zero(n, n);
    for (int j = 0; j < nu; ++j) d(j, j) = 1.0;
    p.q = x * d * x.inverse();

    p.alpha = std::numeric_limits<double>::infinity();
    for (const ModeRange& mr : spectrum.modes) p.alpha = std::min(p.alpha, mr.m < nu ? mr.a - lambda : lambda - mr.b);
    const std::vector<double> t = offsets(series);
    double worst = 0.0;
    for (int m = 0; m < n; ++m) {
        std::vector<double> f(t.size());
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double c = series.cumulative(static_cast<Eigen::Index>(j), m);
            // Stable modes: growth beyond lambda - alpha forward in time.
            // Unstable modes: decay below lambda + alpha backward in time.
            f[j] = m < nu ? -(c - (lambda + p.alpha) * t[j]) : c - (lambda - p.alpha) * t[j];
        }
        if (m < nu) std::reverse(f.begin(), f.end());
        worst = std::max(worst, max_rise(f));
    }
    p.k_const = std::exp(worst) / std::max(inverse_condition(x), 1e-300);
    return p;
}

EdProbe ed_probe(const FrameSeries& series, double lambda, double window) {
    require_series(series);
    const double span = series.times.back() - series.times.front();
    if (window <= 0.0) window = std::min(50.0, span);
    std::size_t steps = std::min(window_steps(series, window), series.times.size() - 1);
    const double eff = static_cast<double>(steps) * series.step();
    const auto n = static_cast<Eigen::Index>(series.dimension());
    Mat cum = Mat::Zero(static_cast<Eigen::Index>(series.times.size()), n);
    for (Eigen::Index k = 0; k + 1 < cum.rows(); ++k) cum.row(k + 1) = cum.row(k) + series.qr_logs.row(k);
    EdProbe e;
    e.lambda = lambda;
    e.dichotomy = true;
    e.distance = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < n; ++m) {
        const auto [lo, hi] = window_range(cum, m, steps, eff);
        if (lo > lambda) ++e.unstable_dim;
        if (lambda >= lo && lambda <= hi) e.dichotomy = false;
        e.distance = std::min(e.distance, lambda < lo ? lo - lambda : (lambda > hi ? lambda - hi : 0.0));
    }
    return e;
}

double spectral_bundle_defect(const FrameSeries& series, const SpectrumEstimate& spectrum, std::size_t k,
                              std::size_t interval) {
    require_series(series);
    if (interval >= spectrum.intervals.size()) throw InvalidInput(kModule, "interval", "interval index out of range");
    const auto& modes = spectrum.intervals[interval].modes;
    const int lo = modes.front();
    const int hi = modes.back();
    if (hi - lo + 1 != static_cast<int>(modes.size())) {
        throw StructureFailure(kModule, "mode-order", "interval modes are not contiguous");
    }
    const auto n = static_cast<Eigen::Index>(series.dimension());
    const Mat fast = series.fast_flags[k].leftCols(hi + 1);
    const Mat slow = series.slow_flags[k].leftCols(n - lo);
    Eigen::JacobiSVD<Mat> svd(fast.transpose() * slow, Eigen::ComputeFullU);
    const Mat bundle = fast * svd.matrixU().leftCols(hi - lo + 1);
    return subspace_distance(bundle, series.frames[k].middleCols(lo, hi - lo + 1));
}

double projector_invariance_defect(const TridiagCoefficients& a, const DichotomyProjector& p1,
                                   const DichotomyProjector& p2) {
    const Mat phi = fundamental_matrix(a, p1.base_time, p2.base_time, tight_tolerances()).at_end();
    return (phi * p1.q - p2.q * phi).norm() / phi.norm();
}

SigmaBoundsReport sigma_bounds_check(const DichotomyProjector& p, int samples, std::uint64_t seed, double zero_band) {
    SigmaBoundsReport rep;
    rep.unstable_dim = p.unstable_dim;
    std::mt19937_64 rng(seed);
    auto run = [&](const Mat& basis, bool unstable) {
        if (basis.cols() == 0) return;
        for (int s = 0; s < samples; ++s) {
            const Vec v = random_unit_in(basis, rng);
            ++rep.samples;
            const SigmaResult r = sigma(v, zero_band);
            if (!r.defined || r.ambiguous) {
                ++rep.skipped;
                continue;
            }
            if (unstable) {
                ++rep.checked_unstable;
                if (r.value > p.unstable_dim - 1) rep.violations.push_back(v);
            } else {
                ++rep.checked_stable;
                if (r.value < p.unstable_dim) rep.violations.push_back(v);
            }
        }
    };
    run(p.unstable_basis, true);
    run(p.stable_basis, false);
    return rep;
}

double transversality_check(const DichotomyProjector& p1, const DichotomyProjector& p2) {
    if (p1.q.rows() != p2.q.rows() || p1.unstable_dim != p2.unstable_dim) {
        throw InvalidInput(kModule, "dimension", "projectors have different dimensions");
    }
    if (p1.unstable_basis.cols() == 0 || p1.stable_basis.cols() == 0) return std::numbers::pi / 2;
    const double a = principal_angles(p1.stable_basis, p2.unstable_basis).front();
    const double b = principal_angles(p1.unstable_basis, p2.stable_basis).front();
    return std::min(a, b);
}

nlohmann::json to_json(const RateTrace& r) {
    nlohmann::json j;
    j["m"] = r.m;
    auto w = nlohmann::json::array();
    for (const auto& wm : r.windowed_means) w.push_back({{"window", wm.window}, {"mean", wm.mean}});
    j["windowed_means"] = w;
    j["cross_validation_error"] = r.cross_validation_error;
    j["cross_validation_points"] = r.cross_validation_points;
    j["samples"] = r.values.size();
    return j;
}

nlohmann::json to_json(const SeparationReport& r) {
    return {{"pair", {r.m, r.m + 1}}, {"K", r.k},         {"log_K", r.log_k},
            {"nu", r.nu},             {"residual", r.residual}, {"gamma", r.gamma},
            {"beta", r.beta},         {"span", r.span},   {"structure_failure", r.structure_failure}};
}

nlohmann::json to_json(const SpectrumEstimate& s) {
    nlohmann::json j;
    auto iv = nlohmann::json::array();
    for (const auto& i : s.intervals) iv.push_back({{"a", i.a}, {"b", i.b}, {"multiplicity", i.multiplicity}, {"modes", i.modes}});
    j["intervals"] = iv;
    auto modes = nlohmann::json::array();
    for (const auto& m : s.modes) {
        auto pw = nlohmann::json::array();
        for (const auto& w : m.per_window) pw.push_back({{"window", w.window}, {"min", w.min}, {"max", w.max}});
        modes.push_back({{"m", m.m}, {"a", m.a}, {"b", m.b}, {"per_window", pw}});
    }
    j["modes"] = modes;
    j["horizon"] = s.horizon;
    j["windows"] = s.windows;
    j["assumption"] = s.assumption;
    return j;
}

nlohmann::json to_json(const DichotomyProjector& p) {
    return {{"base_time", p.base_time},   {"lambda", p.lambda}, {"unstable_dim", p.unstable_dim},
            {"projector", mat_json(p.q)}, {"K", p.k_const},     {"alpha", p.alpha},
            {"gap_margin", p.gap_margin}};
}

nlohmann::json to_json(const SigmaBoundsReport& r) {
    auto v = nlohmann::json::array();
    for (const Vec& x : r.violations) v.push_back(vec_json(x));
    return {{"unstable_dim", r.unstable_dim}, {"samples", r.samples},
            {"checked_unstable", r.checked_unstable}, {"checked_stable", r.checked_stable},
            {"skipped", r.skipped}, {"violations", v}, {"ok", r.ok()}};
}

}  // namespace trifloq
