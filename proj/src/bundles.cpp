#include "trifloq/bundles.hpp"

#include "trifloq/errors.hpp"
#include "trifloq/flag.hpp"
#include "trifloq/periodic_floquet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace trifloq {

namespace {

constexpr const char* kModule = "floquet-bundles";

struct Intersected {
    std::vector<Vec> vectors;
    double min_ratio = std::numeric_limits<double>::infinity();
};

Intersected intersect_flags(const Mat& fast, const Mat& slow) {
    const auto n = fast.cols();
    Intersected out;
    for (Eigen::Index m = 0; m < n; ++m) {
        const LineIntersection x = intersect_spans(fast.leftCols(m + 1), slow.leftCols(n - m));
        out.vectors.push_back(x.direction);
        const double ratio = x.smallest_angle > 0.0 ? x.second_angle / x.smallest_angle
                                                    : std::numeric_limits<double>::infinity();
        out.min_ratio = std::min(out.min_ratio, ratio);
    }
    return out;
}

void finish_frame(BundleFrame& f, double zero_band) {
    f.sigma_check.clear();
    for (std::size_t m = 0; m < f.vectors.size(); ++m) {
        const SigmaResult s = sigma(f.vectors[m], zero_band);
        f.sigma_check.push_back(s.defined && s.value == static_cast<int>(m));
    }
    Eigen::JacobiSVD<Mat> svd(f.matrix());
    const auto& sv = svd.singularValues();
    f.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
}

double warmup_for(const TridiagCoefficients& a, double t_anchor, const BundleOptions& opts) {
    if (opts.warmup > 0.0) return opts.warmup;
    const double gamma = separation_pilot(a, t_anchor - opts.pilot_length, opts.pilot_length, opts.seed ^ 0xabcdefull);
    return gamma > 0.0 ? 20.0 / gamma : opts.fallback_warmup;
}

void verify_window(const TridiagCoefficients& a, const Vec& x, int m, double t0, const BundleOptions& opts) {
    const Tolerances tol = tight_tolerances();
    const Trajectory traj = integrate_linear(a, x, t0, t0 - opts.verify_window, tol)
                                .joined(integrate_linear(a, x, t0, t0 + opts.verify_window, tol));
    SigmaProfileOptions po;
    po.zero_band = opts.zero_band;
    const SigmaProfile p = sigma_profile(traj, po);
    if (p.segments.size() != 1 || p.segments.front().value != m || !p.undefined_times.empty()) {
        std::ostringstream msg;
        msg << "direction " << m << " does not keep sigma == " << m << " on the verification window";
        throw StructureFailure(kModule, "sigma-verification", msg.str());
    }
}

}  // namespace

std::string to_string(BundleMethod m) {
    switch (m) {
        case BundleMethod::Truncation: return "truncation";
        case BundleMethod::Pushforward: return "pushforward";
        case BundleMethod::Transport: return "transport";
    }
    return "unknown";
}

Mat BundleFrame::matrix() const {
    const auto n = static_cast<Eigen::Index>(vectors.size());
    Mat x(n == 0 ? 0 : vectors.front().size(), n);
    for (Eigen::Index m = 0; m < n; ++m) x.col(m) = vectors[static_cast<std::size_t>(m)];
    return x;
}

double separation_pilot(const TridiagCoefficients& a, double t0, double length, std::uint64_t seed) {
    const std::size_t n = a.n();
    const double h = reorth_interval(a, t0, t0 + length);
    const FlagSweep s = flag_sweep(a, generic_frame(n, n, seed), uniform_grid(t0, t0 + length, h),
                                   tight_tolerances(), false);
    std::vector<double> rates(n, 0.0);
    for (const Mat& r : s.r)
        for (std::size_t j = 0; j < n; ++j) rates[j] += std::log(r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < n; ++j) gap = std::min(gap, (rates[j] - rates[j + 1]) / length);
    if (!(gap > 0.0) || !std::isfinite(gap)) return 0.0;
    return std::clamp(gap, 0.05, 10.0);
}

BundleFrame floquet_frame_truncation(const TridiagCoefficients& a, double t0, const BundleOptions& opts) {
    if (opts.k_schedule.empty()) throw InvalidInput(kModule, "k-schedule", "empty truncation schedule");
    const TridiagCoefficients base = a.shifted(t0);
    const auto n = static_cast<Eigen::Index>(a.n());
    FloquetOptions fo;
    fo.eigen_tol = std::min(1e-10, 1e-2 * opts.dir_tol);
    fo.zero_band = opts.zero_band;
    fo.seed = opts.seed;

    BundleFrame frame;
    frame.base_time = t0;
    frame.method = BundleMethod::Truncation;
    std::vector<Vec> prev;
    std::vector<double> gaps;
    for (int k : opts.k_schedule) {
        const PeriodicFlags flags = periodic_flags(truncated_periodic(base, k), fo);
        const Intersected x = intersect_flags(flags.forward, flags.backward);
        if (!prev.empty()) {
            std::vector<double> per_mode(static_cast<std::size_t>(n));
            double worst = 0.0;
            for (std::size_t m = 0; m < per_mode.size(); ++m) {
                per_mode[m] = line_angle(prev[m], x.vectors[m]);
                worst = std::max(worst, per_mode[m]);
            }
            gaps.push_back(worst);
            if (worst < opts.dir_tol) {
                frame.vectors = x.vectors;
                frame.convergence_gap = per_mode;
                finish_frame(frame, opts.zero_band);
                for (Eigen::Index m = 0; m < n; ++m)
                    verify_window(base, frame.vectors[static_cast<std::size_t>(m)], static_cast<int>(m), 0.0, opts);
                return frame;
            }
        }
        prev = x.vectors;
    }
    std::ostringstream msg;
    msg << "truncation directions not Cauchy along the schedule; gaps:";
    for (double g : gaps) msg << ' ' << g;
    throw NumericalFailure(kModule, "truncation-convergence", msg.str());
}

TruncationResult floquet_solution_truncation(const TridiagCoefficients& a, int m, double t0,
                                             const BundleOptions& opts) {
    if (m < 0 || m >= static_cast<int>(a.n())) throw InvalidInput(kModule, "mode", "mode index out of range");
    const TridiagCoefficients base = a.shifted(t0);
    FloquetOptions fo;
    fo.eigen_tol = std::min(1e-10, 1e-2 * opts.dir_tol);
    fo.zero_band = opts.zero_band;
    fo.seed = opts.seed;
    const auto n = static_cast<Eigen::Index>(a.n());

    TruncationResult out;
    Vec prev;
    for (int k : opts.k_schedule) {
        const PeriodicFlags flags = periodic_flags(truncated_periodic(base, k), fo);
        const LineIntersection x = intersect_spans(flags.forward.leftCols(m + 1), flags.backward.leftCols(n - m));
        out.ks.push_back(k);
        if (prev.size() > 0) {
            out.gaps.push_back(line_angle(prev, x.direction));
            if (out.gaps.back() < opts.dir_tol) {
                out.direction = x.direction;
                verify_window(base, out.direction, m, 0.0, opts);
                return out;
            }
        }
        prev = x.direction;
    }
    std::ostringstream msg;
    msg << "truncation direction " << m << " not Cauchy along the schedule; gaps:";
    for (double g : out.gaps) msg << ' ' << g;
    throw NumericalFailure(kModule, "truncation-convergence", msg.str());
}

BundleFrame floquet_bundle_pushforward(const TridiagCoefficients& a, double t_center, const BundleOptions& opts) {
    const std::size_t n = a.n();
    double w = warmup_for(a, t_center, opts);
    const Tolerances tol = tight_tolerances();
    std::vector<Vec> prev;
    double last_gap = std::numeric_limits<double>::infinity();
    for (int ext = 0; ext <= opts.max_extensions; ++ext) {
        const double h = reorth_interval(a, t_center - w, t_center + w, opts.max_reorth_interval);
        const FlagSweep f = flag_sweep(a, generic_frame(n, n, opts.seed), uniform_grid(t_center - w, t_center, h), tol, false);
        const FlagSweep b = flag_sweep(a, generic_frame(n, n, opts.seed + 1), uniform_grid(t_center + w, t_center, h), tol, false);
        const Intersected x = intersect_flags(f.frames.back(), b.frames.back());
        const bool clean = x.min_ratio > opts.intersection_ratio;
        if (clean && !prev.empty()) {
            std::vector<double> gaps(n);
            double worst = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                gaps[m] = line_angle(prev[m], x.vectors[m]);
                worst = std::max(worst, gaps[m]);
            }
            last_gap = worst;
            if (worst < opts.dir_tol) {
                BundleFrame frame;
                frame.base_time = t_center;
                frame.method = BundleMethod::Pushforward;
                frame.vectors = x.vectors;
                frame.convergence_gap = gaps;
                frame.warmup = w;
                finish_frame(frame, opts.zero_band);
                return frame;
            }
        }
        prev = clean ? x.vectors : std::vector<Vec>{};
        w *= 1.5;
    }
    std::ostringstream msg;
    msg << "push-forward frame did not settle after " << opts.max_extensions
        << " warmup extensions (last change " << last_gap << ")";
    throw NumericalFailure(kModule, "pushforward-convergence", msg.str());
}

BundleFrame bundle_along_orbit(const TridiagCoefficients& a, const BundleFrame& frame, double t1,
                               const Tolerances& tol) {
    BundleFrame out;
    out.base_time = t1;
    out.method = BundleMethod::Transport;
    out.convergence_gap = frame.convergence_gap;
    for (std::size_t m = 0; m < frame.vectors.size(); ++m) {
        const Trajectory traj = integrate_linear(a, frame.vectors[m], frame.base_time, t1, tol);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            if (!(traj.states()[k][0] > 0.0)) {
                std::ostringstream msg;
                msg << "first coordinate of transported x_" << m << " left the positive half-line at t="
                    << traj.times()[k];
                throw StructureFailure(kModule, "sign-convention", msg.str());
            }
        }
        const Vec end = traj.at(t1);
        out.gains.push_back(end.norm());
        out.vectors.push_back(end / end.norm());
    }
    finish_frame(out, kDefaultZeroBand);
    return out;
}

DimensionReport dimension_check(const BundleFrame& frame, int l, int m, int samples, std::uint64_t seed,
                                const BundleOptions& opts) {
    const int n = static_cast<int>(frame.dimension());
    if (l < 0 || m < l || m >= n) throw InvalidInput(kModule, "range", "need 0 <= l <= m < n");
    DimensionReport rep;
    rep.l = l;
    rep.m = m;
    const Mat x = frame.matrix().middleCols(l, m - l + 1);
    Eigen::JacobiSVD<Mat> svd(x);
    const auto& sv = svd.singularValues();
    rep.smallest_singular = sv[sv.size() - 1];
    for (Eigen::Index i = 0; i < sv.size(); ++i) rep.rank += sv[i] > opts.frame_tol * sv[0] ? 1 : 0;
    if (rep.rank != m - l + 1) {
        std::ostringstream msg;
        msg << "span(x_" << l << "..x_" << m << ") has rank " << rep.rank << ", expected " << m - l + 1;
        throw StructureFailure(kModule, "dimension", msg.str());
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (int s = 0; s < samples; ++s) {
        Vec c(x.cols());
        for (auto& ci : c) ci = g(rng);
        const Vec v = x * c;
        ++rep.samples;
        if (v.lpNorm<Eigen::Infinity>() == 0.0) continue;
        const SigmaResult r = sigma(v, opts.zero_band);
        if (!r.defined || r.ambiguous) continue;
        ++rep.checked;
        if (r.value < l || r.value > m) ++rep.violations;
    }
    return rep;
}

BundleFrame FrameSeries::frame_at(std::size_t k) const {
    BundleFrame f;
    f.base_time = times.at(k);
    f.method = BundleMethod::Pushforward;
    f.warmup = warmup;
    for (Eigen::Index m = 0; m < frames[k].cols(); ++m) f.vectors.push_back(frames[k].col(m));
    finish_frame(f, kDefaultZeroBand);
    return f;
}

FrameSeries frame_series(const TridiagCoefficients& a, double t_begin, double t_end, double max_step,
                         const BundleOptions& opts) {
    if (!(t_end > t_begin)) throw InvalidInput(kModule, "range", "need t_begin < t_end");
    const std::size_t n = a.n();
    const auto ni = static_cast<Eigen::Index>(n);
    const Tolerances tol = tight_tolerances();
    FrameSeries s;
    s.warmup = warmup_for(a, t_begin, opts);
    const double w = s.warmup;
    const double h = std::min(max_step, reorth_interval(a, t_begin - w, t_end + w, opts.max_reorth_interval));
    const std::vector<double> grid = uniform_grid(t_begin, t_end, h);
    const std::size_t kk = grid.size();

    const FlagSweep warm_f = flag_sweep(a, generic_frame(n, n, opts.seed), uniform_grid(t_begin - w, t_begin, h), tol, false);
    const FlagSweep fwd = flag_sweep(a, warm_f.frames.back(), grid, tol, true);
    const FlagSweep warm_b = flag_sweep(a, generic_frame(n, n, opts.seed + 1), uniform_grid(t_end + w, t_end, h), tol, false);
    const std::vector<double> rgrid(grid.rbegin(), grid.rend());
    const FlagSweep bwd = flag_sweep(a, warm_b.frames.back(), rgrid, tol, true);

    s.times = grid;
    s.frames.resize(kk);
    s.fast_flags = fwd.frames;
    s.slow_flags.assign(bwd.frames.rbegin(), bwd.frames.rend());
    s.min_angle_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kk; ++k) {
        const Intersected x = intersect_flags(fwd.frames[k], bwd.frames[kk - 1 - k]);
        s.min_angle_ratio = std::min(s.min_angle_ratio, x.min_ratio);
        Mat f(ni, ni);
        for (Eigen::Index m = 0; m < ni; ++m) f.col(m) = x.vectors[static_cast<std::size_t>(m)];
        s.frames[k] = f;
        s.max_condition = std::max(s.max_condition, 1.0 / std::max(inverse_condition(f), 1e-300));
    }
    if (!(s.min_angle_ratio > opts.intersection_ratio)) {
        std::ostringstream msg;
        msg << "flags meet in more than a line somewhere on the grid (angle ratio " << s.min_angle_ratio
            << "); warmup " << w << " is too short or the separation is degenerate";
        throw NumericalFailure(kModule, "intersection", msg.str());
    }

    s.log_gains = Mat(static_cast<Eigen::Index>(kk - 1), ni);
    s.qr_logs = Mat(static_cast<Eigen::Index>(kk - 1), ni);
    s.cumulative = Mat::Zero(static_cast<Eigen::Index>(kk), ni);
    for (std::size_t k = 0; k + 1 < kk; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const Mat& r = fwd.r[k];
        for (Eigen::Index m = 0; m < ni; ++m) {
            const Vec c = fwd.frames[k].transpose() * s.frames[k].col(m);
            const Vec rc = r * c;
            s.log_gains(ki, m) = std::log(rc.norm());
            s.qr_logs(ki, m) = std::log(r(m, m));
            const Vec moved = fwd.frames[k + 1] * rc;
            if (moved.dot(s.frames[k + 1].col(m)) <= 0.0) {
                std::ostringstream msg;
                msg << "x_" << m << " flips sign between t=" << grid[k] << " and t=" << grid[k + 1];
                throw StructureFailure(kModule, "sign-convention", msg.str());
            }
            s.transport_defect = std::max(s.transport_defect, line_angle(moved, s.frames[k + 1].col(m)));
        }
        s.cumulative.row(ki + 1) = s.cumulative.row(ki) + s.log_gains.row(ki);
    }
    return s;
}

SigmaAlongSeries verify_sigma_along(const TridiagCoefficients& a, const FrameSeries& series,
                                    const BundleOptions& opts) {
    SigmaAlongSeries rep;
    const Tolerances tol = tight_tolerances();
    SigmaProfileOptions po;
    po.zero_band = opts.zero_band;
    const auto n = static_cast<Eigen::Index>(series.dimension());
    for (std::size_t k = 0; k + 1 < series.times.size(); ++k) {
        for (Eigen::Index m = 0; m < n; ++m) {
            const Trajectory traj = integrate_linear(a, series.frames[k].col(m), series.times[k], series.times[k + 1], tol);
            const SigmaProfile p = sigma_profile(traj, po);
            ++rep.checked_steps;
            if (p.segments.size() != 1 || p.segments.front().value != m || !p.undefined_times.empty()) {
                if (rep.failures == 0) {
                    rep.first_failure_time = series.times[k];
                    rep.first_failure_mode = static_cast<int>(m);
                }
                ++rep.failures;
            }
        }
    }
    return rep;
}

nlohmann::json to_json(const BundleFrame& frame) {
    nlohmann::json j;
    j["base_time"] = frame.base_time;
    j["method"] = to_string(frame.method);
    auto vecs = nlohmann::json::array();
    for (const Vec& v : frame.vectors) vecs.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["vectors"] = vecs;
    j["sigma_check"] = frame.sigma_check;
    j["convergence_gap"] = frame.convergence_gap;
    j["condition"] = frame.condition;
    if (frame.method == BundleMethod::Pushforward) j["warmup"] = frame.warmup;
    if (!frame.gains.empty()) j["gains"] = frame.gains;
    return j;
}

}  // namespace trifloq
