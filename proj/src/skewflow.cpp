#include "trifloq/skewflow.hpp"

#include "trifloq/bundles.hpp"
#include "trifloq/errors.hpp"
#include "trifloq/flag.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

namespace trifloq {

namespace {

constexpr const char* kModule = "skewflow";

double frac(double v) {
    double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
}

// Knuth two-sum: a + b = s + e exactly.
std::pair<double, double> two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    const double e = (a - (s - bb)) + (b - bb);
    return {s, e};
}

double wrapped(double d) {
    d -= std::round(d);
    return d;
}

// Field whose phase is read from the base point, so local time 0 is the base.
TridiagonalField field_along(const QuasiPeriodicField& f, const TorusBasePoint& base) {
    CoordinateFn g = [f, base](std::size_t i, double t, double l, double c, double r) {
        const auto th = base.theta_at(t);
        return f.f(i, th, l, c, r);
    };
    PartialsFn p;
    if (f.partials) {
        p = [f, base](std::size_t i, double t, double l, double c, double r) {
            const auto th = base.theta_at(t);
            return f.partials(i, th, l, c, r);
        };
    }
    return TridiagonalField(f.n, g, p, f.eps0, f.deltas);
}

void check_floor(const TridiagonalField& g, const Trajectory& traj) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const int bad = g.floor_violation(traj.times()[k], traj.states()[k]);
        if (bad >= 0) {
            std::ostringstream msg;
            msg << "coupling partial below eps0 at i=" << bad << ", t=" << traj.times()[k];
            throw StructureFailure(kModule, "cooperative-floor", msg.str());
        }
    }
}

// Canonical single-linkage labels (clusters numbered by first member).
std::vector<int> single_linkage(const std::vector<Vec>& pts, double tol) {
    const std::size_t m = pts.size();
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if ((pts[i] - pts[j]).norm() <= tol) parent[find(i)] = find(j);
    std::vector<int> label(m, -1);
    std::unordered_map<std::size_t, int> ids;
    for (std::size_t i = 0; i < m; ++i) {
        const auto root = find(i);
        auto it = ids.find(root);
        if (it == ids.end()) it = ids.emplace(root, static_cast<int>(ids.size())).first;
        label[i] = it->second;
    }
    return label;
}

double diameter_of(const std::vector<Vec>& pts, const std::vector<std::size_t>& members) {
    double d = 0.0;
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
            d = std::max(d, (pts[members[a]] - pts[members[b]]).norm());
    return d;
}

// Quadratic trend in the phase offset, without the constant term.
Eigen::RowVectorXd trend_row(const std::vector<double>& off) {
    const std::size_t d = off.size();
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(1 + d + d * (d + 1) / 2));
    Eigen::Index c = 0;
    row[c++] = 1.0;
    for (double v : off) row[c++] = v;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) row[c++] = off[i] * off[j];
    return row;
}

// Removes the fitted trend from each member; groups too small for the fit
// are left as they are.
void detrend(const std::vector<Vec>& raw, const std::vector<std::vector<double>>& offs,
             const std::vector<std::size_t>& members, std::vector<Vec>& out) {
    if (members.empty()) return;
    const Eigen::Index p = trend_row(offs[members.front()]).size();
    if (static_cast<Eigen::Index>(members.size()) < 2 * p || p == 1) {
        for (std::size_t m : members) out[m] = raw[m];
        return;
    }
    const auto rows = static_cast<Eigen::Index>(members.size());
    Mat design(rows, p);
    Mat y(rows, raw.front().size());
    for (Eigen::Index r = 0; r < rows; ++r) {
        design.row(r) = trend_row(offs[members[static_cast<std::size_t>(r)]]);
        y.row(r) = raw[members[static_cast<std::size_t>(r)]].transpose();
    }
    const Mat beta = design.colPivHouseholderQr().solve(y);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t m = members[static_cast<std::size_t>(r)];
        const Vec trend = (design.row(r).tail(p - 1) * beta.bottomRows(p - 1)).transpose();
        out[m] = raw[m] - trend;
    }
}

constexpr double kGaussNodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGaussWeights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                     0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

using CVec = Eigen::VectorXcd;

DistalReport distal_from(const Trajectory& d) {
    DistalReport rep;
    rep.forward_gap = std::numeric_limits<double>::infinity();
    rep.backward_gap = rep.forward_gap;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double gap = d.states()[k].norm();
        if (d.times()[k] >= 0.0) rep.forward_gap = std::min(rep.forward_gap, gap);
        if (d.times()[k] <= 0.0) rep.backward_gap = std::min(rep.backward_gap, gap);
    }
    rep.profile = sigma_profile(d);
    rep.sigma_constant = rep.profile.segments.size() == 1 && rep.profile.undefined_times.empty();
    return rep;
}

}  // namespace

TorusBasePoint::TorusBasePoint(std::vector<double> theta, std::vector<double> omega)
    : origin_(std::move(theta)), omega_(std::move(omega)) {
    if (origin_.size() != omega_.size()) throw InvalidInput(kModule, "torus", "phase and frequency dimensions differ");
    for (double& v : origin_) v = frac(v);
}

std::vector<double> TorusBasePoint::theta_at(double s) const {
    const auto [a, e] = two_sum(hi_, s);
    const double rest = e + lo_;
    std::vector<double> out(origin_.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = frac(origin_[j] + omega_[j] * a + omega_[j] * rest);
    return out;
}

TorusBasePoint TorusBasePoint::advanced(double t) const {
    TorusBasePoint b = *this;
    const auto [a, e] = two_sum(hi_, t);
    const auto [h, l] = two_sum(a, e + lo_);
    b.hi_ = h;
    b.lo_ = l;
    return b;
}

TridiagonalField QuasiPeriodicField::frozen(std::span<const double> theta0) const {
    return field_along(*this, TorusBasePoint(std::vector<double>(theta0.begin(), theta0.end()), omega));
}

QuasiPeriodicField QuasiPeriodicField::shifted_by(double c) const {
    QuasiPeriodicField g = *this;
    const auto inner = f;
    g.f = [inner, c](std::size_t i, std::span<const double> th, double l, double x, double r) {
        return inner(i, th, l, x, r) + c * x;
    };
    if (partials) {
        const auto dp = partials;
        g.partials = [dp, c](std::size_t i, std::span<const double> th, double l, double x, double r) {
            StencilPartials s = dp(i, th, l, x, r);
            s.center += c;
            return s;
        };
    }
    std::ostringstream name_s;
    name_s << name << " + " << c << " x";
    g.name = name_s.str();
    return g;
}

QuasiPeriodicField linear_forced_field(const Mat& a, std::vector<TrigPolynomial> forcing, std::vector<double> omega,
                                       double eps0, std::string name, std::vector<int> deltas) {
    const auto n = static_cast<std::size_t>(a.rows());
    if (a.cols() != a.rows() || n < 2) throw InvalidInput(kModule, "matrix", "need a square matrix with n >= 2");
    if (forcing.size() != n) throw InvalidInput(kModule, "forcing", "one forcing polynomial per coordinate");
    QuasiPeriodicField f;
    f.n = n;
    f.omega = std::move(omega);
    f.eps0 = eps0;
    f.deltas = std::move(deltas);
    f.name = std::move(name);
    const Mat m = a;
    f.f = [m, forcing, n](std::size_t i, std::span<const double> th, double l, double c, double r) {
        const auto ii = static_cast<Eigen::Index>(i);
        double v = m(ii, ii) * c + forcing[i](th);
        if (i > 0) v += m(ii, ii - 1) * l;
        if (i + 1 < n) v += m(ii, ii + 1) * r;
        return v;
    };
    f.partials = [m, n](std::size_t i, std::span<const double>, double, double, double) {
        const auto ii = static_cast<Eigen::Index>(i);
        StencilPartials s;
        s.center = m(ii, ii);
        if (i > 0) s.left = m(ii, ii - 1);
        if (i + 1 < n) s.right = m(ii, ii + 1);
        return s;
    };
    return f;
}

Trajectory skew_orbit(const QuasiPeriodicField& f, const Vec& x0, const TorusBasePoint& base, double t,
                      const Tolerances& tol) {
    if (x0.size() != static_cast<Eigen::Index>(f.n)) throw InvalidInput(kModule, "dimension", "x0 has the wrong size");
    const TridiagonalField g = field_along(f, base);
    if (t == 0.0) return Trajectory({0.0}, {x0}, {}, f.name);
    Trajectory traj = integrate_nonlinear(g, x0, 0.0, t, tol);
    check_floor(g, traj);
    return traj;
}

SkewState skew_step(const QuasiPeriodicField& f, const Vec& x0, const TorusBasePoint& base, double t,
                    const Tolerances& tol) {
    const Trajectory traj = skew_orbit(f, x0, base, t, tol);
    return {t >= 0.0 ? traj.states().back() : traj.states().front(), base.advanced(t)};
}

FiberIndex::FiberIndex(const std::vector<std::vector<double>>& thetas, double cell)
    : dim_(thetas.empty() ? 0 : thetas.front().size()), thetas_(thetas), count_(thetas.size()) {
    cells_ = std::max(1, static_cast<int>(std::floor(1.0 / cell)));
    if (dim_ == 0) return;
    for (std::size_t p = 0; p < thetas_.size(); ++p) {
        std::vector<int> c(dim_);
        for (std::size_t j = 0; j < dim_; ++j) c[j] = std::min(cells_ - 1, static_cast<int>(thetas_[p][j] * cells_));
        buckets_[key(c)].push_back(p);
    }
}

std::uint64_t FiberIndex::key(const std::vector<int>& c) const {
    std::uint64_t k = 0;
    for (std::size_t j = dim_; j-- > 0;) k = k * static_cast<std::uint64_t>(cells_) + static_cast<std::uint64_t>(c[j]);
    return k;
}

std::vector<std::size_t> FiberIndex::query(std::span<const double> theta, double r) const {
    std::vector<std::size_t> out;
    if (dim_ == 0) {
        out.resize(count_);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    if (theta.size() != dim_) throw InvalidInput(kModule, "torus", "probe phase has the wrong dimension");
    const int reach = static_cast<int>(std::ceil(r * cells_)) + 1;
    std::vector<std::vector<int>> per_dim(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        const int c0 = std::min(cells_ - 1, static_cast<int>(frac(theta[j]) * cells_));
        if (2 * reach + 1 >= cells_) {
            for (int c = 0; c < cells_; ++c) per_dim[j].push_back(c);
        } else {
            for (int dc = -reach; dc <= reach; ++dc) per_dim[j].push_back(((c0 + dc) % cells_ + cells_) % cells_);
        }
    }
    std::vector<std::size_t> pos(dim_, 0);
    std::vector<int> c(dim_);
    while (true) {
        for (std::size_t j = 0; j < dim_; ++j) c[j] = per_dim[j][pos[j]];
        const auto it = buckets_.find(key(c));
        if (it != buckets_.end()) {
            for (std::size_t p : it->second)
                if (torus_distance(thetas_[p], theta) <= r) out.push_back(p);
        }
        std::size_t j = 0;
        while (j < dim_ && ++pos[j] == per_dim[j].size()) pos[j++] = 0;
        if (j == dim_) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> OmegaSetApproximation::fiber(std::span<const double> theta_probe, double r) const {
    return index.query(theta_probe, r);
}

Fiber OmegaSetApproximation::corrected_fiber(std::span<const double> theta_probe, const FiberOptions& opts) const {
    Fiber fb;
    fb.indices = fiber(theta_probe, opts.r_fiber);
    const std::size_t m = fb.indices.size();
    if (m == 0) return fb;
    std::vector<Vec> raw(m);
    std::vector<std::vector<double>> offs(m);
    for (std::size_t k = 0; k < m; ++k) {
        raw[k] = x[fb.indices[k]];
        const auto& th = theta[fb.indices[k]];
        offs[k].resize(th.size());
        for (std::size_t j = 0; j < th.size(); ++j) offs[k][j] = wrapped(th[j] - theta_probe[j]);
    }
    fb.corrected.assign(m, Vec());
    std::vector<int> label(m, 0);
    int groups = 1;
    for (int iter = 0; iter < 5; ++iter) {
        std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(groups));
        for (std::size_t k = 0; k < m; ++k) members[static_cast<std::size_t>(label[k])].push_back(k);
        for (const auto& g : members) detrend(raw, offs, g, fb.corrected);
        const std::vector<int> next = single_linkage(fb.corrected, opts.cluster_tol);
        const bool same = next == label;
        label = next;
        groups = 1 + *std::max_element(label.begin(), label.end());
        if (same) break;
    }
    fb.cluster = label;
    fb.clusters = groups;
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(groups));
    for (std::size_t k = 0; k < m; ++k) members[static_cast<std::size_t>(label[k])].push_back(k);
    for (const auto& g : members) fb.diameters.push_back(diameter_of(fb.corrected, g));
    return fb;
}

double OmegaSetApproximation::fiber_spread(std::span<const double> theta_probe, double r) const {
    const auto idx = fiber(theta_probe, r);
    if (idx.empty()) throw NumericalFailure(kModule, "insufficient-sampling", "no samples in the fiber");
    std::vector<Vec> raw, out(idx.size());
    std::vector<std::vector<double>> offs;
    for (std::size_t p : idx) {
        raw.push_back(x[p]);
        std::vector<double> o(theta[p].size());
        for (std::size_t j = 0; j < o.size(); ++j) o[j] = wrapped(theta[p][j] - theta_probe[j]);
        offs.push_back(o);
    }
    std::vector<std::size_t> all(idx.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    detrend(raw, offs, all, out);
    return diameter_of(out, all);
}

OmegaSetApproximation set_from_orbit(const QuasiPeriodicField& f, const Trajectory& orbit, const TorusBasePoint& base,
                                     double t_from, const OmegaOptions& opts) {
    if (!(opts.sample_dt > 0.0)) throw InvalidInput(kModule, "sample_dt", "sample_dt must be positive");
    const double t_to = std::min(orbit.t_end(), t_from + opts.horizon);
    if (!(t_to > t_from) || t_from < orbit.t_begin()) throw InvalidInput(kModule, "range", "orbit does not cover the sampling window");
    OmegaSetApproximation s;
    s.transient = t_from;
    s.horizon = t_to - t_from;
    s.sample_dt = opts.sample_dt;
    s.orbit = orbit;
    s.base = base;
    const auto count = static_cast<std::size_t>(std::floor(s.horizon / opts.sample_dt + 1e-9)) + 1;
    Vec lo, hi;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = t_from + static_cast<double>(k) * opts.sample_dt;
        s.x.push_back(orbit.at(t));
        s.theta.push_back(base.theta_at(t));
        lo = k == 0 ? s.x.back() : Vec(lo.cwiseMin(s.x.back()));
        hi = k == 0 ? s.x.back() : Vec(hi.cwiseMax(s.x.back()));
    }
    s.sample_count = count;
    s.diameter = (hi - lo).norm();
    s.index_cell = opts.index_cell;
    s.index = FiberIndex(s.theta, opts.index_cell);

    const auto shift = static_cast<std::size_t>(std::max(1.0, std::round(opts.invariance_time / opts.sample_dt)));
    if (count > shift && opts.invariance_probes > 0) {
        const TridiagonalField g = field_along(f, base);
        const double tau = static_cast<double>(shift) * opts.sample_dt;
        for (int p = 0; p < opts.invariance_probes; ++p) {
            const std::size_t k = (count - shift - 1) * static_cast<std::size_t>(p) /
                                  static_cast<std::size_t>(std::max(1, opts.invariance_probes - 1));
            const double t = t_from + static_cast<double>(k) * opts.sample_dt;
            const Trajectory hop = integrate_nonlinear(g, s.x[k], t, t + tau, opts.tol);
            const Vec landed = hop.states().back();
            const auto th = base.theta_at(t + tau);
            double best = (landed - s.x[k + shift]).lpNorm<Eigen::Infinity>();
            for (std::size_t q : s.index.query(th, 1e-9)) best = std::min(best, (landed - s.x[q]).lpNorm<Eigen::Infinity>());
            s.invariance_residual = std::max(s.invariance_residual, best);
        }
    }
    return s;
}

OmegaSetApproximation omega_limit(const QuasiPeriodicField& f, const Vec& x0, const TorusBasePoint& base,
                                  const OmegaOptions& opts) {
    if (!(opts.transient >= 0.0) || !(opts.horizon > 0.0)) throw InvalidInput(kModule, "range", "need transient >= 0 and horizon > 0");
    const TridiagonalField g = field_along(f, base);
    const double total = opts.transient + opts.horizon;
    const double chunk = 10.0;
    Trajectory orbit;
    Vec x = x0;
    double t = 0.0;
    while (t < total) {
        const double t1 = std::min(total, t + chunk);
        Trajectory piece = integrate_nonlinear(g, x, t, t1, opts.tol);
        check_floor(g, piece);
        for (std::size_t k = 0; k < piece.size(); ++k) {
            if (!(piece.states()[k].lpNorm<Eigen::Infinity>() <= opts.bound)) {
                std::ostringstream msg;
                msg << "orbit left the bound " << opts.bound << " at t=" << piece.times()[k] << "; last state";
                const Vec& last = piece.states()[k];
                for (Eigen::Index i = 0; i < last.size(); ++i) msg << ' ' << last[i];
                throw NumericalFailure(kModule, "unbounded-orbit", msg.str());
            }
        }
        orbit = orbit.size() == 0 ? piece : orbit.joined(piece);
        x = piece.states().back();
        t = t1;
    }
    return set_from_orbit(f, orbit, base, opts.transient, opts);
}

OmegaSetApproximation merge_sets(const OmegaSetApproximation& a, const OmegaSetApproximation& b) {
    if (a.base.dimension() != b.base.dimension()) throw InvalidInput(kModule, "torus", "sets live over different bases");
    OmegaSetApproximation s = a;
    s.x.insert(s.x.end(), b.x.begin(), b.x.end());
    s.theta.insert(s.theta.end(), b.theta.begin(), b.theta.end());
    s.sample_count = s.x.size();
    s.invariance_residual = std::max(a.invariance_residual, b.invariance_residual);
    Vec lo = s.x.front(), hi = s.x.front();
    for (const Vec& v : s.x) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    s.diameter = (hi - lo).norm();
    s.index = FiberIndex(s.theta, s.index_cell);
    return s;
}

TridiagCoefficients linearize_along(const QuasiPeriodicField& f, const Trajectory& orbit, const TorusBasePoint& base) {
    struct Cache {
        double t = std::numeric_limits<double>::quiet_NaN();
        Bands b;
    };
    auto cache = std::make_shared<Cache>();
    auto g = std::make_shared<const TridiagonalField>(field_along(f, base));
    auto path = std::make_shared<const Trajectory>(orbit);
    auto bands = [cache, g, path](double t) -> const Bands& {
        if (!(cache->t == t)) {
            cache->b = g->jacobian_bands(t, path->at(t));
            cache->t = t;
        }
        return cache->b;
    };
    return TridiagCoefficients(
        f.n, [bands](double t) { return bands(t).diag; }, [bands](double t) { return bands(t).upper; },
        [bands](double t) { return bands(t).lower; }, f.eps0, UniformlyContinuous{},
        std::numeric_limits<double>::infinity(), f.deltas);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Hyperbolic: return "hyperbolic";
        case Verdict::NotHyperbolic: return "not-hyperbolic";
        case Verdict::Undetermined: return "undetermined";
    }
    return "undetermined";
}

HyperbolicityReport hyperbolicity_check(const QuasiPeriodicField& f, const OmegaSetApproximation& set,
                                        const HyperbolicityOptions& opts) {
    if (opts.probes < 1) throw InvalidInput(kModule, "probes", "need at least one probe");
    HyperbolicityReport rep;
    rep.approximation_residual = set.invariance_residual;
    const double w = opts.warmup;
    const double lo = std::max(set.transient, set.orbit.t_begin() + w);
    const double hi = set.orbit.t_end() - w;
    const double horizon = std::min(opts.probe_horizon, hi - lo);
    std::vector<double> windows;
    for (double x : opts.windows)
        if (x <= horizon) windows.push_back(x);
    if (windows.empty()) {
        std::ostringstream msg;
        msg << "orbit leaves only " << horizon << " time units for probes, shorter than every window";
        throw InvalidInput(kModule, "horizon", msg.str());
    }

    TridiagCoefficients b = linearize_along(f, set.orbit, set.base);
    if (std::any_of(b.deltas().begin(), b.deltas().end(), [](int d) { return d != 1; })) {
        b = transform_coefficients(b, cooperativize(b.deltas()));
    }
    BundleOptions bo;
    bo.warmup = w;
    bo.seed = opts.seed;
    std::vector<SpectrumEstimate> parts;
    std::optional<FrameSeries> first;
    for (int p = 0; p < opts.probes; ++p) {
        const double frac_p = opts.probes == 1 ? 0.5 : static_cast<double>(p) / (opts.probes - 1);
        const double start = lo + (hi - lo - horizon) * frac_p;
        rep.probe_starts.push_back(start);
        FrameSeries series = frame_series(b, start, start + horizon, opts.max_step, bo);
        parts.push_back(sacker_sell_estimate(series, windows));
        if (!first) first = std::move(series);
    }
    rep.spectrum = merge_estimates(parts);

    for (const auto& iv : rep.spectrum.intervals) {
        if (iv.a <= 0.0 && 0.0 <= iv.b) rep.contains_zero = true;
        if (iv.a - opts.resolution <= 0.0 && 0.0 <= iv.b + opts.resolution) rep.near_zero = iv;
        if (iv.a > 0.0) rep.unstable_dim += iv.multiplicity;
    }
    if (rep.near_zero) {
        rep.verdict = Verdict::Undetermined;
        std::ostringstream msg;
        msg << "0 within " << opts.resolution << " of the interval [" << rep.near_zero->a << ", " << rep.near_zero->b << "]";
        rep.reason = msg.str();
        return rep;
    }
    if (rep.unstable_dim == 0) {
        rep.verdict = Verdict::NotHyperbolic;
        rep.reason = "exponential dichotomy with trivial unstable bundle (Im Q = {0})";
        return rep;
    }
    rep.verdict = Verdict::Hyperbolic;
    rep.reason = "exponential dichotomy with unstable dimension " + std::to_string(rep.unstable_dim);
    try {
        const DichotomyProjector proj = dichotomy_projector(*first, rep.spectrum, first->times.size() / 2, 0.0);
        rep.sigma_bounds = sigma_bounds_check(proj, opts.sigma_samples, opts.seed);
    } catch (const NoDichotomy& e) {
        rep.reason += std::string("; no projector for the sigma bounds: ") + e.what();
    }
    return rep;
}

BoundedSolution bounded_solution_linear(const Mat& a, const std::vector<TrigPolynomial>& forcing,
                                        const TorusBasePoint& base, double t0, double t1, double step, double tol) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || static_cast<Eigen::Index>(forcing.size()) != n) {
        throw InvalidInput(kModule, "dimension", "matrix and forcing sizes disagree");
    }
    if (!(t1 > t0) || !(step > 0.0)) throw InvalidInput(kModule, "range", "need t0 < t1 and step > 0");
    Eigen::EigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success) throw NumericalFailure(kModule, "eigen", "eigen decomposition failed");
    const CVec mu = es.eigenvalues();
    const Eigen::MatrixXcd v = es.eigenvectors();
    const double scale = std::max(1.0, a.lpNorm<Eigen::Infinity>());
    BoundedSolution out;
    out.base = base;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(mu[j].real()) <= 1e-10 * scale) {
            std::ostringstream msg;
            msg << "eigenvalue " << mu[j].real() << (mu[j].imag() >= 0 ? "+" : "") << mu[j].imag()
                << "i lies on the imaginary axis; 0 is in the spectrum";
            throw InvalidInput(kModule, "no-dichotomy", msg.str());
        }
        if (mu[j].real() > 0.0) ++out.unstable_dim;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(v);
    const double cond = v.norm() * lu.inverse().norm();
    if (!(cond < 1e8)) throw NumericalFailure(kModule, "eigenbasis", "eigenvector basis is ill-conditioned");

    auto c_at = [&](double s) -> CVec {
        const auto th = base.theta_at(s);
        Vec b(n);
        for (Eigen::Index i = 0; i < n; ++i) b[i] = forcing[static_cast<std::size_t>(i)](th);
        return lu.solve(b.cast<std::complex<double>>());
    };
    // int_0^h e^{z u} c(anchor + dir u) du by 8-point Gauss-Legendre.
    auto panel = [&](std::complex<double> z, double anchor, double dir, double h, Eigen::Index j) {
        std::complex<double> acc = 0.0;
        for (int q = 0; q < 8; ++q) {
            const double u = 0.5 * h * (kGaussNodes[q] + 1.0);
            acc += kGaussWeights[q] * std::exp(z * u) * c_at(anchor + dir * u)[j];
        }
        return 0.5 * h * acc;
    };
    auto tail = [&](std::complex<double> z, double anchor, double dir, Eigen::Index j) {
        const double length = std::log(1.0 / (tol * 1e-2)) / std::abs(z.real());
        const double h = std::min(0.05, 1.0 / std::abs(z));
        std::complex<double> acc = 0.0;
        for (double u = 0.0; u < length; u += h) acc += std::exp(z * u) * panel(z, anchor + dir * u, dir, h, j);
        return acc;
    };

    const std::vector<double> grid = uniform_grid(t0, t1, step);
    const std::size_t kk = grid.size();
    std::vector<CVec> y(kk, CVec::Zero(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const std::complex<double> m = mu[j];
        if (m.real() < 0.0) {
            y[0][j] = tail(m, grid[0], -1.0, j);
            for (std::size_t k = 0; k + 1 < kk; ++k) {
                const double h = grid[k + 1] - grid[k];
                y[k + 1][j] = std::exp(m * h) * y[k][j] + panel(m, grid[k + 1], -1.0, h, j);
            }
        } else {
            y[kk - 1][j] = -tail(-m, grid[kk - 1], 1.0, j);
            for (std::size_t k = kk - 1; k-- > 0;) {
                const double h = grid[k + 1] - grid[k];
                y[k][j] = std::exp(-m * h) * y[k + 1][j] - panel(-m, grid[k], 1.0, h, j);
            }
        }
    }
    std::vector<Vec> states(kk);
    for (std::size_t k = 0; k < kk; ++k) states[k] = (v * y[k]).real();

    const Rhs rhs = [&](double t, const Vec& x, Vec& dx) {
        const auto th = base.theta_at(t);
        dx = a * x;
        for (Eigen::Index i = 0; i < n; ++i) dx[i] += forcing[static_cast<std::size_t>(i)](th);
    };
    for (std::size_t k = 0; k + 1 < kk; ++k) {
        const Trajectory hop = integrate(rhs, states[k], grid[k], grid[k + 1], tight_tolerances());
        const double d = (hop.states().back() - states[k + 1]).lpNorm<Eigen::Infinity>();
        out.residual = std::max(out.residual, d / std::max(1.0, states[k + 1].lpNorm<Eigen::Infinity>()));
    }
    out.orbit = Trajectory(grid, std::move(states), {}, "bounded-solution");
    return out;
}

CoverReport cover_cardinality(const OmegaSetApproximation& set, std::span<const double> theta_probe,
                              const FiberOptions& opts) {
    const Fiber fb = set.corrected_fiber(theta_probe, opts);
    CoverReport rep;
    rep.fiber_points = fb.indices.size();
    if (static_cast<int>(fb.indices.size()) < opts.fiber_min) {
        std::ostringstream msg;
        msg << "insufficient sampling: " << fb.indices.size() << " fiber points within r=" << opts.r_fiber
            << ", need " << opts.fiber_min;
        throw NumericalFailure(kModule, "insufficient-sampling", msg.str());
    }
    rep.count = fb.clusters;
    rep.diameters = fb.diameters;
    if (opts.cluster_tol > set.diameter) {
        rep.warnings.push_back("cluster_tol exceeds the set diameter; a single cluster is forced");
    }
    return rep;
}

DistalReport fiber_distal_profile(const QuasiPeriodicField& f, const Vec& x1, const Vec& x2, const TorusBasePoint& base,
                                  double horizon, const Tolerances& tol) {
    const auto n = static_cast<Eigen::Index>(f.n);
    if (x1.size() != n || x2.size() != n) throw InvalidInput(kModule, "dimension", "states have the wrong size");
    if ((x1 - x2).lpNorm<Eigen::Infinity>() == 0.0) throw InvalidInput(kModule, "same-orbit", "the two states coincide");
    if (!(horizon > 0.0)) throw InvalidInput(kModule, "horizon", "horizon must be positive");
    const TridiagonalField g = field_along(f, base);
    const Rhs pair = [&](double t, const Vec& z, Vec& dz) {
        dz.resize(2 * n);
        Vec a, b;
        g.eval(t, z.head(n), a);
        g.eval(t, z.tail(n), b);
        dz << a, b;
    };
    Vec z0(2 * n);
    z0 << x1, x2;
    const Trajectory fwd = integrate(pair, z0, 0.0, horizon, tol, "pair");
    const Trajectory bwd = integrate(pair, z0, 0.0, -horizon, tol, "pair");
    Mat diff(n, 2 * n);
    diff << Mat::Identity(n, n), -Mat::Identity(n, n);
    const Trajectory d = bwd.joined(fwd).mapped(diff, "difference");
    return distal_from(bwd.joined(fwd).mapped(diff, "difference"));
}

DistalReport fiber_distal_profile(const OmegaSetApproximation& s1, std::size_t k1, const OmegaSetApproximation& s2,
                                  std::size_t k2, double horizon, double step) {
    if (k1 >= s1.x.size() || k2 >= s2.x.size()) throw InvalidInput(kModule, "sample", "sample index out of range");
    if (torus_distance(s1.theta[k1], s2.theta[k2]) > 1e-12) {
        throw InvalidInput(kModule, "fiber", "the two samples lie over different base points");
    }
    if ((s1.x[k1] - s2.x[k2]).lpNorm<Eigen::Infinity>() == 0.0) throw InvalidInput(kModule, "same-orbit", "the two states coincide");
    const double t1 = s1.transient + static_cast<double>(k1) * s1.sample_dt;
    const double t2 = s2.transient + static_cast<double>(k2) * s2.sample_dt;
    if (t1 - horizon < s1.transient || t1 + horizon > s1.orbit.t_end() || t2 - horizon < s2.transient ||
        t2 + horizon > s2.orbit.t_end()) {
        throw InvalidInput(kModule, "horizon", "recorded orbits after the transient do not cover the horizon around the samples");
    }
    const std::vector<double> grid = uniform_grid(-horizon, horizon, step);
    std::vector<Vec> states;
    for (double s : grid) states.push_back(s1.orbit.at(t1 + s) - s2.orbit.at(t2 + s));
    return distal_from(Trajectory(grid, std::move(states), {}, "difference"));
}

nlohmann::json to_json(const OmegaSetApproximation& s) {
    return {{"transient", s.transient},
            {"horizon", s.horizon},
            {"sample_dt", s.sample_dt},
            {"sample_count", s.sample_count},
            {"invariance_residual", s.invariance_residual},
            {"diameter", s.diameter},
            {"torus_dimension", s.base.dimension()}};
}

nlohmann::json to_json(const HyperbolicityReport& r) {
    nlohmann::json j;
    j["verdict"] = to_string(r.verdict);
    j["reason"] = r.reason;
    j["contains_zero"] = r.contains_zero;
    j["unstable_dim"] = r.unstable_dim;
    j["spectrum"] = to_json(r.spectrum);
    j["approximation_residual"] = r.approximation_residual;
    j["probe_starts"] = r.probe_starts;
    if (r.near_zero) j["near_zero"] = {{"a", r.near_zero->a}, {"b", r.near_zero->b}};
    if (r.sigma_bounds) j["sigma_bounds"] = to_json(*r.sigma_bounds);
    return j;
}

nlohmann::json to_json(const CoverReport& r) {
    return {{"count", r.count}, {"diameters", r.diameters}, {"fiber_points", r.fiber_points}, {"warnings", r.warnings}};
}

nlohmann::json to_json(const DistalReport& r) {
    auto segs = nlohmann::json::array();
    for (const auto& s : r.profile.segments) segs.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"sigma", s.value}});
    return {{"forward_gap", r.forward_gap}, {"backward_gap", r.backward_gap}, {"segments", segs},
            {"sigma_constant", r.sigma_constant}};
}

}  // namespace trifloq
