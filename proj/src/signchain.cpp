#include "trifloq/signchain.hpp"

#include "trifloq/errors.hpp"
#include "trifloq/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace trifloq {

namespace {

constexpr const char* kModule = "signchain";

void require_vector(const Vec& x) {
    if (x.size() < 2) throw InvalidInput(kModule, "dimension", "need n >= 2");
    if (!x.allFinite()) throw InvalidInput(kModule, "finite", "vector has non-finite entries");
    if (x.lpNorm<Eigen::Infinity>() == 0.0) throw InvalidInput(kModule, "nonzero", "zero vector");
}

struct Snapped {
    Vec x;
    bool ambiguous = false;
};

Snapped snap(const Vec& x, double zero_band) {
    Snapped s{x, false};
    const double cut = zero_band * x.lpNorm<Eigen::Infinity>();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0 && std::abs(x[i]) <= cut) {
            s.x[i] = 0.0;
            s.ambiguous = true;
        }
    }
    return s;
}

bool lambda_exact(const Vec& x) {
    const auto n = x.size();
    if (x[0] == 0.0 || x[n - 1] == 0.0) return false;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (x[i] == 0.0 && !(x[i - 1] * x[i + 1] < 0.0)) return false;
    }
    return true;
}

int count_exact(const Vec& x) {
    int c = 0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        if (x[i] == 0.0 || x[i] * x[i + 1] < 0.0) ++c;
    }
    return c;
}

}  // namespace

bool in_lambda(const Vec& x, double zero_band) {
    require_vector(x);
    return lambda_exact(snap(x, zero_band).x);
}

SigmaResult sigma(const Vec& x, double zero_band) {
    require_vector(x);
    SigmaResult r;
    const Snapped s = snap(x, zero_band);
    r.ambiguous = s.ambiguous;
    r.margin = lambda_margin(x);
    r.defined = lambda_exact(s.x);
    if (r.defined) r.value = count_exact(s.x);
    return r;
}

double lambda_margin(const Vec& x) {
    require_vector(x);
    const auto n = x.size();
    double m = std::min(std::abs(x[0]), std::abs(x[n - 1]));
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double flank = std::sqrt(std::max(0.0, -x[i - 1] * x[i + 1]));
        m = std::min(m, std::max(std::abs(x[i]), flank));
    }
    return m / x.lpNorm<Eigen::Infinity>();
}

namespace {

struct Sample {
    double t;
    SigmaResult s;
    bool robust = false;  // the raw vector gives the same count as the snapped one
    bool usable() const { return s.defined && (!s.ambiguous || robust); }
};

class Profiler {
public:
    Profiler(const Trajectory& traj, const SigmaProfileOptions& o) : traj_(traj), o_(o) {}

    Sample probe(double t) const {
        const Vec x = traj_.at(t);
        if (x.lpNorm<Eigen::Infinity>() == 0.0) return Sample{t, SigmaResult{}, false};
        Sample out{t, sigma(x, o_.zero_band)};
        if (out.s.defined && out.s.ambiguous) {
            const SigmaResult raw = sigma(x, 0.0);
            out.robust = raw.defined && raw.value == out.s.value;
        }
        return out;
    }

    // Usable sample near the middle of (a, b), or nullopt if the neighbourhood
    // sits on the boundary of Lambda.
    bool probe_mid(double a, double b, Sample& out) const {
        const double w = b - a;
        for (double f : {0.5, 0.4, 0.6, 0.3, 0.7}) {
            out = probe(a + f * w);
            if (out.usable()) return true;
        }
        return false;
    }

    // [a, b] with sigma(a) = sa > sigma(b) = sb; records every drop inside.
    void locate(double a, int sa, double b, int sb, SigmaProfile& p, int depth = 0) const {
        if (b - a <= o_.refine_tol || depth > 200) {
            const double t = 0.5 * (a + b);
            p.drop_times.push_back(t);
            p.undefined_times.push_back(t);
            drops_.push_back({t, sb});
            return;
        }
        Sample m;
        if (!probe_mid(a, b, m)) {
            const double t = 0.5 * (a + b);
            p.drop_times.push_back(t);
            p.undefined_times.push_back(t);
            drops_.push_back({t, sb});
            return;
        }
        const int sm = m.s.value;
        if (sm > sa || sm < sb) {
            p.violations.push_back(m.t);
            return;
        }
        if (sm == sa) {
            locate(m.t, sa, b, sb, p, depth + 1);
        } else if (sm == sb) {
            locate(a, sa, m.t, sb, p, depth + 1);
        } else {
            locate(a, sa, m.t, sm, p, depth + 1);
            locate(m.t, sm, b, sb, p, depth + 1);
        }
    }

    struct Drop {
        double t;
        int after;
    };
    mutable std::vector<Drop> drops_;

private:
    const Trajectory& traj_;
    const SigmaProfileOptions& o_;
};

}  // namespace

SigmaProfile sigma_profile(const Trajectory& traj, const SigmaProfileOptions& opts) {
    if (traj.size() == 0) throw InvalidInput(kModule, "trajectory", "empty trajectory");
    if (traj.dimension() < 2) throw InvalidInput(kModule, "dimension", "need n >= 2");
    if (opts.samples_per_step < 1 || !(opts.refine_tol > 0.0) || !(opts.zero_band >= 0.0)) {
        throw InvalidInput(kModule, "options", "bad sigma_profile options");
    }
    bool nonzero = false;
    for (const Vec& x : traj.states()) nonzero = nonzero || x.lpNorm<Eigen::Infinity>() > 0.0;
    if (!nonzero) throw InvalidInput(kModule, "nonzero", "trajectory is identically zero");

    SigmaProfile p;
    Profiler prof(traj, opts);
    const auto& times = traj.times();

    std::vector<double> grid;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double h = times[k + 1] - times[k];
        for (int j = 0; j < opts.samples_per_step; ++j) grid.push_back(times[k] + h * j / opts.samples_per_step);
    }
    grid.push_back(times.back());

    bool have_prev = false;
    Sample prev{0.0, SigmaResult{}, false};
    int first_value = -1;
    for (double t : grid) {
        const Sample s = prof.probe(t);
        if (!s.s.defined) {
            p.undefined_times.push_back(t);
            continue;
        }
        if (!s.usable()) continue;
        if (!have_prev) {
            first_value = s.s.value;
            prev = s;
            have_prev = true;
            continue;
        }
        if (s.s.value < prev.s.value) {
            prof.locate(prev.t, prev.s.value, s.t, s.s.value, p);
        } else if (s.s.value > prev.s.value) {
            p.violations.push_back(s.t);
            prof.drops_.push_back({0.5 * (prev.t + s.t), s.s.value});
        }
        prev = s;
    }
    if (!have_prev) throw NumericalFailure(kModule, "no-usable-sample", "sigma undefined at every sample");

    std::sort(p.undefined_times.begin(), p.undefined_times.end());
    p.undefined_times.erase(std::unique(p.undefined_times.begin(), p.undefined_times.end()),
                            p.undefined_times.end());
    auto& drops = prof.drops_;
    std::stable_sort(drops.begin(), drops.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    double start = traj.t_begin();
    int value = first_value;
    for (const auto& d : drops) {
        if (d.after == value) continue;
        p.segments.push_back({start, d.t, value});
        start = d.t;
        value = d.after;
    }
    p.segments.push_back({start, traj.t_end(), value});
    std::sort(p.drop_times.begin(), p.drop_times.end());
    return p;
}

}  // namespace trifloq
