// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed
// here and nowhere else.

#include "fixtures.hpp"
#include "oracles.hpp"

#include <trifloq/bundles.hpp>
#include <trifloq/catalog.hpp>
#include <trifloq/errors.hpp>
#include <trifloq/integrator.hpp>
#include <trifloq/linalg.hpp>
#include <trifloq/periodic_floquet.hpp>
#include <trifloq/signchain.hpp>
#include <trifloq/skewflow.hpp>
#include <trifloq/spectrum.hpp>

#include <Eigen/Eigenvalues>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace trifloq;
namespace fs = std::filesystem;

namespace tol {
constexpr double kMarginDip = 1e-3;          // normalized margin near a drop
constexpr double kDropWindow = 1e-3;         // half-width searched around a drop
constexpr double kMultiplierRel = 1e-8;
constexpr double kLiouville = 1e-6;
constexpr double kBundleAngle = 1e-6;
constexpr double kTransport = 1e-6;
constexpr double kSeparationRel = 0.01;
constexpr double kGammaFraction = 0.99;
constexpr double kReconstruction = 1e-6;
constexpr double kConstantInterval = 1e-3;
constexpr double kExponentContainment = 1e-6;
constexpr double kSpectralBundle = 1e-6;
constexpr int kSigmaSamples = 1000;
constexpr double kFiberSpread = 1e-3;
constexpr double kBoundedResidual = 1e-8;
}  // namespace tol

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Failures {
public:
    void add(const std::string& what) {
        if (count_++ < 3) text_ += (text_.empty() ? "" : "; ") + what;
    }
    int count() const { return count_; }
    Outcome outcome(const std::string& ok_detail) const {
        if (count_ == 0) return {true, ok_detail};
        return {false, std::to_string(count_) + " failure(s): " + text_};
    }

private:
    int count_ = 0;
    std::string text_;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Vec gaussian(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = g(rng);
    return v;
}

// Sign changes counted on the raw vector; zeros count as changes.
int sign_changes_raw(const Vec& v) {
    int s = 0;
    for (Eigen::Index i = 0; i + 1 < v.size(); ++i)
        if (v[i] == 0.0 || v[i] * v[i + 1] < 0.0) ++s;
    return s;
}

// ---- 1 ---------------------------------------------------------------------

Outcome sigma_monotonicity() {
    Failures f;
    int drops = 0;
    for (int i = 0; i < 200; ++i) {
        const int n = 2 + i % 7;
        std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> spacing(0.2, 1.5);
        const auto a = fixtures::random_quasi_periodic(n, rng, spacing(rng));
        const Vec x0 = gaussian(static_cast<std::size_t>(n), rng);
        const Trajectory traj = integrate_linear(a, x0, 0.0, 50.0, Tolerances{1e-10, 1e-12});
        const SigmaProfile p = sigma_profile(traj);
        const std::string tag = "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ")";
        if (!p.violations.empty()) f.add(tag + ": sigma increased");
        for (std::size_t s = 1; s < p.segments.size(); ++s)
            if (p.segments[s].value >= p.segments[s - 1].value) f.add(tag + ": segments not strictly decreasing");
        for (double td : p.drop_times) {
            ++drops;
            double dip = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= 400; ++k) {
                const double t = std::clamp(td - tol::kDropWindow + 2.0 * tol::kDropWindow * k / 400.0, 0.0, 50.0);
                dip = std::min(dip, lambda_margin(traj.at(t)));
            }
            if (dip > tol::kMarginDip) f.add(tag + ": drop at t=" + fmt(td) + " without a margin dip (" + fmt(dip) + ")");
        }
    }
    return f.outcome("200 systems, " + std::to_string(drops) + " localized drops, 0 violations");
}

// ---- 2 ---------------------------------------------------------------------

Outcome periodic_floquet() {
    Failures f;
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
        const int n = 2 + i % 7;
        std::mt19937_64 rng(2000 + static_cast<std::uint64_t>(i));
        const Mat a = fixtures::random_constant(n, rng);
        const auto eig = oracle::tridiag_eig(a);
        for (double period : {0.5, 1.0, 2.0}) {
            const std::string tag = "matrix " + std::to_string(i) + " T=" + fmt(period);
            const auto c = TridiagCoefficients::constant(a, 0.4).with_modulus(Periodic{period});
            const FloquetDecomposition dec = floquet_decompose_flow(c);
            const Mat e = oracle::expm(a * period);
            for (int m = 0; m < n; ++m) {
                const double want = std::exp(eig.values[static_cast<std::size_t>(m)] * period);
                // The oracle pair must itself be consistent.
                const Vec& v = eig.vectors[static_cast<std::size_t>(m)];
                if ((e * v - want * v).norm() > 1e-10 * e.norm()) f.add(tag + ": oracle disagreement");
                const double rel = std::abs(dec.multipliers[static_cast<std::size_t>(m)] - want) / want;
                worst = std::max(worst, rel);
                if (rel > tol::kMultiplierRel) f.add(tag + ": multiplier " + std::to_string(m) + " off by " + fmt(rel));
                if (dec.multipliers[static_cast<std::size_t>(m)] <= 0.0) f.add(tag + ": nonpositive multiplier");
                if (m > 0 && !(dec.multipliers[static_cast<std::size_t>(m)] < dec.multipliers[static_cast<std::size_t>(m - 1)])) {
                    f.add(tag + ": multipliers not strictly decreasing");
                }
                if (dec.sigma_labels[static_cast<std::size_t>(m)] != m ||
                    sign_changes_raw(dec.eigenvectors[static_cast<std::size_t>(m)]) != m) {
                    f.add(tag + ": sigma(v_" + std::to_string(m) + ") != " + std::to_string(m));
                }
            }
            double log_product = 0.0;
            for (double mu : dec.multipliers) log_product += std::log(mu);
            const double liouville = liouville_log_det(c, 0.0, period);
            const double exact = a.trace() * period;
            if (std::abs(log_product - liouville) > tol::kLiouville * std::max(1.0, std::abs(liouville)) ||
                std::abs(liouville - exact) > tol::kLiouville * std::max(1.0, std::abs(exact))) {
                f.add(tag + ": Liouville mismatch");
            }
        }
    }
    return f.outcome("90 decompositions, worst multiplier error " + fmt(worst));
}

// ---- 3 ---------------------------------------------------------------------

Outcome bundle_construction() {
    Failures f;
    double worst_angle = 0.0, worst_transport = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int n = 2 + i % 4;
        std::mt19937_64 rng(3000 + static_cast<std::uint64_t>(i));
        const auto a = fixtures::random_quasi_periodic(n, rng);
        const std::string tag = "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ")";
        const BundleFrame trunc = floquet_frame_truncation(a, 0.0);
        const BundleFrame push = floquet_bundle_pushforward(a, 0.0);
        for (int m = 0; m < n; ++m) {
            const double ang = line_angle(trunc.vectors[static_cast<std::size_t>(m)], push.vectors[static_cast<std::size_t>(m)]);
            worst_angle = std::max(worst_angle, ang);
            if (ang > tol::kBundleAngle) f.add(tag + ": truncation vs push-forward angle " + fmt(ang));
        }
        const FrameSeries series = frame_series(a, -20.0, 20.0, 0.1);
        const SigmaAlongSeries along = verify_sigma_along(a, series);
        if (along.failures > 0) f.add(tag + ": sigma(x_m(t)) != m at t=" + fmt(along.first_failure_time));
        for (int l = 0; l < n; ++l) {
            const DimensionReport d = dimension_check(push, 0, l, 200, 77 + static_cast<std::uint64_t>(l));
            if (d.rank != l + 1 || !d.ok()) f.add(tag + ": dim W_{0," + std::to_string(l) + "} = " + std::to_string(d.rank));
        }
        // Transport by the flow against the directions computed afresh.
        const BundleFrame moved = bundle_along_orbit(a, push, 1.0);
        const std::size_t k = 210;  // t = 1 on the grid
        double defect = series.transport_defect;
        for (int m = 0; m < n; ++m) {
            defect = std::max(defect, line_angle(moved.vectors[static_cast<std::size_t>(m)], series.frames[k].col(m)));
        }
        worst_transport = std::max(worst_transport, defect);
        if (std::abs(series.times[k] - 1.0) > 1e-12) f.add(tag + ": grid does not hit t=1");
        if (defect > tol::kTransport) f.add(tag + ": transport defect " + fmt(defect));
    }
    return f.outcome("50 instances, worst angle " + fmt(worst_angle) + ", worst transport " + fmt(worst_transport));
}

// ---- 4 ---------------------------------------------------------------------

Outcome separation() {
    Failures f;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int n = 2 + i % 5;
        std::mt19937_64 rng(4000 + static_cast<std::uint64_t>(i));
        const auto a = fixtures::random_quasi_periodic(n, rng);
        const FrameSeries s = frame_series(a, 0.0, 100.0, 0.05);
        for (int m = 0; m + 1 < n; ++m) {
            const SeparationReport r = fit_separation(s, m);
            if (!(r.nu > 0.0) || r.structure_failure) {
                f.add("quasi-periodic " + std::to_string(i) + " pair " + std::to_string(m) + ": nu=" + fmt(r.nu));
            }
        }
    }
    for (int i = 0; i < 20; ++i) {
        const int n = 2 + i % 5;
        std::mt19937_64 rng(4100 + static_cast<std::uint64_t>(i));
        const Mat a = fixtures::random_constant(n, rng);
        const auto eig = oracle::tridiag_eig(a);
        const FrameSeries s = frame_series(TridiagCoefficients::constant(a, 0.4), 0.0, 100.0, 0.05);
        for (int m = 0; m + 1 < n; ++m) {
            const double gap = eig.values[static_cast<std::size_t>(m)] - eig.values[static_cast<std::size_t>(m + 1)];
            const SeparationReport r = fit_separation(s, m);
            const double rel = std::abs(r.nu - gap) / gap;
            worst = std::max(worst, rel);
            const std::string tag = "constant " + std::to_string(i) + " pair " + std::to_string(m);
            if (rel > tol::kSeparationRel) f.add(tag + ": nu=" + fmt(r.nu) + " gap=" + fmt(gap));
            if (r.gamma < tol::kGammaFraction * gap) f.add(tag + ": gamma=" + fmt(r.gamma) + " gap=" + fmt(gap));
        }
    }
    return f.outcome("20 quasi-periodic + 20 constant instances, worst relative nu error " + fmt(worst));
}

// ---- 5 ---------------------------------------------------------------------

Outcome decoupling() {
    Failures f;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int n = 2 + i % 5;
        std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(i));
        const auto a = fixtures::random_quasi_periodic(n, rng);
        const FrameSeries s = frame_series(a, 0.0, 10.0, 0.05);
        const Reconstruction r = reconstruct_from_modes(a, gaussian(static_cast<std::size_t>(n), rng), s);
        worst = std::max(worst, r.relative_error);
        if (r.relative_error > tol::kReconstruction) {
            f.add("instance " + std::to_string(i) + ": relative error " + fmt(r.relative_error));
        }
    }
    return f.outcome("50 instances, worst relative error " + fmt(worst));
}

// ---- 6 and 7 ---------------------------------------------------------------

// Independent monodromy: classical RK4 on the matrix equation.
Mat rk4_monodromy(const TridiagCoefficients& a, double period, int steps) {
    const auto n = static_cast<Eigen::Index>(a.n());
    Mat y = Mat::Identity(n, n);
    const double h = period / steps;
    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const Mat k1 = a.matrix(t) * y;
        const Mat k2 = a.matrix(t + h / 2) * (y + h / 2 * k1);
        const Mat k3 = a.matrix(t + h / 2) * (y + h / 2 * k2);
        const Mat k4 = a.matrix(t + h) * (y + h * k3);
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return y;
}

TridiagCoefficients random_periodic(int n, double period, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto trig = [&](double c, double amp) { return TrigPolynomial{c, {amp * u(rng)}, {amp * u(rng)}}; };
    std::vector<TrigPolynomial> diag, upper, lower;
    for (int i = 0; i < n; ++i) diag.push_back(trig(-1.5 * i + 0.2 * u(rng), 0.4));
    for (int i = 0; i + 1 < n; ++i) {
        upper.push_back(trig(1.1 + 0.1 * u(rng), 0.25));
        lower.push_back(trig(1.1 + 0.1 * u(rng), 0.25));
    }
    return quasi_periodic_coefficients(diag, upper, lower, {1.0 / period}, {0.5 * (u(rng) + 1.0)}, 0.5)
        .with_modulus(Periodic{period});
}

struct SpectrumCase {
    std::string tag;
    FrameSeries series;
    SpectrumEstimate estimate;
};

std::vector<DichotomyProjector> g_projectors;

// Twenty probes alternating between gaps (outside the 5% margins) and
// intervals.
void probe_dichotomies(const SpectrumCase& c, std::uint64_t seed, Failures& f, int& accepted, int& rejected) {
    const auto& iv = c.estimate.intervals;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    const std::size_t mid = c.series.times.size() / 2;
    const double spread = std::max(1.0, iv.front().b - iv.back().a);
    for (int p = 0; p < 20; ++p) {
        double lambda = 0.0;
        bool in_gap = p % 2 == 0;
        int expected_dim = 0;
        if (in_gap) {
            const std::size_t g = static_cast<std::size_t>(p / 2) % (iv.size() + 1);
            if (g == 0) lambda = iv.front().b + 0.1 * spread + frac(rng) * spread;
            else if (g == iv.size()) lambda = iv.back().a - 0.1 * spread - frac(rng) * spread;
            else lambda = iv[g].b + frac(rng) * (iv[g - 1].a - iv[g].b);
            for (std::size_t i = 0; i < g; ++i) expected_dim += iv[i].multiplicity;
        } else {
            const auto& s = iv[static_cast<std::size_t>(p / 2) % iv.size()];
            lambda = s.a + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (s.b - s.a);
        }
        try {
            const DichotomyProjector proj = dichotomy_projector(c.series, c.estimate, mid, lambda);
            if (!in_gap) {
                f.add(c.tag + ": accepted lambda=" + fmt(lambda) + " inside an interval");
                continue;
            }
            if (proj.unstable_dim != expected_dim) f.add(c.tag + ": unstable dimension at lambda=" + fmt(lambda));
            ++accepted;
            g_projectors.push_back(proj);
        } catch (const NoDichotomy&) {
            if (in_gap) f.add(c.tag + ": rejected lambda=" + fmt(lambda) + " in a gap");
            else ++rejected;
        }
    }
    for (std::size_t i = 0; i < iv.size(); ++i) {
        const double defect = spectral_bundle_defect(c.series, c.estimate, mid, i);
        if (defect > tol::kSpectralBundle) f.add(c.tag + ": spectral bundle " + std::to_string(i) + " defect " + fmt(defect));
    }
}

Outcome spectrum_suite() {
    Failures f;
    g_projectors.clear();
    int accepted = 0, rejected = 0;
    double worst_const = 0.0;
    for (int i = 0; i < 10; ++i) {
        const int n = 2 + i % 5;
        std::mt19937_64 rng(6000 + static_cast<std::uint64_t>(i));
        const Mat a = fixtures::random_constant(n, rng);
        const auto eig = oracle::tridiag_eig(a);
        SpectrumCase c{"constant " + std::to_string(i), frame_series(TridiagCoefficients::constant(a, 0.4), 0.0, 200.0, 0.05), {}};
        c.estimate = sacker_sell_estimate(c.series, {50.0});
        if (c.estimate.intervals.size() != static_cast<std::size_t>(n)) {
            f.add(c.tag + ": " + std::to_string(c.estimate.intervals.size()) + " intervals");
            continue;
        }
        for (int m = 0; m < n; ++m) {
            const auto& s = c.estimate.intervals[static_cast<std::size_t>(m)];
            const double lam = eig.values[static_cast<std::size_t>(m)];
            const double err = std::max(std::abs(s.a - lam), std::abs(s.b - lam));
            worst_const = std::max(worst_const, err);
            if (err > tol::kConstantInterval) f.add(c.tag + ": interval " + std::to_string(m) + " off by " + fmt(err));
        }
        probe_dichotomies(c, 6500 + static_cast<std::uint64_t>(i), f, accepted, rejected);
    }
    for (int i = 0; i < 6; ++i) {
        const int n = 2 + i % 4;
        const double period = i % 2 == 0 ? 1.0 : 2.5;
        std::mt19937_64 rng(6100 + static_cast<std::uint64_t>(i));
        const auto a = random_periodic(n, period, rng);
        Eigen::EigenSolver<Mat> es(rk4_monodromy(a, period, 4000));
        std::vector<double> exps;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) exps.push_back(std::log(es.eigenvalues()[k].real()) / period);
        std::sort(exps.rbegin(), exps.rend());
        SpectrumCase c{"periodic " + std::to_string(i), frame_series(a, 0.0, 200.0, 0.05), {}};
        c.estimate = sacker_sell_estimate(c.series, {50.0});
        for (int m = 0; m < n; ++m) {
            const auto& r = c.estimate.modes[static_cast<std::size_t>(m)];
            const double e = exps[static_cast<std::size_t>(m)];
            if (e < r.a - tol::kExponentContainment || e > r.b + tol::kExponentContainment) {
                f.add(c.tag + ": exponent " + fmt(e) + " outside [" + fmt(r.a) + ", " + fmt(r.b) + "]");
            }
        }
        probe_dichotomies(c, 6600 + static_cast<std::uint64_t>(i), f, accepted, rejected);
    }
    return f.outcome("16 systems, worst constant-interval error " + fmt(worst_const) + ", " + std::to_string(accepted) +
                     " gap probes accepted, " + std::to_string(rejected) + " interval probes rejected");
}

Outcome sigma_bounds_suite() {
    if (g_projectors.empty()) return {false, "no projectors from the spectrum suite"};
    Failures f;
    int checked = 0;
    for (std::size_t i = 0; i < g_projectors.size(); ++i) {
        const SigmaBoundsReport r = sigma_bounds_check(g_projectors[i], tol::kSigmaSamples, 7000 + i);
        checked += r.checked_stable + r.checked_unstable;
        if (!r.ok()) f.add("projector " + std::to_string(i) + ": " + std::to_string(r.violations.size()) + " violations");
    }
    return f.outcome(std::to_string(g_projectors.size()) + " projectors, " + std::to_string(checked) +
                     " sampled vectors, 0 violations");
}

// ---- 8 ---------------------------------------------------------------------

Outcome skew_flow() {
    Failures f;
    const TorusBasePoint base({0.1, 0.3}, default_frequencies());
    std::string detail;

    {
        const auto field = catalog_field("hurwitz-nonhomogeneous");
        OmegaOptions oo;
        oo.sample_dt = 0.005;
        oo.horizon = 800.0;
        const auto set = omega_limit(field, Vec::Zero(3), base, oo);
        std::mt19937_64 rng(8000);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (int p = 0; p < 10; ++p) {
            const std::vector<double> probe{u(rng), u(rng)};
            const double spread = set.fiber_spread(probe);
            worst = std::max(worst, spread);
            if (spread > tol::kFiberSpread) f.add("Hurwitz fiber spread " + fmt(spread));
            const auto cover = cover_cardinality(set, probe);
            if (cover.count != 1) f.add("Hurwitz cover count " + std::to_string(cover.count));
        }
        const auto rep = hyperbolicity_check(field, set);
        if (rep.verdict != Verdict::NotHyperbolic || rep.unstable_dim != 0) {
            f.add("Hurwitz verdict " + to_string(rep.verdict) + " N=" + std::to_string(rep.unstable_dim));
        }
        detail += "Hurwitz worst spread " + fmt(worst);
    }
    {
        const auto forced = *catalog_forced("saddle-nonhomogeneous");
        const auto field = catalog_field("saddle-nonhomogeneous");
        const auto sol = bounded_solution_linear(forced.a, forced.forcing, base, 0.0, 200.0);
        if (sol.residual > tol::kBoundedResidual) f.add("saddle residual " + fmt(sol.residual));
        OmegaOptions oo;
        oo.sample_dt = 0.01;
        oo.horizon = 200.0;
        const auto set = set_from_orbit(field, sol.orbit, sol.base, 0.0, oo);
        HyperbolicityOptions ho;
        ho.probes = 2;
        ho.sigma_samples = tol::kSigmaSamples;
        const auto rep = hyperbolicity_check(field, set, ho);
        if (rep.verdict != Verdict::Hyperbolic || rep.unstable_dim != 1) {
            f.add("saddle verdict " + to_string(rep.verdict) + " N=" + std::to_string(rep.unstable_dim));
        }
        if (!rep.sigma_bounds || !rep.sigma_bounds->ok() || rep.sigma_bounds->checked_unstable + rep.sigma_bounds->checked_stable < tol::kSigmaSamples) {
            f.add("saddle sigma bounds");
        }
        detail += ", saddle residual " + fmt(sol.residual);
    }
    {
        const auto field = catalog_field("bistable-cooperative");
        OmegaOptions oo;
        oo.transient = 50.0;
        oo.horizon = 800.0;
        oo.sample_dt = 0.005;
        const auto up = omega_limit(field, Vec::Constant(2, 2.0), base, oo);
        const auto down = omega_limit(field, Vec::Constant(2, -2.0), base, oo);
        for (std::size_t k : {std::size_t{12000}, std::size_t{40000}, std::size_t{120000}}) {
            const auto d = fiber_distal_profile(up, k, down, k, 50.0);
            if (!d.sigma_constant) f.add("bistable sigma not constant around sample " + std::to_string(k));
        }
        detail += ", bistable sigma constant at 3 base points";
    }
    return f.outcome(detail);
}

// ---- 9 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& env, const fs::path& scenario, const fs::path& out) {
    const std::string cmd = env + " '" + std::string(TRIFLOQ_CLI) + "' run '" + scenario.string() + "' -o '" +
                            out.string() + "' > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
    Failures f;
    const fs::path root = fs::temp_directory_path() / "trifloq-acceptance-cli";
    fs::remove_all(root);
    int compared = 0;
    std::vector<fs::path> scenarios;
    for (const auto& e : fs::directory_iterator(TRIFLOQ_SCENARIOS))
        if (e.path().extension() == ".json" && e.path().stem() != "malformed") scenarios.push_back(e.path());
    std::sort(scenarios.begin(), scenarios.end());
    for (const auto& sc : scenarios) {
        for (const std::string env : {"env -u TRIFLOQ_SEED", "env TRIFLOQ_SEED=5"}) {
            const fs::path a = root / (sc.stem().string() + "-a"), b = root / (sc.stem().string() + "-b");
            fs::remove_all(a);
            fs::remove_all(b);
            const int ra = run_cli(env, sc, a), rb = run_cli(env, sc, b);
            if (ra != 0 || rb != 0) {
                f.add(sc.filename().string() + ": exit codes " + std::to_string(ra) + "/" + std::to_string(rb));
                continue;
            }
            for (const auto& e : fs::directory_iterator(a)) {
                const auto name = e.path().filename().string();
                if (name.find(".timing.") != std::string::npos) continue;
                if (!fs::exists(b / name) || slurp(e.path()) != slurp(b / name)) {
                    f.add(sc.filename().string() + ": " + name + " differs");
                }
                ++compared;
            }
        }
    }
    fs::remove_all(root);
    if (scenarios.empty()) return {false, "no scenarios found"};
    return f.outcome(std::to_string(scenarios.size()) + " scenarios x 2 seeds, " + std::to_string(compared) +
                     " files byte-identical");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"sigma monotonicity", sigma_monotonicity},
        {"periodic Floquet", periodic_floquet},
        {"bundle construction", bundle_construction},
        {"separation", separation},
        {"decoupling", decoupling},
        {"spectrum", spectrum_suite},
        {"sigma bounds", sigma_bounds_suite},
        {"skew flow", skew_flow},
        {"CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("CRITERION %zu %s: %s (%s) [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
