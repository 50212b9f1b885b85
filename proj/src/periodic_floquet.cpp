#include "trifloq/periodic_floquet.hpp"

#include "trifloq/errors.hpp"
#include "trifloq/flag.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace trifloq {

namespace {

constexpr const char* kModule = "periodic-floquet";

void flag_structure(FloquetDecomposition& dec, const FloquetOptions& opts, const std::string& check,
                    const std::string& what) {
    if (opts.structure_checks) throw StructureFailure(kModule, check, what);
    dec.warnings.push_back(check + ": " + what);
}

// Positivity, simplicity, residuals and sigma labels.
void check_structure(FloquetDecomposition& dec, const FloquetOptions& opts) {
    const std::size_t n = dec.multipliers.size();
    for (std::size_t m = 0; m < n; ++m) {
        const double a = dec.multipliers[m];
        if (!(a > 0.0)) {
            std::ostringstream msg;
            msg << "multiplier " << m << " = " << a << " is not positive";
            flag_structure(dec, opts, "positivity", msg.str());
        }
        if (m + 1 < n && !(dec.multipliers[m + 1] < a * (1.0 - opts.eigen_tol))) {
            std::ostringstream msg;
            msg << "multipliers " << m << " and " << m + 1 << " are not separated (" << a << ", "
                << dec.multipliers[m + 1] << ")";
            flag_structure(dec, opts, "simplicity", msg.str());
        }
        if (!(dec.residuals[m] <= opts.residual_tol * dec.monodromy_norm)) {
            std::ostringstream msg;
            msg << "eigen-residual " << dec.residuals[m] << " of mode " << m << " exceeds "
                << opts.residual_tol << " * |M|";
            flag_structure(dec, opts, "residual", msg.str());
        }
        const SigmaResult s = sigma(dec.eigenvectors[m], opts.zero_band);
        dec.sigma_labels.push_back(s.defined ? s.value : -1);
        if (!s.defined || s.value != static_cast<int>(m)) {
            std::ostringstream msg;
            msg << "eigenvector " << m << " has sigma "
                << (s.defined ? std::to_string(s.value) : std::string("undefined"));
            flag_structure(dec, opts, "sigma-label", msg.str());
        }
    }
}

void fill_derived(FloquetDecomposition& dec, const Mat& m) {
    dec.monodromy_norm = m.norm();
    dec.exponents.clear();
    dec.residuals.clear();
    for (std::size_t k = 0; k < dec.multipliers.size(); ++k) {
        dec.exponents.push_back(std::log(dec.multipliers[k]) / dec.period);
        const Vec& v = dec.eigenvectors[k];
        dec.residuals.push_back((m * v - dec.multipliers[k] * v).norm());
    }
}

Vec inverse_iterate(const Mat& m, double shift, Vec v, int sweeps) {
    const auto n = m.rows();
    Eigen::PartialPivLU<Mat> lu(m - shift * Mat::Identity(n, n));
    for (int i = 0; i < sweeps; ++i) {
        Vec y = lu.solve(v);
        if (!y.allFinite() || y.norm() == 0.0) break;
        v = sign_normalized(y);
    }
    return v;
}

double polish_shift(double s, double scale) {
    // Nudge off the estimate so the shifted matrix stays invertible.
    return s + 1e-9 * std::max(std::abs(s), 1e-14 * scale);
}

}  // namespace

Mat monodromy(const TridiagCoefficients& a, const Tolerances& tol) {
    const auto t = a.period();
    if (!t) throw InvalidInput(kModule, "periodic", "coefficients are not declared periodic");
    return fundamental_matrix(a, 0.0, *t, tol).at_end();
}

FloquetDecomposition floquet_decompose(const Mat& m, double period, const FloquetOptions& opts) {
    if (m.rows() != m.cols() || m.rows() < 2) throw InvalidInput(kModule, "shape", "need a square matrix with n >= 2");
    if (!m.allFinite()) throw InvalidInput(kModule, "finite", "monodromy has non-finite entries");
    if (!(period > 0.0)) throw InvalidInput(kModule, "period", "period must be positive");
    const auto n = m.rows();
    const double scale = m.norm();

    FloquetDecomposition dec;
    dec.period = period;
    dec.method = "power-deflation";
    std::vector<Vec> rights, lefts;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(0.5, 1.5);

    for (Eigen::Index k = 0; k < n; ++k) {
        Mat b = m;
        for (std::size_t j = 0; j < rights.size(); ++j) {
            b -= dec.multipliers[j] * rights[j] * lefts[j].transpose() / lefts[j].dot(rights[j]);
        }
        Vec v(n);
        for (auto& c : v) c = u(rng);
        v = sign_normalized(v);
        bool converged = false;
        for (std::size_t it = 0; it < opts.max_iterations; ++it) {
            Vec y = b * v;
            if (!y.allFinite() || y.norm() == 0.0) break;
            y = sign_normalized(y);
            const double change = line_angle(y, v);
            v = y;
            if (change < opts.eigen_tol) {
                converged = true;
                break;
            }
        }
        if (!converged) dec.warnings.push_back("power iteration for mode " + std::to_string(k) + " hit the iteration cap");
        const double est = v.dot(b * v);
        const double shift = polish_shift(est, scale);
        v = inverse_iterate(m, shift, v, 4);
        Vec w = inverse_iterate(m.transpose(), shift, v, 4);
        const double wv = w.dot(v);
        const double alpha = std::abs(wv) > 1e-300 ? w.dot(m * v) / wv : v.dot(m * v);
        for (std::size_t j = 0; j < rights.size(); ++j) {
            if (line_angle(rights[j], v) < 1e-6) {
                dec.warnings.push_back("mode " + std::to_string(k) + " repeats mode " + std::to_string(j));
            }
        }
        dec.multipliers.push_back(alpha);
        dec.eigenvectors.push_back(v);
        rights.push_back(v);
        lefts.push_back(w);
    }

    // Independent estimate of the smallest multiplier: power iteration on M^{-1}.
    Eigen::PartialPivLU<Mat> lu(m);
    Vec v(n);
    for (auto& c : v) c = u(rng);
    double inv = 0.0;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        Vec y = lu.solve(v);
        if (!y.allFinite() || y.norm() == 0.0) break;
        inv = y.norm() / v.norm();
        y = sign_normalized(y);
        const double change = line_angle(y, v);
        v = y;
        if (change < opts.eigen_tol) break;
    }
    dec.smallest_cross_check = inv > 0.0 ? v.dot(m * v) : 0.0;

    fill_derived(dec, m);
    check_structure(dec, opts);
    return dec;
}

PeriodicFlags periodic_flags(const TridiagCoefficients& a, const FloquetOptions& opts) {
    const auto per = a.period();
    if (!per) throw InvalidInput(kModule, "periodic", "coefficients are not declared periodic");
    const double t_per = *per;
    const std::size_t n = a.n();
    const Tolerances tol = tight_tolerances();
    const double h = reorth_interval(a, 0.0, t_per);
    const std::vector<double> fwd = uniform_grid(0.0, t_per, h);
    const std::vector<double> bwd(fwd.rbegin(), fwd.rend());
    const auto max_periods = static_cast<std::size_t>(
        std::clamp(std::ceil(5000.0 / t_per), 20.0, static_cast<double>(std::max<std::size_t>(opts.max_iterations, 20))));

    PeriodicFlags out;
    auto iterate = [&](const std::vector<double>& grid, std::uint64_t seed, const char* label,
                       std::vector<double>& logs) {
        Mat q = generic_frame(n, n, seed);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t p = 1; p <= max_periods; ++p) {
            const FlagSweep s = flag_sweep(a, q, grid, tol, false);
            logs.assign(n, 0.0);
            for (const Mat& r : s.r)
                for (std::size_t j = 0; j < n; ++j) logs[j] += std::log(r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
            const double change = flag_distance(q, s.frames.back());
            q = s.frames.back();
            if (change < opts.eigen_tol) return q;
            if (p > 5 && change < 1e-8 && change > 0.7 * prev) {
                std::ostringstream msg;
                msg << label << " flag stalled at direction change " << change;
                out.warnings.push_back(msg.str());
                return q;
            }
            prev = change;
        }
        std::ostringstream msg;
        msg << label << " flag did not converge in " << max_periods << " periods (last change " << prev << ")";
        throw NumericalFailure(kModule, "flag-convergence", msg.str());
    };
    out.forward = iterate(fwd, opts.seed, "forward", out.forward_logs);
    out.backward = iterate(bwd, opts.seed ^ 0x9e3779b97f4a7c15ull, "backward", out.backward_logs);
    return out;
}

FloquetDecomposition floquet_decompose_flow(const TridiagCoefficients& a, const FloquetOptions& opts) {
    const PeriodicFlags flags = periodic_flags(a, opts);
    const std::size_t n = a.n();
    const auto ni = static_cast<Eigen::Index>(n);

    FloquetDecomposition dec;
    dec.period = *a.period();
    dec.method = "periodic-qr-flag";
    dec.warnings = flags.warnings;
    for (std::size_t m = 0; m < n; ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        const LineIntersection x = intersect_spans(flags.forward.leftCols(mi + 1), flags.backward.leftCols(ni - mi));
        if (!(x.second_angle > 10.0 * x.smallest_angle)) {
            std::ostringstream msg;
            msg << "flags for mode " << m << " meet in more than a line (angles " << x.smallest_angle
                << ", " << x.second_angle << ")";
            flag_structure(dec, opts, "intersection", msg.str());
        }
        dec.eigenvectors.push_back(x.direction);
        dec.multipliers.push_back(std::exp(flags.forward_logs[m]));
    }
    dec.smallest_cross_check = std::exp(-flags.backward_logs[0]);
    fill_derived(dec, monodromy(a, tight_tolerances()));
    check_structure(dec, opts);
    return dec;
}

FloquetSolution floquet_solution_periodic(const FloquetDecomposition& dec, const TridiagCoefficients& a,
                                          int m, double t0, double t1, const Tolerances& tol) {
    const int n = static_cast<int>(dec.eigenvectors.size());
    if (m < 0 || m >= n) throw InvalidInput(kModule, "mode", "mode index out of range");
    if (!(t0 <= 0.0 && 0.0 <= t1 && t0 < t1)) throw InvalidInput(kModule, "horizon", "need t0 <= 0 <= t1");
    const Vec& v = dec.eigenvectors[static_cast<std::size_t>(m)];

    FloquetSolution out;
    Trajectory back = t0 < 0.0 ? integrate_linear(a, v, 0.0, t0, tol) : Trajectory{};
    Trajectory fwd = t1 > 0.0 ? integrate_linear(a, v, 0.0, t1, tol) : Trajectory{};
    out.trajectory = back.joined(fwd);
    out.profile = sigma_profile(out.trajectory);

    const auto& segs = out.profile.segments;
    if (segs.size() != 1 || segs.front().value != m || !out.profile.monotone() ||
        !out.profile.undefined_times.empty()) {
        std::ostringstream msg;
        msg << "Floquet solution " << m << " does not keep sigma == " << m << " (" << segs.size()
            << " segments, first value " << (segs.empty() ? -1 : segs.front().value) << ")";
        throw StructureFailure(kModule, "sigma-invariance", msg.str());
    }

    const double alpha = dec.multipliers[static_cast<std::size_t>(m)];
    const double tp = dec.period;
    for (long k = static_cast<long>(std::ceil(t0 / tp)); k <= static_cast<long>(std::floor(t1 / tp)); ++k) {
        const double gain = out.trajectory.at(static_cast<double>(k) * tp).norm() / std::pow(alpha, static_cast<double>(k));
        out.gain_deviation = std::max(out.gain_deviation, std::abs(gain - 1.0));
    }
    return out;
}

nlohmann::json to_json(const FloquetDecomposition& dec) {
    nlohmann::json j;
    j["period"] = dec.period;
    j["method"] = dec.method;
    j["multipliers"] = dec.multipliers;
    j["exponents"] = dec.exponents;
    auto vecs = nlohmann::json::array();
    for (const Vec& v : dec.eigenvectors) vecs.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["eigenvectors"] = vecs;
    j["sigma_labels"] = dec.sigma_labels;
    j["residuals"] = dec.residuals;
    j["monodromy_norm"] = dec.monodromy_norm;
    j["smallest_cross_check"] = dec.smallest_cross_check;
    j["warnings"] = dec.warnings;
    return j;
}

}  // namespace trifloq
