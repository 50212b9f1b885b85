#include "trifloq/scenario.hpp"

#include "trifloq/bundles.hpp"
#include "trifloq/catalog.hpp"
#include "trifloq/errors.hpp"
#include "trifloq/periodic_floquet.hpp"
#include "trifloq/signchain.hpp"
#include "trifloq/skewflow.hpp"
#include "trifloq/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#ifndef TRIFLOQ_VERSION
#define TRIFLOQ_VERSION "unknown"
#endif

namespace trifloq {

namespace {

constexpr const char* kModule = "cli";
using json = nlohmann::json;

[[noreturn]] void reject(const std::string& path, const std::string& what) {
    throw InvalidInput(kModule, "schema", path + ": " + what);
}

// Object reader that remembers which keys were consumed.
class Block {
public:
    Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) reject(path_, "must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) reject(at(key), "must be a number");
        return v.get<double>();
    }

    double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0)) reject(at(key), "must be positive");
        return v;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) reject(at(key), "must be an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) reject(at(key), "must be a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback,
                       const std::vector<std::string>& choices = {}) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) reject(at(key), "must be a string");
        const auto s = v.get<std::string>();
        if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
            std::string all;
            for (const auto& c : choices) all += (all.empty() ? "" : ", ") + c;
            reject(at(key), "'" + s + "' is not one of " + all);
        }
        return s;
    }

    std::vector<double> numbers(const std::string& key) {
        if (!has(key)) return {};
        const json& v = j_.at(key);
        if (!v.is_array()) reject(at(key), "must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) reject(at(key), "must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) reject(at(it.key()), "unknown key");
    }

    std::string at(const std::string& key) const { return path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Keys each analysis accepts besides "kind".
const std::map<std::string, std::vector<std::string>>& analysis_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"sigma-profile", {"x0", "y0"}},
        {"periodic-floquet", {"structure_checks"}},
        {"bundles", {}},
        {"separation", {}},
        {"spectrum", {"lambdas"}},
        {"omega", {"x0"}},
        {"hyperbolicity", {"x0", "orbit", "shift"}},
        {"cover", {"x0", "probes", "probe_thetas", "check_hyperbolicity"}},
    };
    return keys;
}

json trig_schema() {
    return {{"oneOf",
             {{{"type", "number"}},
              {{"type", "object"},
               {"additionalProperties", false},
               {"properties",
                {{"c", {{"type", "number"}}},
                 {"cos", {{"type", "array"}, {"items", {{"type", "number"}}}}},
                 {"sin", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}}}}};
}

json number_array() { return {{"type", "array"}, {"items", {{"type", "number"}}}}; }

std::string join_keys(const std::vector<std::string>& k) {
    std::string s;
    for (const auto& x : k) s += (s.empty() ? "" : ", ") + x;
    return s;
}

TrigPolynomial parse_trig(const json& v, const std::string& path, bool& varying) {
    if (v.is_number()) return TrigPolynomial{v.get<double>(), {}, {}};
    Block b(v, path);
    TrigPolynomial p;
    p.constant = b.number("c", 0.0);
    p.cos = b.numbers("cos");
    p.sin = b.numbers("sin");
    b.finish();
    if (!p.cos.empty() || !p.sin.empty()) varying = true;
    return p;
}

struct Bands3 {
    std::vector<TrigPolynomial> diag, upper, lower;
    bool varying = false;
};

Bands3 parse_bands(const json& j) {
    Block b(j, "system.bands");
    Bands3 out;
    auto read = [&](const std::string& key, std::vector<TrigPolynomial>& dst) {
        if (!b.has(key)) reject(b.at(key), "required");
        const json& arr = b.raw(key);
        if (!arr.is_array()) reject(b.at(key), "must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            dst.push_back(parse_trig(arr[i], b.at(key) + "[" + std::to_string(i) + "]", out.varying));
    };
    read("diag", out.diag);
    read("upper", out.upper);
    read("lower", out.lower);
    b.finish();
    if (out.diag.size() < 2) reject("system.bands.diag", "need at least two entries");
    if (out.upper.size() + 1 != out.diag.size() || out.lower.size() + 1 != out.diag.size()) {
        reject("system.bands", "upper and lower need one entry fewer than diag");
    }
    return out;
}

double default_horizon(const std::string& kind) {
    if (kind == "sigma-profile") return 50.0;
    if (kind == "bundles") return 10.0;
    if (kind == "separation") return 100.0;
    if (kind == "spectrum") return 500.0;
    if (kind == "hyperbolicity") return 400.0;
    if (kind == "cover") return 800.0;
    return 400.0;
}

double default_sample_dt(const std::string& kind) { return kind == "cover" ? 0.005 : 0.05; }

json numeric_json(const Scenario::Numeric& n) {
    return {{"rel_tol", n.rel_tol},         {"abs_tol", n.abs_tol},         {"horizon", n.horizon},
            {"windows", n.windows},         {"max_step", n.max_step},       {"transient", n.transient},
            {"sample_dt", n.sample_dt},     {"eigen_tol", n.eigen_tol},     {"cluster_tol", n.cluster_tol},
            {"r_fiber", n.r_fiber},         {"fiber_min", n.fiber_min},     {"samples", n.samples},
            {"resolution", n.resolution}};
}

// ---- systems ---------------------------------------------------------------

struct LinearSystem {
    TridiagCoefficients original;
    TridiagCoefficients normal;  // cooperative normal form
    SignPattern pattern;
    std::string id;
};

struct NonlinearSystem {
    QuasiPeriodicField field;
    std::optional<ForcedLinear> forced;
    TorusBasePoint base;
    SignPattern pattern;
};

bool is_nonlinear(const Scenario& s) {
    return !s.system.fixture.empty() && catalog_entry(s.system.fixture).kind == FixtureKind::Nonlinear;
}

std::vector<int> plus_ones(std::size_t n) { return std::vector<int>(n - 1, 1); }

LinearSystem build_linear(const Scenario& s) {
    const auto& sys = s.system;
    const auto& base = s.base;
    std::optional<TridiagCoefficients> a;
    std::string id;
    if (!sys.fixture.empty()) {
        id = sys.fixture;
        if (id == "quasi-periodic-linear") {
            if (base.kind != "quasi-periodic") reject("base.kind", "fixture '" + id + "' needs a quasi-periodic base");
        } else if (base.kind == "quasi-periodic") {
            reject("base.kind", "fixture '" + id + "' is constant; use constant or periodic");
        }
        a = catalog_coefficients(id, base.kind == "periodic" ? base.period : 0.0);
        if (!sys.deltas.empty()) a = apply_sign_pattern(*a, cooperativize(sys.deltas));
    } else {
        id = "bands";
        const Bands3 b = parse_bands(sys.bands);
        const std::size_t n = b.diag.size();
        std::vector<int> deltas = sys.deltas.empty() ? plus_ones(n) : sys.deltas;
        if (deltas.size() != n - 1) reject("system.deltas", "need n-1 entries");
        if (b.varying && base.kind != "quasi-periodic") {
            reject("system.bands", "trigonometric entries need a quasi-periodic base");
        }
        if (base.kind == "quasi-periodic") {
            std::vector<double> omega = base.omega.empty() ? default_frequencies() : base.omega;
            std::vector<double> theta0 = base.theta0.empty() ? std::vector<double>(omega.size(), 0.0) : base.theta0;
            if (theta0.size() != omega.size()) reject("base.theta0", "length must match omega");
            double bound = 0.0;
            auto sampler = [omega, theta0](std::vector<TrigPolynomial> polys) -> BandSampler {
                return [omega, theta0, polys](double t) {
                    const auto th = torus_advance(theta0, omega, t);
                    Vec v(static_cast<Eigen::Index>(polys.size()));
                    for (std::size_t i = 0; i < polys.size(); ++i) v[static_cast<Eigen::Index>(i)] = polys[i](th);
                    return v;
                };
            };
            for (const auto* band : {&b.diag, &b.upper, &b.lower})
                for (const auto& p : *band) bound = std::max(bound, p.sup_bound());
            a = TridiagCoefficients(n, sampler(b.diag), sampler(b.upper), sampler(b.lower), sys.eps0,
                                    QuasiPeriodic{omega}, bound, deltas);
        } else {
            Mat m = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                m(ii, ii) = b.diag[i].constant;
                if (i + 1 < n) {
                    m(ii, ii + 1) = b.upper[i].constant;
                    m(ii + 1, ii) = b.lower[i].constant;
                }
            }
            a = TridiagCoefficients::constant(m, sys.eps0, deltas);
            if (base.kind == "periodic") a = a->with_modulus(Periodic{base.period});
        }
    }
    if (sys.dimension && *sys.dimension != a->n()) reject("system.dimension", "does not match the system");
    LinearSystem out{*a, *a, cooperativize(a->deltas()), id};
    out.normal = transform_coefficients(*a, out.pattern);
    return out;
}

NonlinearSystem build_nonlinear(const Scenario& s) {
    const std::string& id = s.system.fixture;
    if (s.base.kind != "quasi-periodic") reject("base.kind", "nonlinear fixtures run over a quasi-periodic base");
    if (!s.base.omega.empty()) reject("base.omega", "fixture frequencies are fixed");
    NonlinearSystem out{catalog_field(id), catalog_forced(id), {}, {}};
    if (!s.system.deltas.empty() && s.system.deltas != out.field.deltas && !(out.field.deltas.empty() && s.system.deltas == plus_ones(out.field.n))) {
        reject("system.deltas", "nonlinear fixtures carry their own sign pattern");
    }
    if (s.system.dimension && *s.system.dimension != out.field.n) reject("system.dimension", "does not match the fixture");
    std::vector<double> theta0 = s.base.theta0.empty() ? std::vector<double>(out.field.omega.size(), 0.0) : s.base.theta0;
    if (theta0.size() != out.field.omega.size()) reject("base.theta0", "length must match the fixture's torus");
    out.base = TorusBasePoint(theta0, out.field.omega);
    out.pattern = cooperativize(out.field.deltas.empty() ? plus_ones(out.field.n) : out.field.deltas);
    if (s.analysis.shift != 0.0) {
        out.field = out.field.shifted_by(s.analysis.shift);
        if (out.forced) out.forced->a += s.analysis.shift * Mat::Identity(out.forced->a.rows(), out.forced->a.cols());
    }
    return out;
}

Vec vector_or_random(const std::vector<double>& given, std::size_t n, std::mt19937_64& rng, const std::string& path) {
    if (!given.empty()) {
        if (given.size() != n) reject(path, "length must be " + std::to_string(n));
        return Eigen::Map<const Vec>(given.data(), static_cast<Eigen::Index>(given.size()));
    }
    std::normal_distribution<double> g;
    Vec v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = g(rng);
    return v;
}

Vec mu_vec(const SignPattern& p) {
    Vec m(static_cast<Eigen::Index>(p.mus.size()));
    for (std::size_t i = 0; i < p.mus.size(); ++i) m[static_cast<Eigen::Index>(i)] = p.mus[i];
    return m;
}

// ---- tables ----------------------------------------------------------------

struct Table {
    std::string suffix;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::string render() const {
        std::string out;
        for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + csv_field(header[c]);
        out += "\r\n";
        for (const auto& r : rows) {
            for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + csv_number(r[c]);
            out += "\r\n";
        }
        return out;
    }
};

struct Outcome {
    json result;
    std::vector<Table> tables;
    std::vector<std::string> failed_checks;
    std::vector<std::string> warnings;
};

json profile_json(const SigmaProfile& p) {
    auto segs = json::array();
    for (const auto& s : p.segments) segs.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"sigma", s.value}});
    return {{"segments", segs}, {"drop_times", p.drop_times}, {"undefined_times", p.undefined_times},
            {"violations", p.violations}, {"monotone", p.monotone()}};
}

Table cumulative_table(const FrameSeries& s, const std::string& suffix, const std::string& prefix) {
    Table t{suffix, {"t"}, {}};
    const auto n = static_cast<Eigen::Index>(s.dimension());
    for (Eigen::Index m = 0; m < n; ++m) t.header.push_back(prefix + std::to_string(m));
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        std::vector<double> row{s.times[k]};
        for (Eigen::Index m = 0; m < n; ++m) row.push_back(s.cumulative(static_cast<Eigen::Index>(k), m));
        t.rows.push_back(row);
    }
    return t;
}

BundleOptions bundle_options(std::uint64_t seed) {
    BundleOptions bo;
    bo.seed = seed;
    return bo;
}

Tolerances tolerances(const Scenario& s) { return Tolerances{s.numeric.rel_tol, s.numeric.abs_tol}; }

// ---- analyses --------------------------------------------------------------

Outcome run_sigma_profile_linear(const Scenario& s, const LinearSystem& sys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Vec x0 = vector_or_random(s.analysis.x0, sys.normal.n(), rng, "analysis.x0");
    const Vec x0n = mu_vec(sys.pattern).cwiseProduct(x0);
    const Trajectory traj = integrate_linear(sys.normal, x0n, 0.0, s.numeric.horizon, tolerances(s));
    const SigmaProfile p = sigma_profile(traj);
    Outcome o;
    o.result = {{"x0", std::vector<double>(x0.data(), x0.data() + x0.size())}, {"profile", profile_json(p)},
                {"coordinates", "cooperative normal form"}};
    if (!p.monotone()) o.failed_checks.push_back("signchain/sigma-monotone");
    Table t{"sigma", {"t_start", "t_end", "sigma"}, {}};
    for (const auto& seg : p.segments) t.rows.push_back({seg.t_start, seg.t_end, static_cast<double>(seg.value)});
    o.tables.push_back(t);
    return o;
}

Outcome run_sigma_profile_nonlinear(const Scenario& s, const NonlinearSystem& sys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = sys.field.n;
    const Vec x0 = vector_or_random(s.analysis.x0, n, rng, "analysis.x0");
    const Vec y0 = vector_or_random(s.analysis.y0, n, rng, "analysis.y0");
    const TridiagonalField g = sys.field.frozen(sys.base.theta());
    const auto ni = static_cast<Eigen::Index>(n);
    const Rhs pair = [&](double t, const Vec& z, Vec& dz) {
        Vec a, b;
        g.eval(t, z.head(ni), a);
        g.eval(t, z.tail(ni), b);
        dz.resize(2 * ni);
        dz << a, b;
    };
    Vec z0(2 * ni);
    z0 << x0, y0;
    const Trajectory both = integrate(pair, z0, 0.0, s.numeric.horizon, tolerances(s), "pair");
    Mat diff(ni, 2 * ni);
    const Mat mu = mu_vec(sys.pattern).asDiagonal();
    diff << mu, -mu;
    const SigmaProfile p = sigma_profile(both.mapped(diff, "difference"));
    Outcome o;
    o.result = {{"x0", std::vector<double>(x0.data(), x0.data() + x0.size())},
                {"y0", std::vector<double>(y0.data(), y0.data() + y0.size())},
                {"profile", profile_json(p)},
                {"coordinates", "difference of two orbits, cooperative normal form"}};
    if (!p.monotone()) o.failed_checks.push_back("signchain/sigma-monotone");
    return o;
}

Outcome run_periodic_floquet(const Scenario& s, const LinearSystem& sys, std::uint64_t seed) {
    if (!sys.normal.period()) reject("base.kind", "periodic-floquet needs a periodic base");
    FloquetOptions fo;
    fo.eigen_tol = s.numeric.eigen_tol;
    fo.structure_checks = s.analysis.structure_checks;
    fo.seed = seed;
    const FloquetDecomposition dec = floquet_decompose_flow(sys.normal, fo);
    const double period = *sys.normal.period();
    double log_product = 0.0;
    for (double m : dec.multipliers) log_product += std::log(m);
    const double liouville = liouville_log_det(sys.normal, 0.0, period);
    Outcome o;
    o.result = to_json(dec);
    o.result["log_product"] = log_product;
    o.result["liouville_log_det"] = liouville;
    o.warnings = dec.warnings;
    if (std::abs(log_product - liouville) > 1e-6 * std::max(1.0, std::abs(liouville))) {
        o.failed_checks.push_back("periodic-floquet/liouville");
    }
    Table t{"multipliers", {"m", "multiplier", "exponent", "sigma", "residual"}, {}};
    for (std::size_t m = 0; m < dec.multipliers.size(); ++m) {
        t.rows.push_back({static_cast<double>(m), dec.multipliers[m], dec.exponents[m],
                          static_cast<double>(dec.sigma_labels[m]), dec.residuals[m]});
    }
    o.tables.push_back(t);
    return o;
}

Outcome run_bundles(const Scenario& s, const LinearSystem& sys, std::uint64_t seed) {
    const BundleOptions bo = bundle_options(seed);
    const double h = s.numeric.horizon / 2.0;
    const FrameSeries series = frame_series(sys.normal, -h, h, s.numeric.max_step, bo);
    const SigmaAlongSeries along = verify_sigma_along(sys.normal, series, bo);
    const BundleFrame frame = floquet_bundle_pushforward(sys.normal, 0.0, bo);
    Outcome o;
    auto dims = json::array();
    const int n = static_cast<int>(sys.normal.n());
    for (int l = 0; l < n; ++l) {
        const DimensionReport d = dimension_check(frame, 0, l, s.numeric.samples, seed + static_cast<std::uint64_t>(l), bo);
        dims.push_back({{"l", d.l}, {"m", d.m}, {"rank", d.rank}, {"smallest_singular", d.smallest_singular},
                        {"checked", d.checked}, {"violations", d.violations}, {"ok", d.ok()}});
        if (!d.ok()) o.failed_checks.push_back("floquet-bundles/dimension");
    }
    o.result = {{"frame_at_0", to_json(frame)},
                {"series",
                 {{"t_begin", -h}, {"t_end", h}, {"steps", series.times.size()}, {"warmup", series.warmup},
                  {"transport_defect", series.transport_defect}, {"min_angle_ratio", series.min_angle_ratio},
                  {"max_condition", series.max_condition}}},
                {"sigma_along", {{"checked_steps", along.checked_steps}, {"failures", along.failures}}},
                {"dimension", dims}};
    if (along.failures > 0) o.failed_checks.push_back("floquet-bundles/sigma-along");
    if (series.transport_defect > 1e-6) o.failed_checks.push_back("floquet-bundles/transport");
    o.tables.push_back(cumulative_table(series, "gains", "L_"));
    return o;
}

Outcome run_separation(const Scenario& s, const LinearSystem& sys, std::uint64_t seed) {
    const FrameSeries series = frame_series(sys.normal, 0.0, s.numeric.horizon, s.numeric.max_step, bundle_options(seed));
    Outcome o;
    auto pairs = json::array();
    const int n = static_cast<int>(sys.normal.n());
    Table t{"ratios", {"t"}, {}};
    for (int m = 0; m + 1 < n; ++m) {
        const SeparationReport r = fit_separation(series, m);
        pairs.push_back(to_json(r));
        if (r.structure_failure) o.failed_checks.push_back("spectrum/separation-" + std::to_string(m));
        t.header.push_back("r_" + std::to_string(m));
    }
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        std::vector<double> row{series.times[k]};
        const auto ki = static_cast<Eigen::Index>(k);
        for (int m = 0; m + 1 < n; ++m) row.push_back(series.cumulative(ki, m + 1) - series.cumulative(ki, m));
        t.rows.push_back(row);
    }
    o.result = {{"pairs", pairs}, {"horizon", s.numeric.horizon}};
    o.tables.push_back(t);
    return o;
}

Outcome run_spectrum(const Scenario& s, const LinearSystem& sys, std::uint64_t seed) {
    const FrameSeries series = frame_series(sys.normal, 0.0, s.numeric.horizon, s.numeric.max_step, bundle_options(seed));
    const SpectrumEstimate est = sacker_sell_estimate(series, s.numeric.windows);
    std::vector<double> lambdas = s.analysis.lambdas;
    if (lambdas.empty()) {
        const auto& iv = est.intervals;
        lambdas.push_back(iv.front().b + 1.0);
        for (std::size_t i = 0; i + 1 < iv.size(); ++i) lambdas.push_back(0.5 * (iv[i].a + iv[i + 1].b));
        lambdas.push_back(iv.back().a - 1.0);
    }
    Outcome o;
    auto probes = json::array();
    const std::size_t mid = series.times.size() / 2;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double lambda = lambdas[i];
        json entry{{"lambda", lambda}};
        try {
            const DichotomyProjector p = dichotomy_projector(series, est, mid, lambda);
            const SigmaBoundsReport sb = sigma_bounds_check(p, s.numeric.samples, seed + i);
            entry["dichotomy"] = true;
            entry["projector"] = to_json(p);
            entry["sigma_bounds"] = to_json(sb);
            if (!sb.ok()) o.failed_checks.push_back("spectrum/sigma-bounds");
        } catch (const NoDichotomy& e) {
            entry["dichotomy"] = false;
            entry["reason"] = e.what();
        }
        const EdProbe probe = ed_probe(series, lambda, 0.0);
        entry["ed_probe"] = {{"dichotomy", probe.dichotomy}, {"unstable_dim", probe.unstable_dim}, {"distance", probe.distance}};
        probes.push_back(entry);
    }
    o.result = {{"spectrum", to_json(est)}, {"probes", probes}};
    const Mat table = rate_table(sys.normal, series);
    Table t{"rates", {"t"}, {}};
    for (std::size_t m = 0; m < sys.normal.n(); ++m) t.header.push_back("lambda_" + std::to_string(m));
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(table.cols()));
        for (Eigen::Index c = 0; c < table.cols(); ++c) row[static_cast<std::size_t>(c)] = table(r, c);
        t.rows.push_back(row);
    }
    o.tables.push_back(t);
    return o;
}

OmegaOptions omega_options(const Scenario& s) {
    OmegaOptions oo;
    oo.transient = s.numeric.transient;
    oo.horizon = s.numeric.horizon;
    oo.sample_dt = s.numeric.sample_dt;
    oo.tol = Tolerances{std::min(s.numeric.rel_tol, 1e-10), std::min(s.numeric.abs_tol, 1e-12)};
    oo.index_cell = s.numeric.r_fiber;
    return oo;
}

Table omega_table(const OmegaSetApproximation& set) {
    Table t{"omega", {}, {}};
    for (std::size_t j = 0; j < set.base.dimension(); ++j) t.header.push_back("theta_" + std::to_string(j));
    for (Eigen::Index i = 0; i < (set.x.empty() ? 0 : set.x.front().size()); ++i) t.header.push_back("x_" + std::to_string(i));
    for (std::size_t k = 0; k < set.x.size(); ++k) {
        std::vector<double> row(set.theta[k]);
        row.insert(row.end(), set.x[k].data(), set.x[k].data() + set.x[k].size());
        t.rows.push_back(row);
    }
    return t;
}

Outcome run_omega(const Scenario& s, const NonlinearSystem& sys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Vec x0 = vector_or_random(s.analysis.x0, sys.field.n, rng, "analysis.x0");
    const OmegaSetApproximation set = omega_limit(sys.field, x0, sys.base, omega_options(s));
    Outcome o;
    o.result = {{"set", to_json(set)}, {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())}};
    if (set.invariance_residual > 10.0 * std::max(omega_options(s).tol.rel, omega_options(s).tol.abs) * std::max(1.0, set.diameter)) {
        o.warnings.push_back("invariance residual exceeds 10x the integration tolerance");
    }
    o.tables.push_back(omega_table(set));
    return o;
}

OmegaSetApproximation hyperbolicity_set(const Scenario& s, const NonlinearSystem& sys, std::mt19937_64& rng, json& meta) {
    if (s.analysis.orbit == "bounded-solution") {
        if (!sys.forced) reject("analysis.orbit", "bounded-solution needs a forced linear fixture");
        const double total = s.numeric.transient + s.numeric.horizon;
        const BoundedSolution b = bounded_solution_linear(sys.forced->a, sys.forced->forcing, sys.base, 0.0, total);
        meta["bounded_solution_residual"] = b.residual;
        OmegaOptions oo = omega_options(s);
        oo.sample_dt = std::max(oo.sample_dt, 0.01);
        return set_from_orbit(sys.field, b.orbit, b.base, s.numeric.transient, oo);
    }
    const Vec x0 = vector_or_random(s.analysis.x0, sys.field.n, rng, "analysis.x0");
    meta["x0"] = std::vector<double>(x0.data(), x0.data() + x0.size());
    return omega_limit(sys.field, x0, sys.base, omega_options(s));
}

HyperbolicityOptions hyperbolicity_options(const Scenario& s, std::uint64_t seed) {
    HyperbolicityOptions ho;
    ho.windows = s.numeric.windows;
    ho.max_step = s.numeric.max_step;
    ho.resolution = s.numeric.resolution;
    ho.sigma_samples = s.numeric.samples;
    ho.seed = seed;
    return ho;
}

Outcome run_hyperbolicity(const Scenario& s, const NonlinearSystem& sys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Outcome o;
    json meta;
    const OmegaSetApproximation set = hyperbolicity_set(s, sys, rng, meta);
    const HyperbolicityReport rep = hyperbolicity_check(sys.field, set, hyperbolicity_options(s, seed));
    o.result = to_json(rep);
    o.result["set"] = to_json(set);
    o.result["orbit"] = s.analysis.orbit;
    for (auto it = meta.begin(); it != meta.end(); ++it) o.result[it.key()] = it.value();
    if (rep.sigma_bounds && !rep.sigma_bounds->ok()) o.failed_checks.push_back("skewflow/sigma-bounds");
    return o;
}

Outcome run_cover(const Scenario& s, const NonlinearSystem& sys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Vec x0 = vector_or_random(s.analysis.x0, sys.field.n, rng, "analysis.x0");
    const OmegaSetApproximation set = omega_limit(sys.field, x0, sys.base, omega_options(s));
    std::vector<std::vector<double>> probes = s.analysis.probe_thetas;
    if (probes.empty()) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int p = 0; p < s.analysis.probes; ++p) {
            std::vector<double> th(set.base.dimension());
            for (auto& v : th) v = u(rng);
            probes.push_back(th);
        }
    }
    FiberOptions fo;
    fo.cluster_tol = s.numeric.cluster_tol;
    fo.r_fiber = s.numeric.r_fiber;
    fo.fiber_min = s.numeric.fiber_min;
    Outcome o;
    auto fibers = json::array();
    int max_count = 0;
    Table t{"fibers", {}, {}};
    for (std::size_t j = 0; j < set.base.dimension(); ++j) t.header.push_back("theta_" + std::to_string(j));
    t.header.insert(t.header.end(), {"count", "fiber_points", "max_diameter"});
    for (const auto& th : probes) {
        if (th.size() != set.base.dimension()) reject("analysis.probe_thetas", "probe dimension must match the torus");
        const CoverReport c = cover_cardinality(set, th, fo);
        std::vector<double> row(th);
        row.push_back(c.count);
        row.push_back(static_cast<double>(c.fiber_points));
        row.push_back(c.diameters.empty() ? 0.0 : *std::max_element(c.diameters.begin(), c.diameters.end()));
        t.rows.push_back(row);
        json e = to_json(c);
        e["theta"] = th;
        fibers.push_back(e);
        max_count = std::max(max_count, c.count);
        for (const auto& w : c.warnings) o.warnings.push_back(w);
    }
    o.result = {{"set", to_json(set)}, {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())}, {"fibers", fibers},
                {"max_count", max_count}};
    if (s.analysis.check_hyperbolicity) {
        const HyperbolicityReport rep = hyperbolicity_check(sys.field, set, hyperbolicity_options(s, seed));
        o.result["hyperbolicity"] = to_json(rep);
        if (rep.verdict == Verdict::Hyperbolic && max_count != 1) o.failed_checks.push_back("skewflow/one-cover");
    }
    o.tables.push_back(t);
    return o;
}

json system_json(const Scenario& s, std::size_t n, const SignPattern& p, const std::string& modulus) {
    return {{"id", s.system.fixture.empty() ? std::string("bands") : s.system.fixture},
            {"n", n},
            {"deltas", p.deltas},
            {"mu", p.mus},
            {"modulus", modulus}};
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

const json& scenario_schema() {
    static const json schema = [] {
        json analysis_props{{"kind", {{"enum", kAnalysisKinds}}},
                            {"x0", number_array()},
                            {"y0", number_array()},
                            {"lambdas", number_array()},
                            {"orbit", {{"enum", {"omega", "bounded-solution"}}}},
                            {"shift", {{"type", "number"}}},
                            {"probes", {{"type", "integer"}, {"minimum", 1}}},
                            {"probe_thetas", {{"type", "array"}, {"items", number_array()}}},
                            {"structure_checks", {{"type", "boolean"}}},
                            {"check_hyperbolicity", {{"type", "boolean"}}}};
        json per_kind = json::object();
        for (const auto& [kind, keys] : analysis_keys()) per_kind[kind] = keys;
        std::vector<std::string> fixtures;
        for (const auto& e : catalog()) fixtures.push_back(e.id);
        return json{
            {"$schema", "https://json-schema.org/draft/2020-12/schema"},
            {"title", "trifloq scenario"},
            {"type", "object"},
            {"additionalProperties", false},
            {"required", {"system", "base", "analysis"}},
            {"properties",
             {{"system",
               {{"type", "object"},
                {"additionalProperties", false},
                {"description", "exactly one of fixture or bands"},
                {"properties",
                 {{"fixture", {{"enum", fixtures}}},
                  {"bands",
                   {{"type", "object"},
                    {"additionalProperties", false},
                    {"required", {"diag", "upper", "lower"}},
                    {"properties",
                     {{"diag", {{"type", "array"}, {"items", trig_schema()}}},
                      {"upper", {{"type", "array"}, {"items", trig_schema()}}},
                      {"lower", {{"type", "array"}, {"items", trig_schema()}}}}}}},
                  {"dimension", {{"type", "integer"}, {"minimum", 2}}},
                  {"deltas", {{"type", "array"}, {"items", {{"enum", {-1, 1}}}}}},
                  {"eps0", {{"type", "number"}, {"exclusiveMinimum", 0}}}}}}},
              {"base",
               {{"type", "object"},
                {"additionalProperties", false},
                {"required", {"kind"}},
                {"properties",
                 {{"kind", {{"enum", {"constant", "periodic", "quasi-periodic"}}}},
                  {"period", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"omega", number_array()},
                  {"theta0", number_array()}}}}},
              {"analysis",
               {{"type", "object"},
                {"additionalProperties", false},
                {"required", {"kind"}},
                {"properties", analysis_props},
                {"x-keys-per-kind", per_kind}}},
              {"numeric",
               {{"type", "object"},
                {"additionalProperties", false},
                {"properties",
                 {{"rel_tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"abs_tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"horizon", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"windows", number_array()},
                  {"seed", {{"type", "integer"}, {"minimum", 0}}},
                  {"max_step", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"transient", {{"type", "number"}, {"minimum", 0}}},
                  {"sample_dt", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"eigen_tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"cluster_tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"r_fiber", {{"type", "number"}, {"exclusiveMinimum", 0}}},
                  {"fiber_min", {{"type", "integer"}, {"minimum", 1}}},
                  {"samples", {{"type", "integer"}, {"minimum", 1}}},
                  {"resolution", {{"type", "number"}, {"minimum", 0}}}}}}},
              {"output",
               {{"type", "object"},
                {"additionalProperties", false},
                {"properties",
                 {{"directory", {{"type", "string"}}},
                  {"basename", {{"type", "string"}, {"pattern", "^[A-Za-z0-9._-]+$"}}},
                  {"formats", {{"type", "array"}, {"items", {{"enum", {"json", "csv"}}}}}}}}}}}}};
    }();
    return schema;
}

Scenario parse_scenario(const json& j) {
    Scenario s;
    s.raw = j;
    s.hash = "fnv1a64:" + hex64(fnv1a64(j.dump()));
    Block top(j, "scenario");

    if (!top.has("system")) reject("scenario.system", "required");
    {
        Block b(top.raw("system"), "system");
        s.system.fixture = b.string("fixture", "");
        if (b.has("bands")) s.system.bands = b.raw("bands");
        if (s.system.fixture.empty() == s.system.bands.is_null()) reject("system", "give exactly one of fixture or bands");
        if (!s.system.fixture.empty()) catalog_entry(s.system.fixture);
        if (b.has("dimension")) {
            const auto d = b.integer("dimension", 0);
            if (d < 2) reject("system.dimension", "must be at least 2");
            s.system.dimension = static_cast<std::size_t>(d);
        }
        if (b.has("deltas")) {
            for (double d : b.numbers("deltas")) {
                if (d != 1.0 && d != -1.0) reject("system.deltas", "entries must be +1 or -1");
                s.system.deltas.push_back(static_cast<int>(d));
            }
        }
        if (b.has("eps0")) {
            if (!s.system.fixture.empty()) reject("system.eps0", "fixtures carry their own floor");
            s.system.eps0 = b.positive("eps0", 0.5);
        }
        b.finish();
    }

    if (!top.has("base")) reject("scenario.base", "required");
    {
        Block b(top.raw("base"), "base");
        if (!b.has("kind")) reject("base.kind", "required");
        s.base.kind = b.string("kind", "constant", {"constant", "periodic", "quasi-periodic"});
        if (s.base.kind == "periodic") {
            if (!b.has("period")) reject("base.period", "required for a periodic base");
            s.base.period = b.positive("period", 1.0);
        } else if (b.has("period")) {
            reject("base.period", "only for a periodic base");
        }
        if (s.base.kind == "quasi-periodic") {
            s.base.omega = b.numbers("omega");
            s.base.theta0 = b.numbers("theta0");
        } else if (b.has("omega") || b.has("theta0")) {
            reject("base", "omega and theta0 only apply to a quasi-periodic base");
        }
        b.finish();
    }

    if (!top.has("analysis")) reject("scenario.analysis", "required");
    {
        Block b(top.raw("analysis"), "analysis");
        if (!b.has("kind")) reject("analysis.kind", "required");
        s.analysis.kind = b.string("kind", "", kAnalysisKinds);
        const auto& allowed = analysis_keys().at(s.analysis.kind);
        auto ok = [&](const std::string& key) { return std::find(allowed.begin(), allowed.end(), key) != allowed.end(); };
        const json& raw = top.raw("analysis");
        for (auto it = raw.begin(); it != raw.end(); ++it) {
            if (it.key() != "kind" && !ok(it.key())) {
                reject("analysis." + it.key(), "unknown key for kind '" + s.analysis.kind + "' (allowed: " + join_keys(allowed) + ")");
            }
        }
        s.analysis.x0 = b.numbers("x0");
        s.analysis.y0 = b.numbers("y0");
        s.analysis.lambdas = b.numbers("lambdas");
        s.analysis.orbit = b.string("orbit", "omega", {"omega", "bounded-solution"});
        s.analysis.shift = b.number("shift", 0.0);
        const auto probes = b.integer("probes", 10);
        if (probes < 1) reject("analysis.probes", "must be at least 1");
        s.analysis.probes = static_cast<int>(probes);
        if (b.has("probe_thetas")) {
            const json& arr = b.raw("probe_thetas");
            if (!arr.is_array()) reject("analysis.probe_thetas", "must be an array of phase vectors");
            for (const auto& e : arr) {
                if (!e.is_array()) reject("analysis.probe_thetas", "must be an array of phase vectors");
                std::vector<double> th;
                for (const auto& v : e) {
                    if (!v.is_number()) reject("analysis.probe_thetas", "must be an array of phase vectors");
                    th.push_back(v.get<double>());
                }
                s.analysis.probe_thetas.push_back(th);
            }
        }
        s.analysis.structure_checks = b.boolean("structure_checks", true);
        s.analysis.check_hyperbolicity = b.boolean("check_hyperbolicity", false);
        b.finish();
    }

    if (top.has("numeric")) {
        Block b(top.raw("numeric"), "numeric");
        auto& n = s.numeric;
        n.rel_tol = b.positive("rel_tol", n.rel_tol);
        n.abs_tol = b.positive("abs_tol", n.abs_tol);
        n.horizon = b.has("horizon") ? b.positive("horizon", 1.0) : 0.0;
        if (b.has("windows")) {
            n.windows = b.numbers("windows");
            if (n.windows.empty()) reject("numeric.windows", "must not be empty");
            for (double w : n.windows)
                if (!(w > 0.0)) reject("numeric.windows", "entries must be positive");
        }
        const auto seed = b.integer("seed", 1);
        if (seed < 0) reject("numeric.seed", "must be nonnegative");
        n.seed = static_cast<std::uint64_t>(seed);
        n.max_step = b.positive("max_step", n.max_step);
        n.transient = b.number("transient", n.transient);
        if (n.transient < 0.0) reject("numeric.transient", "must be nonnegative");
        n.sample_dt = b.has("sample_dt") ? b.positive("sample_dt", 0.05) : 0.0;
        n.eigen_tol = b.positive("eigen_tol", n.eigen_tol);
        n.cluster_tol = b.positive("cluster_tol", n.cluster_tol);
        n.r_fiber = b.positive("r_fiber", n.r_fiber);
        const auto fmin = b.integer("fiber_min", n.fiber_min);
        if (fmin < 1) reject("numeric.fiber_min", "must be at least 1");
        n.fiber_min = static_cast<int>(fmin);
        const auto samples = b.integer("samples", n.samples);
        if (samples < 1) reject("numeric.samples", "must be at least 1");
        n.samples = static_cast<int>(samples);
        n.resolution = b.number("resolution", n.resolution);
        if (n.resolution < 0.0) reject("numeric.resolution", "must be nonnegative");
        b.finish();
    }
    if (s.numeric.horizon == 0.0) s.numeric.horizon = default_horizon(s.analysis.kind);
    if (s.numeric.sample_dt == 0.0) s.numeric.sample_dt = default_sample_dt(s.analysis.kind);

    if (top.has("output")) {
        Block b(top.raw("output"), "output");
        s.output.directory = b.string("directory", s.output.directory);
        s.output.basename = b.string("basename", s.output.basename);
        if (s.output.basename.empty() ||
            s.output.basename.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789._-") != std::string::npos) {
            reject("output.basename", "use letters, digits, '.', '_' or '-'");
        }
        if (b.has("formats")) {
            const json& arr = b.raw("formats");
            if (!arr.is_array()) reject("output.formats", "must be an array");
            s.output.formats.clear();
            for (const auto& f : arr) {
                if (!f.is_string() || (f != "json" && f != "csv")) reject("output.formats", "entries must be \"json\" or \"csv\"");
                s.output.formats.push_back(f.get<std::string>());
            }
        }
        b.finish();
    }
    top.finish();
    return s;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string csv_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput(kModule, "io", "cannot write " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InvalidInput(kModule, "io", "write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InvalidInput(kModule, "io", "cannot rename onto " + path.string());
    }
}

std::optional<std::uint64_t> seed_from_env() {
    const char* v = std::getenv("TRIFLOQ_SEED");
    if (v == nullptr) return std::nullopt;
    const std::string_view s(v);
    std::uint64_t seed = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw InvalidInput(kModule, "seed", "TRIFLOQ_SEED must be a nonnegative integer");
    }
    return seed;
}

RunResult run_scenario(const json& scenario, const RunOptions& opts) {
    const auto started = std::chrono::steady_clock::now();
    const std::string started_utc = utc_now();
    RunResult rr;
    Scenario s;
    try {
        s = parse_scenario(scenario);
    } catch (const Error& e) {
        rr.exit_code = kExitUsage;
        rr.message = e.what();
        return rr;
    }
    const std::uint64_t seed = opts.seed_override.value_or(s.numeric.seed);
    const std::filesystem::path dir = opts.output_dir.value_or(std::filesystem::path(s.output.directory));
    const std::string timing_name = s.output.basename + ".timing.json";

    json report{{"tool", "trifloq"},
                {"version", TRIFLOQ_VERSION},
                {"scenario_hash", s.hash},
                {"seed", seed},
                {"seed_source", opts.seed_override ? "TRIFLOQ_SEED" : "scenario"},
                {"analysis", s.analysis.kind},
                {"tolerances", numeric_json(s.numeric)},
                {"wall_clock", {{"sidecar", timing_name}}}};
    Outcome outcome;
    try {
        if (is_nonlinear(s)) {
            const NonlinearSystem sys = build_nonlinear(s);
            report["system"] = system_json(s, sys.field.n, sys.pattern, "quasi-periodic");
            const auto& k = s.analysis.kind;
            if (k == "sigma-profile") outcome = run_sigma_profile_nonlinear(s, sys, seed);
            else if (k == "omega") outcome = run_omega(s, sys, seed);
            else if (k == "hyperbolicity") outcome = run_hyperbolicity(s, sys, seed);
            else if (k == "cover") outcome = run_cover(s, sys, seed);
            else reject("analysis.kind", "'" + k + "' needs a linear system");
        } else {
            if (s.analysis.shift != 0.0) reject("analysis.shift", "only for nonlinear fixtures");
            const LinearSystem sys = build_linear(s);
            report["system"] = system_json(s, sys.normal.n(), sys.pattern, describe(sys.normal.modulus()));
            const auto& k = s.analysis.kind;
            if (k == "sigma-profile") outcome = run_sigma_profile_linear(s, sys, seed);
            else if (k == "periodic-floquet") outcome = run_periodic_floquet(s, sys, seed);
            else if (k == "bundles") outcome = run_bundles(s, sys, seed);
            else if (k == "separation") outcome = run_separation(s, sys, seed);
            else if (k == "spectrum") outcome = run_spectrum(s, sys, seed);
            else reject("analysis.kind", "'" + k + "' needs a nonlinear fixture");
        }
        report["status"] = outcome.failed_checks.empty() ? "ok" : "structure-failure";
        report["failed_checks"] = outcome.failed_checks;
        report["warnings"] = outcome.warnings;
        report["result"] = outcome.result;
        rr.exit_code = outcome.failed_checks.empty() ? kExitOk : kExitStructure;
        if (rr.exit_code == kExitStructure) rr.message = "structure check failed: " + join_keys(outcome.failed_checks);
    } catch (const StructureFailure& e) {
        report["status"] = "structure-failure";
        report["failed_checks"] = {e.module() + "/" + e.check()};
        report["error"] = {{"module", e.module()}, {"check", e.check()}, {"message", e.what()}};
        outcome.tables.clear();
        rr.exit_code = kExitStructure;
        rr.message = e.what();
    } catch (const Error& e) {
        rr.exit_code = kExitUsage;
        rr.message = e.what();
        return rr;
    }

    const bool want_json = std::find(s.output.formats.begin(), s.output.formats.end(), "json") != s.output.formats.end();
    const bool want_csv = std::find(s.output.formats.begin(), s.output.formats.end(), "csv") != s.output.formats.end();
    std::vector<std::string> names;
    if (want_json) names.push_back(s.output.basename + ".json");
    if (want_csv)
        for (const auto& t : outcome.tables) names.push_back(s.output.basename + "." + t.suffix + ".csv");
    names.push_back(timing_name);
    report["files"] = names;
    rr.report = report;
    if (!opts.write_files) return rr;

    try {
        std::filesystem::create_directories(dir);
        if (want_json) {
            write_atomic(dir / (s.output.basename + ".json"), report.dump(2) + "\n");
            rr.files.push_back(dir / (s.output.basename + ".json"));
        }
        if (want_csv) {
            for (const auto& t : outcome.tables) {
                const auto p = dir / (s.output.basename + "." + t.suffix + ".csv");
                write_atomic(p, t.render());
                rr.files.push_back(p);
            }
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const json timing{{"scenario_hash", s.hash}, {"started_utc", started_utc}, {"wall_clock_seconds", seconds}};
        write_atomic(dir / timing_name, timing.dump(2) + "\n");
        rr.files.push_back(dir / timing_name);
    } catch (const std::exception& e) {
        rr.exit_code = kExitUsage;
        rr.message = e.what();
    }
    return rr;
}

RunResult run_scenario_file(const std::filesystem::path& path, const RunOptions& opts) {
    RunResult rr;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        rr.exit_code = kExitUsage;
        rr.message = "cli/io: cannot read " + path.string();
        return rr;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) {
        rr.exit_code = kExitUsage;
        rr.message = "cli/parse: " + path.string() + " is not valid JSON";
        return rr;
    }
    return run_scenario(j, opts);
}

}  // namespace trifloq
