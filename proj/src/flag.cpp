#include "trifloq/flag.hpp"

#include "trifloq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace trifloq {

double reorth_interval(const TridiagCoefficients& a, double t0, double t1, double max_interval) {
    const double lo = std::min(t0, t1);
    const double hi = std::max(t0, t1);
    double norm = 0.0;
    constexpr int kSamples = 64;
    for (int j = 0; j <= kSamples; ++j) {
        const double t = lo + (hi - lo) * j / kSamples;
        const Mat m = a.matrix(t);
        norm = std::max(norm, m.cwiseAbs().rowwise().sum().maxCoeff());
    }
    if (norm <= 0.0) return max_interval;
    return std::min(max_interval, 1.0 / norm);
}

std::vector<double> uniform_grid(double t0, double t1, double h) {
    if (!(h > 0.0)) throw InvalidInput("floquet-bundles", "grid", "grid spacing must be positive");
    const double span = std::abs(t1 - t0);
    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(span / h - 1e-9)));
    std::vector<double> g(count + 1);
    for (std::size_t k = 0; k <= count; ++k) g[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(count);
    g.back() = t1;
    return g;
}

void qr_positive(const Mat& y, Mat& q, Mat& r) {
    Eigen::HouseholderQR<Mat> qr(y);
    const auto k = y.cols();
    q = qr.householderQ() * Mat::Identity(y.rows(), k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < k; ++j) {
        if (r(j, j) < 0.0) {
            q.col(j) = -q.col(j);
            r.row(j) = -r.row(j);
        }
    }
}

Mat generic_frame(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    return orthonormal_columns(m);
}

FlagSweep flag_sweep(const TridiagCoefficients& a, const Mat& q0, const std::vector<double>& grid,
                     const Tolerances& tol, bool keep_frames) {
    if (grid.size() < 2) throw InvalidInput("floquet-bundles", "grid", "sweep needs two grid points");
    FlagSweep s;
    s.times = grid;
    s.r.reserve(grid.size() - 1);
    Mat q = orthonormal_columns(q0);
    if (keep_frames) {
        s.frames.reserve(grid.size());
        s.frames.push_back(q);
    }
    Mat qn, r;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const Mat y = propagate_block(a, q, grid[k], grid[k + 1], tol);
        qr_positive(y, qn, r);
        s.r.push_back(r);
        q = qn;
        if (keep_frames) s.frames.push_back(q);
    }
    if (!keep_frames) s.frames.push_back(q);
    return s;
}

double flag_distance(const Mat& p, const Mat& q) {
    double d = 0.0;
    for (Eigen::Index m = 0; m < p.cols(); ++m) {
        d = std::max(d, subspace_distance(p.leftCols(m + 1), q.leftCols(m + 1)));
    }
    return d;
}

}  // namespace trifloq
