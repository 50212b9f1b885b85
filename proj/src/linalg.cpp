#include "trifloq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace trifloq {

Vec sign_normalized(const Vec& v) {
    Vec u = v / v.norm();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u[i] != 0.0) {
            if (u[i] < 0.0) u = -u;
            break;
        }
    }
    return u;
}

Mat orthonormal_columns(const Mat& a) {
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(a.rows(), a.cols());
    // Householder QR fixes the span of leading columns but not their signs.
    const Mat r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

double line_angle(const Vec& a, const Vec& b) {
    const Vec ua = a / a.norm();
    const Vec ub = b / b.norm();
    const double c = std::abs(ua.dot(ub));
    const double s = (ub - ua.dot(ub) * ua).norm();
    return std::atan2(s, c);
}

std::vector<double> principal_angles(const Mat& a, const Mat& b) {
    const Mat qa = orthonormal_columns(a);
    const Mat qb = orthonormal_columns(b);
    const Mat small = qa.cols() <= qb.cols() ? qa : qb;
    const Mat large = qa.cols() <= qb.cols() ? qb : qa;
    const Mat c = large.transpose() * small;
    Eigen::JacobiSVD<Mat> cos_svd(c);
    const Mat resid = small - large * c;
    Eigen::JacobiSVD<Mat> sin_svd(resid);

    const auto k = small.cols();
    std::vector<double> angles(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        // cosines come out descending (smallest angle first), sines
        // descending as well (largest angle first).
        const double cs = std::clamp(cos_svd.singularValues()[i], 0.0, 1.0);
        const double sn = std::clamp(sin_svd.singularValues()[k - 1 - i], 0.0, 1.0);
        angles[static_cast<std::size_t>(i)] =
            cs > std::numbers::sqrt2 / 2 ? std::asin(sn) : std::acos(cs);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

double subspace_distance(const Mat& a, const Mat& b) {
    if (a.cols() != b.cols()) return 1.0;
    const auto angles = principal_angles(a, b);
    return std::sin(angles.back());
}

LineIntersection intersect_spans(const Mat& a, const Mat& b) {
    const Mat qa = orthonormal_columns(a);
    const Mat qb = orthonormal_columns(b);
    Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec da = qa * svd.matrixU().col(0);
    Vec db = qb * svd.matrixV().col(0);
    if (da.dot(db) < 0.0) db = -db;

    LineIntersection out;
    out.direction = sign_normalized(da + db);
    const auto angles = principal_angles(qa, qb);
    out.smallest_angle = angles.front();
    out.second_angle = angles.size() > 1 ? angles[1] : std::numbers::pi / 2;
    return out;
}

double inverse_condition(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0.0;
    return s[s.size() - 1] / s[0];
}

}  // namespace trifloq
