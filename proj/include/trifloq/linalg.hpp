#pragma once

#include <Eigen/Dense>

#include <vector>

namespace trifloq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Unit vector with a positive first nonzero coordinate.
Vec sign_normalized(const Vec& v);

/// Orthonormal basis of the column span (thin Householder Q). Column order
/// is preserved in the sense of Gram-Schmidt: the first k columns of the
/// result span the first k columns of the input.
Mat orthonormal_columns(const Mat& a);

/// Angle in [0, pi/2] between the lines spanned by a and b.
double line_angle(const Vec& a, const Vec& b);

/// Principal angles between span(a) and span(b), ascending. Small angles are
/// recovered from sines and large ones from cosines so both ends are accurate.
std::vector<double> principal_angles(const Mat& a, const Mat& b);

/// sin of the largest principal angle; zero iff the spans coincide.
double subspace_distance(const Mat& a, const Mat& b);

/// Unit direction of span(a) intersected with span(b), plus the two smallest
/// principal angles. Only meaningful when the intersection is one-dimensional.
struct LineIntersection {
    Vec direction;
    double smallest_angle = 0.0;
    double second_angle = 0.0;
};
LineIntersection intersect_spans(const Mat& a, const Mat& b);

/// Smallest singular value over largest; zero for a rank-deficient frame.
double inverse_condition(const Mat& a);

}  // namespace trifloq
