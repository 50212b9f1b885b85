#pragma once

// Reference computations used only by tests. They deliberately avoid the
// library's own code paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

/// exp(A) by scaling and squaring with a degree-18 Taylor polynomial.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
    const Eigen::MatrixXd b = a / std::ldexp(1.0, s);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 18; ++k) {
        term = term * b / k;
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

struct SymEig {
    std::vector<double> values;          // descending
    std::vector<Eigen::VectorXd> vectors;  // eigenvectors of A, unit, first coordinate > 0
};

/// Eigenpairs of a tridiagonal A with positive off-diagonal products through
/// the similar symmetric matrix D A D^{-1}.
inline SymEig tridiag_eig(const Eigen::MatrixXd& a) {
    const auto n = a.rows();
    Eigen::VectorXd d(n);
    d[0] = 1.0;
    for (Eigen::Index i = 1; i < n; ++i) d[i] = d[i - 1] * std::sqrt(a(i - 1, i) / a(i, i - 1));
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i, i) = a(i, i);
        if (i + 1 < n) s(i, i + 1) = s(i + 1, i) = std::sqrt(a(i, i + 1) * a(i + 1, i));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    SymEig out;
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        out.values.push_back(es.eigenvalues()[k]);
        Eigen::VectorXd v = es.eigenvectors().col(k).cwiseQuotient(d);
        v.normalize();
        if (v[0] < 0) v = -v;
        out.vectors.push_back(v);
    }
    return out;
}

/// Exact sign-change predicate on integer vectors; returns -1 outside the
/// domain where the count is continuous.
inline int sign_changes(const std::vector<long long>& x) {
    const std::size_t n = x.size();
    if (x.front() == 0 || x.back() == 0) return -1;
    int count = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (x[i] == 0) {
            const long long l = x[i - 1], r = x[i + 1];
            if (!((l < 0 && r > 0) || (l > 0 && r < 0))) return -1;
            ++count;
        } else if ((x[i] < 0) != (x[i + 1] < 0) && x[i + 1] != 0) {
            ++count;
        }
    }
    return count;
}

}  // namespace oracle
