#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "physcorrect/errors.hpp"

namespace physcorrect {

namespace detail {

inline lapack_int svd_into(Eigen::MatrixXd& work, Eigen::VectorXd& s, Eigen::MatrixXd& u, Eigen::MatrixXd& vt) {
    const auto m = static_cast<lapack_int>(work.rows());
    const auto n = static_cast<lapack_int>(work.cols());
    const lapack_int k = std::min(m, n);
    s.resize(k);
    u.resize(m, k);
    vt.resize(k, n);
    return LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m, s.data(), u.data(), m, vt.data(), k);
}

}  // namespace detail

/// Reconstructs a fixed 160x160 matrix from its dgesdd factors. Some
/// optimised BLAS builds select CPU kernels that return wrong factors without
/// reporting an error; this detects that.
inline bool lapack_svd_self_test() {
    const Eigen::Index n = 160;
    Eigen::MatrixXd a(n, n);
    std::uint64_t state = 0x2545F4914F6CDD1DULL;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            a(i, j) = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
        }
    Eigen::MatrixXd work = a, u, vt;
    Eigen::VectorXd s;
    if (detail::svd_into(work, s, u, vt) != 0) return false;
    return (u * s.asDiagonal() * vt - a).norm() <= 1e-10 * a.norm();
}

/// Cached result of lapack_svd_self_test for this process.
inline bool lapack_svd_verified() {
    static const bool ok = lapack_svd_self_test();
    return ok;
}

struct PseudoinverseResult {
    Eigen::MatrixXd pinv;
    Eigen::VectorXd singular_values;  // descending
    std::size_t truncated = 0;        // singular values treated as zero
};

/// Moore-Penrose pseudoinverse through a divide-and-conquer SVD (LAPACK dgesdd).
/// Singular values at or below rel_tol * sigma_max are treated as zero.
inline PseudoinverseResult pseudoinverse_dense_full(const Eigen::MatrixXd& a, double rel_tol = 1e-10) {
    if (!a.allFinite()) throw ContractError("pseudoinverse_dense: non-finite entries");
    const lapack_int m = static_cast<lapack_int>(a.rows());
    const lapack_int n = static_cast<lapack_int>(a.cols());
    const lapack_int k = std::min(m, n);
    if (k == 0) return {Eigen::MatrixXd::Zero(n, m), Eigen::VectorXd(), 0};

    if (!lapack_svd_verified())
        throw NumericalError("pseudoinverse_dense: the LAPACK SVD failed its reconstruction self-test; with OpenBLAS, "
                             "select a portable kernel (e.g. OPENBLAS_CORETYPE=Haswell)");
    Eigen::MatrixXd work = a, u, vt;
    Eigen::VectorXd s;
    const lapack_int info = detail::svd_into(work, s, u, vt);
    if (info != 0) {
        throw NumericalError("pseudoinverse_dense: dgesdd failed (info " + std::to_string(info) + ") on " +
                             std::to_string(m) + "x" + std::to_string(n) + " matrix, Frobenius norm " +
                             std::to_string(a.norm()));
    }
    const double cutoff = rel_tol * s(0);
    std::size_t truncated = 0;
    Eigen::VectorXd s_inv(k);
    for (lapack_int i = 0; i < k; ++i) {
        if (s(i) > cutoff) {
            s_inv(i) = 1.0 / s(i);
        } else {
            s_inv(i) = 0.0;
            ++truncated;
        }
    }
    // A+ = V S+ U^T
    Eigen::MatrixXd pinv = vt.transpose() * s_inv.asDiagonal() * u.transpose();
    return {std::move(pinv), std::move(s), truncated};
}

inline Eigen::MatrixXd pseudoinverse_dense(const Eigen::MatrixXd& a, double rel_tol = 1e-10) {
    return pseudoinverse_dense_full(a, rel_tol).pinv;
}

/// Relative defects of the four Moore-Penrose conditions, each normalised by
/// the norm of the quantity it should reproduce:
/// |A A+ A - A|/|A|, |A+ A A+ - A+|/|A+|, |(A A+)^T - A A+|/|A A+|, |(A+ A)^T - A+ A|/|A+ A|.
inline std::array<double, 4> moore_penrose_defects(const Eigen::MatrixXd& a, const Eigen::MatrixXd& pinv) {
    const Eigen::MatrixXd ap = a * pinv;
    const Eigen::MatrixXd pa = pinv * a;
    auto rel = [](double num, double den) { return den > 0.0 ? num / den : num; };
    return {rel((ap * a - a).norm(), a.norm()), rel((pa * pinv - pinv).norm(), pinv.norm()),
            rel((ap.transpose() - ap).norm(), ap.norm()), rel((pa.transpose() - pa).norm(), pa.norm())};
}

}  // namespace physcorrect
