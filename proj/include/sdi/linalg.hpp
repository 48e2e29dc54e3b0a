#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdi/core.hpp"

namespace sdi {

namespace detail {
inline double off_diag_norm(const Mat& s) {
    double acc = 0.0;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j)
            if (i != j) acc += s(i, j) * s(i, j);
    return std::sqrt(acc);
}

inline double frob_norm(const Mat& s) {
    double acc = 0.0;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j) acc += s(i, j) * s(i, j);
    return std::sqrt(acc);
}
}  // namespace detail

/// Eigenvalues (descending) of a symmetric matrix by cyclic Jacobi
/// rotations. Iterates until the off-diagonal norm drops below
/// 1e-14 * ||S||_F, so diagonal inputs are returned unchanged.
/// Throws if the input is not symmetric within 1e-10 (relative).
inline Vec sym_eig(const Mat& s_in) {
    const int n = s_in.rows();
    if (n != s_in.cols()) throw std::invalid_argument("sym_eig: matrix not square");
    const double scale = std::max(1.0, detail::frob_norm(s_in));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(s_in(i, j) - s_in(j, i)) > 1e-10 * scale)
                throw std::invalid_argument("sym_eig: matrix not symmetric");

    Mat s = s_in;
    // symmetrize so rotations see one consistent value per pair
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = v;
            s(j, i) = v;
        }

    const double norm = detail::frob_norm(s);
    const double tol = 1e-14 * std::max(norm, std::numeric_limits<double>::min());
    for (int sweep = 0; sweep < 100 && detail::off_diag_norm(s) > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = s(p, q);
                if (std::abs(apq) <= tol / (n * n)) continue;
                double theta = 0.5 * (s(q, q) - s(p, p)) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                double tau = sn / (1.0 + c);
                double h = t * apq;
                s(p, p) -= h;
                s(q, q) += h;
                s(p, q) = 0.0;
                s(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    double skp = s(k, p), skq = s(k, q);
                    s(k, p) = skp - sn * (skq + tau * skp);
                    s(p, k) = s(k, p);
                    s(k, q) = skq + sn * (skp - tau * skq);
                    s(q, k) = s(k, q);
                }
            }
        }
    }

    Vec ev(n);
    for (int i = 0; i < n; ++i) ev[i] = s(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

inline double max_eigenvalue(const Mat& s) { return sym_eig(s).front(); }

}  // namespace sdi
