#pragma once

#include <functional>
#include <memory>

#include "sdi/basis.hpp"
#include "sdi/core.hpp"
#include "sdi/linalg.hpp"

namespace sdi {

/// PCE coefficients c_i(t): one row per basis term, one column per state
/// component. Immutable value; invalid sets keep their shape but carry
/// no usable numbers.
struct CoefficientSet {
    double t = 0.0;
    Mat coeffs;  // terms() x n_state
    std::shared_ptr<const PolynomialBasis> basis;
    UncertaintyBox box;
    bool valid = true;

    int n_state() const { return coeffs.cols(); }
    int terms() const { return coeffs.rows(); }

    /// Mean state, c_0.
    Vec mean() const {
        Vec m(n_state());
        for (int j = 0; j < n_state(); ++j) m[j] = coeffs(0, j);
        return m;
    }
};

struct MomentSummary {
    Vec mean;      // n
    Vec variance;  // n
    Vec central3;  // n
    Vec skewness;  // n, central3 / variance^{3/2}, 0 for degenerate variance
    Mat covariance;  // n x n
    bool valid = true;
};

/// Non-intrusive projection: states sampled at the rule's nodes (row j of
/// `states` belongs to node j), all at the same time t. Any non-finite
/// sample (a guarded trajectory) marks the set invalid instead of
/// producing numbers.
inline CoefficientSet project_samples(const Mat& states, double t,
                                      std::shared_ptr<const PolynomialBasis> basis,
                                      const UncertaintyBox& box, const QuadratureRule& rule) {
    const int n = states.cols();
    const int m_terms = basis->terms();
    CoefficientSet cs;
    cs.t = t;
    cs.basis = std::move(basis);
    cs.box = box;
    cs.coeffs = Mat(m_terms, n);
    if (states.rows() != rule.count())
        throw std::invalid_argument("project_samples: one state per quadrature node required");
    if (!states.all_finite()) {
        cs.valid = false;
        return cs;
    }
    // Projection is taken on states shifted by the node-0 sample: for
    // k >= 1 the shift integrates to zero exactly, while in floating
    // point it kills the O(1) common part (constant ensembles project to
    // exact zeros, and coefficients that are tiny against the state
    // magnitude keep their relative accuracy).
    Vec psi(m_terms);
    for (int j = 0; j < rule.count(); ++j) {
        cs.basis->eval_all(rule.node(j), psi);
        for (int k = 0; k < m_terms; ++k) {
            const double wp = rule.weights[j] * psi[k];
            for (int c = 0; c < n; ++c) cs.coeffs(k, c) += wp * (states(j, c) - states(0, c));
        }
    }
    for (int k = 0; k < m_terms; ++k)
        for (int c = 0; c < n; ++c) cs.coeffs(k, c) /= cs.basis->norm(k);
    for (int c = 0; c < n; ++c) cs.coeffs(0, c) += states(0, c);
    return cs;
}

/// Projection of a deterministic initial state: c_0 = z0, all other
/// coefficients exactly zero.
inline CoefficientSet project_initial(std::span<const double> z0,
                                      std::shared_ptr<const PolynomialBasis> basis,
                                      const UncertaintyBox& box) {
    CoefficientSet cs;
    cs.t = 0.0;
    cs.basis = std::move(basis);
    cs.box = box;
    cs.coeffs = Mat(cs.basis->terms(), static_cast<int>(z0.size()));
    for (size_t j = 0; j < z0.size(); ++j) cs.coeffs(0, static_cast<int>(j)) = z0[j];
    return cs;
}

/// Projection of a parameter-dependent initial state by quadrature.
inline CoefficientSet project_initial(const std::function<Vec(std::span<const double>)>& z0_of_p,
                                      std::shared_ptr<const PolynomialBasis> basis,
                                      const UncertaintyBox& box, const QuadratureRule& rule) {
    Mat states;
    for (int j = 0; j < rule.count(); ++j) {
        Vec p = map_to_box(rule.node(j), box);
        Vec z = z0_of_p(p);
        if (states.rows() == 0) states = Mat(rule.count(), static_cast<int>(z.size()));
        for (size_t c = 0; c < z.size(); ++c) states(j, static_cast<int>(c)) = z[c];
    }
    return project_samples(states, 0.0, std::move(basis), box, rule);
}

/// Evaluate the expansion at a physical parameter point p in Omega.
inline Vec evaluate(const CoefficientSet& cs, std::span<const double> p) {
    Vec xi = map_from_box(p, cs.box);
    Vec psi(cs.terms());
    cs.basis->eval_all(xi, psi);
    Vec z(cs.n_state(), 0.0);
    for (int k = 0; k < cs.terms(); ++k)
        for (int c = 0; c < cs.n_state(); ++c) z[c] += cs.coeffs(k, c) * psi[k];
    return z;
}

/// Statistical moments from the coefficients: mean c_0, variance and
/// covariance from the weighted squares (Parseval), third central moment
/// from the precomputed triple products.
inline MomentSummary moments(const CoefficientSet& cs) {
    const int n = cs.n_state();
    const int m_terms = cs.terms();
    MomentSummary ms;
    ms.valid = cs.valid;
    ms.mean.assign(n, kNaN);
    ms.variance.assign(n, kNaN);
    ms.central3.assign(n, kNaN);
    ms.skewness.assign(n, kNaN);
    ms.covariance = Mat(n, n);
    if (!cs.valid) return ms;

    const PolynomialBasis& basis = *cs.basis;
    ms.mean = cs.mean();
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            double acc = 0.0;
            for (int k = 1; k < m_terms; ++k) acc += basis.norm(k) * cs.coeffs(k, j) * cs.coeffs(k, l);
            ms.covariance(j, l) = acc;
        }
    for (int j = 0; j < n; ++j) ms.variance[j] = ms.covariance(j, j);

    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int a = 1; a < m_terms; ++a) {
            const double ca = cs.coeffs(a, j);
            if (ca == 0.0) continue;
            for (int b = 1; b < m_terms; ++b) {
                const double cab = ca * cs.coeffs(b, j);
                if (cab == 0.0) continue;
                for (int c = 1; c < m_terms; ++c) {
                    double tn = basis.triple_norm(a, b, c);
                    if (tn != 0.0) acc += cab * cs.coeffs(c, j) * tn;
                }
            }
        }
        ms.central3[j] = acc;
        ms.skewness[j] = ms.variance[j] < 1e-30 ? 0.0 : acc / std::pow(ms.variance[j], 1.5);
    }
    return ms;
}

/// Covariance matrix C_v alone (used by the pseudo-diffusion exponent).
inline Mat covariance_matrix(const CoefficientSet& cs) {
    const int n = cs.n_state();
    Mat c(n, n);
    for (int j = 0; j < n; ++j)
        for (int l = j; l < n; ++l) {
            double acc = 0.0;
            for (int k = 1; k < cs.terms(); ++k) acc += cs.basis->norm(k) * cs.coeffs(k, j) * cs.coeffs(k, l);
            c(j, l) = acc;
            c(l, j) = acc;
        }
    return c;
}

}  // namespace sdi
