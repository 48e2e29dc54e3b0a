#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sdi/core.hpp"

namespace sdi {

/// Closed interval [lo, hi] of a physical parameter.
struct Interval {
    double lo = -1.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("Interval: requires finite lo < hi");
    }
    double mid() const { return 0.5 * (lo + hi); }
    double half_width() const { return 0.5 * (hi - lo); }
};

/// Orthotope of uncertain parameters (the domain Omega).
struct UncertaintyBox {
    std::vector<Interval> dims;

    UncertaintyBox() = default;
    explicit UncertaintyBox(std::vector<Interval> d) : dims(std::move(d)) {
        if (dims.empty()) throw std::invalid_argument("UncertaintyBox: need at least one dimension");
    }
    int size() const { return static_cast<int>(dims.size()); }

    Vec midpoint() const {
        Vec p(dims.size());
        for (size_t i = 0; i < dims.size(); ++i) p[i] = dims[i].mid();
        return p;
    }
};

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& k) {
    int d = 0;
    for (int e : k) d += e;
    return d;
}

/// Number of multivariate terms of total degree <= m in n_p variables.
inline int term_count(int m, int n_p) {
    long long c = 1;
    for (int i = 1; i <= n_p; ++i) c = c * (m + i) / i;
    return static_cast<int>(c);
}

namespace detail {
inline void enumerate_indices(int n_p, int deg, int pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
    if (pos == n_p - 1) {
        cur[pos] = deg;
        out.push_back(cur);
        return;
    }
    for (int k = deg; k >= 0; --k) {
        cur[pos] = k;
        enumerate_indices(n_p, deg - k, pos + 1, cur, out);
    }
}

/// Graded lexicographic order: by total degree, then first exponent descending.
inline std::vector<MultiIndex> graded_lex_indices(int m, int n_p) {
    std::vector<MultiIndex> out;
    MultiIndex cur(n_p, 0);
    for (int d = 0; d <= m; ++d) enumerate_indices(n_p, d, 0, cur, out);
    return out;
}
}  // namespace detail

/// Monic orthogonal basis for the normalized Chebyshev-U (semicircle)
/// measure on [-1,1]^n_p, built from the three-term recurrence
///   psi_{k+1} = (xi - A_k) psi_k - B_k psi_{k-1}.
/// For this measure A_k = 0 and B_k = 1/4, and the univariate norms are
/// s_k = 4^{-k}. Multivariate terms are tensor products ordered
/// graded-lexicographically; norms multiply across dimensions.
class PolynomialBasis {
  public:
    PolynomialBasis() = default;

    /// Chebyshev-U basis of total degree m in n_p dimensions.
    PolynomialBasis(int m, int n_p) {
        if (m < 0 || n_p < 1) throw std::invalid_argument("PolynomialBasis: need m >= 0, n_p >= 1");
        Vec a(std::max(m, 1), 0.0);
        Vec b(std::max(m, 1), 0.0);
        for (int i = 1; i < m; ++i) b[i] = 0.25;
        Vec s1(m + 1, 1.0);
        for (int k = 1; k <= m; ++k) s1[k] = s1[k - 1] * 0.25;
        init(m, n_p, a, b, s1);
    }

    /// Extension hook: custom univariate monic recurrence (A_i for
    /// i = 0..m-1, B_i for i = 1..m-1; B_0 ignored) with the univariate
    /// norms s_k = <psi_k, psi_k> of the underlying measure.
    PolynomialBasis(int m, int n_p, const Vec& a, const Vec& b, const Vec& univariate_norms) {
        init(m, n_p, a, b, univariate_norms);
    }

    int degree() const { return m_; }
    int dims() const { return n_p_; }
    int terms() const { return static_cast<int>(index_map_.size()); }

    const std::vector<MultiIndex>& index_map() const { return index_map_; }
    const Vec& norms() const { return s_; }
    double norm(int term) const { return s_[term]; }
    const Vec& recurrence_a() const { return a_; }
    const Vec& recurrence_b() const { return b_; }
    const Vec& univariate_norms() const { return s1_; }

    /// Univariate monic values psi_0..psi_m at xi.
    void eval_univariate(double xi, std::span<double> out) const {
        out[0] = 1.0;
        if (m_ >= 1) out[1] = xi - a_[0];
        for (int k = 1; k < m_; ++k) out[k + 1] = (xi - a_[k]) * out[k] - b_[k] * out[k - 1];
    }

    /// One multivariate term at a point xi in [-1,1]^n_p.
    double eval_term(const MultiIndex& idx, std::span<const double> xi) const {
        double prod = 1.0;
        Vec tab(m_ + 1);
        for (int d = 0; d < n_p_; ++d) {
            eval_univariate(xi[d], tab);
            prod *= tab[idx[d]];
        }
        return prod;
    }

    double eval_term(int term, std::span<const double> xi) const { return eval_term(index_map_[term], xi); }

    /// All M terms at once (out.size() == terms()).
    void eval_all(std::span<const double> xi, std::span<double> out) const {
        Mat tab(n_p_, m_ + 1);
        for (int d = 0; d < n_p_; ++d) eval_univariate(xi[d], tab.row(d));
        for (int t = 0; t < terms(); ++t) {
            double prod = 1.0;
            for (int d = 0; d < n_p_; ++d) prod *= tab(d, index_map_[t][d]);
            out[t] = prod;
        }
    }

    /// <psi_a psi_b psi_c> for univariate degrees a,b,c <= m.
    double triple_univariate(int a, int b, int c) const {
        return t1_[(static_cast<size_t>(a) * (m_ + 1) + b) * (m_ + 1) + c];
    }

    /// <Psi_a Psi_b Psi_c> for term indices; factorizes across dimensions.
    double triple_norm(int a, int b, int c) const {
        double prod = 1.0;
        for (int d = 0; d < n_p_; ++d)
            prod *= triple_univariate(index_map_[a][d], index_map_[b][d], index_map_[c][d]);
        return prod;
    }

  private:
    void init(int m, int n_p, const Vec& a, const Vec& b, const Vec& s1) {
        if (static_cast<int>(s1.size()) != m + 1 || s1[0] != 1.0)
            throw std::invalid_argument("PolynomialBasis: univariate norms need s_0 = 1 and one entry per degree");
        m_ = m;
        n_p_ = n_p;
        a_ = a;
        b_ = b;
        s1_ = s1;
        index_map_ = detail::graded_lex_indices(m, n_p);

        s_.resize(index_map_.size());
        for (size_t t = 0; t < index_map_.size(); ++t) {
            double prod = 1.0;
            for (int d = 0; d < n_p; ++d) prod *= s1_[index_map_[t][d]];
            s_[t] = prod;
        }
        build_triple_table();
    }

    void build_triple_table() {
        const int n = m_ + 1;
        t1_.assign(static_cast<size_t>(n) * n * n, 0.0);
        // Exact Gauss rule for integrands of degree <= 3m.
        const int nq = std::max(m_ + 1, (3 * m_) / 2 + 2);
        Vec xq(nq), wq(nq);
        for (int k = 1; k <= nq; ++k) {
            double th = k * std::numbers::pi / (nq + 1);
            xq[k - 1] = std::cos(th);
            wq[k - 1] = 2.0 / (nq + 1) * std::sin(th) * std::sin(th);
        }
        Mat psi(nq, n);
        for (int q = 0; q < nq; ++q) eval_univariate(xq[q], psi.row(q));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                for (int k = j; k < n; ++k) {
                    if ((i + j + k) % 2 != 0) continue;  // odd integrand, symmetric measure
                    double acc = 0.0;
                    for (int q = 0; q < nq; ++q) acc += wq[q] * psi(q, i) * psi(q, j) * psi(q, k);
                    size_t idx[6][3] = {{(size_t)i, (size_t)j, (size_t)k}, {(size_t)i, (size_t)k, (size_t)j},
                                        {(size_t)j, (size_t)i, (size_t)k}, {(size_t)j, (size_t)k, (size_t)i},
                                        {(size_t)k, (size_t)i, (size_t)j}, {(size_t)k, (size_t)j, (size_t)i}};
                    for (auto& p : idx) t1_[(p[0] * n + p[1]) * n + p[2]] = acc;
                }
    }

    int m_ = 0, n_p_ = 1;
    Vec a_, b_;
    Vec s1_;                            // univariate norms s_k
    Vec s_;                             // per-term norms
    std::vector<MultiIndex> index_map_; // graded-lex order
    Vec t1_;                            // univariate triple products
};

inline PolynomialBasis build_basis(int m, int n_p) { return PolynomialBasis(m, n_p); }

/// Tensor-product Gauss-Chebyshev-U rule on [-1,1]^n_p with normalized
/// weights (they sum to 1). Univariate nodes are cos(k pi/(N+1)) with
/// weights 2/(N+1) sin^2(k pi/(N+1)); exact for degree <= 2N-1 per dim.
struct QuadratureRule {
    Mat nodes;      // count x n_p, last dimension fastest
    Vec weights;    // count
    int n_per_dim = 0;

    int count() const { return nodes.rows(); }
    int dims() const { return nodes.cols(); }
    std::span<const double> node(int j) const { return nodes.row(j); }
};

inline QuadratureRule gauss_rule(int n_per_dim, int n_p) {
    if (n_per_dim < 1 || n_p < 1) throw std::invalid_argument("gauss_rule: need N >= 1, n_p >= 1");
    Vec x(n_per_dim), w(n_per_dim);
    for (int k = 1; k <= n_per_dim; ++k) {
        double th = k * std::numbers::pi / (n_per_dim + 1);
        x[k - 1] = std::cos(th);
        w[k - 1] = 2.0 / (n_per_dim + 1) * std::sin(th) * std::sin(th);
    }
    int count = 1;
    for (int d = 0; d < n_p; ++d) count *= n_per_dim;
    QuadratureRule rule;
    rule.n_per_dim = n_per_dim;
    rule.nodes = Mat(count, n_p);
    rule.weights.assign(count, 1.0);
    for (int j = 0; j < count; ++j) {
        int rem = j;
        for (int d = n_p - 1; d >= 0; --d) {
            int k = rem % n_per_dim;
            rem /= n_per_dim;
            rule.nodes(j, d) = x[k];
            rule.weights[j] *= w[k];
        }
    }
    return rule;
}

/// Affine map from the normalized cube to the physical box,
/// p_i = (hi-lo)/2 xi_i + (hi+lo)/2.
inline Vec map_to_box(std::span<const double> xi, const UncertaintyBox& box) {
    Vec p(box.size());
    for (int i = 0; i < box.size(); ++i) p[i] = box.dims[i].half_width() * xi[i] + box.dims[i].mid();
    return p;
}

/// Inverse affine map; rejects points outside the box beyond 1e-12 slack
/// (measured in normalized units). The returned point is clamped to [-1,1].
inline Vec map_from_box(std::span<const double> p, const UncertaintyBox& box) {
    Vec xi(box.size());
    for (int i = 0; i < box.size(); ++i) {
        double v = (p[i] - box.dims[i].mid()) / box.dims[i].half_width();
        if (std::abs(v) > 1.0 + 1e-12)
            throw std::invalid_argument("map_from_box: point outside the uncertainty box");
        xi[i] = std::clamp(v, -1.0, 1.0);
    }
    return xi;
}

}  // namespace sdi
