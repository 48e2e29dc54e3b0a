#pragma once

#include <algorithm>
#include <functional>

#include "sdi/core.hpp"
#include "sdi/pce.hpp"
#include "sdi/systems.hpp"

namespace sdi {

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    double initial_step = 0.0;  // 0 = (t_f - t0) / 1000
    long max_steps = 2'000'000;
};

struct PropagationResult {
    Vec final_state;
    Status status = Status::ok;
    long steps_taken = 0;
    double t_end = 0.0;
};

namespace detail {
// Dormand-Prince 5(4) tableau
inline constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
// y5 - y4 weights
inline constexpr double kE[7] = {71.0 / 57600, 0.0,          -71.0 / 16695, 71.0 / 1920,
                                 -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
}  // namespace detail

/// One Dormand-Prince 5(4) step from (t, y) with step h. Writes the
/// 5th-order advance into ynew and returns the 2-norm of the embedded
/// error estimate. k1 may be preloaded (FSAL) when k1_ready.
template <typename Rhs>
double dopri5_step(Rhs&& f, double t, const Vec& y, double h, Vec& ynew, Mat& k, Vec& work,
                   bool k1_ready = false) {
    const int n = static_cast<int>(y.size());
    if (!k1_ready) f(t, std::span<const double>(y), k.row(0));
    for (int stage = 1; stage < 7; ++stage) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int s = 0; s < stage; ++s) acc += detail::kA[stage][s] * k(s, i);
            work[i] = y[i] + h * acc;
        }
        // stage 6 evaluates at the 5th-order solution itself (FSAL)
        if (stage == 6)
            for (int i = 0; i < n; ++i) ynew[i] = work[i];
        f(t + detail::kC[stage] * h, std::span<const double>(work), k.row(stage));
    }
    double err2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double e = 0.0;
        for (int s = 0; s < 7; ++s) e += detail::kE[s] * k(s, i);
        e *= h;
        err2 += e * e;
    }
    return std::sqrt(err2);
}

/// Adaptive propagation of dy/dt = f(t, y) from t0 to t_f. The error
/// test accepts a step when ||y5 - y4|| <= abs_tol + rel_tol ||y||, and
/// the step factor is clipped to [0.2, 5]. Guards run at accepted steps
/// only; a non-ok guard (or step-size underflow / max_steps) terminates
/// with the state at detection. The observer sees every accepted step.
template <typename Rhs, typename Guard>
PropagationResult integrate(Rhs&& f, const Vec& y0, double t0, double t_f,
                            const IntegratorConfig& cfg, Guard&& guard,
                            const std::function<void(double, const Vec&)>& observer = nullptr) {
    const int n = static_cast<int>(y0.size());
    PropagationResult res;
    res.final_state = y0;
    res.t_end = t0;
    if (!(t_f > t0)) throw std::invalid_argument("integrate: requires t_f > t0");

    Vec y = y0, ynew(n), work(n);
    Mat k(7, n);
    double t = t0;
    double h = cfg.initial_step > 0.0 ? cfg.initial_step : (t_f - t0) / 1000.0;
    bool fsal = false;

    {
        Status s0 = guard(std::span<const double>(y));
        if (s0 != Status::ok) {
            res.status = s0;
            return res;
        }
        if (observer) observer(t, y);
    }

    for (long attempts = 0; attempts < cfg.max_steps; ++attempts) {
        bool last = false;
        if (t + h >= t_f) {
            h = t_f - t;
            last = true;
        }
        double err = dopri5_step(f, t, y, h, ynew, k, work, fsal);
        fsal = false;
        const double tol = cfg.abs_tol + cfg.rel_tol * norm2(y);
        if (std::isfinite(err) && err <= tol && all_finite(ynew)) {
            t = last ? t_f : t + h;
            y = ynew;
            ++res.steps_taken;
            res.final_state = y;
            res.t_end = t;
            Status s = guard(std::span<const double>(y));
            if (s != Status::ok) {
                res.status = s;
                return res;
            }
            if (observer) observer(t, y);
            if (last) return res;
            std::copy(k.row(6).begin(), k.row(6).end(), k.row(0).begin());
            fsal = true;
            double factor = err > 0.0 ? 0.75 * std::pow(tol / err, 0.2) : 5.0;
            h *= std::clamp(factor, 0.2, 5.0);
        } else {
            double factor = std::isfinite(err) && err > 0.0 ? 0.75 * std::pow(tol / err, 0.2) : 0.2;
            h *= std::clamp(factor, 0.2, 0.9);
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            res.status = Status::failed;
            return res;
        }
    }
    res.status = Status::failed;
    return res;
}

/// Single trajectory of a SystemModel at a fixed parameter vector.
inline PropagationResult integrate_system(const SystemModel& sys, std::span<const double> p,
                                          const Vec& z0, double t0, double t_f,
                                          const IntegratorConfig& cfg,
                                          const std::function<void(double, const Vec&)>& observer = nullptr) {
    auto f = [&](double t, std::span<const double> z, std::span<double> dz) { sys.rhs(t, p, z, dz); };
    auto g = [&](std::span<const double> z) { return sys.guards(p, z); };
    return integrate(f, z0, t0, t_f, cfg, g, observer);
}

// ---------------------------------------------------------------------------
// Ensemble propagation at the quadrature nodes (non-intrusive pipeline)
// ---------------------------------------------------------------------------

struct EnsembleResult {
    Mat states;                     // node count x n, final states
    std::vector<Status> statuses;   // per node
    double t_end = 0.0;
    bool all_ok = true;

    Status worst_status() const {
        Status w = Status::ok;
        for (Status s : statuses) w = worst(w, s);
        return w;
    }
};

/// One trajectory per quadrature node p_j. Initial state is either fixed
/// (deterministic z0) or node-dependent via z0_of_p.
inline EnsembleResult propagate_ensemble(const SystemModel& sys, const Vec& z0,
                                         const UncertaintyBox& box, const QuadratureRule& rule,
                                         double t0, double t_f, const IntegratorConfig& cfg,
                                         const std::function<Vec(std::span<const double>)>& z0_of_p = nullptr) {
    EnsembleResult out;
    out.states = Mat(rule.count(), static_cast<int>(z0_of_p ? z0_of_p(box.midpoint()).size() : z0.size()));
    out.statuses.assign(rule.count(), Status::ok);
    out.t_end = t_f;
    for (int j = 0; j < rule.count(); ++j) {
        Vec p = map_to_box(rule.node(j), box);
        Vec start = z0_of_p ? z0_of_p(p) : z0;
        PropagationResult r = integrate_system(sys, p, start, t0, t_f, cfg);
        out.statuses[j] = r.status;
        if (r.status != Status::ok) {
            out.all_ok = false;
            for (int c = 0; c < out.states.cols(); ++c) out.states(j, c) = kNaN;
        } else {
            for (int c = 0; c < out.states.cols(); ++c) out.states(j, c) = r.final_state[c];
        }
    }
    return out;
}

/// Ensemble over an initial-condition box: the quadrature nodes map to
/// initial states (the state itself is the uncertain vector) while the
/// dynamics runs at a fixed parameter vector.
inline EnsembleResult propagate_ensemble_ic(const SystemModel& sys, std::span<const double> p_fixed,
                                            const UncertaintyBox& ic_box, const QuadratureRule& rule,
                                            double t0, double t_f, const IntegratorConfig& cfg) {
    EnsembleResult out;
    out.states = Mat(rule.count(), ic_box.size());
    out.statuses.assign(rule.count(), Status::ok);
    out.t_end = t_f;
    for (int j = 0; j < rule.count(); ++j) {
        Vec start = map_to_box(rule.node(j), ic_box);
        PropagationResult r = integrate_system(sys, p_fixed, start, t0, t_f, cfg);
        out.statuses[j] = r.status;
        if (r.status != Status::ok) {
            out.all_ok = false;
            for (int c = 0; c < out.states.cols(); ++c) out.states(j, c) = kNaN;
        } else {
            for (int c = 0; c < out.states.cols(); ++c) out.states(j, c) = r.final_state[c];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Intrusive Galerkin propagation of the coefficient system
// ---------------------------------------------------------------------------

namespace detail {
/// Shared per-rule tables: basis values and mapped parameters per node.
struct GalerkinTables {
    Mat psi;     // nodes x terms
    Mat params;  // nodes x n_p
    GalerkinTables(const PolynomialBasis& basis, const UncertaintyBox& box, const QuadratureRule& rule)
        : psi(rule.count(), basis.terms()), params(rule.count(), box.size()) {
        for (int j = 0; j < rule.count(); ++j) {
            basis.eval_all(rule.node(j), psi.row(j));
            Vec p = map_to_box(rule.node(j), box);
            for (int d = 0; d < box.size(); ++d) params(j, d) = p[d];
        }
    }
};
}  // namespace detail

/// dc_k/dt = <g(t, p, z(p)), Psi_k> / s_k evaluated by quadrature over the
/// reconstructed state. A node landing in a guard region marks the
/// derivative (and the returned set) invalid.
inline CoefficientSet galerkin_rhs(double t, const CoefficientSet& cs, const SystemModel& sys,
                                   const QuadratureRule& rule) {
    const PolynomialBasis& basis = *cs.basis;
    const int n = cs.n_state(), m_terms = cs.terms();
    detail::GalerkinTables tab(basis, cs.box, rule);
    CoefficientSet dcs = cs;
    dcs.coeffs = Mat(m_terms, n);
    Vec z(n), g(n), g0(n);
    for (int j = 0; j < rule.count(); ++j) {
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int k = 0; k < m_terms; ++k) acc += cs.coeffs(k, c) * tab.psi(j, k);
            z[c] = acc;
        }
        if (sys.guards(tab.params.row(j), z) != Status::ok || !all_finite(z)) {
            dcs.valid = false;
            return dcs;
        }
        sys.rhs(t, tab.params.row(j), z, g);
        if (j == 0) g0 = g;
        // node-0 shift: exact zero rows for p-independent dynamics
        for (int k = 0; k < m_terms; ++k) {
            double wp = rule.weights[j] * tab.psi(j, k);
            for (int c = 0; c < n; ++c) dcs.coeffs(k, c) += wp * (g[c] - g0[c]);
        }
    }
    for (int k = 0; k < m_terms; ++k)
        for (int c = 0; c < n; ++c) dcs.coeffs(k, c) /= basis.norm(k);
    for (int c = 0; c < n; ++c) dcs.coeffs(0, c) += g0[c];
    return dcs;
}

/// Propagate the M x n coupled coefficient ODEs from cs0 to t_f.
inline CoefficientSet propagate_galerkin(const SystemModel& sys, const CoefficientSet& cs0, double t0,
                                         double t_f, const IntegratorConfig& cfg,
                                         const QuadratureRule& rule) {
    const PolynomialBasis& basis = *cs0.basis;
    const int n = cs0.n_state(), m_terms = cs0.terms();
    detail::GalerkinTables tab(basis, cs0.box, rule);

    auto node_status = [&](std::span<const double> y) {
        Vec z(n);
        for (int j = 0; j < rule.count(); ++j) {
            for (int c = 0; c < n; ++c) {
                double acc = 0.0;
                for (int k = 0; k < m_terms; ++k) acc += y[static_cast<size_t>(k) * n + c] * tab.psi(j, k);
                z[c] = acc;
            }
            Status s = sys.guards(tab.params.row(j), z);
            if (s != Status::ok) return s;
        }
        return Status::ok;
    };

    auto f = [&](double t, std::span<const double> y, std::span<double> dy) {
        std::fill(dy.begin(), dy.end(), 0.0);
        Vec z(n), g(n), g0(n);
        for (int j = 0; j < rule.count(); ++j) {
            for (int c = 0; c < n; ++c) {
                double acc = 0.0;
                for (int k = 0; k < m_terms; ++k) acc += y[static_cast<size_t>(k) * n + c] * tab.psi(j, k);
                z[c] = acc;
            }
            sys.rhs(t, tab.params.row(j), z, g);
            if (j == 0) g0 = g;
            for (int k = 0; k < m_terms; ++k) {
                double wp = rule.weights[j] * tab.psi(j, k);
                for (int c = 0; c < n; ++c) dy[static_cast<size_t>(k) * n + c] += wp * (g[c] - g0[c]);
            }
        }
        for (int k = 0; k < m_terms; ++k)
            for (int c = 0; c < n; ++c) dy[static_cast<size_t>(k) * n + c] /= basis.norm(k);
        for (int c = 0; c < n; ++c) dy[c] += g0[c];
    };

    Vec y0(static_cast<size_t>(m_terms) * n);
    for (int k = 0; k < m_terms; ++k)
        for (int c = 0; c < n; ++c) y0[static_cast<size_t>(k) * n + c] = cs0.coeffs(k, c);

    PropagationResult r = integrate(f, y0, t0, t_f, cfg, node_status);
    CoefficientSet out = cs0;
    out.t = r.t_end;
    for (int k = 0; k < m_terms; ++k)
        for (int c = 0; c < n; ++c) out.coeffs(k, c) = r.final_state[static_cast<size_t>(k) * n + c];
    out.valid = (r.status == Status::ok) && out.coeffs.all_finite();
    return out;
}

// ---------------------------------------------------------------------------
// Variational equations of the coefficients
// ---------------------------------------------------------------------------

struct VariationalResult {
    CoefficientSet cs;         // coefficients at t_f
    std::vector<Mat> dcdz0;    // per term: n x n matrix dc_k/dz0
    Status status = Status::ok;
};

/// Integrate d/dt (dc_k/dz0) = <(dg/dz) sum_i (dc_i/dz0) Psi_i, Psi_k>/s_k
/// coupled with the coefficient flow, from a deterministic z0
/// (dc_0/dz0 = I, higher orders zero).
inline VariationalResult propagate_variational_coeffs(const SystemModel& sys, const Vec& z0,
                                                      const UncertaintyBox& box,
                                                      const QuadratureRule& rule, int degree,
                                                      double t0, double t_f,
                                                      const IntegratorConfig& cfg) {
    auto basis = std::make_shared<PolynomialBasis>(degree, box.size());
    const int n = static_cast<int>(z0.size());
    const int m_terms = basis->terms();
    detail::GalerkinTables tab(*basis, box, rule);
    const size_t coeff_len = static_cast<size_t>(m_terms) * n;
    const size_t var_len = static_cast<size_t>(m_terms) * n * n;

    auto node_status = [&](std::span<const double> y) {
        Vec z(n);
        for (int j = 0; j < rule.count(); ++j) {
            for (int c = 0; c < n; ++c) {
                double acc = 0.0;
                for (int k = 0; k < m_terms; ++k) acc += y[static_cast<size_t>(k) * n + c] * tab.psi(j, k);
                z[c] = acc;
            }
            Status s = sys.guards(tab.params.row(j), z);
            if (s != Status::ok) return s;
        }
        return Status::ok;
    };

    auto f = [&](double t, std::span<const double> y, std::span<double> dy) {
        std::fill(dy.begin(), dy.end(), 0.0);
        Vec z(n), g(n), g0(n);
        Mat jac(n, n), s_j(n, n), a_s(n, n), a_s0(n, n);
        for (int j = 0; j < rule.count(); ++j) {
            for (int c = 0; c < n; ++c) {
                double acc = 0.0;
                for (int k = 0; k < m_terms; ++k) acc += y[static_cast<size_t>(k) * n + c] * tab.psi(j, k);
                z[c] = acc;
            }
            sys.rhs(t, tab.params.row(j), z, g);
            sys.jacobian(t, tab.params.row(j), z, jac);
            // S_j = sum_i V_i Psi_i(xi_j)
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    double acc = 0.0;
                    for (int k = 0; k < m_terms; ++k)
                        acc += y[coeff_len + (static_cast<size_t>(k) * n + r) * n + c] * tab.psi(j, k);
                    s_j(r, c) = acc;
                }
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    double acc = 0.0;
                    for (int q = 0; q < n; ++q) acc += jac(r, q) * s_j(q, c);
                    a_s(r, c) = acc;
                }
            if (j == 0) {
                g0 = g;
                a_s0 = a_s;
            }
            for (int k = 0; k < m_terms; ++k) {
                const double wp = rule.weights[j] * tab.psi(j, k);
                for (int c = 0; c < n; ++c) dy[static_cast<size_t>(k) * n + c] += wp * (g[c] - g0[c]);
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c)
                        dy[coeff_len + (static_cast<size_t>(k) * n + r) * n + c] +=
                            wp * (a_s(r, c) - a_s0(r, c));
            }
        }
        for (int k = 0; k < m_terms; ++k) {
            const double s = basis->norm(k);
            for (int c = 0; c < n; ++c) dy[static_cast<size_t>(k) * n + c] /= s;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) dy[coeff_len + (static_cast<size_t>(k) * n + r) * n + c] /= s;
        }
        for (int c = 0; c < n; ++c) dy[c] += g0[c];
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) dy[coeff_len + static_cast<size_t>(r) * n + c] += a_s0(r, c);
    };

    Vec y0(coeff_len + var_len, 0.0);
    for (int c = 0; c < n; ++c) y0[c] = z0[c];                      // c_0 = z0
    for (int r = 0; r < n; ++r) y0[coeff_len + static_cast<size_t>(r) * n + r] = 1.0;  // dc_0/dz0 = I

    PropagationResult r = integrate(f, y0, t0, t_f, cfg, node_status);

    VariationalResult out;
    out.status = r.status;
    out.cs.t = r.t_end;
    out.cs.basis = basis;
    out.cs.box = box;
    out.cs.coeffs = Mat(m_terms, n);
    out.cs.valid = (r.status == Status::ok);
    for (int k = 0; k < m_terms; ++k)
        for (int c = 0; c < n; ++c) out.cs.coeffs(k, c) = r.final_state[static_cast<size_t>(k) * n + c];
    out.dcdz0.assign(m_terms, Mat(n, n));
    for (int k = 0; k < m_terms; ++k)
        for (int rr = 0; rr < n; ++rr)
            for (int c = 0; c < n; ++c)
                out.dcdz0[k](rr, c) = r.final_state[coeff_len + (static_cast<size_t>(k) * n + rr) * n + c];
    return out;
}

}  // namespace sdi
