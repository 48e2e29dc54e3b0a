#pragma once

#include "sdi/linalg.hpp"
#include "sdi/odeint.hpp"
#include "sdi/pce.hpp"
#include "sdi/rng.hpp"
#include "sdi/systems.hpp"

namespace sdi {

struct IndicatorConfig {
    int degree = 4;
    int n_per_dim = 9;
    double delta_z = 1e-7;   // tracer offset for central differences
    double t0 = 0.0;
    double t_f = 10.0;
    double epsilon = 0.1;    // threshold of the expectation metric
    int n_mc = 100;          // samples for the expectation metric
    uint64_t seed = 0;
    double sentinel_floor = 1e-300;  // eigenvalue clamp for zero coefficient blocks
    bool alpha_sum_eigs = false;     // sum-of-eigenvalues variant of alpha~
    IntegratorConfig ode;
};

struct Sftle1 {
    double mean = kNaN;      // alpha_1^1 = sigma_0
    double variance = kNaN;  // alpha_1^2
    double skewness = kNaN;  // third moment, standardized
    Status status = Status::ok;
};

struct PseudoDiffusion {
    double alpha = kNaN;  // alpha~
    Vec components;       // alpha~_j from the covariance diagonal
    Status status = Status::ok;
};

/// Everything the cartography computes for one initial condition.
struct IndicatorResult {
    double ftle = kNaN;
    Sftle1 sftle1;
    Vec sftle2;          // alpha_2^i per basis term (graded-lex order)
    double alpha_tilde = kNaN;
    Vec alpha_tilde_components;
    Vec state_skewness;  // componentwise skewness of the ensemble
    double expectation = kNaN;
    Status status = Status::ok;
};

// ---------------------------------------------------------------------------
// Deterministic FTLE by central-difference tracers
// ---------------------------------------------------------------------------

namespace detail {
/// Flow-map sensitivity dz(t_f)/dz0 from 2n tracer trajectories at a
/// fixed parameter vector. Returns the worst tracer status.
inline Status flow_map_fd(const SystemModel& sys, std::span<const double> p, const Vec& z0, double t0,
                          double t_f, double dz, const IntegratorConfig& cfg, Mat& phi) {
    const int n = static_cast<int>(z0.size());
    Status st = Status::ok;
    Vec zp = z0, zm = z0;
    for (int j = 0; j < n; ++j) {
        zp[j] = z0[j] + dz;
        zm[j] = z0[j] - dz;
        PropagationResult rp = integrate_system(sys, p, zp, t0, t_f, cfg);
        PropagationResult rm = integrate_system(sys, p, zm, t0, t_f, cfg);
        st = worst(st, worst(rp.status, rm.status));
        if (st != Status::ok) return st;
        for (int i = 0; i < n; ++i) phi(i, j) = (rp.final_state[i] - rm.final_state[i]) / (2.0 * dz);
        zp[j] = z0[j];
        zm[j] = z0[j];
    }
    return Status::ok;
}
}  // namespace detail

/// FTLE = ln(sqrt(lambda_max(Phi^T Phi))) / (t_f - t0) with Phi assembled
/// from central differences of 2n tracers. Any guarded tracer propagates
/// its status and leaves the value NaN.
inline std::pair<double, Status> ftle(const SystemModel& sys, const Vec& z0, std::span<const double> p,
                                      double t0, double t_f, const IndicatorConfig& cfg) {
    const int n = static_cast<int>(z0.size());
    Mat phi(n, n);
    Status st = detail::flow_map_fd(sys, p, z0, t0, t_f, cfg.delta_z, cfg.ode, phi);
    if (st != Status::ok) return {kNaN, st};
    double lmax = max_eigenvalue(gram(phi));
    lmax = std::max(lmax, cfg.sentinel_floor);
    return {0.5 * std::log(lmax) / (t_f - t0), Status::ok};
}

// ---------------------------------------------------------------------------
// SFTLE type 1: statistical moments of the FTLE over the parameter box
// ---------------------------------------------------------------------------

inline Sftle1 sftle1(const SystemModel& sys, const Vec& z0, const UncertaintyBox& box, double t0,
                     double t_f, const IndicatorConfig& cfg) {
    auto basis = std::make_shared<PolynomialBasis>(cfg.degree, box.size());
    QuadratureRule rule = gauss_rule(cfg.n_per_dim, box.size());
    Mat samples(rule.count(), 1);
    Sftle1 out;
    for (int j = 0; j < rule.count(); ++j) {
        Vec p = map_to_box(rule.node(j), box);
        auto [val, st] = ftle(sys, z0, p, t0, t_f, cfg);
        out.status = worst(out.status, st);
        samples(j, 0) = val;
    }
    if (out.status != Status::ok) return out;
    CoefficientSet cs = project_samples(samples, t_f, basis, box, rule);
    MomentSummary ms = moments(cs);
    out.mean = ms.mean[0];
    out.variance = ms.variance[0];
    out.skewness = ms.skewness[0];
    return out;
}

// ---------------------------------------------------------------------------
// SFTLE type 2: exponents of the coefficient Cauchy-Green tensors
// ---------------------------------------------------------------------------

namespace detail {
inline Vec sftle2_from_blocks(const std::vector<Mat>& dcdz0, double t0, double t_f, double floor) {
    Vec out(dcdz0.size());
    for (size_t i = 0; i < dcdz0.size(); ++i) {
        double lmax = std::max(max_eigenvalue(gram(dcdz0[i])), floor);
        out[i] = 0.5 * std::log(lmax) / (t_f - t0);
    }
    return out;
}
}  // namespace detail

/// Tracer route: run the non-intrusive pipeline from z0 +- dz e_j, central
/// difference each coefficient block, and take the exponent of the largest
/// eigenvalue of each (dc_i/dz0)^T (dc_i/dz0).
inline std::pair<Vec, Status> sftle2(const SystemModel& sys, const Vec& z0, const UncertaintyBox& box,
                                     double t0, double t_f, const IndicatorConfig& cfg) {
    const int n = static_cast<int>(z0.size());
    auto basis = std::make_shared<PolynomialBasis>(cfg.degree, box.size());
    QuadratureRule rule = gauss_rule(cfg.n_per_dim, box.size());
    const int m_terms = basis->terms();
    std::vector<Mat> dcdz0(m_terms, Mat(n, n));
    Vec zoff = z0;
    for (int j = 0; j < n; ++j) {
        zoff[j] = z0[j] + cfg.delta_z;
        EnsembleResult ep = propagate_ensemble(sys, zoff, box, rule, t0, t_f, cfg.ode);
        zoff[j] = z0[j] - cfg.delta_z;
        EnsembleResult em = propagate_ensemble(sys, zoff, box, rule, t0, t_f, cfg.ode);
        zoff[j] = z0[j];
        Status st = worst(ep.worst_status(), em.worst_status());
        if (st != Status::ok) return {Vec(m_terms, kNaN), st};
        CoefficientSet cp = project_samples(ep.states, t_f, basis, box, rule);
        CoefficientSet cm = project_samples(em.states, t_f, basis, box, rule);
        for (int k = 0; k < m_terms; ++k)
            for (int i = 0; i < n; ++i)
                dcdz0[k](i, j) = (cp.coeffs(k, i) - cm.coeffs(k, i)) / (2.0 * cfg.delta_z);
    }
    return {detail::sftle2_from_blocks(dcdz0, t0, t_f, cfg.sentinel_floor), Status::ok};
}

/// Intrusive route through the variational equations of the coefficients;
/// serves as the cross-method verification of sftle2.
inline std::pair<Vec, Status> sftle2_intrusive(const SystemModel& sys, const Vec& z0,
                                               const UncertaintyBox& box, double t0, double t_f,
                                               const IndicatorConfig& cfg) {
    QuadratureRule rule = gauss_rule(cfg.n_per_dim, box.size());
    VariationalResult vr = propagate_variational_coeffs(sys, z0, box, rule, cfg.degree, t0, t_f, cfg.ode);
    if (vr.status != Status::ok)
        return {Vec(static_cast<size_t>(vr.cs.terms()), kNaN), vr.status};
    return {detail::sftle2_from_blocks(vr.dcdz0, t0, t_f, cfg.sentinel_floor), Status::ok};
}

// ---------------------------------------------------------------------------
// Pseudo-diffusion exponent
// ---------------------------------------------------------------------------

/// alpha~ = log(sqrt(lambda_max(C_v)) + 1) / log(t_f) from the covariance
/// of the expansion at t_f (or the sum-of-eigenvalues variant). A
/// collision anywhere in the ensemble saturates the exponent to 1;
/// otherwise an invalid coefficient set yields NaN.
inline PseudoDiffusion pseudo_diffusion(const CoefficientSet& cs, double t_f, Status ensemble_status,
                                        const IndicatorConfig& cfg) {
    PseudoDiffusion out;
    out.status = ensemble_status;
    const int n = cs.n_state();
    out.components.assign(n, kNaN);
    if (ensemble_status == Status::collision) {
        out.alpha = 1.0;
        out.components.assign(n, 1.0);
        return out;
    }
    if (!cs.valid || ensemble_status != Status::ok) return out;
    if (t_f <= 1.05)
        throw std::invalid_argument("pseudo_diffusion: needs t_f > 1.05 (log t_f must be positive)");

    Mat cv = covariance_matrix(cs);
    Vec eigs = sym_eig(cv);
    const double logt = std::log(t_f);
    if (cfg.alpha_sum_eigs) {
        double sum = 0.0;
        for (double l : eigs) sum += std::max(l, 0.0);
        out.alpha = std::log1p(sum) / logt;
    } else {
        out.alpha = std::log1p(std::sqrt(std::max(eigs.front(), 0.0))) / logt;
    }
    for (int j = 0; j < n; ++j) out.components[j] = std::log1p(std::sqrt(std::max(cv(j, j), 0.0))) / logt;
    return out;
}

// ---------------------------------------------------------------------------
// Expectation of staying within epsilon of the ensemble mean
// ---------------------------------------------------------------------------

/// Fraction of n_mc uniform parameter draws whose reconstructed state lies
/// within epsilon (Euclidean) of the mean c_0.
inline double expectation_within(const CoefficientSet& cs, double epsilon, int n_mc, uint64_t seed) {
    if (!cs.valid) return kNaN;
    Rng rng(seed);
    const Vec mean = cs.mean();
    Vec p(cs.box.size());
    int inside = 0;
    for (int s = 0; s < n_mc; ++s) {
        for (int d = 0; d < cs.box.size(); ++d)
            p[d] = rng.uniform(cs.box.dims[d].lo, cs.box.dims[d].hi);
        Vec z = evaluate(cs, p);
        if (dist2(z, mean) < epsilon) ++inside;
    }
    return static_cast<double>(inside) / n_mc;
}

}  // namespace sdi
