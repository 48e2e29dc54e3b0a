#pragma once

#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sdi/basis.hpp"
#include "sdi/core.hpp"

namespace sdi {

/// A dynamical system dz/dt = g(t, p, z) with analytic Jacobian dg/dz,
/// domain guards, and (for the three-body problems) a conserved energy.
/// Implementations are stateless and safe to call concurrently.
class SystemModel {
  public:
    virtual ~SystemModel() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual int param_dim() const = 0;
    virtual std::vector<std::string> state_names() const = 0;

    virtual void rhs(double t, std::span<const double> p, std::span<const double> z,
                     std::span<double> dz) const = 0;
    virtual void jacobian(double t, std::span<const double> p, std::span<const double> z,
                          Mat& jac) const = 0;

    /// Checked at accepted integrator steps; non-ok is terminal. Takes the
    /// realization's parameters because guard geometry (the primaries'
    /// positions) moves with them.
    virtual Status guards(std::span<const double> /*p*/, std::span<const double> /*z*/) const {
        return Status::ok;
    }

    virtual std::optional<double> energy(double /*t*/, std::span<const double> /*p*/,
                                         std::span<const double> /*z*/) const {
        return std::nullopt;
    }

    /// Default parameter uncertainty box for this system.
    virtual UncertaintyBox default_box() const = 0;

    /// (abs_tol, rel_tol) defaults.
    virtual std::pair<double, double> default_tolerances() const { return {1e-10, 1e-9}; }

    /// Factor applied to a configured final time to get the integration
    /// span (the ER3BP counts time in revolutions of the primaries while
    /// integrating over true anomaly).
    virtual double time_scale() const { return 1.0; }
};

// ---------------------------------------------------------------------------
// Periodically perturbed pendulum: x'' = (a cos 5t - 1) sin x
// ---------------------------------------------------------------------------

class Pendulum final : public SystemModel {
  public:
    std::string name() const override { return "pendulum"; }
    int dim() const override { return 2; }
    int param_dim() const override { return 1; }
    std::vector<std::string> state_names() const override { return {"x", "v_x"}; }

    void rhs(double t, std::span<const double> p, std::span<const double> z,
             std::span<double> dz) const override {
        dz[0] = z[1];
        dz[1] = (p[0] * std::cos(5.0 * t) - 1.0) * std::sin(z[0]);
    }

    void jacobian(double t, std::span<const double> p, std::span<const double> z,
                  Mat& jac) const override {
        jac(0, 0) = 0.0;
        jac(0, 1) = 1.0;
        jac(1, 0) = std::cos(z[0]) * (p[0] * std::cos(5.0 * t) - 1.0);
        jac(1, 1) = 0.0;
    }

    UncertaintyBox default_box() const override { return UncertaintyBox({{2.25, 2.75}}); }
};

// ---------------------------------------------------------------------------
// Double gyre with uncertain perturbation amplitude eta
// ---------------------------------------------------------------------------

class DoubleGyre final : public SystemModel {
  public:
    static constexpr double kAmp = 0.1;
    static constexpr double kOmega = 2.0 * std::numbers::pi / 10.0;

    std::string name() const override { return "double_gyre"; }
    int dim() const override { return 2; }
    int param_dim() const override { return 1; }
    std::vector<std::string> state_names() const override { return {"x", "y"}; }

    void rhs(double t, std::span<const double> p, std::span<const double> z,
             std::span<double> dz) const override {
        const double pi = std::numbers::pi;
        double a, b, f, fx;
        eval_f(t, p[0], z[0], a, b, f, fx);
        dz[0] = -pi * kAmp * std::sin(pi * f) * std::cos(pi * z[1]);
        dz[1] = pi * kAmp * std::cos(pi * f) * std::sin(pi * z[1]) * fx;
    }

    void jacobian(double t, std::span<const double> p, std::span<const double> z,
                  Mat& jac) const override {
        const double pi = std::numbers::pi;
        double a, b, f, fx;
        eval_f(t, p[0], z[0], a, b, f, fx);
        const double sf = std::sin(pi * f), cf = std::cos(pi * f);
        const double sy = std::sin(pi * z[1]), cy = std::cos(pi * z[1]);
        jac(0, 0) = -pi * pi * kAmp * cf * fx * cy;
        jac(0, 1) = pi * pi * kAmp * sf * sy;
        jac(1, 0) = pi * kAmp * sy * (-pi * sf * fx * fx + 2.0 * a * cf);
        jac(1, 1) = pi * pi * kAmp * cf * fx * cy;
    }

    UncertaintyBox default_box() const override { return UncertaintyBox({{0.09, 0.11}}); }

  private:
    static void eval_f(double t, double eta, double x, double& a, double& b, double& f, double& fx) {
        const double s = std::sin(kOmega * t);
        a = eta * s;
        b = 1.0 - 2.0 * eta * s;
        f = a * x * x + b * x;
        fx = 2.0 * a * x + b;
    }
};

// ---------------------------------------------------------------------------
// Planar circular restricted three-body problem, rotating frame,
// uncertain mass parameter mu
// ---------------------------------------------------------------------------

/// J(x,y) of the rotating-frame potential.
inline double cr3bp_potential(double mu, double x, double y) {
    const double r1 = std::sqrt((x + mu) * (x + mu) + y * y);
    const double r2 = std::sqrt((x - 1.0 + mu) * (x - 1.0 + mu) + y * y);
    return 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2 + 0.5 * mu * (1.0 - mu);
}

inline void cr3bp_potential_gradient(double mu, double x, double y, double& jx, double& jy) {
    const double dx1 = x + mu, dx2 = x - 1.0 + mu;
    const double r1sq = dx1 * dx1 + y * y, r2sq = dx2 * dx2 + y * y;
    const double r1c = r1sq * std::sqrt(r1sq), r2c = r2sq * std::sqrt(r2sq);
    jx = x - (1.0 - mu) * dx1 / r1c - mu * dx2 / r2c;
    jy = y - (1.0 - mu) * y / r1c - mu * y / r2c;
}

inline void cr3bp_potential_hessian(double mu, double x, double y, double& jxx, double& jxy,
                                    double& jyy) {
    const double dx1 = x + mu, dx2 = x - 1.0 + mu;
    const double r1sq = dx1 * dx1 + y * y, r2sq = dx2 * dx2 + y * y;
    const double r1c = r1sq * std::sqrt(r1sq), r2c = r2sq * std::sqrt(r2sq);
    const double r15 = r1c * r1sq, r25 = r2c * r2sq;
    jxx = 1.0 - (1.0 - mu) * (1.0 / r1c - 3.0 * dx1 * dx1 / r15) - mu * (1.0 / r2c - 3.0 * dx2 * dx2 / r25);
    jxy = 3.0 * (1.0 - mu) * dx1 * y / r15 + 3.0 * mu * dx2 * y / r25;
    jyy = 1.0 - (1.0 - mu) * (1.0 / r1c - 3.0 * y * y / r15) - mu * (1.0 / r2c - 3.0 * y * y / r25);
}

/// Rotating-frame energy E = (vx^2 + vy^2)/2 - J(x,y), a constant of motion.
inline double cr3bp_energy(double mu, std::span<const double> z) {
    return 0.5 * (z[2] * z[2] + z[3] * z[3]) - cr3bp_potential(mu, z[0], z[1]);
}

/// L1 x-coordinate from the classical series in b = (a/3)^{1/3}, a = mu/(1-mu).
inline double cr3bp_l1x_series(double mu) {
    const double a = mu / (1.0 - mu);
    const double b = std::cbrt(a / 3.0);
    const double g1 = b - b * b / 3.0 - b * b * b / 9.0 - 23.0 * b * b * b * b / 81.0;
    return 1.0 - mu - g1;
}

/// L1 x-coordinate refined by bisection on dJ/dx(x, 0) = 0 between the
/// primaries, to ~1e-14.
inline double cr3bp_l1x(double mu) {
    auto f = [mu](double x) {
        double jx, jy;
        cr3bp_potential_gradient(mu, x, 0.0, jx, jy);
        return jx;
    };
    double lo = -mu + 1e-6, hi = 1.0 - mu - 1e-6;
    double x0 = cr3bp_l1x_series(mu);
    if (x0 > lo && x0 < hi) {  // tighten the bracket around the series value
        double w = 0.05;
        if (f(x0 - w) < 0.0 && f(x0 + w) > 0.0) {
            lo = x0 - w;
            hi = x0 + w;
        }
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// v_y (negative branch) from the energy level: v_y = -sqrt(2(E0 + J) - vx^2).
/// Empty when the radicand is negative (energetically forbidden state).
inline std::optional<double> cr3bp_vy_from_energy(double x, double vx, double e0, double mu) {
    const double rad = 2.0 * (e0 + cr3bp_potential(mu, x, 0.0)) - vx * vx;
    if (rad < 0.0) return std::nullopt;
    return -std::sqrt(rad);
}

class Cr3bp : public SystemModel {
  public:
    static constexpr double kCollisionRadius = 1e-3;
    static constexpr double kEscapeRadius = 10.0;

    std::string name() const override { return "cr3bp"; }
    int dim() const override { return 4; }
    int param_dim() const override { return 1; }
    std::vector<std::string> state_names() const override { return {"x", "y", "v_x", "v_y"}; }

    void rhs(double /*t*/, std::span<const double> p, std::span<const double> z,
             std::span<double> dz) const override {
        double jx, jy;
        cr3bp_potential_gradient(p[0], z[0], z[1], jx, jy);
        dz[0] = z[2];
        dz[1] = z[3];
        dz[2] = 2.0 * z[3] + jx;
        dz[3] = -2.0 * z[2] + jy;
    }

    void jacobian(double /*t*/, std::span<const double> p, std::span<const double> z,
                  Mat& jac) const override {
        double jxx, jxy, jyy;
        cr3bp_potential_hessian(p[0], z[0], z[1], jxx, jxy, jyy);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) jac(i, j) = 0.0;
        jac(0, 2) = 1.0;
        jac(1, 3) = 1.0;
        jac(2, 0) = jxx;
        jac(2, 1) = jxy;
        jac(2, 3) = 2.0;
        jac(3, 0) = jxy;
        jac(3, 1) = jyy;
        jac(3, 2) = -2.0;
    }

    Status guards(std::span<const double> p, std::span<const double> z) const override {
        const double mu = mass_parameter(p);
        const double dx1 = z[0] + mu, dx2 = z[0] - 1.0 + mu;
        if (dx1 * dx1 + z[1] * z[1] < kCollisionRadius * kCollisionRadius) return Status::collision;
        if (dx2 * dx2 + z[1] * z[1] < kCollisionRadius * kCollisionRadius) return Status::collision;
        if (z[0] * z[0] + z[1] * z[1] > kEscapeRadius * kEscapeRadius) return Status::escape;
        return Status::ok;
    }

    std::optional<double> energy(double /*t*/, std::span<const double> p,
                                 std::span<const double> z) const override {
        return cr3bp_energy(p[0], z);
    }

    UncertaintyBox default_box() const override { return UncertaintyBox({{0.1 - 1e-3, 0.1 + 1e-3}}); }
    std::pair<double, double> default_tolerances() const override { return {1e-10, 1e-8}; }

  protected:
    virtual double mass_parameter(std::span<const double> p) const { return p[0]; }
};

// ---------------------------------------------------------------------------
// Planar elliptic restricted three-body problem in true anomaly, with
// uncertain (e, mu)
// ---------------------------------------------------------------------------

/// Pseudo-energy of the pulsating frame at true anomaly theta_s.
inline double er3bp_pseudo_energy(double e, double mu, double theta_s, std::span<const double> z) {
    const double d = 1.0 + e * std::cos(theta_s);
    return 0.5 * (z[2] * z[2] + z[3] * z[3]) - cr3bp_potential(mu, z[0], z[1]) / d;
}

/// v_y (negative branch) at theta_s0 = 0 from the pseudo-energy level.
inline std::optional<double> er3bp_vy_from_energy(double x, double vx, double e0, double e, double mu) {
    const double rad = 2.0 * (e0 + cr3bp_potential(mu, x, 0.0) / (1.0 + e)) - vx * vx;
    if (rad < 0.0) return std::nullopt;
    return -std::sqrt(rad);
}

class Er3bp final : public Cr3bp {
  public:
    std::string name() const override { return "er3bp"; }
    int param_dim() const override { return 2; }  // (e, mu)

    void rhs(double theta_s, std::span<const double> p, std::span<const double> z,
             std::span<double> dz) const override {
        double jx, jy;
        cr3bp_potential_gradient(p[1], z[0], z[1], jx, jy);
        const double d = 1.0 + p[0] * std::cos(theta_s);
        dz[0] = z[2];
        dz[1] = z[3];
        dz[2] = 2.0 * z[3] + jx / d;
        dz[3] = -2.0 * z[2] + jy / d;
    }

    void jacobian(double theta_s, std::span<const double> p, std::span<const double> z,
                  Mat& jac) const override {
        double jxx, jxy, jyy;
        cr3bp_potential_hessian(p[1], z[0], z[1], jxx, jxy, jyy);
        const double d = 1.0 + p[0] * std::cos(theta_s);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) jac(i, j) = 0.0;
        jac(0, 2) = 1.0;
        jac(1, 3) = 1.0;
        jac(2, 0) = jxx / d;
        jac(2, 1) = jxy / d;
        jac(2, 3) = 2.0;
        jac(3, 0) = jxy / d;
        jac(3, 1) = jyy / d;
        jac(3, 2) = -2.0;
    }

    std::optional<double> energy(double theta_s, std::span<const double> p,
                                 std::span<const double> z) const override {
        return er3bp_pseudo_energy(p[0], p[1], theta_s, z);
    }

    UncertaintyBox default_box() const override {
        return UncertaintyBox({{0.04 - 1e-3, 0.04 + 1e-3}, {0.1 - 1e-3, 0.1 + 1e-3}});
    }

    /// Configured final times count revolutions of the primaries; the
    /// integration variable is the true anomaly.
    double time_scale() const override { return 2.0 * std::numbers::pi; }

  protected:
    double mass_parameter(std::span<const double> p) const override { return p[1]; }
};

// ---------------------------------------------------------------------------
// Ad-hoc systems (test dynamics, closed-form references)
// ---------------------------------------------------------------------------

/// Wrap plain callables as a SystemModel. Jacobian defaults to central
/// finite differences when no analytic one is supplied.
class SimpleSystem final : public SystemModel {
  public:
    using RhsFn = std::function<void(double, std::span<const double>, std::span<const double>, std::span<double>)>;
    using JacFn = std::function<void(double, std::span<const double>, std::span<const double>, Mat&)>;
    using GuardFn = std::function<Status(std::span<const double>, std::span<const double>)>;

    SimpleSystem(std::string name, int n, int n_p, RhsFn rhs, UncertaintyBox box, JacFn jac = nullptr,
                 GuardFn guard = nullptr)
        : name_(std::move(name)), n_(n), n_p_(n_p), rhs_(std::move(rhs)), jac_(std::move(jac)),
          guard_(std::move(guard)), box_(std::move(box)) {}

    std::string name() const override { return name_; }
    int dim() const override { return n_; }
    int param_dim() const override { return n_p_; }
    std::vector<std::string> state_names() const override {
        std::vector<std::string> names(n_);
        for (int i = 0; i < n_; ++i) names[i] = "z" + std::to_string(i + 1);
        return names;
    }

    void rhs(double t, std::span<const double> p, std::span<const double> z,
             std::span<double> dz) const override {
        rhs_(t, p, z, dz);
    }

    void jacobian(double t, std::span<const double> p, std::span<const double> z,
                  Mat& jac) const override {
        if (jac_) {
            jac_(t, p, z, jac);
            return;
        }
        const double h = 1e-7;
        Vec zp(z.begin(), z.end()), zm(z.begin(), z.end()), fp(n_), fm(n_);
        for (int j = 0; j < n_; ++j) {
            zp[j] = z[j] + h;
            zm[j] = z[j] - h;
            rhs_(t, p, zp, fp);
            rhs_(t, p, zm, fm);
            for (int i = 0; i < n_; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
            zp[j] = z[j];
            zm[j] = z[j];
        }
    }

    Status guards(std::span<const double> p, std::span<const double> z) const override {
        return guard_ ? guard_(p, z) : Status::ok;
    }

    UncertaintyBox default_box() const override { return box_; }

  private:
    std::string name_;
    int n_, n_p_;
    RhsFn rhs_;
    JacFn jac_;
    GuardFn guard_;
    UncertaintyBox box_;
};

/// Registry keyed by name for CLI selection.
inline std::shared_ptr<const SystemModel> make_system(const std::string& name) {
    if (name == "pendulum") return std::make_shared<Pendulum>();
    if (name == "double_gyre") return std::make_shared<DoubleGyre>();
    if (name == "cr3bp") return std::make_shared<Cr3bp>();
    if (name == "er3bp") return std::make_shared<Er3bp>();
    throw std::invalid_argument("unknown system: " + name +
                                " (known: pendulum, double_gyre, cr3bp, er3bp)");
}

inline std::vector<std::string> system_names() { return {"pendulum", "double_gyre", "cr3bp", "er3bp"}; }

}  // namespace sdi
