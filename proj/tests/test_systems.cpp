#include <doctest.h>

#include "sdi/odeint.hpp"
#include "sdi/rng.hpp"
#include "sdi/systems.hpp"

using namespace sdi;

namespace {
/// Central-difference Jacobian oracle.
Mat fd_jacobian(const SystemModel& sys, double t, const Vec& p, const Vec& z, double h = 1e-6) {
    const int n = sys.dim();
    Mat jac(n, n);
    Vec zp = z, zm = z, fp(n), fm(n);
    for (int j = 0; j < n; ++j) {
        zp[j] = z[j] + h;
        zm[j] = z[j] - h;
        sys.rhs(t, p, zp, fp);
        sys.rhs(t, p, zm, fm);
        for (int i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
        zp[j] = z[j];
        zm[j] = z[j];
    }
    return jac;
}

void check_jacobian_consistency(const SystemModel& sys, const std::function<Vec(Rng&)>& random_state,
                                double t_lo, double t_hi) {
    Rng rng(42);
    Mat jac(sys.dim(), sys.dim());
    for (int round = 0; round < 100; ++round) {
        double t = rng.uniform(t_lo, t_hi);
        UncertaintyBox box = sys.default_box();
        Vec p(box.size());
        for (int d = 0; d < box.size(); ++d) p[d] = rng.uniform(box.dims[d].lo, box.dims[d].hi);
        Vec z = random_state(rng);
        sys.jacobian(t, p, z, jac);
        Mat fd = fd_jacobian(sys, t, p, z);
        for (int i = 0; i < sys.dim(); ++i)
            for (int j = 0; j < sys.dim(); ++j) {
                double scale = std::max({std::abs(jac(i, j)), std::abs(fd(i, j)), 1.0});
                CHECK(std::abs(jac(i, j) - fd(i, j)) / scale < 1e-5);
            }
    }
}
}  // namespace

TEST_CASE("pendulum right-hand side") {
    Pendulum sys;
    Vec dz(2);
    sys.rhs(0.0, Vec{2.5}, Vec{std::numbers::pi / 2, 0.0}, dz);
    CHECK(dz[0] == 0.0);
    CHECK(dz[1] == doctest::Approx(1.5).epsilon(1e-15));

    // x = 0: no acceleration for any t, a
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        sys.rhs(rng.uniform(0, 10), Vec{rng.uniform(2.25, 2.75)}, Vec{0.0, rng.uniform(-3, 3)}, dz);
        CHECK(dz[1] == 0.0);
    }
}

TEST_CASE("pendulum odd symmetry is exact") {
    Pendulum sys;
    Rng rng(2);
    Vec dz(2), dzm(2);
    for (int i = 0; i < 50; ++i) {
        double t = rng.uniform(0, 10), a = rng.uniform(2.25, 2.75);
        Vec z{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        sys.rhs(t, Vec{a}, z, dz);
        sys.rhs(t, Vec{a}, Vec{-z[0], -z[1]}, dzm);
        CHECK(dzm[0] == -dz[0]);
        CHECK(dzm[1] == -dz[1]);
    }
}

TEST_CASE("double gyre right-hand side") {
    DoubleGyre sys;
    Vec dz(2);
    sys.rhs(0.0, Vec{0.1}, Vec{0.5, 0.25}, dz);
    CHECK(dz[0] == doctest::Approx(-0.2221441469079183).epsilon(1e-13));
    CHECK(dz[1] == doctest::Approx(0.0).epsilon(1e-15));

    sys.rhs(0.0, Vec{0.1}, Vec{1.0, 0.5}, dz);
    CHECK(dz[0] == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(dz[1] == doctest::Approx(-0.3141592653589793).epsilon(1e-13));

    // flow tangent to the y = 0 boundary
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        sys.rhs(rng.uniform(0, 20), Vec{rng.uniform(0.09, 0.11)}, Vec{rng.uniform(0, 2), 0.0}, dz);
        CHECK(dz[1] == 0.0);
    }
}

TEST_CASE("cr3bp L1 and energy levels") {
    CHECK(cr3bp_l1x_series(0.1) == doctest::Approx(0.6113244932174973).epsilon(1e-12));
    double l1 = cr3bp_l1x(0.1);
    CHECK(l1 == doctest::Approx(0.6090351100232025).epsilon(1e-10));

    // refined L1 with zero velocity is an equilibrium of the flow
    Cr3bp sys;
    Vec dz(4);
    sys.rhs(0.0, Vec{0.1}, Vec{l1, 0.0, 0.0, 0.0}, dz);
    for (double v : dz) CHECK(std::abs(v) < 1e-11);

    double e_l1 = -cr3bp_potential(0.1, cr3bp_l1x_series(0.1), 0.0);
    CHECK(e_l1 == doctest::Approx(-1.8435138725115372).epsilon(1e-12));
    CHECK(e_l1 + 0.03715 == doctest::Approx(-1.8063638725115372).epsilon(1e-12));
}

TEST_CASE("cr3bp v_y from the energy level") {
    const double mu = 0.1;
    const double e0 = -cr3bp_potential(mu, cr3bp_l1x_series(mu), 0.0) + 0.03715;
    SUBCASE("round trip energy") {
        auto vy = cr3bp_vy_from_energy(-0.5, 0.3, e0, mu);
        REQUIRE(vy.has_value());
        CHECK(*vy < 0.0);
        Vec z{-0.5, 0.0, 0.3, *vy};
        CHECK(cr3bp_energy(mu, z) == doctest::Approx(e0).epsilon(1e-13));
    }
    SUBCASE("negative radicand is forbidden") {
        CHECK_FALSE(cr3bp_vy_from_energy(-0.5, 5.0, e0, mu).has_value());
    }
}

TEST_CASE("cr3bp guards") {
    Cr3bp sys;
    CHECK(sys.guards(Vec{0.1}, Vec{-0.5, 0.0, 0.0, 0.0}) == Status::ok);
    CHECK(sys.guards(Vec{0.1}, Vec{-0.1 + 1e-4, 0.0, 0.0, 0.0}) == Status::collision);   // primary 1 at (-mu, 0)
    CHECK(sys.guards(Vec{0.1}, Vec{0.9 + 1e-4, 1e-5, 0.0, 0.0}) == Status::collision);   // primary 2 at (1-mu, 0)
    CHECK(sys.guards(Vec{0.1}, Vec{10.5, 0.0, 0.0, 0.0}) == Status::escape);
}

TEST_CASE("er3bp reduces to cr3bp at zero eccentricity") {
    Er3bp er;
    Cr3bp cr;
    Rng rng(4);
    Vec dze(4), dzc(4);
    for (int i = 0; i < 50; ++i) {
        double th = rng.uniform(0, 20), mu = rng.uniform(0.099, 0.101);
        Vec z{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        er.rhs(th, Vec{0.0, mu}, z, dze);
        cr.rhs(th, Vec{mu}, z, dzc);
        for (int c = 0; c < 4; ++c) CHECK(dze[c] == dzc[c]);
    }
}

TEST_CASE("er3bp divisor drops out at theta_s = pi/2") {
    Er3bp er;
    Vec a(4), b(4);
    Vec z{-0.4, 0.2, 0.1, -0.3};
    er.rhs(std::numbers::pi / 2, Vec{0.04, 0.1}, z, a);
    er.rhs(std::numbers::pi / 2, Vec{0.3, 0.1}, z, b);
    for (int c = 0; c < 4; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-14));
}

TEST_CASE("er3bp pseudo-energy round trip at theta_s0 = 0") {
    const double e = 0.04, mu = 0.1;
    const double e0 = -cr3bp_potential(mu, cr3bp_l1x_series(mu), 0.0) + 0.03715;
    auto vy = er3bp_vy_from_energy(-0.5, 0.3, e0, e, mu);
    REQUIRE(vy.has_value());
    Vec z{-0.5, 0.0, 0.3, *vy};
    CHECK(er3bp_pseudo_energy(e, mu, 0.0, z) == doctest::Approx(e0).epsilon(1e-13));
}

TEST_CASE("analytic Jacobians agree with finite differences") {
    SUBCASE("pendulum") {
        Pendulum sys;
        check_jacobian_consistency(
            sys, [](Rng& r) { return Vec{r.uniform(-3, 3), r.uniform(-3, 3)}; }, 0.0, 10.0);
    }
    SUBCASE("double gyre") {
        DoubleGyre sys;
        check_jacobian_consistency(
            sys, [](Rng& r) { return Vec{r.uniform(0, 2), r.uniform(0, 1)}; }, 0.0, 20.0);
    }
    SUBCASE("cr3bp") {
        Cr3bp sys;
        check_jacobian_consistency(
            sys,
            [](Rng& r) {
                return Vec{r.uniform(-0.85, -0.125), r.uniform(-0.5, 0.5), r.uniform(-2, 2), r.uniform(-2, 2)};
            },
            0.0, 2.8);
    }
    SUBCASE("er3bp") {
        Er3bp sys;
        check_jacobian_consistency(
            sys,
            [](Rng& r) {
                return Vec{r.uniform(-0.85, -0.125), r.uniform(-0.5, 0.5), r.uniform(-2, 2), r.uniform(-2, 2)};
            },
            0.0, 17.6);
    }
}

TEST_CASE("er3bp matches cr3bp trajectory when e = 0") {
    Er3bp er;
    Cr3bp cr;
    const double e0 = -cr3bp_potential(0.1, cr3bp_l1x_series(0.1), 0.0) + 0.03715;
    auto vy = cr3bp_vy_from_energy(-0.5, 0.0, e0, 0.1);
    REQUIRE(vy.has_value());
    Vec z0{-0.5, 0.0, 0.0, *vy};
    IntegratorConfig cfg{1e-10, 1e-8};
    PropagationResult a = integrate_system(er, Vec{0.0, 0.1}, z0, 0.0, 2.8, cfg);
    PropagationResult b = integrate_system(cr, Vec{0.1}, z0, 0.0, 2.8, cfg);
    REQUIRE(a.status == Status::ok);
    REQUIRE(b.status == Status::ok);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(a.final_state[c] - b.final_state[c]) < 1e-7);
}

TEST_CASE("system registry") {
    for (const auto& name : system_names()) CHECK(make_system(name)->name() == name);
    CHECK(make_system("er3bp")->time_scale() == doctest::Approx(2 * std::numbers::pi));
    CHECK(make_system("pendulum")->time_scale() == 1.0);
    CHECK_THROWS_AS((void)make_system("lorenz"), std::invalid_argument);
}
