#include <doctest.h>

#include "oracles.hpp"
#include "sdi/linalg.hpp"
#include "sdi/pce.hpp"
#include "sdi/rng.hpp"

using namespace sdi;

namespace {
std::shared_ptr<const PolynomialBasis> basis4 = std::make_shared<PolynomialBasis>(4, 1);
UncertaintyBox unit_box({{-1.0, 1.0}});

Mat sample_function(const QuadratureRule& rule, const UncertaintyBox& box,
                    const std::function<Vec(double)>& f) {
    Vec probe = f(map_to_box(rule.node(0), box)[0]);
    Mat states(rule.count(), static_cast<int>(probe.size()));
    for (int j = 0; j < rule.count(); ++j) {
        Vec z = f(map_to_box(rule.node(j), box)[0]);
        for (size_t c = 0; c < z.size(); ++c) states(j, static_cast<int>(c)) = z[c];
    }
    return states;
}
}  // namespace

TEST_CASE("projection of simple functions") {
    QuadratureRule rule = gauss_rule(9, 1);

    SUBCASE("linear: z = 2 xi") {
        Mat s = sample_function(rule, unit_box, [](double p) { return Vec{2.0 * p}; });
        CoefficientSet cs = project_samples(s, 0.0, basis4, unit_box, rule);
        CHECK(cs.coeffs(1, 0) == doctest::Approx(2.0).epsilon(1e-13));
        for (int k : {0, 2, 3, 4}) CHECK(std::abs(cs.coeffs(k, 0)) < 1e-12);
    }
    SUBCASE("constant vector state") {
        Mat s(rule.count(), 2);
        for (int j = 0; j < rule.count(); ++j) {
            s(j, 0) = 1.0;
            s(j, 1) = 2.0;
        }
        CoefficientSet cs = project_samples(s, 0.0, basis4, unit_box, rule);
        CHECK(cs.coeffs(0, 0) == doctest::Approx(1.0));
        CHECK(cs.coeffs(0, 1) == doctest::Approx(2.0));
        for (int k = 1; k < 5; ++k)
            for (int c = 0; c < 2; ++c) CHECK(std::abs(cs.coeffs(k, c)) < 1e-13);
    }
    SUBCASE("quadratic: z = xi^2 = Psi_2 + 1/4") {
        Mat s = sample_function(rule, unit_box, [](double p) { return Vec{p * p}; });
        CoefficientSet cs = project_samples(s, 0.0, basis4, unit_box, rule);
        CHECK(cs.coeffs(0, 0) == doctest::Approx(0.25).epsilon(1e-13));
        CHECK(cs.coeffs(2, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(cs.coeffs(1, 0)) < 1e-12);
        CHECK(std::abs(cs.coeffs(3, 0)) < 1e-12);
    }
    SUBCASE("non-finite sample marks the set invalid") {
        Mat s(rule.count(), 1);
        s(3, 0) = kNaN;
        CoefficientSet cs = project_samples(s, 0.0, basis4, unit_box, rule);
        CHECK_FALSE(cs.valid);
        MomentSummary ms = moments(cs);
        CHECK_FALSE(ms.valid);
        CHECK(std::isnan(ms.variance[0]));
    }
}

TEST_CASE("projection of initial conditions") {
    SUBCASE("deterministic state: c_0 only, exactly") {
        Vec z0{0.889447, -0.19598};
        CoefficientSet cs = project_initial(z0, basis4, UncertaintyBox({{2.25, 2.75}}));
        CHECK(cs.coeffs(0, 0) == 0.889447);
        CHECK(cs.coeffs(0, 1) == -0.19598);
        for (int k = 1; k < 5; ++k)
            for (int c = 0; c < 2; ++c) CHECK(cs.coeffs(k, c) == 0.0);
    }
    SUBCASE("identity function of p") {
        QuadratureRule rule = gauss_rule(9, 1);
        CoefficientSet cs = project_initial([](std::span<const double> p) { return Vec{p[0]}; }, basis4,
                                            unit_box, rule);
        CHECK(cs.coeffs(1, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(cs.coeffs(0, 0)) < 1e-13);
    }
    SUBCASE("tiny box around a nominal value scales the linear coefficient") {
        QuadratureRule rule = gauss_rule(9, 1);
        UncertaintyBox tiny({{0.5 - 5e-6, 0.5 + 5e-6}});
        CoefficientSet cs = project_initial([](std::span<const double> p) { return Vec{p[0]}; }, basis4,
                                            tiny, rule);
        CHECK(cs.coeffs(1, 0) == doctest::Approx(5e-6).epsilon(1e-10));
    }
}

TEST_CASE("evaluation of the expansion") {
    CoefficientSet cs;
    cs.basis = basis4;
    cs.box = unit_box;
    cs.coeffs = Mat(5, 2);
    cs.coeffs(0, 0) = 1.0;
    cs.coeffs(0, 1) = 2.0;
    SUBCASE("constant expansion") {
        Vec z = evaluate(cs, Vec{0.77});
        CHECK(z[0] == 1.0);
        CHECK(z[1] == 2.0);
    }
    SUBCASE("linear term is monic") {
        cs.coeffs(1, 0) = 1.0;
        CHECK(evaluate(cs, Vec{0.5})[0] == doctest::Approx(1.5).epsilon(1e-15));
    }
    SUBCASE("Psi_2 vanishes at 0.5") {
        cs.coeffs(0, 0) = 0.25;
        cs.coeffs(2, 0) = 1.0;
        CHECK(evaluate(cs, Vec{0.5})[0] == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("out-of-box point rejected") {
        CHECK_THROWS_AS((void)evaluate(cs, Vec{1.5}), std::invalid_argument);
    }
}

TEST_CASE("round trip: degree <= m polynomials survive project + evaluate") {
    QuadratureRule rule = gauss_rule(9, 1);
    UncertaintyBox box({{1.0, 3.0}});
    auto f = [](double p) { return Vec{0.3 + 0.7 * p - 1.1 * p * p + 0.25 * p * p * p, 2.0 - p * p}; };
    Mat s = sample_function(rule, box, f);
    CoefficientSet cs = project_samples(s, 0.0, basis4, box, rule);
    Rng rng(123);
    for (int i = 0; i < 100; ++i) {
        double p = rng.uniform(1.0, 3.0);
        Vec z = evaluate(cs, Vec{p});
        Vec want = f(p);
        CHECK(std::abs(z[0] - want[0]) < 1e-10);
        CHECK(std::abs(z[1] - want[1]) < 1e-10);
    }
}

TEST_CASE("moments") {
    SUBCASE("hand-computed variance: c_1 = 2, c_2 = 4") {
        CoefficientSet cs;
        cs.basis = basis4;
        cs.box = unit_box;
        cs.coeffs = Mat(5, 1);
        cs.coeffs(1, 0) = 2.0;
        cs.coeffs(2, 0) = 4.0;
        MomentSummary ms = moments(cs);
        CHECK(ms.variance[0] == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(ms.covariance(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
    }
    SUBCASE("odd coefficients only: zero third central moment and skewness") {
        CoefficientSet cs;
        cs.basis = basis4;
        cs.box = unit_box;
        cs.coeffs = Mat(5, 1);
        cs.coeffs(1, 0) = 0.8;
        cs.coeffs(3, 0) = -0.4;
        MomentSummary ms = moments(cs);
        CHECK(std::abs(ms.central3[0]) < 1e-14);
        CHECK(std::abs(ms.skewness[0]) < 1e-13);
    }
    SUBCASE("constant expansion: zero variance, zero covariance, zero skewness") {
        CoefficientSet cs;
        cs.basis = basis4;
        cs.box = unit_box;
        cs.coeffs = Mat(5, 2);
        cs.coeffs(0, 0) = 3.0;
        cs.coeffs(0, 1) = -1.5;
        MomentSummary ms = moments(cs);
        for (int c = 0; c < 2; ++c) {
            CHECK(ms.variance[c] == 0.0);
            CHECK(ms.skewness[c] == 0.0);  // degenerate variance convention
        }
        CHECK(ms.covariance(0, 1) == 0.0);
    }
    SUBCASE("third central moment against the multinomial hand value") {
        // sigma_1 = sigma_2 = 1: central3 = 3 <112> + <222> = 3/16 + 1/64 = 13/64
        CoefficientSet cs;
        cs.basis = basis4;
        cs.box = unit_box;
        cs.coeffs = Mat(5, 1);
        cs.coeffs(1, 0) = 1.0;
        cs.coeffs(2, 0) = 1.0;
        MomentSummary ms = moments(cs);
        CHECK(ms.central3[0] == doctest::Approx(13.0 / 64.0).epsilon(1e-12));
        // oracle: direct quadrature of (xi + xi^2 - 1/4)^3
        QuadratureRule rule = gauss_rule(9, 1);
        double acc = 0.0;
        for (int q = 0; q < rule.count(); ++q) {
            double x = rule.node(q)[0];
            double d = x + x * x - 0.25;
            acc += rule.weights[q] * d * d * d;
        }
        CHECK(ms.central3[0] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("moments match Monte Carlo over semicircle-distributed samples") {
    QuadratureRule rule = gauss_rule(9, 1);
    UncertaintyBox box({{1.0, 3.0}});
    auto f = [](double p) { return Vec{std::exp(0.3 * p) + 0.5 * p * p}; };
    Mat s = sample_function(rule, box, f);
    CoefficientSet cs = project_samples(s, 0.0, basis4, box, rule);
    MomentSummary ms = moments(cs);

    const int n = 100000;
    Rng rng(99);
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    Vec vals(n);
    for (int i = 0; i < n; ++i) {
        double xi = rng.semicircle();
        vals[i] = evaluate(cs, map_to_box(Vec{xi}, box))[0];
        sum += vals[i];
    }
    double mean = sum / n;
    for (int i = 0; i < n; ++i) {
        double d = vals[i] - mean;
        sum2 += d * d;
        sum4 += d * d * d * d;
    }
    double var = sum2 / (n - 1);
    double m4 = sum4 / n;
    double se_var = std::sqrt(std::max(m4 - var * var, 0.0) / n);
    CHECK(std::abs(ms.variance[0] - var) < 3.0 * se_var);
}

TEST_CASE("covariance symmetric positive semi-definite") {
    QuadratureRule rule = gauss_rule(9, 1);
    UncertaintyBox box({{-1.0, 1.0}});
    Rng rng(5);
    for (int round = 0; round < 10; ++round) {
        CoefficientSet cs;
        cs.basis = basis4;
        cs.box = box;
        cs.coeffs = Mat(5, 3);
        for (int k = 0; k < 5; ++k)
            for (int c = 0; c < 3; ++c) cs.coeffs(k, c) = rng.uniform(-2.0, 2.0);
        MomentSummary ms = moments(cs);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(ms.covariance(i, j) == ms.covariance(j, i));
        Vec eigs = sym_eig(ms.covariance);
        CHECK(eigs.back() >= -1e-10 * std::max(eigs.front(), 0.0) - 1e-300);
    }
}
