#pragma once

#include <chrono>
#include <sstream>

#include "sdi/fieldio.hpp"

namespace sdi {

struct CheckResult {
    std::string name;
    int criterion = 0;
    bool pass = false;
    double measured = kNaN;
    double threshold = kNaN;
    std::string comparator;  // how measured relates to threshold when passing
    std::string detail;
    double elapsed_seconds = 0.0;
};

/// Negative-control hooks for the verification suite: a deliberately
/// perturbed basis norm must make the moment-oracle check fail.
struct FaultInjection {
    double s1_scale = 1.0;
};

namespace checks {

namespace detail {
inline double semicircle_moment_analytic(int k) {
    if (k % 2 != 0) return 0.0;
    int j = k / 2;
    double catalan = 1.0;
    for (int i = 0; i < j; ++i) catalan = catalan * 2.0 * (2.0 * i + 1.0) / (i + 2.0);
    return catalan / std::pow(4.0, j);
}

inline double spearman(const Vec& a, const Vec& b) {
    auto ranks = [](const Vec& v) {
        std::vector<size_t> order(v.size());
        for (size_t i = 0; i < v.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return v[x] < v[y]; });
        Vec r(v.size());
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    Vec ra = ranks(a), rb = ranks(b);
    double ma = 0, mb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline std::shared_ptr<const PolynomialBasis> basis_with_fault(int m, int n_p, double s1_scale) {
    if (s1_scale == 1.0) return std::make_shared<PolynomialBasis>(m, n_p);
    Vec a(std::max(m, 1), 0.0), b(std::max(m, 1), 0.0);
    for (int i = 1; i < m; ++i) b[i] = 0.25;
    Vec s1(m + 1, 1.0);
    for (int k = 1; k <= m; ++k) s1[k] = s1[k - 1] * 0.25;
    if (m >= 1) s1[1] *= s1_scale;
    return std::make_shared<PolynomialBasis>(m, n_p, a, b, s1);
}
}  // namespace detail

// 1. Quadrature/basis exactness against analytic semicircle moments.
inline CheckResult quadrature_moments() {
    CheckResult r{"quadrature_moments", 1};
    QuadratureRule rule = gauss_rule(9, 1);
    double worst = 0.0;
    for (int k = 0; k <= 17; ++k) {
        double acc = 0.0;
        for (int j = 0; j < rule.count(); ++j) acc += rule.weights[j] * std::pow(rule.node(j)[0], k);
        worst = std::max(worst, std::abs(acc - detail::semicircle_moment_analytic(k)));
    }
    r.measured = worst;
    r.threshold = 1e-12;
    r.comparator = "<=";
    r.pass = worst <= r.threshold;
    r.detail = "max |quadrature - analytic| over xi^0..xi^17, N = 9";
    return r;
}

// 2. Analytic pseudo-diffusion exponent for dz/dt = p.
inline CheckResult alpha_analytic() {
    CheckResult r{"alpha_analytic", 2};
    SimpleSystem sys(
        "drift", 1, 1,
        [](double, std::span<const double> p, std::span<const double>, std::span<double> dz) {
            dz[0] = p[0];
        },
        UncertaintyBox({{-1.0, 1.0}}));
    auto basis = std::make_shared<PolynomialBasis>(4, 1);
    QuadratureRule rule = gauss_rule(9, 1);
    IndicatorConfig cfg;
    EnsembleResult ens = propagate_ensemble(sys, Vec{0.0}, sys.default_box(), rule, 0.0, 10.0, cfg.ode);
    CoefficientSet cs = project_samples(ens.states, 10.0, basis, sys.default_box(), rule);
    PseudoDiffusion pd = pseudo_diffusion(cs, 10.0, ens.worst_status(), cfg);
    r.measured = std::abs(pd.alpha - std::log(6.0) / std::log(10.0));
    r.threshold = 1e-8;
    r.comparator = "<=";
    r.pass = r.measured <= r.threshold;
    r.detail = "|alpha~ - ln6/ln10| for dz/dt = p, z0 = 0, tf = 10";
    return r;
}

// 3. FTLE reference values: saddle -> 1, rotation -> 0.
inline CheckResult ftle_reference() {
    CheckResult r{"ftle_reference", 3};
    UncertaintyBox box({{-1.0, 1.0}});
    SimpleSystem saddle(
        "saddle", 2, 1,
        [](double, std::span<const double>, std::span<const double> z, std::span<double> dz) {
            dz[0] = z[0];
            dz[1] = -z[1];
        },
        box);
    SimpleSystem rotation(
        "rotation", 2, 1,
        [](double, std::span<const double>, std::span<const double> z, std::span<double> dz) {
            dz[0] = -z[1];
            dz[1] = z[0];
        },
        box);
    IndicatorConfig cfg;
    auto [fs, sts] = ftle(saddle, Vec{0.1, 0.1}, Vec{0.0}, 0.0, 10.0, cfg);
    auto [fr, str] = ftle(rotation, Vec{0.3, -0.2}, Vec{0.0}, 0.0, 10.0, cfg);
    r.measured = std::max(std::abs(fs - 1.0), std::abs(fr));
    r.threshold = 1e-6;
    r.comparator = "<=";
    r.pass = sts == Status::ok && str == Status::ok && r.measured <= r.threshold;
    r.detail = "max(|saddle - 1|, |rotation - 0|), tf = 10, delta_z = 1e-7";
    return r;
}

// 4. Proposition 5: covariance eigenvalues proportional to the FD
//    Cauchy-Green eigenvalues under first-order IC expansion.
inline CheckResult prop5_ratio() {
    CheckResult r{"prop5_ratio", 4};
    Pendulum sys;
    const double edge = 1e-5, t_f = 10.0;
    Rng rng(77);
    IndicatorConfig cfg;
    Vec p_nom{2.5};
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    auto basis = std::make_shared<PolynomialBasis>(1, 2);
    QuadratureRule rule = gauss_rule(3, 2);
    for (int trial = 0; trial < 10; ++trial) {
        Vec z0{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        std::vector<Interval> dims;
        for (double v : z0) dims.emplace_back(v - edge / 2, v + edge / 2);
        UncertaintyBox ic_box{dims};
        EnsembleResult ens = propagate_ensemble_ic(sys, p_nom, ic_box, rule, 0.0, t_f, cfg.ode);
        if (ens.worst_status() != Status::ok) continue;
        CoefficientSet cs = project_samples(ens.states, t_f, basis, ic_box, rule);
        Vec ev_cv = sym_eig(covariance_matrix(cs));
        Mat phi(2, 2);
        if (sdi::detail::flow_map_fd(sys, p_nom, z0, 0.0, t_f, cfg.delta_z, cfg.ode, phi) != Status::ok)
            continue;
        Vec ev_cg = sym_eig(gram(phi));
        for (int i = 0; i < 2; ++i) {
            double ratio = ev_cv[i] / ev_cg[i];
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
        }
    }
    r.measured = (rmax - rmin) / rmax;
    r.threshold = 1e-3;
    r.comparator = "<=";
    r.pass = r.measured <= r.threshold;
    std::ostringstream d;
    d << "relative spread of lambda(C_v)/lambda(CG) over 10 ICs x 2 eigenvalues; common ratio ~" << rmax;
    r.detail = d.str();
    return r;
}

// 5. Similitude of log(alpha~) in IC-uncertainty mode with the FTLE.
inline CheckResult ftle_alpha_spearman(int workers = 1) {
    CheckResult r{"ftle_alpha_spearman", 5};
    Pendulum sys;
    GridSpec grid;
    grid.axis1 = {"x", -3.0, 3.0, 50};
    grid.axis2 = {"v_x", -3.0, 3.0, 50};
    SweepConfig sc;
    sc.ind.t_f = 10.0;
    sc.ind.degree = 1;
    sc.ind.n_per_dim = 3;
    sc.select.ftle = true;
    sc.select.alpha = true;
    sc.ic_uncertainty_edge = 1e-5;
    sc.workers = workers;
    FieldResult f = sweep(sys, grid, sys.default_box(), sc);
    int cf = f.column_index("ftle"), ca = f.column_index("alpha_tilde");
    Vec ftle_vals, log_alpha;
    for (long i = 0; i < f.grid.cells(); ++i) {
        double fv = f.values(static_cast<int>(i), cf), av = f.values(static_cast<int>(i), ca);
        if (f.status[i] != Status::ok || !std::isfinite(fv) || !(av > 0.0)) continue;
        ftle_vals.push_back(fv);
        log_alpha.push_back(std::log(av));
    }
    r.measured = detail::spearman(log_alpha, ftle_vals);
    r.threshold = 0.8;
    r.comparator = ">=";
    r.pass = log_alpha.size() > 2400 && r.measured >= r.threshold;
    std::ostringstream d;
    d << "Spearman(log alpha~, FTLE) over a 50x50 pendulum grid, IC box edge 1e-5, " << log_alpha.size()
      << " cells";
    r.detail = d.str();
    return r;
}

// 6. PCE variance against direct Monte Carlo integration.
inline CheckResult variance_mc(const FaultInjection& fault = {}) {
    CheckResult r{"variance_mc", 6};
    Pendulum sys;
    UncertaintyBox box({{2.25, 2.75}});
    Vec z0{0.889447, -0.19598};
    const double t_f = 10.0;
    IndicatorConfig cfg;
    auto basis = checks::detail::basis_with_fault(4, 1, fault.s1_scale);
    QuadratureRule rule = gauss_rule(9, 1);
    EnsembleResult ens = propagate_ensemble(sys, z0, box, rule, 0.0, t_f, cfg.ode);
    CoefficientSet cs = project_samples(ens.states, t_f, basis, box, rule);
    double var_pce = moments(cs).variance[0];

    const int n = 100000;
    Rng rng(99);
    Vec vals(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec a{2.5 + 0.25 * rng.semicircle()};
        PropagationResult pr = integrate_system(sys, a, z0, 0.0, t_f, cfg.ode);
        vals[i] = pr.final_state[0];
        sum += vals[i];
    }
    double mean = sum / n, sum2 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = vals[i] - mean;
        sum2 += d * d;
        sum4 += d * d * d * d;
    }
    double var_mc = sum2 / (n - 1);
    double se = std::sqrt(std::max(sum4 / n - var_mc * var_mc, 0.0) / n);
    r.measured = std::abs(var_pce - var_mc) / se;
    r.threshold = 3.0;
    r.comparator = "<=";
    r.pass = r.measured <= r.threshold;
    std::ostringstream d;
    d << "|var_pce - var_mc| in MC standard errors; var_pce = " << var_pce << ", var_mc = " << var_mc
      << " (1e5 direct integrations)";
    if (fault.s1_scale != 1.0) d << " [fault injection: s1 x " << fault.s1_scale << "]";
    r.detail = d.str();
    return r;
}

// 7. Intrusive Galerkin vs non-intrusive projection on the same case.
inline CheckResult cross_method() {
    CheckResult r{"cross_method", 7};
    Pendulum sys;
    UncertaintyBox box({{2.25, 2.75}});
    Vec z0{0.889447, -0.19598};
    auto basis = std::make_shared<PolynomialBasis>(4, 1);
    QuadratureRule rule = gauss_rule(9, 1);
    IndicatorConfig cfg;
    CoefficientSet cs0 = project_initial(z0, basis, box);
    CoefficientSet gal = propagate_galerkin(sys, cs0, 0.0, 10.0, cfg.ode, rule);
    EnsembleResult ens = propagate_ensemble(sys, z0, box, rule, 0.0, 10.0, cfg.ode);
    CoefficientSet prj = project_samples(ens.states, 10.0, basis, box, rule);
    double worst_vec = 0.0, worst_entry = 0.0;
    for (int k = 0; k < basis->terms(); ++k) {
        double dn = dist2(gal.coeffs.row(k), prj.coeffs.row(k));
        double bn = norm2(prj.coeffs.row(k));
        if (bn > 1e-6) worst_vec = std::max(worst_vec, dn / bn);
        for (int c = 0; c < 2; ++c)
            if (std::abs(prj.coeffs(k, c)) > 1e-6)
                worst_entry = std::max(worst_entry, std::abs(gal.coeffs(k, c) - prj.coeffs(k, c)) /
                                                        std::abs(prj.coeffs(k, c)));
    }
    r.measured = worst_vec;
    r.threshold = 1e-3;
    r.comparator = "<=";
    r.pass = gal.valid && prj.valid && r.measured <= r.threshold;
    std::ostringstream d;
    d << "max ||c_gal - c_proj||/||c_proj|| per coefficient vector with ||c|| > 1e-6 (worst single entry "
      << worst_entry << ")";
    r.detail = d.str();
    return r;
}

// 8. Central symmetry of pendulum FTLE, alpha_1^1 and alpha~ fields.
inline CheckResult field_symmetry(int workers = 1) {
    CheckResult r{"field_symmetry", 8};
    Pendulum sys;
    GridSpec grid;
    grid.axis1 = {"x", -3.0, 3.0, 50};
    grid.axis2 = {"v_x", -3.0, 3.0, 50};
    SweepConfig sc;
    sc.ind.t_f = 10.0;
    sc.select.ftle = true;
    sc.select.sftle1 = true;
    sc.select.alpha = true;
    sc.workers = workers;
    FieldResult f = sweep(sys, grid, sys.default_box(), sc);
    double worst = 0.0;
    for (const char* col : {"ftle", "alpha1_mean", "alpha_tilde"}) {
        int c = f.column_index(col);
        for (int iy = 0; iy < 50; ++iy)
            for (int ix = 0; ix < 50; ++ix) {
                double a = f.values(static_cast<int>(grid.cell_index(ix, iy)), c);
                double b = f.values(static_cast<int>(grid.cell_index(49 - ix, 49 - iy)), c);
                if (std::isfinite(a) && std::isfinite(b)) worst = std::max(worst, std::abs(a - b));
            }
    }
    r.measured = worst;
    r.threshold = 1e-6;
    r.comparator = "<=";
    r.pass = r.measured <= r.threshold;
    r.detail = "max mirrored-cell disagreement of FTLE, alpha1_mean, alpha~ on a symmetric 50x50 grid";
    return r;
}

// 9. CR3BP energy conservation at fixed mu.
inline CheckResult energy_drift() {
    CheckResult r{"energy_drift", 9};
    Cr3bp sys;
    const double mu = 0.1;
    const double e0 = paper_energy_level(mu);
    IntegratorConfig cfg{1e-10, 1e-8};
    Rng rng(11);
    double worst = 0.0;
    int tested = 0;
    while (tested < 20) {
        double x = rng.uniform(-0.85, -0.125), vx = rng.uniform(-2.0, 2.0);
        auto vy = cr3bp_vy_from_energy(x, vx, e0, mu);
        if (!vy) continue;
        Vec z0{x, 0.0, vx, *vy};
        PropagationResult pr = integrate_system(sys, Vec{mu}, z0, 0.0, 2.8, cfg);
        if (pr.status != Status::ok) continue;
        worst = std::max(worst, std::abs(cr3bp_energy(mu, pr.final_state) - cr3bp_energy(mu, z0)));
        ++tested;
    }
    r.measured = worst;
    r.threshold = 1e-7;
    r.comparator = "<=";
    r.pass = r.measured <= r.threshold;
    r.detail = "max |E(tf) - E(t0)| over 20 random valid ICs, tf = 2.8, tolerances (1e-10, 1e-8)";
    return r;
}

// 10. Collision saturation and forbidden-region handling.
inline CheckResult saturation_guards() {
    CheckResult r{"saturation_guards", 10};
    // (a) L4-study cells whose ensembles collide: alpha~ saturates to 1
    Cr3bp sys;
    GridSpec l4;
    l4.axis1 = {"x", 0.44, 0.56, 4};
    l4.axis2 = {"y", 0.70, 0.725, 2};
    l4.embedding = Embedding::at_rest;
    UncertaintyBox mu_box({{0.038, 0.040}});
    SweepConfig sc;
    sc.ind.t_f = 20.0;
    sc.ind.degree = 3;
    sc.ind.ode = {1e-10, 1e-8};
    sc.select.alpha = true;
    FieldResult f = sweep(sys, l4, mu_box, sc);
    int ca = f.column_index("alpha_tilde");
    int collisions = 0;
    bool saturation_ok = true;
    for (long i = 0; i < f.grid.cells(); ++i)
        if (f.status[i] == Status::collision) {
            ++collisions;
            if (f.values(static_cast<int>(i), ca) != 1.0) saturation_ok = false;
        }

    // (b) energy-forbidden cells carry NaN, never 0
    GridSpec fb;
    fb.axis1 = {"x", -0.55, -0.45, 2};
    fb.axis2 = {"v_x", 1.8, 2.0, 2};
    fb.embedding = Embedding::cr3bp_energy;
    fb.energy_e0 = paper_energy_level(0.1);
    UncertaintyBox case1({{0.1 - 1e-7, 0.1 + 1e-7}});
    SweepConfig sc2 = sc;
    sc2.ind.t_f = 2.0;
    FieldResult g = sweep(sys, fb, case1, sc2);
    int forbidden = 0;
    bool forbidden_ok = true;
    for (long i = 0; i < g.grid.cells(); ++i)
        if (g.status[i] == Status::forbidden) {
            ++forbidden;
            if (!std::isnan(g.values(static_cast<int>(i), g.column_index("alpha_tilde"))))
                forbidden_ok = false;
        }

    r.measured = collisions > 0 && forbidden > 0 && saturation_ok && forbidden_ok ? 1.0 : 0.0;
    r.threshold = 1.0;
    r.comparator = "==";
    r.pass = r.measured == 1.0;
    std::ostringstream d;
    d << collisions << " colliding L4 cells (all alpha~ = 1: " << (saturation_ok ? "yes" : "NO") << "), "
      << forbidden << " forbidden cells (all NaN: " << (forbidden_ok ? "yes" : "NO") << ")";
    r.detail = d.str();
    return r;
}

// 11. Bit-identical field files for any worker count.
inline CheckResult determinism_workers() {
    CheckResult r{"determinism_workers", 11};
    RunConfig cfg = preset_config("pendulum");
    cfg.grid.axis1.count = 16;
    cfg.grid.axis2.count = 16;
    cfg.degree = 2;
    cfg.t_f = 5.0;
    cfg.seed = 20240101;
    auto sys = make_system(cfg.system);

    auto render = [&](int workers) {
        RunConfig c = cfg;
        c.workers = workers;
        FieldResult f = sweep(*sys, c.grid, c.box, c.sweep_config());
        std::ostringstream os;
        write_field_csv(os, f, c);
        return os.str();
    };
    std::string one = render(1), eight = render(8);
    r.measured = one == eight ? 1.0 : 0.0;
    r.threshold = 1.0;
    r.comparator = "==";
    r.pass = one == eight;
    r.detail = "field.csv bytes of a 16x16 all-indicator pendulum run, 1 worker vs 8 workers";
    return r;
}

// 12. Throughput: 50x50 alpha~ field under 5 minutes single-worker and
//     near-linear speedup to 4 workers.
inline CheckResult throughput() {
    CheckResult r{"throughput", 12};
    Pendulum sys;
    GridSpec grid;
    grid.axis1 = {"x", -3.0, 3.0, 50};
    grid.axis2 = {"v_x", -3.0, 3.0, 50};
    SweepConfig sc;
    sc.ind.t_f = 10.0;
    sc.select.alpha = true;

    auto timed = [&](int workers) {
        sc.workers = workers;
        auto t0 = std::chrono::steady_clock::now();
        FieldResult f = sweep(sys, grid, sys.default_box(), sc);
        (void)f;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    double t1 = timed(1);
    double t4 = timed(4);
    double speedup = t1 / t4;
    r.measured = speedup;
    r.threshold = 3.0;
    r.comparator = ">=";
    r.pass = t1 < 300.0 && speedup >= 3.0;
    std::ostringstream d;
    d << "single worker " << t1 << " s (< 300 s required); 4-worker speedup " << speedup
      << "x (>= 3x required); hardware threads available: " << std::thread::hardware_concurrency();
    r.detail = d.str();
    return r;
}

}  // namespace checks

/// Run the named checks (all twelve when `only` is empty). Progress lines
/// go to `progress` as each check finishes.
inline std::vector<CheckResult> run_verification(const FaultInjection& fault = {},
                                                 const std::vector<std::string>& only = {},
                                                 std::ostream* progress = nullptr) {
    using Runner = std::function<CheckResult()>;
    std::vector<std::pair<std::string, Runner>> registry = {
        {"quadrature_moments", [] { return checks::quadrature_moments(); }},
        {"alpha_analytic", [] { return checks::alpha_analytic(); }},
        {"ftle_reference", [] { return checks::ftle_reference(); }},
        {"prop5_ratio", [] { return checks::prop5_ratio(); }},
        {"ftle_alpha_spearman", [] { return checks::ftle_alpha_spearman(); }},
        {"variance_mc", [&fault] { return checks::variance_mc(fault); }},
        {"cross_method", [] { return checks::cross_method(); }},
        {"field_symmetry", [] { return checks::field_symmetry(); }},
        {"energy_drift", [] { return checks::energy_drift(); }},
        {"saturation_guards", [] { return checks::saturation_guards(); }},
        {"determinism_workers", [] { return checks::determinism_workers(); }},
        {"throughput", [] { return checks::throughput(); }},
    };
    std::vector<CheckResult> results;
    for (auto& [name, runner] : registry) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        auto t0 = std::chrono::steady_clock::now();
        CheckResult res = runner();
        res.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (progress)
            *progress << (res.pass ? "[PASS] " : "[FAIL] ") << res.criterion << ". " << res.name
                      << ": measured " << res.measured << " " << res.comparator << " " << res.threshold
                      << "  (" << res.detail << ") [" << res.elapsed_seconds << " s]" << std::endl;
        results.push_back(std::move(res));
    }
    return results;
}

inline nlohmann::json verification_report(const std::vector<CheckResult>& results) {
    nlohmann::json j;
    j["tool"] = "sdi verify";
    j["version"] = kToolVersion;
    bool all = true;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& res : results) {
        all = all && res.pass;
        arr.push_back({{"name", res.name},
                       {"criterion", res.criterion},
                       {"pass", res.pass},
                       {"measured", res.measured},
                       {"threshold", res.threshold},
                       {"comparator", res.comparator},
                       {"detail", res.detail},
                       {"elapsed_seconds", res.elapsed_seconds}});
    }
    j["checks"] = arr;
    j["all_pass"] = all;
    return j;
}

}  // namespace sdi
