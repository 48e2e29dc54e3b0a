#pragma once

#include <json.hpp>

#include "sdi/cartography.hpp"

namespace sdi {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything one field run needs; serializes to/from JSON so an emitted
/// metadata file can reproduce its run exactly.
struct RunConfig {
    std::string system = "pendulum";
    std::string preset;
    UncertaintyBox box = UncertaintyBox({{2.25, 2.75}});
    GridSpec grid;
    std::string indicator = "all";  // ftle | sftle1 | sftle2 | alpha | expectation | all
    int degree = 4;
    int quad_n = 9;
    double t0 = 0.0;
    double t_f = 10.0;
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    double delta_z = 1e-7;
    double epsilon = 0.1;
    int n_mc = 100;
    uint64_t seed = 0;
    int workers = 1;
    double ic_uncertainty = 0.0;  // > 0: initial-condition box edge (Prop-5 style runs)
    bool alpha_sum_eigs = false;
    bool pgm = false;

    IndicatorSelection selection() const {
        IndicatorSelection sel;
        if (indicator == "all") return IndicatorSelection::all();
        if (indicator == "ftle")
            sel.ftle = true;
        else if (indicator == "sftle1")
            sel.sftle1 = true;
        else if (indicator == "sftle2")
            sel.sftle2 = true;
        else if (indicator == "alpha")
            sel.alpha = true;
        else if (indicator == "expectation")
            sel.expectation = true;
        else
            throw std::invalid_argument("unknown indicator selection: " + indicator);
        return sel;
    }

    SweepConfig sweep_config() const {
        SweepConfig sc;
        sc.ind.degree = degree;
        sc.ind.n_per_dim = quad_n;
        sc.ind.delta_z = delta_z;
        sc.ind.t0 = t0;
        sc.ind.t_f = t_f;
        sc.ind.epsilon = epsilon;
        sc.ind.n_mc = n_mc;
        sc.ind.seed = seed;
        sc.ind.alpha_sum_eigs = alpha_sum_eigs;
        sc.ind.ode.abs_tol = abs_tol;
        sc.ind.ode.rel_tol = rel_tol;
        sc.select = selection();
        sc.ic_uncertainty_edge = ic_uncertainty;
        sc.workers = workers;
        sc.seed = seed;
        return sc;
    }

    void validate() const {
        auto sys = make_system(system);  // throws on unknown names
        (void)selection();
        if (static_cast<int>(box.dims.size()) != sys->param_dim())
            throw std::invalid_argument("uncertainty box dimension does not match the system");
        if (grid.axis1.count < 2 || grid.axis2.count < 2)
            throw std::invalid_argument("grid needs at least 2 cells per axis");
        if (!(grid.axis1.lo < grid.axis1.hi) || !(grid.axis2.lo < grid.axis2.hi))
            throw std::invalid_argument("grid axes need lo < hi");
        if (degree < 0) throw std::invalid_argument("degree must be >= 0");
        if (quad_n < degree + 1)
            throw std::invalid_argument("quad-n must be at least degree+1 for a usable projection");
        if (!(t_f > t0)) throw std::invalid_argument("tf must exceed t0");
        if (abs_tol <= 0 || rel_tol <= 0) throw std::invalid_argument("tolerances must be positive");
        if (delta_z <= 0) throw std::invalid_argument("delta-z must be positive");
        if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
        if (n_mc < 1) throw std::invalid_argument("n-mc must be >= 1");
        if (workers < 1) throw std::invalid_argument("workers must be >= 1");
        if (ic_uncertainty < 0) throw std::invalid_argument("ic-uncertainty must be >= 0");
        IndicatorSelection sel = selection();
        if (ic_uncertainty > 0 && (sel.sftle1 || sel.sftle2))
            throw std::invalid_argument(
                "sftle1/sftle2 quantify parameter uncertainty; use ftle, alpha or expectation "
                "with --ic-uncertainty");
        if (sel.alpha && t_f * sys->time_scale() <= 1.05)
            throw std::invalid_argument("alpha needs an effective tf > 1.05 (log tf must stay positive)");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = kToolVersion;
        j["system"] = system;
        j["preset"] = preset;
        nlohmann::json jb = nlohmann::json::array();
        for (const auto& d : box.dims) jb.push_back({d.lo, d.hi});
        j["box"] = jb;
        j["grid"] = {{"axis1", {{"name", grid.axis1.name}, {"lo", grid.axis1.lo}, {"hi", grid.axis1.hi}, {"count", grid.axis1.count}}},
                     {"axis2", {{"name", grid.axis2.name}, {"lo", grid.axis2.lo}, {"hi", grid.axis2.hi}, {"count", grid.axis2.count}}},
                     {"embedding", to_string(grid.embedding)},
                     {"energy_e0", grid.energy_e0}};
        j["indicator"] = indicator;
        j["degree"] = degree;
        j["quad_n"] = quad_n;
        j["t0"] = t0;
        j["tf"] = t_f;
        j["abs_tol"] = abs_tol;
        j["rel_tol"] = rel_tol;
        j["delta_z"] = delta_z;
        j["epsilon"] = epsilon;
        j["n_mc"] = n_mc;
        j["seed"] = seed;
        j["workers"] = workers;
        j["ic_uncertainty"] = ic_uncertainty;
        j["alpha_sum_eigs"] = alpha_sum_eigs;
        j["pgm"] = pgm;
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        c.system = j.at("system").get<std::string>();
        c.preset = j.value("preset", std::string{});
        std::vector<Interval> dims;
        for (const auto& d : j.at("box")) dims.emplace_back(d.at(0).get<double>(), d.at(1).get<double>());
        c.box = UncertaintyBox(dims);
        const auto& g = j.at("grid");
        auto axis = [](const nlohmann::json& a) {
            return Axis{a.at("name").get<std::string>(), a.at("lo").get<double>(), a.at("hi").get<double>(),
                        a.at("count").get<int>()};
        };
        c.grid.axis1 = axis(g.at("axis1"));
        c.grid.axis2 = axis(g.at("axis2"));
        c.grid.embedding = embedding_from_string(g.at("embedding").get<std::string>());
        c.grid.energy_e0 = g.at("energy_e0").get<double>();
        c.indicator = j.at("indicator").get<std::string>();
        c.degree = j.at("degree").get<int>();
        c.quad_n = j.at("quad_n").get<int>();
        c.t0 = j.at("t0").get<double>();
        c.t_f = j.at("tf").get<double>();
        c.abs_tol = j.at("abs_tol").get<double>();
        c.rel_tol = j.at("rel_tol").get<double>();
        c.delta_z = j.at("delta_z").get<double>();
        c.epsilon = j.at("epsilon").get<double>();
        c.n_mc = j.at("n_mc").get<int>();
        c.seed = j.at("seed").get<uint64_t>();
        c.workers = j.at("workers").get<int>();
        c.ic_uncertainty = j.at("ic_uncertainty").get<double>();
        c.alpha_sum_eigs = j.at("alpha_sum_eigs").get<bool>();
        c.pgm = j.value("pgm", false);
        return c;
    }
};

/// Energy level used by the paper's CR3BP/ER3BP grids: E(L1) + 0.03715
/// at the nominal mass parameter, with the series L1.
inline double paper_energy_level(double mu_nominal) {
    return -cr3bp_potential(mu_nominal, cr3bp_l1x_series(mu_nominal), 0.0) + 0.03715;
}

/// One-command reproductions of the paper's study setups.
inline RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    if (name == "pendulum") {
        c.system = "pendulum";
        c.box = UncertaintyBox({{2.25, 2.75}});
        c.grid.axis1 = {"x", -3.0, 3.0, 200};
        c.grid.axis2 = {"v_x", -3.0, 3.0, 200};
        c.t_f = 10.0;
        c.degree = 4;
        c.epsilon = 0.1;
        c.abs_tol = 1e-10;
        c.rel_tol = 1e-9;
    } else if (name == "double_gyre") {
        c.system = "double_gyre";
        c.box = UncertaintyBox({{0.09, 0.11}});
        c.grid.axis1 = {"x", 0.0, 2.0, 200};
        c.grid.axis2 = {"y", 0.0, 1.0, 200};
        c.t_f = 20.0;
        c.degree = 4;
        c.epsilon = 0.25;
        c.abs_tol = 1e-10;
        c.rel_tol = 1e-9;
    } else if (name == "cr3bp_case1" || name == "cr3bp_case2") {
        c.system = "cr3bp";
        c.box = name == "cr3bp_case1" ? UncertaintyBox({{0.1 - 1e-7, 0.1 + 1e-7}})
                                      : UncertaintyBox({{0.1 - 1e-3, 0.1 + 1e-3}});
        c.grid.axis1 = {"x", -0.85, -0.125, 200};
        c.grid.axis2 = {"v_x", -2.0, 2.0, 200};
        c.grid.embedding = Embedding::cr3bp_energy;
        c.grid.energy_e0 = paper_energy_level(0.1);
        c.t_f = name == "cr3bp_case1" ? 2.0 : 2.8;
        c.degree = 4;
        c.epsilon = 0.1;
        c.abs_tol = 1e-10;
        c.rel_tol = 1e-8;
    } else if (name == "er3bp") {
        c.system = "er3bp";
        c.box = UncertaintyBox({{0.04 - 1e-3, 0.04 + 1e-3}, {0.1 - 1e-3, 0.1 + 1e-3}});
        c.grid.axis1 = {"x", -0.85, -0.125, 200};
        c.grid.axis2 = {"v_x", -2.0, 2.0, 200};
        c.grid.embedding = Embedding::cr3bp_energy;
        c.grid.energy_e0 = paper_energy_level(0.1);
        c.t_f = 2.8;
        c.degree = 3;
        c.epsilon = 0.1;
        c.abs_tol = 1e-10;
        c.rel_tol = 1e-8;
    } else if (name == "l4_stability") {
        c.system = "cr3bp";
        c.box = UncertaintyBox({{0.039 - 1e-3, 0.039 + 1e-3}});
        c.grid.axis1 = {"x", 0.3, 0.7, 200};
        c.grid.axis2 = {"y", 0.7, 1.0, 200};
        c.grid.embedding = Embedding::at_rest;
        c.t_f = 20.0;
        c.degree = 3;
        c.epsilon = 0.1;
        c.abs_tol = 1e-10;
        c.rel_tol = 1e-8;
    } else {
        throw std::invalid_argument(
            "unknown preset: " + name +
            " (known: pendulum, double_gyre, cr3bp_case1, cr3bp_case2, er3bp, l4_stability)");
    }
    return c;
}

inline std::vector<std::string> preset_names() {
    return {"pendulum", "double_gyre", "cr3bp_case1", "cr3bp_case2", "er3bp", "l4_stability"};
}

}  // namespace sdi
