// Command-line front end: field cartographies, region extraction,
// trajectory ensembles, and the verification suite.
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime failure,
// 3 verification failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sdi/verify.hpp"

namespace fs = std::filesystem;
using namespace sdi;

namespace {

int env_workers() {
    if (const char* env = std::getenv("SDI_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

Vec parse_doubles(const std::string& s) {
    Vec out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

struct FieldFlags {
    std::string preset, system, grid, indicator, box, out = "out";
    double tf = -1, epsilon = -1, abs_tol = -1, rel_tol = -1, delta_z = -1, ic_uncertainty = -1;
    int degree = -1, quad_n = -1, n_mc = -1, workers = 0;
    int64_t seed = -1;
    bool alpha_sum_eigs = false, pgm = false;
    std::string from_meta;
};

RunConfig build_config(const FieldFlags& ff) {
    RunConfig cfg;
    if (!ff.from_meta.empty()) {
        std::ifstream is(ff.from_meta);
        if (!is) throw std::invalid_argument("cannot read meta file " + ff.from_meta);
        nlohmann::json j = nlohmann::json::parse(is);
        cfg = RunConfig::from_json(j.contains("config") ? j.at("config") : j);
    } else if (!ff.preset.empty()) {
        cfg = preset_config(ff.preset);
    }
    if (!ff.system.empty()) {
        cfg.system = ff.system;
        if (ff.preset.empty() && ff.box.empty()) cfg.box = make_system(ff.system)->default_box();
        if (ff.preset.empty()) {
            auto [at, rt] = make_system(ff.system)->default_tolerances();
            cfg.abs_tol = at;
            cfg.rel_tol = rt;
        }
    }
    if (!ff.grid.empty()) {
        auto xpos = ff.grid.find('x');
        if (xpos == std::string::npos) throw std::invalid_argument("--grid expects WxH, e.g. 200x200");
        cfg.grid.axis1.count = std::stoi(ff.grid.substr(0, xpos));
        cfg.grid.axis2.count = std::stoi(ff.grid.substr(xpos + 1));
    }
    if (!ff.box.empty()) {
        Vec v = parse_doubles(ff.box);
        if (v.size() % 2 != 0 || v.empty())
            throw std::invalid_argument("--box expects lo,hi pairs, e.g. 2.25,2.75");
        std::vector<Interval> dims;
        for (size_t i = 0; i + 1 < v.size(); i += 2) dims.emplace_back(v[i], v[i + 1]);
        cfg.box = UncertaintyBox(dims);
    }
    if (!ff.indicator.empty()) cfg.indicator = ff.indicator;
    if (ff.tf >= 0) cfg.t_f = ff.tf;
    if (ff.degree >= 0) cfg.degree = ff.degree;
    if (ff.quad_n >= 0) cfg.quad_n = ff.quad_n;
    if (ff.epsilon >= 0) cfg.epsilon = ff.epsilon;
    if (ff.abs_tol >= 0) cfg.abs_tol = ff.abs_tol;
    if (ff.rel_tol >= 0) cfg.rel_tol = ff.rel_tol;
    if (ff.delta_z >= 0) cfg.delta_z = ff.delta_z;
    if (ff.n_mc >= 0) cfg.n_mc = ff.n_mc;
    if (ff.seed >= 0) cfg.seed = static_cast<uint64_t>(ff.seed);
    if (ff.ic_uncertainty >= 0) cfg.ic_uncertainty = ff.ic_uncertainty;
    if (ff.alpha_sum_eigs) cfg.alpha_sum_eigs = true;
    if (ff.pgm) cfg.pgm = true;
    cfg.workers = ff.workers >= 1 ? ff.workers : env_workers();
    return cfg;
}

int cmd_field(const FieldFlags& ff) {
    RunConfig cfg = build_config(ff);
    cfg.validate();
    auto sys = make_system(cfg.system);

    fs::create_directories(ff.out);
    auto t0 = std::chrono::steady_clock::now();
    FieldResult field = sweep(*sys, cfg.grid, cfg.box, cfg.sweep_config());
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    {
        auto os = open_out(fs::path(ff.out) / "field.csv");
        write_field_csv(os, field, cfg);
    }
    {
        auto os = open_out(fs::path(ff.out) / "field.meta.json");
        write_field_meta(os, cfg, elapsed, utc_timestamp());
    }
    if (cfg.pgm && !field.columns.empty()) {
        auto os = open_out(fs::path(ff.out) / "field.pgm");
        write_pgm(os, field, 0);
    }

    long ok = 0, collision = 0, escape = 0, forbidden = 0, failed = 0;
    for (Status s : field.status) switch (s) {
            case Status::ok: ++ok; break;
            case Status::collision: ++collision; break;
            case Status::escape: ++escape; break;
            case Status::forbidden: ++forbidden; break;
            case Status::failed: ++failed; break;
        }
    std::cout << "wrote " << (fs::path(ff.out) / "field.csv").string() << " (" << field.grid.cells()
              << " cells, " << field.columns.size() << " indicator columns, " << elapsed << " s, "
              << cfg.workers << " workers)\n";
    std::cout << "status: ok " << ok << ", collision " << collision << ", escape " << escape
              << ", forbidden " << forbidden << ", failed " << failed << "\n";
    return 0;
}

int cmd_regions(const std::string& field_path, const std::string& column, double below,
                const std::vector<double>& band, const std::string& out) {
    std::ifstream is(field_path);
    if (!is) throw std::invalid_argument("cannot read field file " + field_path);
    ParsedField pf = read_field_csv(is);

    RegionPredicate pred;
    if (!band.empty()) {
        pred.kind = RegionPredicate::Kind::band;
        pred.a = band[0];
        pred.b = band[1];
    } else {
        pred.kind = RegionPredicate::Kind::below;
        pred.a = below;
    }
    RegionMask rm = extract_regions(pf.field, column, pred);

    fs::create_directories(out);
    {
        auto os = open_out(fs::path(out) / "mask.csv");
        write_mask_csv(os, rm, pf.field.grid);
    }
    {
        auto os = open_out(fs::path(out) / "regions.json");
        os << regions_report(rm, pf.field.grid).dump(2) << "\n";
    }
    long cells = 0;
    for (uint8_t m : rm.mask) cells += m;
    std::cout << "mask: " << cells << " cells in " << rm.components.size() << " components ("
              << column << " " << pred.describe() << ")\n";
    for (const auto& c : rm.components)
        std::cout << "  component " << c.id << ": area " << c.area << " cells, sample cell ("
                  << c.sample_ix << ", " << c.sample_iy << ") at ("
                  << fmt_double(pf.field.grid.axis1.coord(c.sample_ix)) << ", "
                  << fmt_double(pf.field.grid.axis2.coord(c.sample_iy)) << ")\n";
    return 0;
}

int cmd_ensemble(const FieldFlags& ff, const std::string& z0_str, const std::string& z0_energy_str,
                 int n_realizations, const std::string& out_file) {
    RunConfig cfg = build_config(ff);
    auto sys = make_system(cfg.system);
    Vec z0;
    if (!z0_energy_str.empty()) {
        Vec uv = parse_doubles(z0_energy_str);
        if (uv.size() != 2) throw std::invalid_argument("--z0-energy expects x,v_x");
        GridSpec g = cfg.grid;
        if (g.embedding != Embedding::cr3bp_energy)
            throw std::invalid_argument("--z0-energy needs an energy-embedding preset (cr3bp/er3bp)");
        auto z = embed_cell(g, uv[0], uv[1], *sys, cfg.box.midpoint());
        if (!z) throw std::invalid_argument("--z0-energy point is energetically forbidden");
        z0 = *z;
    } else {
        z0 = parse_doubles(z0_str);
    }
    if (static_cast<int>(z0.size()) != sys->dim())
        throw std::invalid_argument("--z0 needs " + std::to_string(sys->dim()) + " components for " +
                                    sys->name());
    if (n_realizations < 1) throw std::invalid_argument("-n must be >= 1");

    IntegratorConfig icfg{cfg.abs_tol, cfg.rel_tol};
    const double scale = sys->time_scale();
    EnsembleStudy study =
        ensemble_study(*sys, z0, cfg.box, n_realizations, cfg.t0 * scale, cfg.t_f * scale, icfg, cfg.seed);

    fs::path path(out_file);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto os = open_out(path);
    write_ensemble_csv(os, study, sys->state_names(), sys->name(), cfg.seed);
    std::cout << "wrote " << path.string() << " (" << n_realizations << " realizations, tf = " << cfg.t_f
              << ", terminal spread max " << fmt_double(study.max_terminal_spread) << ")\n";
    return 0;
}

int cmd_verify(const std::string& out_file, const std::vector<std::string>& only,
               const std::string& inject_fault) {
    FaultInjection fault;
    if (inject_fault == "s1")
        fault.s1_scale = 2.0;
    else if (!inject_fault.empty())
        throw std::invalid_argument("unknown fault injection mode: " + inject_fault);

    std::vector<CheckResult> results = run_verification(fault, only, &std::cerr);
    nlohmann::json report = verification_report(results);
    if (!out_file.empty()) {
        fs::path path(out_file);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        auto os = open_out(path);
        os << report.dump(2) << "\n";
    } else {
        std::cout << report.dump(2) << "\n";
    }
    return report.at("all_pass").get<bool>() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdi - polynomial stochastic dynamical indicators"};
    app.require_subcommand(1);

    FieldFlags ff;
    std::string z0_str, z0_energy_str, regions_field, regions_column, verify_out, inject_fault;
    std::string ensemble_out = "out/trajectories.csv";
    std::vector<double> band;
    std::vector<std::string> verify_only;
    double below = 0.0;
    int n_realizations = 10;

    auto add_run_flags = [&](CLI::App* cmd, bool with_grid) {
        cmd->add_option("--preset", ff.preset, "paper study preset (pendulum, double_gyre, cr3bp_case1, "
                                               "cr3bp_case2, er3bp, l4_stability)");
        cmd->add_option("--system", ff.system, "system name when not using a preset");
        cmd->add_option("--box", ff.box, "uncertainty box as lo,hi per parameter");
        cmd->add_option("--tf", ff.tf, "final time (revolutions for er3bp)");
        cmd->add_option("--degree", ff.degree, "polynomial degree");
        cmd->add_option("--quad-n", ff.quad_n, "quadrature points per uncertain dimension");
        cmd->add_option("--epsilon", ff.epsilon, "threshold of the expectation metric");
        cmd->add_option("--n-mc", ff.n_mc, "samples for the expectation metric");
        cmd->add_option("--seed", ff.seed, "global RNG seed");
        cmd->add_option("--abs-tol", ff.abs_tol, "integrator absolute tolerance");
        cmd->add_option("--rel-tol", ff.rel_tol, "integrator relative tolerance");
        cmd->add_option("--delta-z", ff.delta_z, "tracer increment for central differences");
        if (with_grid) {
            cmd->add_option("--grid", ff.grid, "grid size WxH");
            cmd->add_option("--workers", ff.workers, "worker threads (or SDI_WORKERS)");
            cmd->add_option("--indicator", ff.indicator,
                            "ftle | sftle1 | sftle2 | alpha | expectation | all");
            cmd->add_option("--ic-uncertainty", ff.ic_uncertainty,
                            "initial-condition box edge; switches the uncertainty source from the "
                            "parameters to the initial state");
            cmd->add_flag("--alpha-sum-eigs", ff.alpha_sum_eigs,
                          "sum-of-eigenvalues variant of the pseudo-diffusion exponent");
            cmd->add_flag("--pgm", ff.pgm, "also write a grayscale heatmap of the first column");
            cmd->add_option("--from-meta", ff.from_meta, "reproduce a run from its field.meta.json");
        }
    };

    CLI::App* field = app.add_subcommand("field", "compute an indicator field over a grid");
    add_run_flags(field, true);
    field->add_option("--out", ff.out, "output directory");

    CLI::App* regions = app.add_subcommand("regions", "extract threshold/band regions from a field file");
    regions->add_option("--field", regions_field, "field.csv produced by 'sdi field'")->required();
    regions->add_option("--column", regions_column, "indicator column name (e.g. alpha_tilde)")->required();
    auto* below_opt = regions->add_option("--below", below, "mask cells with value < X");
    auto* band_opt =
        regions->add_option("--band", band, "mask cells with value in [A, B]")->expected(2);
    below_opt->excludes(band_opt);
    regions->add_option("--out", ff.out, "output directory");

    CLI::App* ensemble = app.add_subcommand("ensemble", "propagate random-realization trajectory bundles");
    add_run_flags(ensemble, false);
    ensemble->add_option("--z0", z0_str, "initial state, comma separated");
    ensemble->add_option("--z0-energy", z0_energy_str,
                         "initial (x, v_x); v_y filled from the preset energy level");
    ensemble->add_option("-n,--realizations", n_realizations, "number of random realizations");
    ensemble->add_option("--out", ensemble_out, "output CSV path");

    CLI::App* verify = app.add_subcommand("verify", "run the acceptance checks and report JSON");
    verify->add_option("--out", verify_out, "write the JSON report here instead of stdout");
    verify->add_option("--only", verify_only, "run only the named checks");
    verify->add_option("--inject-fault", inject_fault,
                       "negative-control mode: 's1' perturbs a basis norm so the moment oracle fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (field->parsed()) return cmd_field(ff);
        if (regions->parsed()) {
            if (band_opt->count() == 0 && below_opt->count() == 0)
                throw std::invalid_argument("regions needs --below or --band");
            return cmd_regions(regions_field, regions_column, below, band, ff.out);
        }
        if (ensemble->parsed()) {
            if (z0_str.empty() && z0_energy_str.empty())
                throw std::invalid_argument("ensemble needs --z0 or --z0-energy");
            return cmd_ensemble(ff, z0_str, z0_energy_str, n_realizations, ensemble_out);
        }
        if (verify->parsed()) return cmd_verify(verify_out, verify_only, inject_fault);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
