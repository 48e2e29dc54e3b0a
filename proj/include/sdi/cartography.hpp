#pragma once

#include <atomic>
#include <deque>
#include <optional>
#include <thread>

#include "sdi/indicators.hpp"

namespace sdi {

struct Axis {
    std::string name;
    double lo = 0.0, hi = 1.0;
    int count = 2;

    /// Cell-center coordinate of cell i.
    double coord(int i) const { return lo + (hi - lo) * (i + 0.5) / count; }
};

/// How a 2-D grid point becomes a full initial state.
enum class Embedding {
    direct,        // (u, v) is the state of a 2-D system
    cr3bp_energy,  // (x, v_x) with y = 0 and v_y from the energy level e0
    at_rest        // (x, y) with zero velocity
};

inline const char* to_string(Embedding e) {
    switch (e) {
        case Embedding::direct: return "direct";
        case Embedding::cr3bp_energy: return "cr3bp_energy";
        case Embedding::at_rest: return "at_rest";
    }
    return "?";
}

inline Embedding embedding_from_string(const std::string& s) {
    if (s == "direct") return Embedding::direct;
    if (s == "cr3bp_energy") return Embedding::cr3bp_energy;
    if (s == "at_rest") return Embedding::at_rest;
    throw std::invalid_argument("unknown embedding: " + s);
}

struct GridSpec {
    Axis axis1, axis2;
    Embedding embedding = Embedding::direct;
    double energy_e0 = 0.0;  // used by cr3bp_energy

    long cells() const { return static_cast<long>(axis1.count) * axis2.count; }
    long cell_index(int ix, int iy) const { return static_cast<long>(iy) * axis1.count + ix; }
};

/// Initial state for a grid cell, at the nominal parameter vector; empty
/// when the embedding is infeasible there (forbidden region).
inline std::optional<Vec> embed_cell(const GridSpec& grid, double u, double v, const SystemModel& sys,
                                     std::span<const double> p_nominal) {
    switch (grid.embedding) {
        case Embedding::direct:
            return Vec{u, v};
        case Embedding::at_rest:
            return Vec{u, v, 0.0, 0.0};
        case Embedding::cr3bp_energy: {
            std::optional<double> vy;
            if (sys.param_dim() == 2)  // er3bp: p = (e, mu)
                vy = er3bp_vy_from_energy(u, v, grid.energy_e0, p_nominal[0], p_nominal[1]);
            else
                vy = cr3bp_vy_from_energy(u, v, grid.energy_e0, p_nominal[0]);
            if (!vy) return std::nullopt;
            return Vec{u, 0.0, v, *vy};
        }
    }
    return std::nullopt;
}

struct IndicatorSelection {
    bool ftle = false;
    bool sftle1 = false;
    bool sftle2 = false;
    bool alpha = false;
    bool expectation = false;

    static IndicatorSelection all() { return {true, true, true, true, true}; }
    bool any_ensemble() const { return alpha || expectation; }
};

struct FieldResult {
    GridSpec grid;
    std::vector<std::string> columns;
    Mat values;                  // cells x columns, cell index = iy*nx + ix
    std::vector<Status> status;  // per cell

    int column_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("no such field column: " + name);
    }
};

/// Per-run context shared by all cells of a sweep.
struct SweepConfig {
    IndicatorConfig ind;
    IndicatorSelection select;
    double ic_uncertainty_edge = 0.0;  // > 0 switches to initial-condition uncertainty
    int workers = 1;
    uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::string> field_columns(const SystemModel& sys, const UncertaintyBox& box,
                                              const SweepConfig& sc) {
    std::vector<std::string> cols;
    if (sc.select.ftle) cols.push_back("ftle");
    if (sc.select.sftle1) {
        cols.push_back("alpha1_mean");
        cols.push_back("alpha1_var");
        cols.push_back("alpha1_skew");
    }
    if (sc.select.sftle2) {
        int terms = term_count(sc.ind.degree, box.size());
        for (int i = 0; i < terms; ++i) cols.push_back("alpha2_" + std::to_string(i));
    }
    if (sc.select.alpha) {
        cols.push_back("alpha_tilde");
        for (const auto& nm : sys.state_names()) cols.push_back("alpha_tilde_" + nm);
        for (const auto& nm : sys.state_names()) cols.push_back("skew_" + nm);
    }
    if (sc.select.expectation) cols.push_back("expectation");
    return cols;
}

struct CellOutput {
    Vec values;
    Status status = Status::ok;
};

inline CellOutput compute_cell(const SystemModel& sys, const GridSpec& grid, const UncertaintyBox& box,
                               const SweepConfig& sc, int ix, int iy, size_t n_columns) {
    CellOutput out;
    out.values.assign(n_columns, kNaN);

    const double u = grid.axis1.coord(ix), v = grid.axis2.coord(iy);
    const Vec p_nom = box.midpoint();
    std::optional<Vec> z0 = embed_cell(grid, u, v, sys, p_nom);
    if (!z0) {
        out.status = Status::forbidden;
        return out;
    }
    const int n = static_cast<int>(z0->size());
    const double scale = sys.time_scale();
    const double t0 = sc.ind.t0 * scale, t_f = sc.ind.t_f * scale;
    const uint64_t cell_seed = seed_for(sc.seed, static_cast<uint64_t>(grid.cell_index(ix, iy)));

    IndicatorConfig cfg = sc.ind;
    size_t col = 0;

    if (sc.select.ftle) {
        auto [val, st] = ftle(sys, *z0, p_nom, t0, t_f, cfg);
        out.values[col++] = val;
        out.status = worst(out.status, st);
    }
    if (sc.select.sftle1) {
        Sftle1 s1 = sftle1(sys, *z0, box, t0, t_f, cfg);
        out.values[col++] = s1.mean;
        out.values[col++] = s1.variance;
        out.values[col++] = s1.skewness;
        out.status = worst(out.status, s1.status);
    }
    if (sc.select.sftle2) {
        auto [vals, st] = sftle2(sys, *z0, box, t0, t_f, cfg);
        for (double a2 : vals) out.values[col++] = a2;
        out.status = worst(out.status, st);
    }
    if (sc.select.any_ensemble()) {
        CoefficientSet cs;
        Status est;
        if (sc.ic_uncertainty_edge > 0.0) {
            std::vector<Interval> dims;
            for (int i = 0; i < n; ++i)
                dims.emplace_back((*z0)[i] - 0.5 * sc.ic_uncertainty_edge,
                                  (*z0)[i] + 0.5 * sc.ic_uncertainty_edge);
            UncertaintyBox ic_box{dims};
            auto basis = std::make_shared<PolynomialBasis>(cfg.degree, n);
            QuadratureRule rule = gauss_rule(cfg.n_per_dim, n);
            EnsembleResult ens = propagate_ensemble_ic(sys, p_nom, ic_box, rule, t0, t_f, cfg.ode);
            est = ens.worst_status();
            cs = project_samples(ens.states, t_f, basis, ic_box, rule);
        } else {
            auto basis = std::make_shared<PolynomialBasis>(cfg.degree, box.size());
            QuadratureRule rule = gauss_rule(cfg.n_per_dim, box.size());
            EnsembleResult ens = propagate_ensemble(sys, *z0, box, rule, t0, t_f, cfg.ode);
            est = ens.worst_status();
            cs = project_samples(ens.states, t_f, basis, box, rule);
        }
        out.status = worst(out.status, est);
        if (sc.select.alpha) {
            PseudoDiffusion pd = pseudo_diffusion(cs, t_f, est, cfg);
            out.values[col++] = pd.alpha;
            for (int j = 0; j < n; ++j) out.values[col++] = pd.components.empty() ? kNaN : pd.components[j];
            MomentSummary ms = moments(cs);
            for (int j = 0; j < n; ++j) out.values[col++] = ms.valid ? ms.skewness[j] : kNaN;
        }
        if (sc.select.expectation)
            out.values[col++] = (est == Status::ok) ? expectation_within(cs, cfg.epsilon, cfg.n_mc, cell_seed)
                                                    : kNaN;
    }
    return out;
}

}  // namespace detail

/// Sweep the indicator set over the grid. Cells are independent tasks
/// with pre-assigned seeds; the result is identical for any worker count.
inline FieldResult sweep(const SystemModel& sys, const GridSpec& grid, const UncertaintyBox& box,
                         const SweepConfig& sc) {
    FieldResult field;
    field.grid = grid;
    field.columns = detail::field_columns(sys, box, sc);
    field.values = Mat(static_cast<int>(grid.cells()), static_cast<int>(field.columns.size()));
    field.status.assign(grid.cells(), Status::ok);

    const long total = grid.cells();
    const int nx = grid.axis1.count;
    std::atomic<long> next{0};
    auto worker = [&]() {
        for (;;) {
            long idx = next.fetch_add(1);
            if (idx >= total) return;
            int ix = static_cast<int>(idx % nx), iy = static_cast<int>(idx / nx);
            detail::CellOutput cell;
            try {
                cell = detail::compute_cell(sys, grid, box, sc, ix, iy, field.columns.size());
            } catch (const std::exception&) {
                cell.values.assign(field.columns.size(), kNaN);
                cell.status = Status::failed;
            }
            for (size_t c = 0; c < field.columns.size(); ++c)
                field.values(static_cast<int>(idx), static_cast<int>(c)) = cell.values[c];
            field.status[idx] = cell.status;
        }
    };

    int workers = std::max(1, sc.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return field;
}

// ---------------------------------------------------------------------------
// Region extraction
// ---------------------------------------------------------------------------

struct RegionPredicate {
    enum class Kind { below, band } kind = Kind::below;
    double a = 0.0, b = 0.0;

    bool eval(double v) const {
        if (!std::isfinite(v)) return false;
        return kind == Kind::below ? v < a : (v >= a && v <= b);
    }
    std::string describe() const {
        return kind == Kind::below ? "< " + std::to_string(a)
                                   : "in [" + std::to_string(a) + ", " + std::to_string(b) + "]";
    }
};

struct RegionComponent {
    int id = 0;
    long area = 0;
    int min_ix = 0, max_ix = 0, min_iy = 0, max_iy = 0;
    int sample_ix = 0, sample_iy = 0;
};

struct RegionMask {
    int nx = 0, ny = 0;
    std::vector<uint8_t> mask;  // cell index = iy*nx + ix
    std::string column;
    RegionPredicate predicate;
    std::vector<RegionComponent> components;

    bool at(int ix, int iy) const { return mask[static_cast<size_t>(iy) * nx + ix] != 0; }
};

/// Threshold / band mask over one field column, true only on ok cells,
/// with 4-neighbour connected components labeled in scan order.
inline RegionMask extract_regions(const FieldResult& field, const std::string& column,
                                  const RegionPredicate& pred) {
    const int nx = field.grid.axis1.count, ny = field.grid.axis2.count;
    const int c = field.column_index(column);
    RegionMask rm;
    rm.nx = nx;
    rm.ny = ny;
    rm.column = column;
    rm.predicate = pred;
    rm.mask.assign(static_cast<size_t>(nx) * ny, 0);
    for (long idx = 0; idx < field.grid.cells(); ++idx)
        if (field.status[idx] == Status::ok && pred.eval(field.values(static_cast<int>(idx), c)))
            rm.mask[idx] = 1;

    std::vector<int> label(rm.mask.size(), 0);
    int next_id = 0;
    std::deque<long> queue;
    for (long start = 0; start < static_cast<long>(rm.mask.size()); ++start) {
        if (!rm.mask[start] || label[start]) continue;
        RegionComponent comp;
        comp.id = ++next_id;
        comp.sample_ix = static_cast<int>(start % nx);
        comp.sample_iy = static_cast<int>(start / nx);
        comp.min_ix = comp.max_ix = comp.sample_ix;
        comp.min_iy = comp.max_iy = comp.sample_iy;
        label[start] = comp.id;
        queue.push_back(start);
        while (!queue.empty()) {
            long cur = queue.front();
            queue.pop_front();
            ++comp.area;
            int ix = static_cast<int>(cur % nx), iy = static_cast<int>(cur / nx);
            comp.min_ix = std::min(comp.min_ix, ix);
            comp.max_ix = std::max(comp.max_ix, ix);
            comp.min_iy = std::min(comp.min_iy, iy);
            comp.max_iy = std::max(comp.max_iy, iy);
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int jx = ix + dx[k], jy = iy + dy[k];
                if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
                long nidx = static_cast<long>(jy) * nx + jx;
                if (rm.mask[nidx] && !label[nidx]) {
                    label[nidx] = comp.id;
                    queue.push_back(nidx);
                }
            }
        }
        rm.components.push_back(comp);
    }
    return rm;
}

// ---------------------------------------------------------------------------
// Trajectory ensemble studies (random realizations of p)
// ---------------------------------------------------------------------------

struct Realization {
    Vec p;
    Status status = Status::ok;
    Vec times;   // decimated
    Mat states;  // times x n
};

struct EnsembleStudy {
    std::vector<Realization> realizations;
    double max_terminal_spread = 0.0;
    double mean_terminal_spread = 0.0;
};

namespace detail {
/// Keeps at most `cap` samples by doubling the keep-stride when full.
class DecimatingRecorder {
  public:
    explicit DecimatingRecorder(size_t cap, int n) : cap_(cap), n_(n) {}

    void push(double t, const Vec& y) {
        if (counter_++ % stride_ != 0) return;
        times_.push_back(t);
        states_.insert(states_.end(), y.begin(), y.end());
        if (times_.size() >= cap_) compact();
    }

    Vec times() const { return times_; }
    Mat states() const {
        Mat m(static_cast<int>(times_.size()), n_);
        std::copy(states_.begin(), states_.end(), m.data());
        return m;
    }

  private:
    void compact() {
        size_t w = 0;
        for (size_t r = 0; r < times_.size(); r += 2, ++w) {
            times_[w] = times_[r];
            for (int c = 0; c < n_; ++c) states_[w * n_ + c] = states_[r * n_ + c];
        }
        times_.resize(w);
        states_.resize(w * n_);
        stride_ *= 2;
    }

    size_t cap_, counter_ = 0;
    long stride_ = 1;
    int n_;
    std::vector<double> times_;
    std::vector<double> states_;
};
}  // namespace detail

/// Propagate n_realizations trajectories for uniform random draws of p,
/// recording decimated time series and the pairwise spread of the final
/// states (over realizations that reached t_f).
inline EnsembleStudy ensemble_study(const SystemModel& sys, const Vec& z0, const UncertaintyBox& box,
                                    int n_realizations, double t0, double t_f,
                                    const IntegratorConfig& cfg, uint64_t seed,
                                    size_t max_samples = 2000) {
    EnsembleStudy study;
    Rng rng(seed);
    std::vector<Vec> finals;
    for (int r = 0; r < n_realizations; ++r) {
        Realization real;
        real.p.resize(box.size());
        for (int d = 0; d < box.size(); ++d) real.p[d] = rng.uniform(box.dims[d].lo, box.dims[d].hi);
        detail::DecimatingRecorder rec(max_samples, static_cast<int>(z0.size()));
        PropagationResult res = integrate_system(sys, real.p, z0, t0, t_f, cfg,
                                                 [&](double t, const Vec& y) { rec.push(t, y); });
        real.status = res.status;
        real.times = rec.times();
        real.states = rec.states();
        if (res.status == Status::ok) finals.push_back(res.final_state);
        study.realizations.push_back(std::move(real));
    }
    double acc = 0.0;
    long count = 0;
    for (size_t i = 0; i < finals.size(); ++i)
        for (size_t j = i + 1; j < finals.size(); ++j) {
            double d = dist2(finals[i], finals[j]);
            study.max_terminal_spread = std::max(study.max_terminal_spread, d);
            acc += d;
            ++count;
        }
    study.mean_terminal_spread = count ? acc / count : 0.0;
    return study;
}

}  // namespace sdi
