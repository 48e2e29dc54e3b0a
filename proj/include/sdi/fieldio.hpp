#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sdi/config.hpp"

namespace sdi {

/// Shortest round-trippable decimal form, so rewriting a parsed file
/// reproduces it byte for byte.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Field files: '#'-prefixed header (with the full config as one JSON
// line), then one CSV row per grid cell in ix-fastest order.
// ---------------------------------------------------------------------------

inline void write_field_csv(std::ostream& os, const FieldResult& field, const RunConfig& cfg) {
    os << "# sdi field file\n";
    os << "# version: " << kToolVersion << "\n";
    os << "# system: " << cfg.system << "\n";
    if (!cfg.preset.empty()) os << "# preset: " << cfg.preset << "\n";
    for (size_t d = 0; d < cfg.box.dims.size(); ++d)
        os << "# box" << d + 1 << ": [" << fmt_double(cfg.box.dims[d].lo) << ", "
           << fmt_double(cfg.box.dims[d].hi) << "]\n";
    os << "# tf: " << fmt_double(cfg.t_f) << "\n";
    os << "# seed: " << cfg.seed << "\n";
    os << "# config: " << cfg.to_json().dump() << "\n";
    os << "# columns: ix,iy," << field.grid.axis1.name << "," << field.grid.axis2.name << ","
       << join(field.columns, ",") << ",status\n";
    const int nx = field.grid.axis1.count;
    for (long idx = 0; idx < field.grid.cells(); ++idx) {
        int ix = static_cast<int>(idx % nx), iy = static_cast<int>(idx / nx);
        os << ix << "," << iy << "," << fmt_double(field.grid.axis1.coord(ix)) << ","
           << fmt_double(field.grid.axis2.coord(iy));
        for (size_t c = 0; c < field.columns.size(); ++c)
            os << "," << fmt_double(field.values(static_cast<int>(idx), static_cast<int>(c)));
        os << "," << to_string(field.status[idx]) << "\n";
    }
}

struct ParsedField {
    FieldResult field;
    RunConfig config;
};

/// Parse a field file written by write_field_csv. Throws on malformed
/// input with the offending line number.
inline ParsedField read_field_csv(std::istream& is) {
    ParsedField out;
    std::string line;
    long lineno = 0;
    bool have_config = false, have_columns = false;
    std::vector<std::string> columns;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("field file parse error at line " + std::to_string(lineno) + ": " + what);
    };

    std::vector<std::string> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# config: ", 0) == 0) {
                out.config = RunConfig::from_json(nlohmann::json::parse(line.substr(10)));
                have_config = true;
            } else if (line.rfind("# columns: ", 0) == 0) {
                std::stringstream ss(line.substr(11));
                std::string tok;
                while (std::getline(ss, tok, ',')) columns.push_back(tok);
                if (columns.size() < 5 || columns[0] != "ix" || columns[1] != "iy" ||
                    columns.back() != "status")
                    fail("unexpected column layout");
                have_columns = true;
            }
            continue;
        }
        rows.push_back(line);
    }
    lineno = 0;
    if (!have_config) fail("missing '# config:' header line");
    if (!have_columns) fail("missing '# columns:' header line");

    out.field.grid = out.config.grid;
    out.field.columns.assign(columns.begin() + 4, columns.end() - 1);
    out.field.values =
        Mat(static_cast<int>(out.field.grid.cells()), static_cast<int>(out.field.columns.size()));
    out.field.status.assign(out.field.grid.cells(), Status::failed);
    if (static_cast<long>(rows.size()) != out.field.grid.cells())
        fail("row count does not match the grid (" + std::to_string(rows.size()) + " rows)");

    for (const std::string& row : rows) {
        ++lineno;
        std::stringstream ss(row);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ss, tok, ',')) toks.push_back(tok);
        if (toks.size() != columns.size()) fail("wrong field count in data row");
        try {
            int ix = std::stoi(toks[0]), iy = std::stoi(toks[1]);
            long idx = out.field.grid.cell_index(ix, iy);
            if (ix < 0 || ix >= out.field.grid.axis1.count || iy < 0 || iy >= out.field.grid.axis2.count)
                fail("cell index out of range");
            for (size_t c = 0; c < out.field.columns.size(); ++c)
                out.field.values(static_cast<int>(idx), static_cast<int>(c)) =
                    toks[4 + c] == "nan" ? kNaN : std::stod(toks[4 + c]);
            out.field.status[idx] = status_from_string(toks.back());
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    return out;
}

inline void write_field_meta(std::ostream& os, const RunConfig& cfg, double elapsed_seconds,
                             const std::string& timestamp) {
    nlohmann::json j;
    j["tool"] = "sdi field";
    j["config"] = cfg.to_json();
    j["elapsed_seconds"] = elapsed_seconds;
    j["timestamp"] = timestamp;
    os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Grayscale heatmap (binary PGM), values min-max scaled over valid cells,
// not-a-value to 0. Rows are written top = highest axis-2 coordinate.
// ---------------------------------------------------------------------------

inline void write_pgm(std::ostream& os, const FieldResult& field, int column) {
    const int nx = field.grid.axis1.count, ny = field.grid.axis2.count;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (long i = 0; i < field.grid.cells(); ++i) {
        double v = field.values(static_cast<int>(i), column);
        if (field.status[i] == Status::ok && std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    os << "P5\n" << nx << " " << ny << "\n255\n";
    for (int iy = ny - 1; iy >= 0; --iy)
        for (int ix = 0; ix < nx; ++ix) {
            double v = field.values(static_cast<int>(field.grid.cell_index(ix, iy)), column);
            unsigned char b = 0;
            if (field.status[field.grid.cell_index(ix, iy)] == Status::ok && std::isfinite(v))
                b = hi > lo ? static_cast<unsigned char>(std::lround(255.0 * (v - lo) / (hi - lo)))
                            : static_cast<unsigned char>(255);
            os.put(static_cast<char>(b));
        }
}

// ---------------------------------------------------------------------------
// Region masks
// ---------------------------------------------------------------------------

inline void write_mask_csv(std::ostream& os, const RegionMask& rm, const GridSpec& grid) {
    os << "# sdi region mask\n";
    os << "# version: " << kToolVersion << "\n";
    os << "# column: " << rm.column << "\n";
    os << "# predicate: " << rm.predicate.describe() << "\n";
    os << "# columns: ix,iy," << grid.axis1.name << "," << grid.axis2.name << ",mask\n";
    for (int iy = 0; iy < rm.ny; ++iy)
        for (int ix = 0; ix < rm.nx; ++ix)
            os << ix << "," << iy << "," << fmt_double(grid.axis1.coord(ix)) << ","
               << fmt_double(grid.axis2.coord(iy)) << "," << (rm.at(ix, iy) ? 1 : 0) << "\n";
}

inline nlohmann::json regions_report(const RegionMask& rm, const GridSpec& grid) {
    nlohmann::json j;
    j["column"] = rm.column;
    j["predicate"] = rm.predicate.describe();
    j["component_count"] = rm.components.size();
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : rm.components) {
        comps.push_back({{"id", c.id},
                         {"area_cells", c.area},
                         {"bbox_cells", {c.min_ix, c.max_ix, c.min_iy, c.max_iy}},
                         {"bbox_coords",
                          {grid.axis1.coord(c.min_ix), grid.axis1.coord(c.max_ix), grid.axis2.coord(c.min_iy),
                           grid.axis2.coord(c.max_iy)}},
                         {"sample_cell", {c.sample_ix, c.sample_iy}},
                         {"sample_coords", {grid.axis1.coord(c.sample_ix), grid.axis2.coord(c.sample_iy)}}});
    }
    j["components"] = comps;
    return j;
}

// ---------------------------------------------------------------------------
// Trajectory ensembles, long format
// ---------------------------------------------------------------------------

inline void write_ensemble_csv(std::ostream& os, const EnsembleStudy& study,
                               const std::vector<std::string>& state_names, const std::string& system,
                               uint64_t seed) {
    os << "# sdi ensemble file\n";
    os << "# version: " << kToolVersion << "\n";
    os << "# system: " << system << "\n";
    os << "# seed: " << seed << "\n";
    for (size_t r = 0; r < study.realizations.size(); ++r) {
        os << "# realization " << r << ": p = (";
        for (size_t d = 0; d < study.realizations[r].p.size(); ++d)
            os << (d ? ", " : "") << fmt_double(study.realizations[r].p[d]);
        os << "), status = " << to_string(study.realizations[r].status) << "\n";
    }
    os << "# columns: realization_id,t," << join(state_names, ",") << ",status\n";
    for (size_t r = 0; r < study.realizations.size(); ++r) {
        const Realization& real = study.realizations[r];
        for (size_t s = 0; s < real.times.size(); ++s) {
            os << r << "," << fmt_double(real.times[s]);
            for (int c = 0; c < real.states.cols(); ++c)
                os << "," << fmt_double(real.states(static_cast<int>(s), c));
            os << "," << to_string(real.status) << "\n";
        }
    }
}

}  // namespace sdi
