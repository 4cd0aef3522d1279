#include "guidance_lab/csv.hpp"

#include <fmt/format.h>

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace guidance_lab {

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows.at(row).at(col);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
        throw CsvError(fmt::format("row {}, column '{}': '{}' is not a number", row + 2, header.at(col), cell));
    }
    return v;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::string to_csv(const CsvTable& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else if (cells.size() != t.header.size()) {
            throw CsvError(fmt::format("line {}: {} fields, header has {}", lineno, cells.size(), t.header.size()));
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.header.empty()) throw CsvError("CSV has no header row");
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(path + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str());
    } catch (const CsvError& e) {
        throw CsvError(path + ": " + e.what());
    }
}

namespace {

void vector_header(std::vector<std::string>& header, const std::string& prefix, std::size_t dim) {
    for (std::size_t d = 0; d < dim; ++d) header.push_back(prefix + std::to_string(d));
}

void vector_cells(std::vector<std::string>& row, const Vector& v) {
    for (Eigen::Index d = 0; d < v.size(); ++d) row.push_back(format_double(v[d]));
}

}  // namespace

CsvTable trajectory_table(const TrajectoryBatch& batch) {
    const std::size_t dim = batch.gmm.dim();
    CsvTable t;
    t.header = {"seed", "step", "t", "alpha_bar"};
    vector_header(t.header, "x_", dim);
    vector_header(t.header, "x0c_", dim);
    vector_header(t.header, "x0u_", dim);
    vector_header(t.header, "x0g_", dim);
    for (const char* h : {"gamma", "gamma_omega", "guided_norm", "cfgpp_residual"}) t.header.emplace_back(h);

    for (const auto& rec : batch.records) {
        for (std::size_t i = 0; i < rec.steps.size(); ++i) {
            const auto& s = rec.steps[i];
            std::vector<std::string> row{std::to_string(rec.seed), std::to_string(i), format_double(s.t),
                                         format_double(s.alpha_bar)};
            vector_cells(row, s.x_t);
            vector_cells(row, s.x0_cond);
            vector_cells(row, s.x0_uncond);
            vector_cells(row, s.x0_guided);
            for (double v : {s.gamma, s.gamma_omega, s.guided_norm, s.cfgpp_residual}) row.push_back(format_double(v));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

CsvTable summary_table(const TrajectoryBatch& batch, const std::optional<Vector>& normal) {
    CsvTable t;
    t.header = {"seed"};
    vector_header(t.header, "x0_", batch.gmm.dim());
    t.header.emplace_back("norm");
    if (normal) t.header.emplace_back("w_dot");
    for (const auto& rec : batch.records) {
        std::vector<std::string> row{std::to_string(rec.seed)};
        vector_cells(row, rec.x_final);
        row.push_back(format_double(rec.x_final.norm()));
        if (normal) row.push_back(format_double(normal->dot(rec.x_final)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable report_table(const ProbeReport& report) {
    CsvTable t;
    t.header = report.csv_header;
    for (const auto& r : report.csv_rows) {
        std::vector<std::string> row;
        for (double v : r) row.push_back(format_double(v));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows) {
    CsvTable t;
    t.header = {"strategy", "omega", "mean_norm", "std_norm", "count"};
    for (const auto& r : rows) {
        t.rows.push_back({to_string(r.strategy), format_double(r.omega), format_double(r.mean_norm),
                          format_double(r.std_norm), std::to_string(r.count)});
    }
    return t;
}

CsvTable scatter_table(const std::vector<ScatterSet>& sets) {
    CsvTable t;
    t.header = {"omega", "component", "surface"};
    const std::size_t dim =
        sets.empty() || sets.front().components.empty() ? 0 : static_cast<std::size_t>(sets.front().components.front().centroid.size());
    vector_header(t.header, "x_", dim);
    for (const auto& set : sets) {
        for (const auto& comp : set.components) {
            for (const auto& x : comp.samples) {
                std::vector<std::string> row{format_double(set.omega), std::to_string(comp.component),
                                             comp.surface ? "1" : "0"};
                vector_cells(row, x);
                t.rows.push_back(std::move(row));
            }
        }
    }
    return t;
}

void write_text(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace guidance_lab
