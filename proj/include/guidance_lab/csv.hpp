#pragma once

// Comma-separated tables: header row, LF endings, floats at 17 significant
// digits so every double survives a round trip.

#include "guidance_lab/samplers.hpp"
#include "guidance_lab/theory.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace guidance_lab {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; nullopt when absent.
    std::optional<std::size_t> column(const std::string& name) const;
    // Numeric cell; throws CsvError on a parse failure.
    double number(std::size_t row, std::size_t col) const;
};

std::string format_double(double v);

std::string to_csv(const CsvTable& table);
// Throws CsvError on an empty document or ragged rows.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

CsvTable trajectory_table(const TrajectoryBatch& batch);
// seed, x0_*, norm and, with a normal, w_dot.
CsvTable summary_table(const TrajectoryBatch& batch, const std::optional<Vector>& normal);
CsvTable report_table(const ProbeReport& report);
CsvTable sweep_table(const std::vector<SweepRow>& rows);
CsvTable scatter_table(const std::vector<ScatterSet>& sets);

// Writes the file in one shot, creating parent directories.
void write_text(const std::string& path, const std::string& content);

}  // namespace guidance_lab
