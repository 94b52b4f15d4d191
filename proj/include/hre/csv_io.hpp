#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hre/model.hpp"

namespace hre {

// Column mapping for a long-format panel CSV: one row per observation, a
// group label column, a positive response column and named covariates.
// The intercept is synthesised as the first design column and never read.
struct CsvPanelFormat {
    std::string group_column = "group";
    std::string response_column = "y";
    std::vector<std::string> covariate_columns;
    // Without a header, columns are addressed by 1-based position ("1", "2", ...).
    bool has_header = true;
};

// Groups appear in order of first occurrence. Rows are numbered from 1 and
// count the header line, so "row N" matches what an editor shows. Throws
// ParseError on missing columns, unparsable numbers or y <= 0.
PanelDataset read_panel_csv(const std::string& path, const CsvPanelFormat& format);
PanelDataset parse_panel_csv(std::istream& in, const std::string& name,
                             const CsvPanelFormat& format);

// Writes group, y and the non-intercept covariates under the given names.
void write_panel_csv(std::ostream& out, const PanelDataset& data,
                     const std::vector<std::string>& covariate_names);

// FNV-1a 64 over a canonical text rendering (ids, then every value with
// 17 significant digits), formatted as 16 hex digits.
std::string dataset_digest(const PanelDataset& data);

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

}  // namespace hre
