#pragma once

#include "cospec/panel_data.hpp"
#include "cospec/taxonomy.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cospec {

// Column-name mapping for arbitrary long-form exports.
struct ColumnSchema {
    std::string country = "country";
    std::string sector = "sector";
    std::string year = "year";
    std::string employment = "employment";
    std::optional<std::string> value_added_pc = "value_added_pc";
    std::optional<std::string> gfc = "gfc";
    std::optional<std::string> ulc = "ulc";
};

struct LoadOptions {
    std::optional<int> year_min;
    std::optional<int> year_max;
    // When set, rows with country/sector codes absent from the reference sets
    // are dropped instead of raising.
    bool skip_unknown_codes = false;
    const CountryGroups* known_countries = nullptr;
    const SectorTaxonomy* known_sectors = nullptr;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_loaded = 0;
    std::size_t duplicates_dropped = 0;
    std::size_t out_of_range_dropped = 0;
    std::size_t unknown_code_dropped = 0;
    std::vector<std::string> notes;
};

struct LoadResult {
    EmploymentPanel panel;
    LoadReport report;
};

LoadResult load_panel(const std::string& path, const ColumnSchema& schema,
                      const LoadOptions& options = {});
LoadResult load_panel_string(const std::string& content, const ColumnSchema& schema,
                             const LoadOptions& options = {});

// Sums employment and GFC into the 31 sector classes; value added per capita
// and unit labor cost are re-derived as employment-weighted aggregates.
EmploymentPanel aggregate_sectors(const EmploymentPanel& panel, const SectorTaxonomy& taxonomy);

struct ValidationReport {
    // (measure, year) -> number of missing cells among cells that exist.
    std::map<std::pair<std::string, int>, std::size_t> missing_cells;
    // "country,sector,year" strings with employment exactly zero.
    std::vector<std::string> zero_employment_cells;
    // country -> number of years with at least one observation.
    std::map<std::string, int> year_coverage;
    std::size_t absent_cells = 0;

    bool clean() const {
        return missing_cells.empty() && zero_employment_cells.empty() && absent_cells == 0;
    }
    std::string to_text() const;
};

ValidationReport validate_panel(const EmploymentPanel& panel);

} // namespace cospec
