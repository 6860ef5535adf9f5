#include "cospec/ingest.hpp"

#include "cospec/common.hpp"
#include "cospec/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cospec {

namespace {

struct RawRow {
    std::string country;
    std::string sector;
    int year = 0;
    Observation obs;
    std::size_t line = 0; // 1-based file line
};

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty())
        return std::nullopt;
    double v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt; // caller treats parse failure as malformed
    return v;
}

} // namespace

LoadResult load_panel_string(const std::string& content, const ColumnSchema& schema,
                             const LoadOptions& options) {
    auto table = csv::read_string(content);
    LoadReport report;

    auto need = [&](const std::string& name) {
        auto ci = table.column(name);
        if (!ci)
            throw DataError("required column missing from input: " + name);
        return *ci;
    };
    std::size_t ci_country = need(schema.country);
    std::size_t ci_sector = need(schema.sector);
    std::size_t ci_year = need(schema.year);
    std::size_t ci_emp = need(schema.employment);
    auto opt_col = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
        if (!name)
            return std::nullopt;
        return table.column(*name); // absent optional column is fine
    };
    auto ci_va = opt_col(schema.value_added_pc);
    auto ci_gfc = opt_col(schema.gfc);
    auto ci_ulc = opt_col(schema.ulc);

    std::vector<RawRow> rows;
    std::vector<std::size_t> malformed_lines;
    std::size_t max_ci = std::max({ci_country, ci_sector, ci_year, ci_emp});
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& fields = table.rows[i];
        ++report.rows_read;
        std::size_t line = i + 2; // header is line 1
        if (fields.size() <= max_ci) {
            malformed_lines.push_back(line);
            continue;
        }
        RawRow r;
        r.line = line;
        r.country = fields[ci_country];
        r.sector = fields[ci_sector];
        auto year = parse_opt(fields[ci_year]);
        auto emp = parse_opt(fields[ci_emp]);
        if (!year || *year != std::floor(*year) || !emp || *emp < 0 || r.country.empty() ||
            r.sector.empty()) {
            malformed_lines.push_back(line);
            continue;
        }
        r.year = static_cast<int>(*year);
        r.obs.employment = *emp;
        auto opt_field = [&](std::optional<std::size_t> ci) -> std::optional<double> {
            if (!ci || fields.size() <= *ci)
                return std::nullopt;
            return parse_opt(fields[*ci]);
        };
        r.obs.value_added_pc = opt_field(ci_va);
        r.obs.gfc = opt_field(ci_gfc);
        r.obs.ulc = opt_field(ci_ulc);
        rows.push_back(std::move(r));
    }
    if (!malformed_lines.empty()) {
        std::ostringstream msg;
        msg << "malformed rows at lines:";
        for (auto l : malformed_lines)
            msg << ' ' << l;
        throw DataError(msg.str());
    }

    // Code checks against the reference sets.
    {
        std::vector<RawRow> kept;
        std::set<std::string> unknown;
        for (auto& r : rows) {
            bool bad_country = options.known_countries && !options.known_countries->knows(r.country);
            bool bad_sector = options.known_sectors && !options.known_sectors->knows_raw(r.sector);
            if (bad_country || bad_sector) {
                unknown.insert(bad_country ? r.country : r.sector);
                if (!options.skip_unknown_codes) {
                    std::string msg = "unknown codes:";
                    for (const auto& u : unknown)
                        msg += ' ' + u;
                    throw DataError(msg);
                }
                ++report.unknown_code_dropped;
                continue;
            }
            kept.push_back(std::move(r));
        }
        rows = std::move(kept);
    }

    // Year range filter.
    if (options.year_min || options.year_max) {
        std::vector<RawRow> kept;
        for (auto& r : rows) {
            if ((options.year_min && r.year < *options.year_min) ||
                (options.year_max && r.year > *options.year_max)) {
                ++report.out_of_range_dropped;
                continue;
            }
            kept.push_back(std::move(r));
        }
        rows = std::move(kept);
    }
    if (rows.empty())
        throw DataError("no usable observations after filtering");

    // Deduplicate; conflicting duplicates are a hard error.
    std::map<std::tuple<std::string, std::string, int>, Observation> seen;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.country, r.sector, r.year);
        auto [it, inserted] = seen.emplace(key, r.obs);
        if (!inserted) {
            if (!(it->second == r.obs))
                throw DataError("conflicting duplicate observation for (" + r.country + "," +
                                r.sector + "," + std::to_string(r.year) + ")");
            ++report.duplicates_dropped;
        }
    }

    std::vector<std::string> countries, sectors;
    int ymin = 1 << 30, ymax = -(1 << 30);
    for (const auto& [key, obs] : seen) {
        countries.push_back(std::get<0>(key));
        sectors.push_back(std::get<1>(key));
        ymin = std::min(ymin, std::get<2>(key));
        ymax = std::max(ymax, std::get<2>(key));
    }
    std::sort(countries.begin(), countries.end());
    countries.erase(std::unique(countries.begin(), countries.end()), countries.end());
    std::sort(sectors.begin(), sectors.end());
    sectors.erase(std::unique(sectors.begin(), sectors.end()), sectors.end());
    if (options.year_min)
        ymin = std::min(ymin, *options.year_min);
    if (options.year_max)
        ymax = std::max(ymax, *options.year_max);

    EmploymentPanel panel(countries, sectors, ymin, ymax);
    for (const auto& [key, obs] : seen) {
        panel.set_cell(*panel.country_index(std::get<0>(key)), *panel.sector_index(std::get<1>(key)),
                       std::get<2>(key), obs);
        ++report.rows_loaded;
    }
    if (report.duplicates_dropped)
        report.notes.push_back(std::to_string(report.duplicates_dropped) +
                               " identical duplicate rows dropped");
    if (report.out_of_range_dropped)
        report.notes.push_back(std::to_string(report.out_of_range_dropped) +
                               " rows outside configured year range dropped");
    if (report.unknown_code_dropped)
        report.notes.push_back(std::to_string(report.unknown_code_dropped) +
                               " rows with unknown codes skipped");
    return LoadResult{std::move(panel), std::move(report)};
}

LoadResult load_panel(const std::string& path, const ColumnSchema& schema,
                      const LoadOptions& options) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_panel_string(content, schema, options);
}

EmploymentPanel aggregate_sectors(const EmploymentPanel& panel, const SectorTaxonomy& taxonomy) {
    std::vector<std::string> unmapped;
    for (const auto& raw : panel.sectors())
        if (!taxonomy.knows_raw(raw))
            unmapped.push_back(raw);
    if (!unmapped.empty()) {
        std::string msg = "unmapped sector codes:";
        for (const auto& u : unmapped)
            msg += ' ' + u;
        throw DataError(msg);
    }

    std::set<std::string> class_set;
    for (const auto& raw : panel.sectors())
        class_set.insert(taxonomy.sector_class(raw));
    std::vector<std::string> classes(class_set.begin(), class_set.end());

    EmploymentPanel out(panel.countries(), classes, panel.year_min(), panel.year_max());
    struct Acc {
        double emp = 0;
        double value_added = 0; // va_pc * emp
        double ulc_weighted = 0;
        double gfc = 0;
        bool any = false;
        bool va_complete = true;
        bool ulc_complete = true;
        bool gfc_complete = true;
    };
    for (int c = 0; c < panel.num_countries(); ++c) {
        for (int year = panel.year_min(); year <= panel.year_max(); ++year) {
            std::map<int, Acc> accs; // class index -> accumulator
            for (int s = 0; s < panel.num_sectors(); ++s) {
                const auto& obs = panel.cell(c, s, year);
                if (!obs)
                    continue;
                int k = *out.sector_index(taxonomy.sector_class(panel.sectors()[s]));
                Acc& a = accs[k];
                a.any = true;
                a.emp += obs->employment;
                if (obs->value_added_pc)
                    a.value_added += *obs->value_added_pc * obs->employment;
                else if (obs->employment > 0)
                    a.va_complete = false;
                if (obs->ulc)
                    a.ulc_weighted += *obs->ulc * obs->employment;
                else if (obs->employment > 0)
                    a.ulc_complete = false;
                if (obs->gfc)
                    a.gfc += *obs->gfc;
                else
                    a.gfc_complete = false;
            }
            for (const auto& [k, a] : accs) {
                if (!a.any)
                    continue;
                Observation obs;
                obs.employment = a.emp;
                if (a.va_complete && a.emp > 0)
                    obs.value_added_pc = a.value_added / a.emp;
                if (a.ulc_complete && a.emp > 0)
                    obs.ulc = a.ulc_weighted / a.emp;
                if (a.gfc_complete)
                    obs.gfc = a.gfc;
                out.set_cell(c, k, year, obs);
            }
        }
    }
    return out;
}

ValidationReport validate_panel(const EmploymentPanel& panel) {
    ValidationReport rep;
    const Measure optional_measures[] = {Measure::ValueAddedPc, Measure::Gfc, Measure::Ulc};
    for (int c = 0; c < panel.num_countries(); ++c) {
        int covered = 0;
        for (int year = panel.year_min(); year <= panel.year_max(); ++year) {
            bool any = false;
            for (int s = 0; s < panel.num_sectors(); ++s) {
                const auto& obs = panel.cell(c, s, year);
                if (!obs) {
                    ++rep.absent_cells;
                    continue;
                }
                any = true;
                if (obs->employment == 0)
                    rep.zero_employment_cells.push_back(panel.countries()[c] + "," +
                                                        panel.sectors()[s] + "," +
                                                        std::to_string(year));
                for (Measure m : optional_measures) {
                    if (!panel.measure(c, s, year, m))
                        ++rep.missing_cells[{measure_name(m), year}];
                }
            }
            if (any)
                ++covered;
        }
        rep.year_coverage[panel.countries()[c]] = covered;
    }
    return rep;
}

std::string ValidationReport::to_text() const {
    std::ostringstream out;
    out << "validation report\n";
    out << "absent cells: " << absent_cells << "\n";
    if (!missing_cells.empty()) {
        out << "missing measures:\n";
        for (const auto& [key, n] : missing_cells)
            out << "  " << key.first << " " << key.second << ": " << n << " cells\n";
    }
    if (!zero_employment_cells.empty()) {
        out << "zero-employment cells (degenerate-RCA risk):\n";
        for (const auto& cell : zero_employment_cells)
            out << "  " << cell << "\n";
    }
    out << "year coverage:\n";
    for (const auto& [country, n] : year_coverage)
        out << "  " << country << ": " << n << " years\n";
    if (clean())
        out << "no issues found\n";
    return out.str();
}

} // namespace cospec
