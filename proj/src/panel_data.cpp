#include "cospec/panel_data.hpp"

#include "cospec/common.hpp"
#include "cospec/csv.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <fstream>

namespace cospec {

std::string measure_name(Measure m) {
    switch (m) {
    case Measure::Employment: return "employment";
    case Measure::ValueAddedPc: return "value_added_pc";
    case Measure::Gfc: return "gfc";
    case Measure::Ulc: return "ulc";
    case Measure::MotifCount: return "motif_count";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    assert(ec == std::errc());
    return std::string(buf, ptr);
}

EmploymentPanel::EmploymentPanel(std::vector<std::string> countries,
                                 std::vector<std::string> sectors, int year_min, int year_max)
    : countries_(std::move(countries)), sectors_(std::move(sectors)), year_min_(year_min),
      year_max_(year_max) {
    if (year_max_ < year_min_)
        throw DataError("empty year range");
    std::sort(countries_.begin(), countries_.end());
    std::sort(sectors_.begin(), sectors_.end());
    if (std::adjacent_find(countries_.begin(), countries_.end()) != countries_.end())
        throw DataError("duplicate country code in index");
    if (std::adjacent_find(sectors_.begin(), sectors_.end()) != sectors_.end())
        throw DataError("duplicate sector code in index");
    cells_.resize(static_cast<std::size_t>(num_countries()) * num_sectors() * num_years());
}

std::optional<int> EmploymentPanel::country_index(const std::string& code) const {
    auto it = std::lower_bound(countries_.begin(), countries_.end(), code);
    if (it == countries_.end() || *it != code)
        return std::nullopt;
    return static_cast<int>(it - countries_.begin());
}

std::optional<int> EmploymentPanel::sector_index(const std::string& code) const {
    auto it = std::lower_bound(sectors_.begin(), sectors_.end(), code);
    if (it == sectors_.end() || *it != code)
        return std::nullopt;
    return static_cast<int>(it - sectors_.begin());
}

std::size_t EmploymentPanel::offset(int c, int s, int year) const {
    assert(c >= 0 && c < num_countries() && s >= 0 && s < num_sectors() && has_year(year));
    return (static_cast<std::size_t>(c) * num_sectors() + s) * num_years() + (year - year_min_);
}

const std::optional<Observation>& EmploymentPanel::cell(int c, int s, int year) const {
    return cells_[offset(c, s, year)];
}

void EmploymentPanel::set_cell(int c, int s, int year, Observation obs) {
    if (obs.employment < 0)
        throw DataError("negative employment");
    cells_[offset(c, s, year)] = std::move(obs);
}

std::optional<double> EmploymentPanel::measure(int c, int s, int year, Measure m) const {
    const auto& obs = cell(c, s, year);
    if (!obs)
        return std::nullopt;
    switch (m) {
    case Measure::Employment: return obs->employment;
    case Measure::ValueAddedPc: return obs->value_added_pc;
    case Measure::Gfc: return obs->gfc;
    case Measure::Ulc: return obs->ulc;
    case Measure::MotifCount: break;
    }
    throw DataError("measure not stored in panel: " + measure_name(m));
}

double EmploymentPanel::total_employment(int year) const {
    double total = 0;
    for (int c = 0; c < num_countries(); ++c)
        total += country_employment(c, year);
    return total;
}

double EmploymentPanel::country_employment(int c, int year) const {
    double total = 0;
    for (int s = 0; s < num_sectors(); ++s)
        if (const auto& obs = cell(c, s, year))
            total += obs->employment;
    return total;
}

double EmploymentPanel::sector_employment(int s, int year) const {
    double total = 0;
    for (int c = 0; c < num_countries(); ++c)
        if (const auto& obs = cell(c, s, year))
            total += obs->employment;
    return total;
}

std::string EmploymentPanel::to_csv() const {
    std::string out = "country,sector,year,employment,value_added_pc,gfc,ulc\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : ""; };
    for (int c = 0; c < num_countries(); ++c)
        for (int s = 0; s < num_sectors(); ++s)
            for (int year = year_min_; year <= year_max_; ++year) {
                const auto& obs = cell(c, s, year);
                if (!obs)
                    continue;
                out += csv::join_row({countries_[c], sectors_[s], std::to_string(year),
                                      format_double(obs->employment), opt(obs->value_added_pc),
                                      opt(obs->gfc), opt(obs->ulc)});
                out += '\n';
            }
    return out;
}

void EmploymentPanel::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write file: " + path);
    out << to_csv();
}

namespace {

double parse_double_field(const std::string& s, const char* what) {
    double v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(std::string("bad numeric value for ") + what + ": '" + s + "'");
    return v;
}

} // namespace

EmploymentPanel EmploymentPanel::from_csv_string(const std::string& content) {
    auto table = csv::read_string(content);
    const std::vector<std::string> expected = {"country",        "sector", "year", "employment",
                                              "value_added_pc", "gfc",    "ulc"};
    if (table.header != expected)
        throw DataError("not a canonical panel CSV (unexpected header)");

    std::vector<std::string> countries, sectors;
    int ymin = 1 << 30, ymax = -(1 << 30);
    for (const auto& row : table.rows) {
        if (row.size() != 7)
            throw DataError("canonical panel row with wrong field count");
        countries.push_back(row[0]);
        sectors.push_back(row[1]);
        int y = static_cast<int>(parse_double_field(row[2], "year"));
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (table.rows.empty())
        throw DataError("empty panel CSV");
    std::sort(countries.begin(), countries.end());
    countries.erase(std::unique(countries.begin(), countries.end()), countries.end());
    std::sort(sectors.begin(), sectors.end());
    sectors.erase(std::unique(sectors.begin(), sectors.end()), sectors.end());

    EmploymentPanel panel(countries, sectors, ymin, ymax);
    auto opt = [](const std::string& s, const char* what) -> std::optional<double> {
        if (s.empty())
            return std::nullopt;
        return parse_double_field(s, what);
    };
    for (const auto& row : table.rows) {
        Observation obs;
        obs.employment = parse_double_field(row[3], "employment");
        obs.value_added_pc = opt(row[4], "value_added_pc");
        obs.gfc = opt(row[5], "gfc");
        obs.ulc = opt(row[6], "ulc");
        int c = *panel.country_index(row[0]);
        int s = *panel.sector_index(row[1]);
        int y = static_cast<int>(parse_double_field(row[2], "year"));
        if (panel.cell(c, s, y))
            throw DataError("duplicate (country,sector,year) in canonical CSV: " + row[0] + "," +
                            row[1] + "," + row[2]);
        panel.set_cell(c, s, y, obs);
    }
    return panel;
}

EmploymentPanel EmploymentPanel::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_csv_string(content);
}

} // namespace cospec
