#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cospec {

// One (country, sector, year) cell. Employment is always present when the
// cell exists; the other measures may be absent.
struct Observation {
    double employment = 0.0;
    std::optional<double> value_added_pc;
    std::optional<double> gfc;
    std::optional<double> ulc;

    bool operator==(const Observation&) const = default;
};

enum class Measure { Employment, ValueAddedPc, Gfc, Ulc, MotifCount };

std::string measure_name(Measure m);

// Dense (country, sector, year) panel. Country and sector indices are sorted
// lexicographically by code; missing cells are explicit absences.
class EmploymentPanel {
public:
    EmploymentPanel(std::vector<std::string> countries, std::vector<std::string> sectors,
                    int year_min, int year_max);

    int num_countries() const { return static_cast<int>(countries_.size()); }
    int num_sectors() const { return static_cast<int>(sectors_.size()); }
    int year_min() const { return year_min_; }
    int year_max() const { return year_max_; }
    int num_years() const { return year_max_ - year_min_ + 1; }

    const std::vector<std::string>& countries() const { return countries_; }
    const std::vector<std::string>& sectors() const { return sectors_; }

    std::optional<int> country_index(const std::string& code) const;
    std::optional<int> sector_index(const std::string& code) const;
    bool has_year(int year) const { return year >= year_min_ && year <= year_max_; }

    const std::optional<Observation>& cell(int c, int s, int year) const;
    void set_cell(int c, int s, int year, Observation obs);

    std::optional<double> measure(int c, int s, int year, Measure m) const;

    double total_employment(int year) const;
    double country_employment(int c, int year) const;
    double sector_employment(int s, int year) const;

    std::string to_csv() const;
    void save_csv(const std::string& path) const;
    static EmploymentPanel from_csv_string(const std::string& content);
    static EmploymentPanel load_csv(const std::string& path);

    bool operator==(const EmploymentPanel&) const = default;

private:
    std::size_t offset(int c, int s, int year) const;

    std::vector<std::string> countries_;
    std::vector<std::string> sectors_;
    int year_min_;
    int year_max_;
    std::vector<std::optional<Observation>> cells_;
};

// Shortest round-trip decimal rendering.
std::string format_double(double v);

} // namespace cospec
