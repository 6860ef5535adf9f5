#include "cospec/taxonomy.hpp"

#include "cospec/common.hpp"
#include "cospec/csv.hpp"

#include <algorithm>
#include <set>

namespace cospec {

SectorTaxonomy::SectorTaxonomy(std::map<std::string, std::string> raw_to_class,
                               std::map<std::string, std::string> class_to_group)
    : raw_to_class_(std::move(raw_to_class)), class_to_group_(std::move(class_to_group)) {
    for (const auto& [raw, cls] : raw_to_class_) {
        if (!class_to_group_.count(cls))
            throw DataError("sector class without a group: " + cls);
    }
}

namespace {

const std::vector<std::pair<std::vector<std::string>, std::string>>& default_groups() {
    static const std::vector<std::pair<std::vector<std::string>, std::string>> g = {
        {{"D01T03", "D05T09", "D10T12", "D13T15", "D16T18"}, "Primary production"},
        {{"D19T23", "D24T25"}, "Basic manufacturing"},
        {{"D26T28", "D29T30", "D31T33"}, "Manufacturing of capital goods"},
        {{"D35T39", "D41T43"}, "Infrastructure"},
        {{"D45T47", "D49T53"}, "Retail"},
        {{"D55T56", "D58T60", "D61", "D62T63", "D64T66", "D68", "D69T71", "D72", "D73T75",
          "D77T82"},
         "Services"},
        {{"D84", "D85", "D86T88", "D90T93", "D94T96", "D97T98", "D99"}, "Personal services"},
    };
    return g;
}

} // namespace

SectorTaxonomy SectorTaxonomy::builtin_default() {
    std::map<std::string, std::string> raw_to_class;
    std::map<std::string, std::string> class_to_group;
    for (const auto& [classes, group] : default_groups()) {
        for (const auto& cls : classes) {
            raw_to_class[cls] = cls;
            class_to_group[cls] = group;
        }
    }
    return SectorTaxonomy(std::move(raw_to_class), std::move(class_to_group));
}

SectorTaxonomy SectorTaxonomy::from_csv(const std::string& path) {
    auto table = csv::read_file(path);
    auto ci_raw = table.column("raw_code");
    auto ci_cls = table.column("sector_class");
    auto ci_grp = table.column("sector_group");
    if (!ci_raw || !ci_cls || !ci_grp)
        throw DataError("taxonomy file needs columns raw_code,sector_class,sector_group: " + path);
    std::map<std::string, std::string> raw_to_class;
    std::map<std::string, std::string> class_to_group;
    for (const auto& row : table.rows) {
        const auto& cls = row.at(*ci_cls);
        raw_to_class[row.at(*ci_raw)] = cls;
        auto [it, inserted] = class_to_group.emplace(cls, row.at(*ci_grp));
        if (!inserted && it->second != row.at(*ci_grp))
            throw DataError("sector class mapped to two groups: " + cls);
    }
    return SectorTaxonomy(std::move(raw_to_class), std::move(class_to_group));
}

const std::string& SectorTaxonomy::sector_class(const std::string& raw) const {
    auto it = raw_to_class_.find(raw);
    if (it == raw_to_class_.end())
        throw DataError("unknown raw sector code: " + raw);
    return it->second;
}

const std::string& SectorTaxonomy::sector_group(const std::string& cls) const {
    auto it = class_to_group_.find(cls);
    if (it == class_to_group_.end())
        throw DataError("unknown sector class: " + cls);
    return it->second;
}

std::vector<std::string> SectorTaxonomy::classes() const {
    std::vector<std::string> out;
    for (const auto& [cls, grp] : class_to_group_)
        out.push_back(cls);
    return out;
}

std::vector<std::string> SectorTaxonomy::groups() const {
    std::set<std::string> seen;
    for (const auto& [cls, grp] : class_to_group_)
        seen.insert(grp);
    return {seen.begin(), seen.end()};
}

CountryGroups::CountryGroups(std::map<std::string, std::string> country_to_group)
    : map_(std::move(country_to_group)) {
    for (const auto& [c, g] : map_) {
        if (g != "CEE" && g != "EU15")
            throw DataError("country group must be CEE or EU15, got: " + g);
    }
}

CountryGroups CountryGroups::builtin_default() {
    std::map<std::string, std::string> m;
    for (const char* c : {"CZE", "EST", "HUN", "LVA", "POL", "SVK", "SVN"})
        m[c] = "CEE";
    for (const char* c : {"AUT", "BEL", "DEU", "DNK", "ESP", "FIN", "FRA", "GBR", "GRC", "ITA",
                          "LUX", "NLD", "PRT", "SWE"})
        m[c] = "EU15";
    return CountryGroups(std::move(m));
}

CountryGroups CountryGroups::from_csv(const std::string& path) {
    auto table = csv::read_file(path);
    auto ci_c = table.column("country");
    auto ci_g = table.column("group");
    if (!ci_c || !ci_g)
        throw DataError("country group file needs columns country,group: " + path);
    std::map<std::string, std::string> m;
    for (const auto& row : table.rows)
        m[row.at(*ci_c)] = row.at(*ci_g);
    return CountryGroups(std::move(m));
}

const std::string& CountryGroups::group(const std::string& country) const {
    auto it = map_.find(country);
    if (it == map_.end())
        throw DataError("country without group label: " + country);
    return it->second;
}

std::vector<std::string> CountryGroups::countries() const {
    std::vector<std::string> out;
    for (const auto& [c, g] : map_)
        out.push_back(c);
    return out;
}

} // namespace cospec
