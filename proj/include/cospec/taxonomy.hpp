#pragma once

#include <map>
#include <string>
#include <vector>

namespace cospec {

// Maps raw activity codes to the 31 sector classes and each class to one of
// the 7 sector groups. The built-in default uses the STANI4 2016 class codes
// themselves as raw codes (identity mapping); finer extractions override it
// from file.
class SectorTaxonomy {
public:
    SectorTaxonomy(std::map<std::string, std::string> raw_to_class,
                   std::map<std::string, std::string> class_to_group);

    static SectorTaxonomy builtin_default();
    // CSV with columns raw_code,sector_class,sector_group.
    static SectorTaxonomy from_csv(const std::string& path);

    const std::map<std::string, std::string>& raw_to_class() const { return raw_to_class_; }
    const std::map<std::string, std::string>& class_to_group() const { return class_to_group_; }

    bool knows_raw(const std::string& raw) const { return raw_to_class_.count(raw) > 0; }
    const std::string& sector_class(const std::string& raw) const;
    const std::string& sector_group(const std::string& cls) const;

    // Sorted class codes.
    std::vector<std::string> classes() const;
    std::vector<std::string> groups() const;

private:
    std::map<std::string, std::string> raw_to_class_;
    std::map<std::string, std::string> class_to_group_;
};

// Country -> group label, groups "CEE" and "EU15".
class CountryGroups {
public:
    explicit CountryGroups(std::map<std::string, std::string> country_to_group);

    static CountryGroups builtin_default();
    // CSV with columns country,group.
    static CountryGroups from_csv(const std::string& path);

    bool knows(const std::string& country) const { return map_.count(country) > 0; }
    const std::string& group(const std::string& country) const;
    bool is_cee(const std::string& country) const { return group(country) == "CEE"; }

    const std::map<std::string, std::string>& map() const { return map_; }
    std::vector<std::string> countries() const;

private:
    std::map<std::string, std::string> map_;
};

} // namespace cospec
