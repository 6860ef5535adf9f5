#pragma once

#include "cospec/bicm.hpp"
#include "cospec/ingest.hpp"
#include "cospec/regression.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cospec {

// Everything needed to reproduce a run; serialized alongside the outputs.
struct RunConfig {
    std::string panel_csv;
    ColumnSchema schema;
    std::optional<std::string> taxonomy_csv;
    std::optional<std::string> groups_csv;
    bool aggregate = true;
    bool skip_unknown = false;

    int panel_year_min = 1995;
    int panel_year_max = 2014;
    int network_year_min = 2000;
    int network_year_max = 2014;
    int base_year = 1995;

    double threshold = 1.0;
    int samples = 10000;
    std::uint64_t seed = 42;
    double tolerance = 1e-8;
    int max_iterations = 10000;
    bool restricted_fit = false;

    std::vector<ModelSpec> models;
    std::string output_dir = "out";
    int threads = 1;

    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json_string(const std::string& content);
    // Canonical serialization; equal configs hash equally. Thread count is
    // excluded so varying it cannot change outputs.
    std::string to_canonical_json() const;
    std::uint64_t hash() const;

    SectorTaxonomy taxonomy() const;
    CountryGroups groups() const;
};

class Pipeline {
public:
    explicit Pipeline(RunConfig config);

    ValidationReport run_validate();
    void run_networks();
    void run_zscores();
    void run_panel();
    void run_report();
    void run_all();

    const EmploymentPanel& panel();
    BipartiteNetwork network(int year);
    // Cached on disk keyed by config hash; recomputed only when stale.
    std::map<int, std::vector<ZScoreResult>> zscore_results();

private:
    void write_output(const std::string& name, const std::string& content);
    std::optional<std::string> cached_output(const std::string& name) const;
    void load_manifest();
    void save_manifest();
    std::vector<ZScoreResult> compute_year_zscores(int year);

    RunConfig config_;
    SectorTaxonomy taxonomy_;
    CountryGroups groups_;
    std::optional<EmploymentPanel> panel_;
    std::map<std::string, std::string> manifest_; // file -> checksum hex
    std::optional<std::map<int, std::vector<ZScoreResult>>> zcache_;
};

} // namespace cospec
