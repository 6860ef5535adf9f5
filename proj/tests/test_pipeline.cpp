#include "cospec/common.hpp"
#include "cospec/csv.hpp"
#include "cospec/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace cospec;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Synthetic employment panel over the builtin codes, 2000-2010, with
// country- and sector-specific scales so the networks are non-trivial.
fs::path fixture_csv() {
    static fs::path path = [] {
        fs::path dir = fs::temp_directory_path() / "cospec_test_fixture";
        fs::create_directories(dir);
        fs::path file = dir / "panel.csv";
        auto groups = CountryGroups::builtin_default();
        auto tax = SectorTaxonomy::builtin_default();
        std::mt19937 rng(2026);
        std::lognormal_distribution<double> scale(0.0, 0.8);
        std::ofstream out(file);
        out << "country,sector,year,employment,value_added_pc,gfc,ulc\n";
        std::map<std::string, double> country_scale, sector_scale;
        for (const auto& c : groups.countries())
            country_scale[c] = 50.0 * scale(rng);
        for (const auto& s : tax.classes())
            sector_scale[s] = scale(rng);
        std::map<std::pair<std::string, std::string>, double> cell_scale;
        for (const auto& c : groups.countries())
            for (const auto& s : tax.classes())
                cell_scale[{c, s}] = scale(rng);
        std::normal_distribution<double> jitter(0.0, 0.02);
        for (const auto& c : groups.countries())
            for (const auto& s : tax.classes())
                for (int year = 2000; year <= 2010; ++year) {
                    double drift = 1.0 + 0.01 * (year - 2000) + jitter(rng);
                    double emp = country_scale[c] * sector_scale[s] *
                                 cell_scale[{c, s}] * drift;
                    double va = 20.0 * sector_scale[s] * drift * (1.0 + jitter(rng));
                    double gfc = 2.0 * cell_scale[{c, s}] * drift;
                    double ulc = 0.5 + 0.1 * sector_scale[s] + jitter(rng);
                    out << c << "," << s << "," << year << "," << format_double(emp) << ","
                        << format_double(va) << "," << format_double(gfc) << ","
                        << format_double(ulc) << "\n";
                }
        return file;
    }();
    return path;
}

std::string config_json(const fs::path& out_dir, std::uint64_t seed = 42, int samples = 150,
                        int threads = 1) {
    std::ostringstream cfg;
    cfg << R"({
  "input": {"panel_csv": ")"
        << fixture_csv().string() << R"("},
  "years": {"panel_min": 2000, "panel_max": 2010,
            "network_min": 2000, "network_max": 2010, "base_year": 2000},
  "ensemble": {"samples": )"
        << samples << R"(, "seed": )" << seed << R"(},
  "threads": )"
        << threads << R"(,
  "output_dir": ")"
        << out_dir.string() << R"("
})";
    return cfg.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("cospec_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("run config parses, defaults, and hashes canonically") {
    auto dir = fresh_dir("cfg");
    auto cfg = RunConfig::from_json_string(config_json(dir, 7, 99, 4));
    CHECK(cfg.panel_csv == fixture_csv().string());
    CHECK(cfg.seed == 7);
    CHECK(cfg.samples == 99);
    CHECK(cfg.threads == 4);
    CHECK(cfg.network_year_min == 2000);
    CHECK(cfg.models.size() == 4); // default model set
    CHECK(cfg.models[0].name == "overall_main");
    CHECK(cfg.models[3].regressors == std::vector<std::string>{"Internal", "External"});

    // thread count must not influence the config identity
    auto other = RunConfig::from_json_string(config_json(dir, 7, 99, 1));
    CHECK(cfg.hash() == other.hash());
    auto reseeded = RunConfig::from_json_string(config_json(dir, 8, 99, 4));
    CHECK(cfg.hash() != reseeded.hash());

    CHECK_THROWS_AS(RunConfig::from_json_string("{not json"), DataError);
    CHECK_THROWS_AS(RunConfig::from_json_string("{}"), DataError);
}

TEST_CASE("pipeline end to end on the synthetic fixture") {
    auto dir = fresh_dir("e2e");
    Pipeline pipeline(RunConfig::from_json_string(config_json(dir)));
    pipeline.run_all();

    for (const char* name :
         {"validation.txt", "rca_2000.csv", "network_2000.edges.csv", "network_2010.matrix.csv",
          "zscores_2000.csv", "zscores.csv", "bicm_2005.txt", "model_overall_main.csv",
          "model_decomposed_interactions.csv", "table_s1.txt", "fig1b_correlations.csv",
          "fig1c_distributions.csv", "fig2a_cee_share.csv", "fig2c_zscores.csv",
          "fig3a_node_zscores.csv", "figS1_sector_group_zscores.csv", "config.json",
          "manifest.json"})
        CHECK_MESSAGE(fs::exists(dir / name), name);

    // combined z-score table covers all years at every level
    auto table = csv::read_string(read_file(dir / "zscores.csv"));
    std::set<std::string> years, levels;
    for (const auto& row : table.rows) {
        years.insert(row.at(0));
        levels.insert(row.at(1));
    }
    CHECK(years.size() == 11);
    CHECK(levels.count("network") == 1);
    CHECK(levels.count("group") == 1);
    CHECK(levels.count("sector_group") == 1);
    CHECK(levels.count("node") == 1);

    // regression output has the headline terms
    auto model_csv = read_file(dir / "model_overall_interactions.csv");
    CHECK(model_csv.find("CEE#Overall") != std::string::npos);
    CHECK(model_csv.find("CEE#Entry#Overall") != std::string::npos);
    auto s1 = read_file(dir / "table_s1.txt");
    CHECK(s1.find("overall_main") != std::string::npos);
    CHECK(s1.find("decomposed_interactions") != std::string::npos);
    CHECK(s1.find("R2 (within)") != std::string::npos);
}

TEST_CASE("identical configurations reproduce byte-identical z-scores") {
    auto dir_a = fresh_dir("det_a");
    auto dir_b = fresh_dir("det_b");
    Pipeline a(RunConfig::from_json_string(config_json(dir_a, 42, 60)));
    Pipeline b(RunConfig::from_json_string(config_json(dir_b, 42, 60)));
    a.run_zscores();
    b.run_zscores();
    CHECK(read_file(dir_a / "zscores.csv") == read_file(dir_b / "zscores.csv"));

    // a different seed changes the sampled statistics
    auto dir_c = fresh_dir("det_c");
    Pipeline c(RunConfig::from_json_string(config_json(dir_c, 43, 60)));
    c.run_zscores();
    CHECK(read_file(dir_a / "zscores.csv") != read_file(dir_c / "zscores.csv"));
}

TEST_CASE("thread count does not change the results") {
    auto dir_a = fresh_dir("thr_a");
    auto dir_b = fresh_dir("thr_b");
    Pipeline a(RunConfig::from_json_string(config_json(dir_a, 42, 60, 1)));
    Pipeline b(RunConfig::from_json_string(config_json(dir_b, 42, 60, 3)));
    a.run_zscores();
    b.run_zscores();
    CHECK(read_file(dir_a / "zscores.csv") == read_file(dir_b / "zscores.csv"));
}

TEST_CASE("corrupted cached outputs are recomputed from scratch") {
    auto dir = fresh_dir("cache");
    Pipeline first(RunConfig::from_json_string(config_json(dir, 42, 60)));
    first.run_zscores();
    std::string good = read_file(dir / "zscores_2003.csv");
    {
        std::ofstream out(dir / "zscores_2003.csv", std::ios::binary);
        out << "tampered\n";
    }
    Pipeline second(RunConfig::from_json_string(config_json(dir, 42, 60)));
    second.run_zscores();
    CHECK(read_file(dir / "zscores_2003.csv") == good);
}

TEST_CASE("intact caches are reused verbatim") {
    auto dir = fresh_dir("reuse");
    Pipeline first(RunConfig::from_json_string(config_json(dir, 42, 60)));
    first.run_zscores();
    auto before = read_file(dir / "zscores.csv");
    // a rerun with the same config must not alter any cached year file
    auto stamp = fs::last_write_time(dir / "zscores_2004.csv");
    Pipeline second(RunConfig::from_json_string(config_json(dir, 42, 60)));
    second.run_zscores();
    CHECK(read_file(dir / "zscores.csv") == before);
    CHECK(fs::last_write_time(dir / "zscores_2004.csv") == stamp);
}

TEST_CASE("a changed configuration invalidates the cache") {
    auto dir = fresh_dir("invalidate");
    Pipeline first(RunConfig::from_json_string(config_json(dir, 42, 60)));
    first.run_zscores();
    auto seeded_42 = read_file(dir / "zscores.csv");
    Pipeline second(RunConfig::from_json_string(config_json(dir, 43, 60)));
    second.run_zscores();
    CHECK(read_file(dir / "zscores.csv") != seeded_42);
}

TEST_CASE("restricted fit mode adds within-group ensemble rows") {
    auto dir = fresh_dir("restricted");
    std::string cfg = config_json(dir, 42, 40);
    cfg.replace(cfg.find("\"seed\": 42"), 10, "\"seed\": 42, \"restricted_fit\": true");
    auto config = RunConfig::from_json_string(cfg);
    config.network_year_min = 2004;
    config.network_year_max = 2004;
    Pipeline pipeline(config);
    pipeline.run_zscores();
    auto content = read_file(dir / "zscores_2004.csv");
    CHECK(content.find("network_restricted,internal_eu15") != std::string::npos);
    CHECK(content.find("network_restricted,internal_cee") != std::string::npos);
}

TEST_CASE("cli binary handles good and bad invocations") {
    const char* bin = std::getenv("COSPEC_CLI_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "COSPEC_CLI_BIN not set");
    auto dir = fresh_dir("cli");
    fs::path cfg_path = dir / "config.json";
    {
        std::ofstream out(cfg_path);
        out << config_json(dir, 42, 40);
    }
    auto run = [&](const std::string& args) {
        std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("validate --config " + cfg_path.string()) == 0);
    CHECK(fs::exists(dir / "validation.txt"));
    CHECK(run("validate --config " + (dir / "missing.json").string()) == 2);
    CHECK(run("validate") != 0); // --config is required
    CHECK(run("networks --config " + cfg_path.string() + " --years 2004:2005") == 0);
    CHECK(fs::exists(dir / "network_2004.edges.csv"));
    CHECK(fs::exists(dir / "network_2005.matrix.csv"));
    CHECK_FALSE(fs::exists(dir / "network_2006.edges.csv"));
}
