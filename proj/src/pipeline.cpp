#include "cospec/pipeline.hpp"

#include "cospec/common.hpp"
#include "cospec/csv.hpp"
#include "cospec/rng.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace cospec {

namespace {

json schema_to_json(const ColumnSchema& s) {
    json j;
    j["country"] = s.country;
    j["sector"] = s.sector;
    j["year"] = s.year;
    j["employment"] = s.employment;
    if (s.value_added_pc)
        j["value_added_pc"] = *s.value_added_pc;
    if (s.gfc)
        j["gfc"] = *s.gfc;
    if (s.ulc)
        j["ulc"] = *s.ulc;
    return j;
}

ColumnSchema schema_from_json(const json& j) {
    ColumnSchema s;
    s.country = j.value("country", s.country);
    s.sector = j.value("sector", s.sector);
    s.year = j.value("year", s.year);
    s.employment = j.value("employment", s.employment);
    if (j.contains("value_added_pc"))
        s.value_added_pc = j["value_added_pc"].get<std::string>();
    if (j.contains("gfc"))
        s.gfc = j["gfc"].get<std::string>();
    if (j.contains("ulc"))
        s.ulc = j["ulc"].get<std::string>();
    return s;
}

json model_to_json(const ModelSpec& m) {
    json j;
    j["name"] = m.name;
    j["dependent"] = m.dependent_diff ? "diff" : "level";
    j["standardize_dependent"] = m.standardize_dependent;
    j["regressors"] = m.regressors;
    j["controls"] = m.controls;
    j["interactions"] = m.interactions;
    j["entry"] = m.include_entry;
    j["recession"] = m.include_recession;
    j["year_effects"] = m.year_effects;
    j["time_trend"] = m.time_trend;
    j["entry_year"] = m.entry_year;
    if (m.sector_group_filter)
        j["sector_group"] = *m.sector_group_filter;
    return j;
}

ModelSpec model_from_json(const json& j) {
    ModelSpec m;
    m.name = j.value("name", m.name);
    std::string dep = j.value("dependent", "level");
    if (dep != "level" && dep != "diff")
        throw DataError("model dependent must be 'level' or 'diff'");
    m.dependent_diff = dep == "diff";
    m.standardize_dependent = j.value("standardize_dependent", m.standardize_dependent);
    if (j.contains("regressors"))
        m.regressors = j["regressors"].get<std::vector<std::string>>();
    if (j.contains("controls"))
        m.controls = j["controls"].get<std::vector<std::string>>();
    if (j.contains("interactions"))
        m.interactions = j["interactions"].get<std::vector<std::string>>();
    m.include_entry = j.value("entry", m.include_entry);
    m.include_recession = j.value("recession", m.include_recession);
    m.year_effects = j.value("year_effects", m.year_effects);
    m.time_trend = j.value("time_trend", m.time_trend);
    m.entry_year = j.value("entry_year", m.entry_year);
    if (j.contains("sector_group"))
        m.sector_group_filter = j["sector_group"].get<std::string>();
    return m;
}

// Default model set: overall main, overall interactions, decomposed main,
// decomposed interactions.
std::vector<ModelSpec> default_models() {
    ModelSpec m1;
    m1.name = "overall_main";
    m1.regressors = {"Overall"};
    ModelSpec m2 = m1;
    m2.name = "overall_interactions";
    m2.interactions = {"CEE#Overall", "Entry#Overall", "CEE#Entry#Overall"};
    ModelSpec m3;
    m3.name = "decomposed_main";
    m3.regressors = {"Internal", "External"};
    ModelSpec m4 = m3;
    m4.name = "decomposed_interactions";
    m4.interactions = {"CEE#Internal", "Entry#Internal", "CEE#Entry#Internal",
                       "CEE#External", "Entry#External", "CEE#Entry#External"};
    return {m1, m2, m3, m4};
}

} // namespace

RunConfig RunConfig::from_json_string(const std::string& content) {
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        RunConfig cfg;
        const json& input = j.at("input");
        cfg.panel_csv = input.at("panel_csv").get<std::string>();
        if (input.contains("schema"))
            cfg.schema = schema_from_json(input["schema"]);
        if (input.contains("taxonomy_csv") && !input["taxonomy_csv"].is_null())
            cfg.taxonomy_csv = input["taxonomy_csv"].get<std::string>();
        if (input.contains("groups_csv") && !input["groups_csv"].is_null())
            cfg.groups_csv = input["groups_csv"].get<std::string>();
        cfg.aggregate = input.value("aggregate", cfg.aggregate);
        cfg.skip_unknown = input.value("skip_unknown", cfg.skip_unknown);
        if (j.contains("years")) {
            const json& y = j["years"];
            cfg.panel_year_min = y.value("panel_min", cfg.panel_year_min);
            cfg.panel_year_max = y.value("panel_max", cfg.panel_year_max);
            cfg.network_year_min = y.value("network_min", cfg.network_year_min);
            cfg.network_year_max = y.value("network_max", cfg.network_year_max);
            cfg.base_year = y.value("base_year", cfg.base_year);
        }
        cfg.threshold = j.value("threshold", cfg.threshold);
        if (j.contains("ensemble")) {
            const json& e = j["ensemble"];
            cfg.samples = e.value("samples", cfg.samples);
            cfg.seed = e.value("seed", cfg.seed);
            cfg.tolerance = e.value("tolerance", cfg.tolerance);
            cfg.max_iterations = e.value("max_iterations", cfg.max_iterations);
            cfg.restricted_fit = e.value("restricted_fit", cfg.restricted_fit);
        }
        if (j.contains("models"))
            for (const auto& mj : j["models"])
                cfg.models.push_back(model_from_json(mj));
        else
            cfg.models = default_models();
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.threads = j.value("threads", cfg.threads);
        return cfg;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid config: ") + e.what());
    }
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open config file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(content);
}

std::string RunConfig::to_canonical_json() const {
    json j;
    j["input"]["panel_csv"] = panel_csv;
    j["input"]["schema"] = schema_to_json(schema);
    j["input"]["taxonomy_csv"] = taxonomy_csv ? json(*taxonomy_csv) : json(nullptr);
    j["input"]["groups_csv"] = groups_csv ? json(*groups_csv) : json(nullptr);
    j["input"]["aggregate"] = aggregate;
    j["input"]["skip_unknown"] = skip_unknown;
    j["years"]["panel_min"] = panel_year_min;
    j["years"]["panel_max"] = panel_year_max;
    j["years"]["network_min"] = network_year_min;
    j["years"]["network_max"] = network_year_max;
    j["years"]["base_year"] = base_year;
    j["threshold"] = threshold;
    j["ensemble"]["samples"] = samples;
    j["ensemble"]["seed"] = seed;
    j["ensemble"]["tolerance"] = tolerance;
    j["ensemble"]["max_iterations"] = max_iterations;
    j["ensemble"]["restricted_fit"] = restricted_fit;
    j["models"] = json::array();
    for (const auto& m : models)
        j["models"].push_back(model_to_json(m));
    j["output_dir"] = output_dir;
    return j.dump(2);
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_canonical_json()); }

SectorTaxonomy RunConfig::taxonomy() const {
    return taxonomy_csv ? SectorTaxonomy::from_csv(*taxonomy_csv)
                        : SectorTaxonomy::builtin_default();
}

CountryGroups RunConfig::groups() const {
    return groups_csv ? CountryGroups::from_csv(*groups_csv) : CountryGroups::builtin_default();
}

Pipeline::Pipeline(RunConfig config)
    : config_(std::move(config)), taxonomy_(config_.taxonomy()), groups_(config_.groups()) {
    fs::create_directories(config_.output_dir);
    load_manifest();
}

void Pipeline::load_manifest() {
    manifest_.clear();
    fs::path path = fs::path(config_.output_dir) / "manifest.json";
    std::ifstream in(path);
    if (!in)
        return;
    try {
        json j = json::parse(in);
        if (j.value("config_hash", "") != to_hex(config_.hash()))
            return; // stale cache from a different configuration
        for (const auto& [name, sum] : j.at("files").items())
            manifest_[name] = sum.get<std::string>();
    } catch (...) {
        manifest_.clear();
    }
}

void Pipeline::save_manifest() {
    json j;
    j["config_hash"] = to_hex(config_.hash());
    j["seed"] = config_.seed;
    j["files"] = json::object();
    for (const auto& [name, sum] : manifest_)
        j["files"][name] = sum;
    std::ofstream out(fs::path(config_.output_dir) / "manifest.json");
    out << j.dump(2) << "\n";
}

void Pipeline::write_output(const std::string& name, const std::string& content) {
    fs::path path = fs::path(config_.output_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write output file: " + path.string());
    out << content;
    manifest_[name] = to_hex(fnv1a64(content));
    save_manifest();
}

std::optional<std::string> Pipeline::cached_output(const std::string& name) const {
    auto it = manifest_.find(name);
    if (it == manifest_.end())
        return std::nullopt;
    std::ifstream in(fs::path(config_.output_dir) / name, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (to_hex(fnv1a64(content)) != it->second)
        return std::nullopt;
    return content;
}

const EmploymentPanel& Pipeline::panel() {
    if (!panel_) {
        LoadOptions opts;
        opts.year_min = config_.panel_year_min;
        opts.year_max = config_.panel_year_max;
        opts.skip_unknown_codes = config_.skip_unknown;
        opts.known_countries = &groups_;
        opts.known_sectors = &taxonomy_;
        auto result = load_panel(config_.panel_csv, config_.schema, opts);
        panel_ = config_.aggregate ? aggregate_sectors(result.panel, taxonomy_)
                                   : std::move(result.panel);
    }
    return *panel_;
}

BipartiteNetwork Pipeline::network(int year) {
    return binarize(rca_matrix(panel(), year), config_.threshold);
}

ValidationReport Pipeline::run_validate() {
    auto report = validate_panel(panel());
    write_output("validation.txt", report.to_text());
    return report;
}

void Pipeline::run_networks() {
    for (int year = config_.network_year_min; year <= config_.network_year_max; ++year) {
        auto rca = rca_matrix(panel(), year);
        auto net = binarize(rca, config_.threshold);
        std::string tag = std::to_string(year);
        write_output("rca_" + tag + ".csv", rca_to_csv(rca));
        write_output("network_" + tag + ".edges.csv", network_to_edge_csv(net));
        write_output("network_" + tag + ".matrix.csv", network_to_matrix_csv(net));
    }
}

namespace {

std::vector<ZScoreResult> parse_zscores_csv(const std::string& content) {
    auto table = csv::read_string(content);
    std::vector<ZScoreResult> out;
    for (const auto& row : table.rows) {
        ZScoreResult r;
        r.level = row.at(1);
        r.scope = row.at(2);
        r.country = row.at(3);
        r.sector = row.at(4);
        r.observed = std::stod(row.at(5));
        r.mean = std::stod(row.at(6));
        r.sd = std::stod(row.at(7));
        r.z = std::stod(row.at(8));
        r.degenerate = row.at(9) == "1";
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

std::vector<ZScoreResult> Pipeline::compute_year_zscores(int year) {
    BipartiteNetwork net = network(year);
    BicmModel model = fit(degrees(net),
                          FitOptions{config_.tolerance, config_.max_iterations, 0.5});
    model.year = year;
    model.countries = net.countries;
    model.sectors = net.sectors;
    std::uint64_t year_seed = splitmix64(config_.seed ^ static_cast<std::uint64_t>(year));
    auto results = zscores(net, model, groups_, config_.samples, year_seed, &taxonomy_);

    if (config_.restricted_fit) {
        // Refit on each group's submatrix and score its internal motif total.
        for (const std::string& label : {std::string("EU15"), std::string("CEE")}) {
            BipartiteNetwork sub;
            sub.year = year;
            sub.sectors = net.sectors;
            std::vector<int> rows;
            for (int c = 0; c < net.num_countries(); ++c)
                if (groups_.group(net.countries[c]) == label) {
                    rows.push_back(c);
                    sub.countries.push_back(net.countries[c]);
                }
            sub.adj = Eigen::MatrixXi::Zero(static_cast<int>(rows.size()), net.num_sectors());
            for (std::size_t i = 0; i < rows.size(); ++i)
                sub.adj.row(static_cast<int>(i)) = net.adj.row(rows[i]);
            BicmModel sub_model =
                fit(degrees(sub), FitOptions{config_.tolerance, config_.max_iterations, 0.5});
            sub_model.countries = sub.countries;
            sub_model.sectors = sub.sectors;
            std::uint64_t sub_seed = splitmix64(year_seed ^ fnv1a64(label));
            double observed = static_cast<double>(motif_total(sub));
            double sum = 0, sumsq = 0;
            for (int k = 0; k < config_.samples; ++k) {
                double v = static_cast<double>(motif_total(sample_one(sub_model, sub_seed, k)));
                sum += v;
                sumsq += v * v;
            }
            ZScoreResult r;
            r.level = "network_restricted";
            r.scope = label == "EU15" ? "internal_eu15" : "internal_cee";
            r.observed = observed;
            r.mean = sum / config_.samples;
            double var = sumsq / config_.samples - r.mean * r.mean;
            r.sd = var > 0 ? std::sqrt(var) : 0.0;
            r.degenerate = !(var > 0);
            r.z = r.degenerate ? 0.0 : (observed - r.mean) / r.sd;
            results.push_back(r);
        }
    }
    return results;
}

std::map<int, std::vector<ZScoreResult>> Pipeline::zscore_results() {
    if (zcache_)
        return *zcache_;
    panel(); // load before spawning workers

    std::vector<int> years;
    std::map<int, std::vector<ZScoreResult>> results;
    for (int year = config_.network_year_min; year <= config_.network_year_max; ++year) {
        std::string name = "zscores_" + std::to_string(year) + ".csv";
        if (auto cached = cached_output(name))
            results[year] = parse_zscores_csv(*cached);
        else
            years.push_back(year);
    }

    int threads = std::max(1, config_.threads);
    std::vector<std::vector<ZScoreResult>> fresh(years.size());
    auto worker = [&](int begin, int step) {
        for (std::size_t i = begin; i < years.size(); i += step)
            fresh[i] = compute_year_zscores(years[i]);
    };
    if (threads == 1 || years.size() <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker, t, threads);
        for (auto& t : pool)
            t.join();
    }
    for (std::size_t i = 0; i < years.size(); ++i)
        results[years[i]] = std::move(fresh[i]);
    zcache_ = results;
    return results;
}

void Pipeline::run_zscores() {
    auto results = zscore_results();
    std::string combined = "year,level,scope,country,sector,observed,mean,sd,z,degenerate\n";
    for (const auto& [year, rs] : results) {
        std::string name = "zscores_" + std::to_string(year) + ".csv";
        std::string content = zscores_to_csv(rs, year);
        if (!cached_output(name))
            write_output(name, content);
        // strip the header when appending
        combined += content.substr(content.find('\n') + 1);

        std::string model_name = "bicm_" + std::to_string(year) + ".txt";
        if (!cached_output(model_name)) {
            BipartiteNetwork net = network(year);
            BicmModel model =
                fit(degrees(net), FitOptions{config_.tolerance, config_.max_iterations, 0.5});
            model.year = year;
            model.countries = net.countries;
            model.sectors = net.sectors;
            write_output(model_name, bicm_to_text(model));
        }
    }
    write_output("zscores.csv", combined);
}

void Pipeline::run_panel() {
    if (config_.models.empty())
        throw DataError("no model specifications configured");
    auto z = zscore_results();
    const EmploymentPanel& pnl = panel();
    std::map<int, YearNodeZ> node_z;
    for (const auto& [year, rs] : z)
        node_z[year] = node_z_from_results(rs, year, pnl.countries(), pnl.sectors());

    std::vector<RegressionResult> fitted;
    for (const auto& spec : config_.models) {
        auto ds = build_dataset(pnl, node_z, groups_, taxonomy_, spec);
        auto result = fit_fe(ds, spec);
        std::string body = regression_to_csv(result);
        for (const auto& note : result.notes)
            body += "# " + note + "\n";
        body += "# r2_within," + format_double(result.r2_within) + "\n";
        body += "# n_obs," + std::to_string(result.n_obs) + "\n";
        body += "# n_groups," + std::to_string(result.n_groups) + "\n";
        write_output("model_" + spec.name + ".csv", body);
        fitted.push_back(std::move(result));
    }
    write_output("table_s1.txt", regression_table(fitted));
}

void Pipeline::run_report() {
    const EmploymentPanel& pnl = panel();

    {
        std::string out = "year,measure,group,correlation\n";
        const std::pair<Measure, const char*> measures[] = {
            {Measure::Employment, "employment"},
            {Measure::Ulc, "ulc"},
            {Measure::ValueAddedPc, "value_added_pc"},
            {Measure::MotifCount, "motif_count"}};
        const std::pair<GroupFilter, const char*> filters[] = {
            {GroupFilter::All, "all"}, {GroupFilter::Eu15, "EU15"}, {GroupFilter::Cee, "CEE"}};
        for (const auto& [measure, mname] : measures)
            for (const auto& [filter, fname] : filters) {
                auto series = base_year_correlation(pnl, measure, config_.base_year, filter,
                                                   &groups_, config_.threshold);
                for (const auto& [year, corr] : series)
                    out += std::to_string(year) + "," + mname + "," + fname + "," +
                           (corr ? format_double(*corr) : "") + "\n";
            }
        write_output("fig1b_correlations.csv", out);
    }

    {
        std::string out = "year,measure,group,n,mean,min,q25,median,q75,max\n";
        const std::pair<Measure, const char*> measures[] = {{Measure::Employment, "employment"},
                                                            {Measure::Ulc, "ulc"},
                                                            {Measure::ValueAddedPc,
                                                             "value_added_pc"}};
        for (int year = pnl.year_min(); year <= pnl.year_max(); ++year) {
            for (const auto& [measure, mname] : measures) {
                std::map<std::string, std::vector<double>> by_group;
                for (int c = 0; c < pnl.num_countries(); ++c)
                    for (int s = 0; s < pnl.num_sectors(); ++s)
                        if (auto v = pnl.measure(c, s, year, measure))
                            by_group[groups_.group(pnl.countries()[c])].push_back(*v);
                for (auto& [g, vals] : by_group) {
                    std::sort(vals.begin(), vals.end());
                    auto q = [&](double f) {
                        return vals[static_cast<std::size_t>(f * (vals.size() - 1))];
                    };
                    double mean = 0;
                    for (double v : vals)
                        mean += v;
                    mean /= vals.size();
                    out += std::to_string(year) + "," + mname + "," + g + "," +
                           std::to_string(vals.size()) + "," + format_double(mean) + "," +
                           format_double(vals.front()) + "," + format_double(q(0.25)) + "," +
                           format_double(q(0.5)) + "," + format_double(q(0.75)) + "," +
                           format_double(vals.back()) + "\n";
                }
            }
        }
        write_output("fig1c_distributions.csv", out);
    }

    {
        std::string out = "year,cee_links,total_links,cee_share\n";
        for (int year = config_.network_year_min; year <= config_.network_year_max; ++year) {
            BipartiteNetwork net = network(year);
            auto deg = degrees(net);
            double cee = 0, total = 0;
            for (int c = 0; c < net.num_countries(); ++c) {
                total += deg.diversification(c);
                if (groups_.is_cee(net.countries[c]))
                    cee += deg.diversification(c);
            }
            out += std::to_string(year) + "," + format_double(cee) + "," + format_double(total) +
                   "," + (total > 0 ? format_double(cee / total) : "") + "\n";
        }
        write_output("fig2a_cee_share.csv", out);
    }

    auto z = zscore_results();
    {
        std::string out = "year,scope,mode,observed,mean,sd,z,degenerate\n";
        for (const auto& [year, rs] : z)
            for (const auto& r : rs) {
                if (r.level != "network" && r.level != "group" && r.level != "network_restricted")
                    continue;
                std::string mode =
                    r.level == "network_restricted" ? "restricted_fit" : "full_matrix";
                out += std::to_string(year) + "," + r.scope + "," + mode + "," +
                       format_double(r.observed) + "," + format_double(r.mean) + "," +
                       format_double(r.sd) + "," + format_double(r.z) + "," +
                       (r.degenerate ? "1" : "0") + "\n";
            }
        write_output("fig2c_zscores.csv", out);
    }
    {
        std::string out = "year,country,country_group,sector,sector_group,scope,z,degenerate\n";
        for (const auto& [year, rs] : z)
            for (const auto& r : rs) {
                if (r.level != "node")
                    continue;
                out += std::to_string(year) + "," + r.country + "," + groups_.group(r.country) +
                       "," + r.sector + "," + taxonomy_.sector_group(r.sector) + "," + r.scope +
                       "," + format_double(r.z) + "," + (r.degenerate ? "1" : "0") + "\n";
            }
        write_output("fig3a_node_zscores.csv", out);
    }
    {
        std::string out = "year,sector_group,scope,observed,mean,sd,z,degenerate\n";
        for (const auto& [year, rs] : z)
            for (const auto& r : rs) {
                if (r.level != "sector_group")
                    continue;
                out += std::to_string(year) + "," + r.sector + "," + r.scope + "," +
                       format_double(r.observed) + "," + format_double(r.mean) + "," +
                       format_double(r.sd) + "," + format_double(r.z) + "," +
                       (r.degenerate ? "1" : "0") + "\n";
            }
        write_output("figS1_sector_group_zscores.csv", out);
    }
    write_output("config.json", config_.to_canonical_json() + "\n");
}

void Pipeline::run_all() {
    run_validate();
    run_networks();
    run_zscores();
    run_panel();
    run_report();
}

} // namespace cospec
