#pragma once

#include "cospec/motifs.hpp"
#include "cospec/rca.hpp"
#include "cospec/taxonomy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cospec {

struct FitDiagnostics {
    double residual = 0; // max absolute expected-degree error
    int iterations = 0;
};

// Fitted bipartite configuration model: p_cs = x_c y_s / (1 + x_c y_s).
// Deterministic nodes (degree 0 or full) carry multipliers 0 / infinity and
// exact probabilities.
struct BicmModel {
    int year = 0;
    std::vector<std::string> countries;
    std::vector<std::string> sectors;
    Eigen::VectorXd x; // country multipliers
    Eigen::VectorXd y; // sector multipliers
    Eigen::MatrixXd p; // C x S link probabilities
    FitDiagnostics diagnostics;

    int num_countries() const { return static_cast<int>(p.rows()); }
    int num_sectors() const { return static_cast<int>(p.cols()); }
};

struct FitOptions {
    double tolerance = 1e-8;
    int max_iterations = 10000;
    double damping = 0.5; // on log-multiplier updates
};

BicmModel fit(const DegreeSequences& degrees, const FitOptions& options = {});

// Log of the ensemble probability of a given adjacency matrix; -inf when the
// matrix contradicts a deterministic cell.
double matrix_log_probability(const BicmModel& model, const BipartiteNetwork& net);

// Sample k of the ensemble; a pure function of (seed, k).
BipartiteNetwork sample_one(const BicmModel& model, std::uint64_t seed, std::uint64_t k);
std::vector<BipartiteNetwork> sample(const BicmModel& model, int n, std::uint64_t seed);

// Closed-form expected motif count under independent links.
double analytic_motif_mean(const BicmModel& model);

struct EnsembleStats {
    std::string name;
    std::int64_t sample_count = 0;
    double mean = 0;
    double sd = 0;
    std::optional<double> analytic_mean;
};

// Exact mean/sd of a statistic by enumerating all 2^(C*S) matrices.
// Enumeration bound: C*S <= 20.
EnsembleStats exact_ensemble_stats(const BicmModel& model,
                                   const std::function<double(const Eigen::MatrixXi&)>& statistic,
                                   const std::string& name = "statistic");

struct ZScoreResult {
    std::string level;   // network / group / sector_group / node
    std::string scope;   // overall / internal_eu15 / internal_cee / external / internal
    std::string country; // node level only
    std::string sector;  // node level: sector class; sector_group level: group name
    double observed = 0;
    double mean = 0;
    double sd = 0;
    double z = 0;
    bool degenerate = false;
};

// Observed motif statistics vs the sampled ensemble at network, group,
// optional sector-group, and node level. Requires n >= 2.
std::vector<ZScoreResult> zscores(const BipartiteNetwork& net, const BicmModel& model,
                                  const CountryGroups& groups, int n, std::uint64_t seed,
                                  const SectorTaxonomy* taxonomy = nullptr);

std::string zscores_to_csv(const std::vector<ZScoreResult>& results, int year);

std::string bicm_to_text(const BicmModel& model);
BicmModel bicm_from_text(const std::string& content);

} // namespace cospec
