#pragma once

#include "cospec/bicm.hpp"
#include "cospec/panel_data.hpp"
#include "cospec/taxonomy.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cospec {

// Node-level z-scores for one year, aligned with a panel's country and
// sector-class orderings. Degenerate cells are invalid and trigger listwise
// deletion downstream.
struct YearNodeZ {
    int year = 0;
    Eigen::MatrixXd overall, internal_z, external_z;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid_overall, valid_internal,
        valid_external;
};

YearNodeZ node_z_from_results(const std::vector<ZScoreResult>& results, int year,
                              const std::vector<std::string>& countries,
                              const std::vector<std::string>& sectors);

struct ModelSpec {
    std::string name = "model";
    bool dependent_diff = false;       // first-difference option; level is primary
    bool standardize_dependent = true;
    std::vector<std::string> regressors = {"Overall"}; // of {Overall, Internal, External}
    std::vector<std::string> controls = {"EMP", "GFC"};
    std::vector<std::string> interactions; // e.g. "CEE#Overall", "CEE#Entry#Overall"
    bool include_entry = true;
    bool include_recession = true;
    bool year_effects = true;
    bool time_trend = true;
    int entry_year = 2004;
    std::optional<std::string> sector_group_filter; // restrict to one sector group
};

struct PanelDataset {
    std::vector<std::string> column_names;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> unit;    // (country, sector) id per row
    std::vector<int> cluster; // country id per row
    std::vector<int> year;
    std::vector<std::string> unit_labels;
    std::vector<std::string> cluster_labels;
    std::size_t rows_dropped = 0;
    std::vector<std::string> notes;
    // filled by within_transform
    std::vector<std::string> mean_unit_labels;
    Eigen::VectorXd unit_mean_y;
    Eigen::MatrixXd unit_mean_X;

    int n() const { return static_cast<int>(y.size()); }
    int k() const { return static_cast<int>(X.cols()); }
};

PanelDataset build_dataset(const EmploymentPanel& panel, const std::map<int, YearNodeZ>& z,
                           const CountryGroups& groups, const SectorTaxonomy& taxonomy,
                           const ModelSpec& spec);

// Demeans y and every column of X within unit; single-observation units
// become zero rows.
PanelDataset within_transform(const PanelDataset& dataset);

struct RegressionResult {
    std::string model_name;
    std::vector<std::string> terms;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd t_stat;
    Eigen::VectorXd p_value;
    double r2_within = 0;
    int n_obs = 0;
    int n_groups = 0;
    int n_clusters = 0;
    Eigen::VectorXd residuals;
    std::vector<std::string> notes;
};

// Within estimator with cluster-robust standard errors at the country level.
RegressionResult fit_fe(const PanelDataset& dataset, const ModelSpec& spec);

// Liang-Zeger sandwich with the G/(G-1) * (N-1)/(N-K) correction.
Eigen::VectorXd cluster_robust_se(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                  const std::vector<int>& clusters);

std::string regression_to_csv(const RegressionResult& result);
std::string regression_table(const std::vector<RegressionResult>& results);

} // namespace cospec
