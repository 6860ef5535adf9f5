#pragma once

#include "cospec/panel_data.hpp"
#include "cospec/taxonomy.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cospec {

// Balassa RCA values for one year; cells with a zero denominator or zero
// country total are flagged undefined rather than set to zero.
struct RcaMatrix {
    int year = 0;
    std::vector<std::string> countries;
    std::vector<std::string> sectors;
    Eigen::MatrixXd values;                               // C x S
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined; // C x S
};

struct BipartiteNetwork {
    int year = 0;
    std::vector<std::string> countries;
    std::vector<std::string> sectors;
    Eigen::MatrixXi adj; // C x S, entries in {0,1}

    int num_countries() const { return static_cast<int>(adj.rows()); }
    int num_sectors() const { return static_cast<int>(adj.cols()); }
    int num_links() const { return adj.sum(); }
};

struct DegreeSequences {
    Eigen::VectorXi diversification; // d_c, length C
    Eigen::VectorXi ubiquity;        // u_s, length S
};

struct CountryProjection {
    int year = 0;
    std::vector<std::string> countries;
    Eigen::MatrixXi z; // C x C, symmetric, diagonal = d_c
};

RcaMatrix rca_matrix(const EmploymentPanel& panel, int year);
// Same computation on a bare employment matrix (labels left empty).
RcaMatrix rca_from_employment(const Eigen::MatrixXd& employment);
BipartiteNetwork binarize(const RcaMatrix& rca, double threshold = 1.0);
DegreeSequences degrees(const BipartiteNetwork& net);
CountryProjection project_countries(const BipartiteNetwork& net);

enum class GroupFilter { All, Eu15, Cee };

// Per-year Pearson correlation of a measure against its base-year values,
// across (country, sector) cells present in both years. Years with fewer
// than 3 pairs or zero variance map to nullopt.
std::map<int, std::optional<double>>
base_year_correlation(const EmploymentPanel& panel, Measure measure, int base_year,
                      GroupFilter filter = GroupFilter::All,
                      const CountryGroups* groups = nullptr, double threshold = 1.0);

// Serialization; both formats round-trip.
std::string network_to_edge_csv(const BipartiteNetwork& net);
std::string network_to_matrix_csv(const BipartiteNetwork& net);
BipartiteNetwork network_from_edge_csv(const std::string& content,
                                       const std::vector<std::string>& countries,
                                       const std::vector<std::string>& sectors);
BipartiteNetwork network_from_matrix_csv(const std::string& content);

std::string rca_to_csv(const RcaMatrix& rca);

} // namespace cospec
