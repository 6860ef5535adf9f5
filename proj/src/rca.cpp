#include "cospec/rca.hpp"

#include "cospec/common.hpp"
#include "cospec/csv.hpp"
#include "cospec/motifs.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace cospec {

RcaMatrix rca_matrix(const EmploymentPanel& panel, int year) {
    if (!panel.has_year(year))
        throw DataError("year not in panel: " + std::to_string(year));
    const int C = panel.num_countries();
    const int S = panel.num_sectors();

    Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(C, S);
    for (int c = 0; c < C; ++c)
        for (int s = 0; s < S; ++s)
            if (const auto& obs = panel.cell(c, s, year))
                emp(c, s) = obs->employment;

    RcaMatrix rca = rca_from_employment(emp);
    rca.year = year;
    rca.countries = panel.countries();
    rca.sectors = panel.sectors();
    return rca;
}

RcaMatrix rca_from_employment(const Eigen::MatrixXd& emp) {
    const int C = static_cast<int>(emp.rows());
    const int S = static_cast<int>(emp.cols());
    Eigen::VectorXd country_total = emp.rowwise().sum();
    Eigen::VectorXd sector_total = emp.colwise().sum();
    double grand_total = emp.sum();
    if (grand_total <= 0)
        throw DataError("zero total employment");

    RcaMatrix rca;
    rca.values = Eigen::MatrixXd::Zero(C, S);
    rca.defined.setConstant(C, S, false);
    for (int c = 0; c < C; ++c) {
        for (int s = 0; s < S; ++s) {
            if (country_total(c) <= 0 || sector_total(s) <= 0)
                continue; // undefined cell
            rca.defined(c, s) = true;
            rca.values(c, s) =
                (emp(c, s) / country_total(c)) / (sector_total(s) / grand_total);
        }
    }
    return rca;
}

BipartiteNetwork binarize(const RcaMatrix& rca, double threshold) {
    BipartiteNetwork net;
    net.year = rca.year;
    net.countries = rca.countries;
    net.sectors = rca.sectors;
    net.adj = Eigen::MatrixXi::Zero(rca.values.rows(), rca.values.cols());
    for (int c = 0; c < rca.values.rows(); ++c)
        for (int s = 0; s < rca.values.cols(); ++s)
            if (rca.defined(c, s) && rca.values(c, s) >= threshold)
                net.adj(c, s) = 1;
    return net;
}

DegreeSequences degrees(const BipartiteNetwork& net) {
    DegreeSequences deg;
    deg.diversification = net.adj.rowwise().sum();
    deg.ubiquity = net.adj.colwise().sum();
    return deg;
}

CountryProjection project_countries(const BipartiteNetwork& net) {
    CountryProjection proj;
    proj.year = net.year;
    proj.countries = net.countries;
    proj.z = net.adj * net.adj.transpose();
    return proj;
}

namespace {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 3)
        return std::nullopt;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0)
        return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

std::map<int, std::optional<double>>
base_year_correlation(const EmploymentPanel& panel, Measure measure, int base_year,
                      GroupFilter filter, const CountryGroups* groups, double threshold) {
    if (!panel.has_year(base_year))
        throw DataError("base year not in panel: " + std::to_string(base_year));
    if (filter != GroupFilter::All && !groups)
        throw DataError("group filter requires country group labels");

    const int C = panel.num_countries();
    const int S = panel.num_sectors();

    auto in_filter = [&](int c) {
        if (filter == GroupFilter::All)
            return true;
        const std::string& g = groups->group(panel.countries()[c]);
        return filter == GroupFilter::Eu15 ? g == "EU15" : g == "CEE";
    };

    // Node-level motif counts, built on demand per year.
    auto motif_values = [&](int year) {
        auto net = binarize(rca_matrix(panel, year), threshold);
        Eigen::MatrixXi node = motif_node(net);
        Eigen::MatrixXd out(C, S);
        for (int c = 0; c < C; ++c)
            for (int s = 0; s < S; ++s)
                out(c, s) = node(c, s);
        return out;
    };

    auto values_for = [&](int year) {
        std::vector<std::optional<double>> out(static_cast<std::size_t>(C) * S);
        if (measure == Measure::MotifCount) {
            Eigen::MatrixXd m = motif_values(year);
            for (int c = 0; c < C; ++c)
                for (int s = 0; s < S; ++s)
                    out[static_cast<std::size_t>(c) * S + s] = m(c, s);
        } else {
            for (int c = 0; c < C; ++c)
                for (int s = 0; s < S; ++s)
                    out[static_cast<std::size_t>(c) * S + s] = panel.measure(c, s, year, measure);
        }
        return out;
    };

    auto base = values_for(base_year);
    std::map<int, std::optional<double>> series;
    for (int year = panel.year_min(); year <= panel.year_max(); ++year) {
        auto cur = values_for(year);
        std::vector<double> x, y;
        for (int c = 0; c < C; ++c) {
            if (!in_filter(c))
                continue;
            for (int s = 0; s < S; ++s) {
                std::size_t i = static_cast<std::size_t>(c) * S + s;
                if (base[i] && cur[i]) {
                    x.push_back(*base[i]);
                    y.push_back(*cur[i]);
                }
            }
        }
        series[year] = pearson(x, y);
    }
    return series;
}

std::string network_to_edge_csv(const BipartiteNetwork& net) {
    std::string out = "year,country,sector\n";
    for (int c = 0; c < net.num_countries(); ++c)
        for (int s = 0; s < net.num_sectors(); ++s)
            if (net.adj(c, s))
                out += std::to_string(net.year) + "," + net.countries[c] + "," + net.sectors[s] +
                       "\n";
    return out;
}

std::string network_to_matrix_csv(const BipartiteNetwork& net) {
    std::string out = "country";
    for (const auto& s : net.sectors)
        out += "," + s;
    out += "\nyear," + std::to_string(net.year);
    for (int s = 1; s < net.num_sectors(); ++s)
        out += ",";
    out += "\n";
    for (int c = 0; c < net.num_countries(); ++c) {
        out += net.countries[c];
        for (int s = 0; s < net.num_sectors(); ++s)
            out += "," + std::to_string(net.adj(c, s));
        out += "\n";
    }
    return out;
}

BipartiteNetwork network_from_edge_csv(const std::string& content,
                                       const std::vector<std::string>& countries,
                                       const std::vector<std::string>& sectors) {
    auto table = csv::read_string(content);
    if (table.header != std::vector<std::string>{"year", "country", "sector"})
        throw DataError("not a network edge-list CSV");
    BipartiteNetwork net;
    net.countries = countries;
    net.sectors = sectors;
    net.adj = Eigen::MatrixXi::Zero(static_cast<int>(countries.size()),
                                    static_cast<int>(sectors.size()));
    auto index_of = [](const std::vector<std::string>& v, const std::string& x) {
        auto it = std::find(v.begin(), v.end(), x);
        if (it == v.end())
            throw DataError("edge-list label not in index: " + x);
        return static_cast<int>(it - v.begin());
    };
    for (const auto& row : table.rows) {
        net.year = std::stoi(row.at(0));
        net.adj(index_of(countries, row.at(1)), index_of(sectors, row.at(2))) = 1;
    }
    return net;
}

BipartiteNetwork network_from_matrix_csv(const std::string& content) {
    auto table = csv::read_string(content);
    if (table.header.empty() || table.header[0] != "country")
        throw DataError("not a network matrix CSV");
    BipartiteNetwork net;
    net.sectors.assign(table.header.begin() + 1, table.header.end());
    if (table.rows.empty() || table.rows[0].at(0) != "year")
        throw DataError("network matrix CSV missing year row");
    net.year = std::stoi(table.rows[0].at(1));
    const int S = static_cast<int>(net.sectors.size());
    const int C = static_cast<int>(table.rows.size()) - 1;
    net.adj = Eigen::MatrixXi::Zero(C, S);
    for (int c = 0; c < C; ++c) {
        const auto& row = table.rows[c + 1];
        net.countries.push_back(row.at(0));
        for (int s = 0; s < S; ++s)
            net.adj(c, s) = std::stoi(row.at(s + 1));
    }
    return net;
}

std::string rca_to_csv(const RcaMatrix& rca) {
    std::string out = "year,country,sector,rca,defined\n";
    for (int c = 0; c < rca.values.rows(); ++c)
        for (int s = 0; s < rca.values.cols(); ++s) {
            out += std::to_string(rca.year) + "," + rca.countries[c] + "," + rca.sectors[s] + ",";
            out += rca.defined(c, s) ? format_double(rca.values(c, s)) : "";
            out += rca.defined(c, s) ? ",1\n" : ",0\n";
        }
    return out;
}

} // namespace cospec
