#include "cospec/regression.hpp"

#include "cospec/common.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace cospec {

YearNodeZ node_z_from_results(const std::vector<ZScoreResult>& results, int year,
                              const std::vector<std::string>& countries,
                              const std::vector<std::string>& sectors) {
    const int C = static_cast<int>(countries.size());
    const int S = static_cast<int>(sectors.size());
    YearNodeZ out;
    out.year = year;
    out.overall = Eigen::MatrixXd::Zero(C, S);
    out.internal_z = Eigen::MatrixXd::Zero(C, S);
    out.external_z = Eigen::MatrixXd::Zero(C, S);
    out.valid_overall.setConstant(C, S, false);
    out.valid_internal.setConstant(C, S, false);
    out.valid_external.setConstant(C, S, false);

    auto index_of = [](const std::vector<std::string>& v, const std::string& x) -> int {
        auto it = std::find(v.begin(), v.end(), x);
        return it == v.end() ? -1 : static_cast<int>(it - v.begin());
    };
    for (const auto& r : results) {
        if (r.level != "node")
            continue;
        int c = index_of(countries, r.country);
        int s = index_of(sectors, r.sector);
        if (c < 0 || s < 0)
            continue;
        if (r.scope == "overall") {
            out.overall(c, s) = r.z;
            out.valid_overall(c, s) = !r.degenerate;
        } else if (r.scope == "internal") {
            out.internal_z(c, s) = r.z;
            out.valid_internal(c, s) = !r.degenerate;
        } else if (r.scope == "external") {
            out.external_z(c, s) = r.z;
            out.valid_external(c, s) = !r.degenerate;
        }
    }
    return out;
}

namespace {

bool is_motif_var(const std::string& v) {
    return v == "Overall" || v == "Internal" || v == "External";
}
bool is_control_var(const std::string& v) { return v == "EMP" || v == "GFC"; }
bool is_dummy_var(const std::string& v) {
    return v == "CEE" || v == "Entry" || v == "Recession";
}

std::vector<std::string> split_interaction(const std::string& term) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : term) {
        if (ch == '#') {
            parts.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

} // namespace

PanelDataset build_dataset(const EmploymentPanel& panel, const std::map<int, YearNodeZ>& z,
                           const CountryGroups& groups, const SectorTaxonomy& taxonomy,
                           const ModelSpec& spec) {
    // Continuous variables needed anywhere (regressors, controls, interactions).
    std::set<std::string> continuous;
    for (const auto& v : spec.regressors) {
        if (!is_motif_var(v))
            throw DataError("unknown regressor: " + v);
        continuous.insert(v);
    }
    for (const auto& v : spec.controls) {
        if (!is_control_var(v))
            throw DataError("unknown control: " + v);
        continuous.insert(v);
    }
    for (const auto& term : spec.interactions)
        for (const auto& part : split_interaction(term)) {
            if (is_dummy_var(part))
                continue;
            if (!is_motif_var(part) && !is_control_var(part))
                throw DataError("unknown interaction component: " + part);
            continuous.insert(part);
        }

    struct Row {
        int c, s, t;
        std::optional<double> y;
        std::map<std::string, std::optional<double>> vars;
    };
    std::vector<Row> rows;
    const int C = panel.num_countries();
    const int S = panel.num_sectors();
    for (int c = 0; c < C; ++c) {
        if (!groups.knows(panel.countries()[c]))
            throw DataError("country without group label: " + panel.countries()[c]);
        for (int s = 0; s < S; ++s) {
            if (spec.sector_group_filter &&
                taxonomy.sector_group(panel.sectors()[s]) != *spec.sector_group_filter)
                continue;
            for (int t = panel.year_min() + 1; t <= panel.year_max(); ++t) {
                Row row{c, s, t, std::nullopt, {}};
                auto va_t = panel.measure(c, s, t, Measure::ValueAddedPc);
                if (spec.dependent_diff) {
                    auto va_prev = panel.measure(c, s, t - 1, Measure::ValueAddedPc);
                    if (va_t && va_prev)
                        row.y = *va_t - *va_prev;
                } else {
                    row.y = va_t;
                }
                // explanatory variables measured at t-1
                auto zit = z.find(t - 1);
                for (const auto& v : continuous) {
                    std::optional<double> value;
                    if (is_motif_var(v)) {
                        if (zit != z.end()) {
                            const YearNodeZ& yz = zit->second;
                            if (v == "Overall" && yz.valid_overall(c, s))
                                value = yz.overall(c, s);
                            else if (v == "Internal" && yz.valid_internal(c, s))
                                value = yz.internal_z(c, s);
                            else if (v == "External" && yz.valid_external(c, s))
                                value = yz.external_z(c, s);
                        }
                    } else if (v == "EMP") {
                        value = panel.measure(c, s, t - 1, Measure::Employment);
                    } else if (v == "GFC") {
                        value = panel.measure(c, s, t - 1, Measure::Gfc);
                    }
                    row.vars[v] = value;
                }
                rows.push_back(std::move(row));
            }
        }
    }

    // Pooled standardization over available values, before listwise deletion.
    auto standardize = [&](const std::string& name, auto getter, auto setter) {
        double sum = 0, sumsq = 0;
        std::size_t n = 0;
        for (const auto& row : rows)
            if (auto v = getter(row)) {
                sum += *v;
                sumsq += *v * *v;
                ++n;
            }
        if (n == 0)
            throw DataError("variable has no observations: " + name);
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        if (!(var > 0))
            throw DataError("zero variance, cannot standardize: " + name);
        double sd = std::sqrt(var);
        for (auto& row : rows)
            if (auto v = getter(row))
                setter(row, (*v - mean) / sd);
    };
    for (const auto& v : continuous)
        standardize(
            v, [&](const Row& r) { return r.vars.at(v); },
            [&](Row& r, double x) { r.vars[v] = x; });
    if (spec.standardize_dependent)
        standardize(
            "dependent", [](const Row& r) { return r.y; },
            [](Row& r, double x) { r.y = x; });

    // Column plan.
    std::vector<std::string> columns;
    for (const auto& v : spec.regressors)
        columns.push_back(v);
    for (const auto& term : spec.interactions)
        columns.push_back(term);
    // Entry and Recession are functions of the year alone; with year effects
    // in the model their main effects are absorbed and must be omitted (they
    // stay available inside interactions, which vary across units).
    std::vector<std::string> absorbed;
    if (spec.include_entry) {
        if (spec.year_effects)
            absorbed.push_back("Entry");
        else
            columns.push_back("Entry");
    }
    if (spec.include_recession) {
        if (spec.year_effects)
            absorbed.push_back("Recession");
        else
            columns.push_back("Recession");
    }
    for (const auto& v : spec.controls)
        columns.push_back(v);

    PanelDataset ds;
    ds.rows_dropped = 0;
    std::map<std::pair<int, int>, int> unit_ids;
    std::map<int, int> cluster_ids;
    std::vector<Row*> kept;
    for (auto& row : rows) {
        bool complete = row.y.has_value();
        for (const auto& v : continuous)
            complete = complete && row.vars.at(v).has_value();
        if (!complete) {
            ++ds.rows_dropped;
            continue;
        }
        kept.push_back(&row);
    }
    if (kept.empty())
        throw DataError("empty estimation sample after filters and listwise deletion (" +
                        std::to_string(ds.rows_dropped) + " rows dropped)");

    std::set<int> years_present;
    for (const Row* row : kept)
        years_present.insert(row->t);
    int base_year = *years_present.begin();
    std::vector<int> fe_years(std::next(years_present.begin()), years_present.end());
    if (spec.time_trend)
        columns.push_back("trend");
    if (spec.year_effects)
        for (int yr : fe_years)
            columns.push_back("year_" + std::to_string(yr));

    const int N = static_cast<int>(kept.size());
    const int K = static_cast<int>(columns.size());
    ds.column_names = columns;
    ds.X = Eigen::MatrixXd::Zero(N, K);
    ds.y = Eigen::VectorXd::Zero(N);
    ds.unit.resize(N);
    ds.cluster.resize(N);
    ds.year.resize(N);

    for (int i = 0; i < N; ++i) {
        const Row& row = *kept[i];
        bool cee = groups.is_cee(panel.countries()[row.c]);
        auto value_of = [&](const std::string& v) -> double {
            if (v == "CEE")
                return cee ? 1.0 : 0.0;
            if (v == "Entry")
                return row.t >= spec.entry_year ? 1.0 : 0.0;
            if (v == "Recession")
                return (row.t == 2008 || row.t == 2009) ? 1.0 : 0.0;
            return *row.vars.at(v);
        };
        for (int j = 0; j < K; ++j) {
            const std::string& col = columns[j];
            if (col == "trend") {
                ds.X(i, j) = row.t - base_year;
            } else if (col.rfind("year_", 0) == 0) {
                ds.X(i, j) = row.t == std::stoi(col.substr(5)) ? 1.0 : 0.0;
            } else if (col.find('#') != std::string::npos) {
                double prod = 1;
                for (const auto& part : split_interaction(col))
                    prod *= value_of(part);
                ds.X(i, j) = prod;
            } else {
                ds.X(i, j) = value_of(col);
            }
        }
        ds.y(i) = *row.y;
        auto [uit, uinserted] = unit_ids.emplace(std::make_pair(row.c, row.s),
                                                 static_cast<int>(unit_ids.size()));
        if (uinserted)
            ds.unit_labels.push_back(panel.countries()[row.c] + ":" + panel.sectors()[row.s]);
        ds.unit[i] = uit->second;
        auto [cit, cinserted] = cluster_ids.emplace(row.c, static_cast<int>(cluster_ids.size()));
        if (cinserted)
            ds.cluster_labels.push_back(panel.countries()[row.c]);
        ds.cluster[i] = cit->second;
        ds.year[i] = row.t;
    }
    for (const auto& name : absorbed)
        ds.notes.push_back(name + " main effect absorbed by year effects, omitted");
    if (ds.rows_dropped)
        ds.notes.push_back(std::to_string(ds.rows_dropped) +
                           " rows dropped by listwise deletion");
    ds.notes.push_back("estimation window " + std::to_string(*years_present.begin()) + "-" +
                       std::to_string(*years_present.rbegin()));
    return ds;
}

PanelDataset within_transform(const PanelDataset& dataset) {
    PanelDataset out = dataset;
    int n_units = dataset.unit_labels.empty()
                      ? (dataset.unit.empty()
                             ? 0
                             : *std::max_element(dataset.unit.begin(), dataset.unit.end()) + 1)
                      : static_cast<int>(dataset.unit_labels.size());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(n_units);
    Eigen::VectorXd mean_y = Eigen::VectorXd::Zero(n_units);
    Eigen::MatrixXd mean_x = Eigen::MatrixXd::Zero(n_units, dataset.k());
    for (int i = 0; i < dataset.n(); ++i) {
        int u = dataset.unit[i];
        count(u) += 1;
        mean_y(u) += dataset.y(i);
        mean_x.row(u) += dataset.X.row(i);
    }
    for (int u = 0; u < n_units; ++u) {
        if (count(u) > 0) {
            mean_y(u) /= count(u);
            mean_x.row(u) /= count(u);
        }
    }
    for (int i = 0; i < dataset.n(); ++i) {
        int u = dataset.unit[i];
        out.y(i) = dataset.y(i) - mean_y(u);
        out.X.row(i) = dataset.X.row(i) - mean_x.row(u);
    }
    out.unit_mean_y = mean_y;
    out.unit_mean_X = mean_x;
    out.mean_unit_labels = dataset.unit_labels;
    return out;
}

Eigen::VectorXd cluster_robust_se(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                  const std::vector<int>& clusters) {
    const int N = static_cast<int>(X.rows());
    const int K = static_cast<int>(X.cols());
    if (static_cast<int>(clusters.size()) != N)
        throw DataError("cluster vector length mismatch");
    std::set<int> ids(clusters.begin(), clusters.end());
    const int G = static_cast<int>(ids.size());
    if (G < 2)
        throw DataError("cluster-robust errors need at least 2 clusters");
    if (N <= K)
        throw NumericError("not enough observations for the finite-sample correction");

    Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(K, K));
    std::map<int, Eigen::VectorXd> scores;
    for (int i = 0; i < N; ++i) {
        auto [it, inserted] = scores.emplace(clusters[i], Eigen::VectorXd::Zero(K));
        it->second += X.row(i).transpose() * residuals(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(K, K);
    for (const auto& [g, s] : scores)
        meat += s * s.transpose();
    double correction = (double(G) / (G - 1)) * (double(N - 1) / (N - K));
    Eigen::MatrixXd v = correction * xtx_inv * meat * xtx_inv;
    return v.diagonal().cwiseMax(0.0).cwiseSqrt();
}

RegressionResult fit_fe(const PanelDataset& dataset, const ModelSpec& spec) {
    PanelDataset ds = dataset;
    std::vector<std::string> notes = dataset.notes;

    for (;;) {
        PanelDataset w = within_transform(ds);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w.X);
        int rank = static_cast<int>(qr.rank());
        if (rank < w.k()) {
            // columns pushed past the rank by pivoting are the collinear ones
            std::vector<std::string> collinear;
            auto perm = qr.colsPermutation().indices();
            for (int j = rank; j < w.k(); ++j)
                collinear.push_back(ds.column_names[perm(j)]);
            // a trend alongside year effects is the usual culprit; drop it
            // first even if pivoting happened to flag a year dummy instead
            auto trend_col =
                std::find(ds.column_names.begin(), ds.column_names.end(), "trend");
            if (trend_col != ds.column_names.end()) {
                int drop = static_cast<int>(trend_col - ds.column_names.begin());
                Eigen::MatrixXd reduced(ds.n(), ds.k() - 1);
                reduced << ds.X.leftCols(drop), ds.X.rightCols(ds.k() - drop - 1);
                ds.X = reduced;
                ds.column_names.erase(ds.column_names.begin() + drop);
                notes.push_back("warning: time trend collinear with year effects, dropped");
                continue;
            }
            std::string msg = "rank-deficient design; collinear columns:";
            for (const auto& c : collinear)
                msg += ' ' + c;
            throw NumericError(msg);
        }

        RegressionResult result;
        result.model_name = spec.name;
        result.terms = ds.column_names;
        result.coef = qr.solve(w.y);
        result.residuals = w.y - w.X * result.coef;
        double sst = w.y.squaredNorm();
        double ssr = result.residuals.squaredNorm();
        result.r2_within = sst > 0 ? 1.0 - ssr / sst : 0.0;
        result.n_obs = ds.n();
        result.n_groups = static_cast<int>(ds.unit_labels.size());
        result.se = cluster_robust_se(w.X, result.residuals, ds.cluster);
        std::set<int> cl(ds.cluster.begin(), ds.cluster.end());
        result.n_clusters = static_cast<int>(cl.size());

        const int K = ds.k();
        result.t_stat = Eigen::VectorXd::Zero(K);
        result.p_value = Eigen::VectorXd::Ones(K);
        boost::math::students_t_distribution<double> dist(result.n_clusters - 1);
        for (int j = 0; j < K; ++j) {
            if (result.se(j) > 0) {
                result.t_stat(j) = result.coef(j) / result.se(j);
                result.p_value(j) =
                    2 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t_stat(j))));
            }
        }
        result.notes = notes;
        return result;
    }
}

std::string regression_to_csv(const RegressionResult& result) {
    std::string out = "term,estimate,se,t,p\n";
    for (std::size_t j = 0; j < result.terms.size(); ++j)
        out += result.terms[j] + "," + format_double(result.coef(j)) + "," +
               format_double(result.se(j)) + "," + format_double(result.t_stat(j)) + "," +
               format_double(result.p_value(j)) + "\n";
    return out;
}

namespace {

std::string stars(double p) {
    if (p < 0.01)
        return "***";
    if (p < 0.05)
        return "**";
    if (p < 0.1)
        return "*";
    return "";
}

std::string fixed3(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << v;
    return out.str();
}

} // namespace

std::string regression_table(const std::vector<RegressionResult>& results) {
    std::vector<std::string> terms;
    for (const auto& r : results)
        for (const auto& t : r.terms)
            if (t != "trend" && t.rfind("year_", 0) != 0 &&
                std::find(terms.begin(), terms.end(), t) == terms.end())
                terms.push_back(t);

    std::ostringstream out;
    out << "term";
    for (const auto& r : results)
        out << "\t" << r.model_name;
    out << "\n";
    for (const auto& term : terms) {
        out << term;
        std::string se_line;
        for (const auto& r : results) {
            auto it = std::find(r.terms.begin(), r.terms.end(), term);
            if (it == r.terms.end()) {
                out << "\t";
                se_line += "\t";
            } else {
                int j = static_cast<int>(it - r.terms.begin());
                out << "\t" << fixed3(r.coef(j)) << stars(r.p_value(j));
                se_line += "\t(" + fixed3(r.se(j)) + ")";
            }
        }
        out << "\n" << se_line << "\n";
    }
    out << "Time trend";
    for (const auto& r : results)
        out << "\t"
            << (std::find(r.terms.begin(), r.terms.end(), "trend") != r.terms.end() ? "Y" : "N");
    out << "\nYear FE";
    for (const auto& r : results) {
        bool any = std::any_of(r.terms.begin(), r.terms.end(),
                               [](const std::string& t) { return t.rfind("year_", 0) == 0; });
        out << "\t" << (any ? "Y" : "N");
    }
    out << "\nR2 (within)";
    for (const auto& r : results)
        out << "\t" << fixed3(r.r2_within);
    out << "\nN (Groups)";
    for (const auto& r : results)
        out << "\t" << r.n_groups;
    out << "\nN (Observations)";
    for (const auto& r : results)
        out << "\t" << r.n_obs;
    out << "\n";
    return out.str();
}

} // namespace cospec
