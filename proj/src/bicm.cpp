#include "cospec/bicm.hpp"

#include "cospec/common.hpp"
#include "cospec/panel_data.hpp"
#include "cospec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace cospec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ReducedSystem {
    std::vector<int> row_degree, col_degree;   // one entry per class
    std::vector<double> row_mult, col_mult;    // class multiplicities
    std::vector<std::vector<int>> row_members; // original indices per class
    std::vector<std::vector<int>> col_members;
};

double class_residual(const ReducedSystem& sys, const std::vector<double>& xr,
                      const std::vector<double>& yt) {
    double worst = 0;
    for (std::size_t r = 0; r < xr.size(); ++r) {
        double expected = 0;
        for (std::size_t t = 0; t < yt.size(); ++t) {
            double xy = xr[r] * yt[t];
            expected += sys.col_mult[t] * xy / (1 + xy);
        }
        worst = std::max(worst, std::abs(expected - sys.row_degree[r]));
    }
    for (std::size_t t = 0; t < yt.size(); ++t) {
        double expected = 0;
        for (std::size_t r = 0; r < xr.size(); ++r) {
            double xy = xr[r] * yt[t];
            expected += sys.row_mult[r] * xy / (1 + xy);
        }
        worst = std::max(worst, std::abs(expected - sys.col_degree[t]));
    }
    return worst;
}

// One least-squares Newton step on log-multipliers; the SVD solve absorbs the
// x -> cx, y -> y/c gauge direction.
void newton_step(const ReducedSystem& sys, std::vector<double>& xr, std::vector<double>& yt) {
    const int R = static_cast<int>(xr.size());
    const int T = static_cast<int>(yt.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(R + T, R + T);
    Eigen::VectorXd f(R + T);
    for (int r = 0; r < R; ++r) {
        double expected = 0;
        for (int t = 0; t < T; ++t) {
            double xy = xr[r] * yt[t];
            double p = xy / (1 + xy);
            double w = sys.col_mult[t] * p * (1 - p);
            expected += sys.col_mult[t] * p;
            jac(r, r) += w;
            jac(r, R + t) = w;
        }
        f(r) = expected - sys.row_degree[r];
    }
    for (int t = 0; t < T; ++t) {
        double expected = 0;
        for (int r = 0; r < R; ++r) {
            double xy = xr[r] * yt[t];
            double p = xy / (1 + xy);
            double w = sys.row_mult[r] * p * (1 - p);
            expected += sys.row_mult[r] * p;
            jac(R + t, R + t) += w;
            jac(R + t, r) = w;
        }
        f(R + t) = expected - sys.col_degree[t];
    }
    Eigen::VectorXd step =
        jac.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-f);
    for (int r = 0; r < R; ++r)
        xr[r] *= std::exp(std::clamp(step(r), -2.0, 2.0));
    for (int t = 0; t < T; ++t)
        yt[t] *= std::exp(std::clamp(step(R + t), -2.0, 2.0));
}

} // namespace

BicmModel fit(const DegreeSequences& degrees, const FitOptions& options) {
    const int C = static_cast<int>(degrees.diversification.size());
    const int S = static_cast<int>(degrees.ubiquity.size());
    for (int c = 0; c < C; ++c)
        if (degrees.diversification(c) < 0 || degrees.diversification(c) > S)
            throw DataError("diversification out of range for country " + std::to_string(c));
    for (int s = 0; s < S; ++s)
        if (degrees.ubiquity(s) < 0 || degrees.ubiquity(s) > C)
            throw DataError("ubiquity out of range for sector " + std::to_string(s));
    if (degrees.diversification.sum() != degrees.ubiquity.sum())
        throw DataError("degree sequences disagree on link count");

    BicmModel model;
    model.p = Eigen::MatrixXd::Zero(C, S);
    model.x = Eigen::VectorXd::Zero(C);
    model.y = Eigen::VectorXd::Zero(S);

    // Peel deterministic nodes: degree 0 and degree equal to the number of
    // still-active opposite nodes. Removing a full node decrements the
    // residual target of every active opposite node.
    std::vector<char> row_active(C, 1), col_active(S, 1);
    std::vector<int> dr(C), uc(S);
    for (int c = 0; c < C; ++c)
        dr[c] = degrees.diversification(c);
    for (int s = 0; s < S; ++s)
        uc[s] = degrees.ubiquity(s);
    int nrows = C, ncols = S;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int c = 0; c < C; ++c) {
            if (!row_active[c])
                continue;
            if (dr[c] < 0 || dr[c] > ncols)
                throw DataError("inconsistent degree sequences (country " + std::to_string(c) +
                                ")");
            if (dr[c] == 0) {
                row_active[c] = 0;
                --nrows;
                changed = true;
            } else if (dr[c] == ncols) {
                for (int s = 0; s < S; ++s)
                    if (col_active[s]) {
                        model.p(c, s) = 1;
                        --uc[s];
                    }
                model.x(c) = kInf;
                row_active[c] = 0;
                --nrows;
                changed = true;
            }
        }
        for (int s = 0; s < S; ++s) {
            if (!col_active[s])
                continue;
            if (uc[s] < 0 || uc[s] > nrows)
                throw DataError("inconsistent degree sequences (sector " + std::to_string(s) + ")");
            if (uc[s] == 0) {
                col_active[s] = 0;
                --ncols;
                changed = true;
            } else if (uc[s] == nrows) {
                for (int c = 0; c < C; ++c)
                    if (row_active[c]) {
                        model.p(c, s) = 1;
                        --dr[c];
                    }
                model.y(s) = kInf;
                col_active[s] = 0;
                --ncols;
                changed = true;
            }
        }
    }

    int iterations = 0;
    if (nrows > 0 && ncols > 0) {
        // Collapse to degree-equivalence classes.
        ReducedSystem sys;
        std::map<int, int> row_cls, col_cls;
        for (int c = 0; c < C; ++c) {
            if (!row_active[c])
                continue;
            auto [it, inserted] = row_cls.emplace(dr[c], static_cast<int>(sys.row_degree.size()));
            if (inserted) {
                sys.row_degree.push_back(dr[c]);
                sys.row_mult.push_back(0);
                sys.row_members.emplace_back();
            }
            sys.row_mult[it->second] += 1;
            sys.row_members[it->second].push_back(c);
        }
        for (int s = 0; s < S; ++s) {
            if (!col_active[s])
                continue;
            auto [it, inserted] = col_cls.emplace(uc[s], static_cast<int>(sys.col_degree.size()));
            if (inserted) {
                sys.col_degree.push_back(uc[s]);
                sys.col_mult.push_back(0);
                sys.col_members.emplace_back();
            }
            sys.col_mult[it->second] += 1;
            sys.col_members[it->second].push_back(s);
        }

        double links = 0;
        for (std::size_t r = 0; r < sys.row_degree.size(); ++r)
            links += sys.row_mult[r] * sys.row_degree[r];
        std::vector<double> xr(sys.row_degree.size()), yt(sys.col_degree.size());
        for (std::size_t r = 0; r < xr.size(); ++r)
            xr[r] = sys.row_degree[r] / std::sqrt(links);
        for (std::size_t t = 0; t < yt.size(); ++t)
            yt[t] = sys.col_degree[t] / std::sqrt(links);

        double residual = class_residual(sys, xr, yt);
        double best = residual;
        int since_improvement = 0;
        while (residual > options.tolerance && iterations < options.max_iterations) {
            ++iterations;
            for (std::size_t r = 0; r < xr.size(); ++r) {
                double denom = 0;
                for (std::size_t t = 0; t < yt.size(); ++t)
                    denom += sys.col_mult[t] * yt[t] / (1 + xr[r] * yt[t]);
                double target = sys.row_degree[r] / denom;
                xr[r] = std::exp((1 - options.damping) * std::log(xr[r]) +
                                 options.damping * std::log(target));
            }
            for (std::size_t t = 0; t < yt.size(); ++t) {
                double denom = 0;
                for (std::size_t r = 0; r < xr.size(); ++r)
                    denom += sys.row_mult[r] * xr[r] / (1 + xr[r] * yt[t]);
                double target = sys.col_degree[t] / denom;
                yt[t] = std::exp((1 - options.damping) * std::log(yt[t]) +
                                 options.damping * std::log(target));
            }
            residual = class_residual(sys, xr, yt);
            if (residual < best * 0.9) {
                best = residual;
                since_improvement = 0;
            } else if (++since_improvement >= 50) {
                newton_step(sys, xr, yt);
                residual = class_residual(sys, xr, yt);
                best = std::min(best, residual);
                since_improvement = 0;
            }
        }
        if (residual > options.tolerance)
            throw NumericError("BiCM fit did not converge; residual " + format_double(residual) +
                               " after " + std::to_string(iterations) + " iterations");

        for (std::size_t r = 0; r < xr.size(); ++r)
            for (int c : sys.row_members[r])
                model.x(c) = xr[r];
        for (std::size_t t = 0; t < yt.size(); ++t)
            for (int s : sys.col_members[t])
                model.y(s) = yt[t];
        for (int c = 0; c < C; ++c) {
            if (!row_active[c])
                continue;
            for (int s = 0; s < S; ++s) {
                if (!col_active[s])
                    continue;
                double xy = model.x(c) * model.y(s);
                model.p(c, s) = xy / (1 + xy);
            }
        }
    }

    double worst = 0;
    for (int c = 0; c < C; ++c)
        worst = std::max(worst, std::abs(model.p.row(c).sum() - degrees.diversification(c)));
    for (int s = 0; s < S; ++s)
        worst = std::max(worst, std::abs(model.p.col(s).sum() - degrees.ubiquity(s)));
    model.diagnostics.residual = worst;
    model.diagnostics.iterations = iterations;
    return model;
}

double matrix_log_probability(const BicmModel& model, const BipartiteNetwork& net) {
    if (net.adj.rows() != model.p.rows() || net.adj.cols() != model.p.cols())
        throw DataError("network and model dimensions differ");
    double logp = 0;
    for (int c = 0; c < model.num_countries(); ++c) {
        for (int s = 0; s < model.num_sectors(); ++s) {
            double p = model.p(c, s);
            if (net.adj(c, s)) {
                if (p <= 0)
                    return -kInf;
                logp += std::log(p);
            } else {
                if (p >= 1)
                    return -kInf;
                logp += std::log1p(-p);
            }
        }
    }
    return logp;
}

BipartiteNetwork sample_one(const BicmModel& model, std::uint64_t seed, std::uint64_t k) {
    const int C = model.num_countries();
    const int S = model.num_sectors();
    BipartiteNetwork net;
    net.year = model.year;
    net.countries = model.countries;
    net.sectors = model.sectors;
    net.adj = Eigen::MatrixXi::Zero(C, S);
    for (int c = 0; c < C; ++c)
        for (int s = 0; s < S; ++s)
            if (counter_uniform(seed, k, static_cast<std::uint64_t>(c) * S + s) < model.p(c, s))
                net.adj(c, s) = 1;
    return net;
}

std::vector<BipartiteNetwork> sample(const BicmModel& model, int n, std::uint64_t seed) {
    if (n < 1)
        throw DataError("sample count must be >= 1");
    std::vector<BipartiteNetwork> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k)
        out.push_back(sample_one(model, seed, k));
    return out;
}

double analytic_motif_mean(const BicmModel& model) {
    double mean = 0;
    for (int s = 0; s < model.num_sectors(); ++s) {
        double sum = model.p.col(s).sum();
        double sumsq = model.p.col(s).squaredNorm();
        mean += 0.5 * (sum * sum - sumsq);
    }
    return mean;
}

EnsembleStats exact_ensemble_stats(const BicmModel& model,
                                   const std::function<double(const Eigen::MatrixXi&)>& statistic,
                                   const std::string& name) {
    const int C = model.num_countries();
    const int S = model.num_sectors();
    const int bits = C * S;
    if (bits > 20)
        throw DataError("exact enumeration limited to C*S <= 20 cells");
    EnsembleStats stats;
    stats.name = name;
    stats.sample_count = std::int64_t(1) << bits;
    double mean = 0, second = 0;
    Eigen::MatrixXi adj(C, S);
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << bits); ++mask) {
        double weight = 1;
        for (int i = 0; i < bits; ++i) {
            int c = i / S, s = i % S;
            bool on = (mask >> i) & 1;
            adj(c, s) = on;
            weight *= on ? model.p(c, s) : 1 - model.p(c, s);
        }
        if (weight == 0)
            continue;
        double v = statistic(adj);
        mean += weight * v;
        second += weight * v * v;
    }
    stats.mean = mean;
    stats.sd = std::sqrt(std::max(0.0, second - mean * mean));
    return stats;
}

namespace {

// Flat layout of every motif statistic evaluated per ensemble sample.
struct StatLayout {
    int C = 0, S = 0;
    std::vector<int> cee_flag;        // per country
    std::vector<int> sector_group;    // per sector, -1 when untagged
    std::vector<std::string> group_names;

    int network_stats() const { return 4; } // total, eu15, cee, external
    std::size_t size() const {
        return network_stats() + group_names.size() * 4 + static_cast<std::size_t>(C) * S * 3;
    }
    std::size_t sector_group_base(int g) const { return network_stats() + 4 * g; }
    std::size_t node_base(int kind) const { // 0 overall, 1 internal, 2 external
        return network_stats() + group_names.size() * 4 +
               static_cast<std::size_t>(kind) * C * S;
    }

    void evaluate(const Eigen::MatrixXi& adj, std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            double u_cee = 0, u_eu15 = 0;
            for (int c = 0; c < C; ++c)
                if (adj(c, s))
                    (cee_flag[c] ? u_cee : u_eu15) += 1;
            double pairs_cee = u_cee * (u_cee - 1) / 2;
            double pairs_eu15 = u_eu15 * (u_eu15 - 1) / 2;
            double ext = u_cee * u_eu15;
            out[0] += pairs_cee + pairs_eu15 + ext;
            out[1] += pairs_eu15;
            out[2] += pairs_cee;
            out[3] += ext;
            if (sector_group[s] >= 0) {
                std::size_t b = sector_group_base(sector_group[s]);
                out[b + 0] += pairs_cee + pairs_eu15 + ext;
                out[b + 1] += pairs_eu15;
                out[b + 2] += pairs_cee;
                out[b + 3] += ext;
            }
            double u = u_cee + u_eu15;
            for (int c = 0; c < C; ++c) {
                if (!adj(c, s))
                    continue;
                std::size_t cell = static_cast<std::size_t>(c) * S + s;
                double own = cee_flag[c] ? u_cee : u_eu15;
                double other = cee_flag[c] ? u_eu15 : u_cee;
                out[node_base(0) + cell] = u - 1;
                out[node_base(1) + cell] = own - 1;
                out[node_base(2) + cell] = other;
            }
        }
    }
};

} // namespace

std::vector<ZScoreResult> zscores(const BipartiteNetwork& net, const BicmModel& model,
                                  const CountryGroups& groups, int n, std::uint64_t seed,
                                  const SectorTaxonomy* taxonomy) {
    if (n < 2)
        throw DataError("ensemble size must be >= 2");
    if (net.adj.rows() != model.p.rows() || net.adj.cols() != model.p.cols())
        throw DataError("network and model dimensions differ");

    StatLayout layout;
    layout.C = net.num_countries();
    layout.S = net.num_sectors();
    layout.cee_flag.resize(layout.C);
    for (int c = 0; c < layout.C; ++c)
        layout.cee_flag[c] = groups.is_cee(net.countries[c]) ? 1 : 0;
    layout.sector_group.assign(layout.S, -1);
    if (taxonomy) {
        std::map<std::string, int> idx;
        for (int s = 0; s < layout.S; ++s) {
            const std::string& g = taxonomy->sector_group(net.sectors[s]);
            auto [it, inserted] = idx.emplace(g, static_cast<int>(layout.group_names.size()));
            if (inserted)
                layout.group_names.push_back(g);
            layout.sector_group[s] = it->second;
        }
    }

    std::vector<double> observed(layout.size()), value(layout.size());
    layout.evaluate(net.adj, observed);

    std::vector<double> sum(layout.size(), 0.0), sumsq(layout.size(), 0.0);
    for (int k = 0; k < n; ++k) {
        BipartiteNetwork draw = sample_one(model, seed, k);
        layout.evaluate(draw.adj, value);
        for (std::size_t i = 0; i < value.size(); ++i) {
            sum[i] += value[i];
            sumsq[i] += value[i] * value[i];
        }
    }

    auto make = [&](std::size_t i, std::string level, std::string scope, std::string country,
                    std::string sector) {
        ZScoreResult r;
        r.level = std::move(level);
        r.scope = std::move(scope);
        r.country = std::move(country);
        r.sector = std::move(sector);
        r.observed = observed[i];
        r.mean = sum[i] / n;
        double var = sumsq[i] / n - r.mean * r.mean; // population convention
        r.sd = var > 0 ? std::sqrt(var) : 0.0;
        r.degenerate = !(var > 0);
        r.z = r.degenerate ? 0.0 : (r.observed - r.mean) / r.sd;
        return r;
    };

    std::vector<ZScoreResult> results;
    results.push_back(make(0, "network", "overall", "", ""));
    results.push_back(make(1, "group", "internal_eu15", "", ""));
    results.push_back(make(2, "group", "internal_cee", "", ""));
    results.push_back(make(3, "group", "external", "", ""));
    static const char* scopes[4] = {"overall", "internal_eu15", "internal_cee", "external"};
    for (std::size_t g = 0; g < layout.group_names.size(); ++g)
        for (int k = 0; k < 4; ++k)
            results.push_back(make(layout.sector_group_base(static_cast<int>(g)) + k,
                                   "sector_group", scopes[k], "", layout.group_names[g]));
    static const char* node_scopes[3] = {"overall", "internal", "external"};
    for (int kind = 0; kind < 3; ++kind)
        for (int c = 0; c < layout.C; ++c)
            for (int s = 0; s < layout.S; ++s)
                results.push_back(make(layout.node_base(kind) + static_cast<std::size_t>(c) * layout.S + s,
                                       "node", node_scopes[kind], net.countries[c],
                                       net.sectors[s]));
    return results;
}

std::string zscores_to_csv(const std::vector<ZScoreResult>& results, int year) {
    std::string out = "year,level,scope,country,sector,observed,mean,sd,z,degenerate\n";
    for (const auto& r : results) {
        out += std::to_string(year) + "," + r.level + "," + r.scope + "," + r.country + "," +
               r.sector + "," + format_double(r.observed) + "," + format_double(r.mean) + "," +
               format_double(r.sd) + "," + format_double(r.z) + "," + (r.degenerate ? "1" : "0") +
               "\n";
    }
    return out;
}

std::string bicm_to_text(const BicmModel& model) {
    std::ostringstream out;
    out << "year " << model.year << "\n";
    out << "residual " << format_double(model.diagnostics.residual) << "\n";
    out << "iterations " << model.diagnostics.iterations << "\n";
    for (int c = 0; c < model.num_countries(); ++c) {
        std::string label = c < static_cast<int>(model.countries.size()) ? model.countries[c]
                                                                         : "C" + std::to_string(c);
        out << "country " << label << " " << format_double(model.x(c)) << "\n";
    }
    for (int s = 0; s < model.num_sectors(); ++s) {
        std::string label = s < static_cast<int>(model.sectors.size()) ? model.sectors[s]
                                                                       : "S" + std::to_string(s);
        out << "sector " << label << " " << format_double(model.y(s)) << "\n";
    }
    // probabilities are stored explicitly: deterministic cells (multiplier 0
    // or infinity) are not recoverable from the multipliers alone
    for (int c = 0; c < model.num_countries(); ++c) {
        out << "prow";
        for (int s = 0; s < model.num_sectors(); ++s)
            out << " " << format_double(model.p(c, s));
        out << "\n";
    }
    return out.str();
}

BicmModel bicm_from_text(const std::string& content) {
    BicmModel model;
    std::istringstream in(content);
    std::string kind;
    std::vector<double> xs, ys;
    std::vector<std::vector<double>> prows;
    while (in >> kind) {
        if (kind == "prow") {
            std::string line;
            std::getline(in, line);
            std::istringstream row(line);
            std::vector<double> vals;
            std::string v;
            while (row >> v)
                vals.push_back(std::stod(v));
            prows.push_back(std::move(vals));
        } else if (kind == "year") {
            in >> model.year;
        } else if (kind == "residual") {
            std::string v;
            in >> v;
            model.diagnostics.residual = std::stod(v);
        } else if (kind == "iterations") {
            in >> model.diagnostics.iterations;
        } else if (kind == "country" || kind == "sector") {
            std::string label, v;
            in >> label >> v;
            if (kind == "country") {
                model.countries.push_back(label);
                xs.push_back(std::stod(v));
            } else {
                model.sectors.push_back(label);
                ys.push_back(std::stod(v));
            }
        } else {
            throw DataError("unknown record in BiCM file: " + kind);
        }
    }
    const int C = static_cast<int>(xs.size());
    const int S = static_cast<int>(ys.size());
    model.x = Eigen::Map<Eigen::VectorXd>(xs.data(), C);
    model.y = Eigen::Map<Eigen::VectorXd>(ys.data(), S);
    model.p = Eigen::MatrixXd::Zero(C, S);
    if (static_cast<int>(prows.size()) != C)
        throw DataError("BiCM file has " + std::to_string(prows.size()) +
                        " probability rows, expected " + std::to_string(C));
    for (int c = 0; c < C; ++c) {
        if (static_cast<int>(prows[c].size()) != S)
            throw DataError("BiCM probability row length mismatch");
        for (int s = 0; s < S; ++s)
            model.p(c, s) = prows[c][s];
    }
    return model;
}

} // namespace cospec
