#include "cospec/motifs.hpp"

#include "cospec/common.hpp"

namespace cospec {

std::int64_t motif_total(const BipartiteNetwork& net) {
    std::int64_t total = 0;
    for (int s = 0; s < net.num_sectors(); ++s) {
        std::int64_t u = net.adj.col(s).sum();
        total += u * (u - 1) / 2;
    }
    return total;
}

namespace {

// 1 for CEE rows, 0 for EU15 rows; throws on unlabeled countries.
std::vector<int> group_flags(const BipartiteNetwork& net, const CountryGroups& groups) {
    std::vector<int> flags(net.num_countries());
    for (int c = 0; c < net.num_countries(); ++c)
        flags[c] = groups.is_cee(net.countries[c]) ? 1 : 0;
    return flags;
}

} // namespace

MotifDecomposition motif_decompose(const BipartiteNetwork& net, const CountryGroups& groups) {
    auto flags = group_flags(net, groups);
    MotifDecomposition out;
    for (int s = 0; s < net.num_sectors(); ++s) {
        std::int64_t u_cee = 0, u_eu15 = 0;
        for (int c = 0; c < net.num_countries(); ++c) {
            if (!net.adj(c, s))
                continue;
            (flags[c] ? u_cee : u_eu15) += 1;
        }
        out.cee += u_cee * (u_cee - 1) / 2;
        out.eu15 += u_eu15 * (u_eu15 - 1) / 2;
        out.external += u_cee * u_eu15;
    }
    return out;
}

Eigen::MatrixXi motif_node(const BipartiteNetwork& net) {
    Eigen::MatrixXi out = Eigen::MatrixXi::Zero(net.num_countries(), net.num_sectors());
    for (int s = 0; s < net.num_sectors(); ++s) {
        int u = net.adj.col(s).sum();
        for (int c = 0; c < net.num_countries(); ++c)
            if (net.adj(c, s))
                out(c, s) = u - 1;
    }
    return out;
}

NodeMotifDecomposition motif_node_decompose(const BipartiteNetwork& net,
                                            const CountryGroups& groups) {
    auto flags = group_flags(net, groups);
    NodeMotifDecomposition out;
    out.internal_counts = Eigen::MatrixXi::Zero(net.num_countries(), net.num_sectors());
    out.external_counts = Eigen::MatrixXi::Zero(net.num_countries(), net.num_sectors());
    for (int s = 0; s < net.num_sectors(); ++s) {
        int u_cee = 0, u_eu15 = 0;
        for (int c = 0; c < net.num_countries(); ++c) {
            if (!net.adj(c, s))
                continue;
            (flags[c] ? u_cee : u_eu15) += 1;
        }
        for (int c = 0; c < net.num_countries(); ++c) {
            if (!net.adj(c, s))
                continue;
            int own = flags[c] ? u_cee : u_eu15;
            int other = flags[c] ? u_eu15 : u_cee;
            out.internal_counts(c, s) = own - 1;
            out.external_counts(c, s) = other;
        }
    }
    return out;
}

MotifCounts motif_counts(const BipartiteNetwork& net, const CountryGroups& groups) {
    MotifCounts counts;
    counts.year = net.year;
    counts.total = motif_total(net);
    counts.by_group = motif_decompose(net, groups);
    counts.node = motif_node(net);
    counts.node_by_group = motif_node_decompose(net, groups);
    return counts;
}

std::string motif_counts_to_csv(const MotifCounts& counts, const BipartiteNetwork& net) {
    std::string out = "year,level,country,sector,scope,count\n";
    auto year = std::to_string(counts.year);
    out += year + ",network,,,overall," + std::to_string(counts.total) + "\n";
    out += year + ",group,,,internal_eu15," + std::to_string(counts.by_group.eu15) + "\n";
    out += year + ",group,,,internal_cee," + std::to_string(counts.by_group.cee) + "\n";
    out += year + ",group,,,external," + std::to_string(counts.by_group.external) + "\n";
    for (int c = 0; c < net.num_countries(); ++c)
        for (int s = 0; s < net.num_sectors(); ++s) {
            if (!net.adj(c, s))
                continue;
            std::string prefix = year + ",node," + net.countries[c] + "," + net.sectors[s] + ",";
            out += prefix + "overall," + std::to_string(counts.node(c, s)) + "\n";
            out += prefix + "internal," + std::to_string(counts.node_by_group.internal_counts(c, s)) +
                   "\n";
            out += prefix + "external," + std::to_string(counts.node_by_group.external_counts(c, s)) +
                   "\n";
        }
    return out;
}

} // namespace cospec
