#pragma once

#include "cospec/rca.hpp"
#include "cospec/taxonomy.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace cospec {

struct MotifDecomposition {
    std::int64_t eu15 = 0;
    std::int64_t cee = 0;
    std::int64_t external = 0;

    std::int64_t total() const { return eu15 + cee + external; }
};

struct NodeMotifDecomposition {
    Eigen::MatrixXi internal_counts; // C x S, partners within own group
    Eigen::MatrixXi external_counts; // C x S, partners in the other group
};

// Number of (country pair, sector) co-specialization motifs: sum over
// sectors of u_s choose 2.
std::int64_t motif_total(const BipartiteNetwork& net);

MotifDecomposition motif_decompose(const BipartiteNetwork& net, const CountryGroups& groups);

// Node-level count (u_s - 1) * M_cs.
Eigen::MatrixXi motif_node(const BipartiteNetwork& net);

NodeMotifDecomposition motif_node_decompose(const BipartiteNetwork& net,
                                            const CountryGroups& groups);

// Full counts at all three aggregation levels, for one network.
struct MotifCounts {
    int year = 0;
    std::int64_t total = 0;
    MotifDecomposition by_group;
    Eigen::MatrixXi node;
    NodeMotifDecomposition node_by_group;
};

MotifCounts motif_counts(const BipartiteNetwork& net, const CountryGroups& groups);

std::string motif_counts_to_csv(const MotifCounts& counts, const BipartiteNetwork& net);

} // namespace cospec
