#pragma once

#include <cstdint>
#include <vector>

#include "fog/graphstore/dataset.hpp"

namespace fog {

struct SplitSizes {
    std::size_t train = 100;
    std::size_t val = 20;
    std::size_t test = 20;

    std::size_t total() const noexcept { return train + val + test; }
};

/// Background stochastic block model plus one planted pattern per graph.
/// Nodes [0, sum(block_sizes)) are background in block order; the last
/// `pattern_size` nodes form the pattern and carry label 1.
struct PatternConfig {
    SplitSizes sizes;
    std::size_t nodes_per_graph = 0;        // 0: sum(block_sizes) + pattern_size
    std::vector<std::size_t> block_sizes{15, 15};
    double p_intra = 0.5;
    double p_inter = 0.2;
    std::size_t pattern_size = 5;
    double p_pattern = 0.9;                 // edges inside the pattern
    double p_pattern_link = -1.0;           // pattern <-> background; negative means p_inter
    bool ensure_min_degree = true;
    std::uint64_t seed = 0;
};

struct ClusterConfig {
    SplitSizes sizes;
    std::size_t n_communities = 6;
    std::size_t nodes_per_graph = 40;
    double p_intra = 0.5;
    double p_inter = 0.2;
    bool ensure_min_degree = true;
    std::uint64_t seed = 0;
};

/// Star-shaped graphs with 2-d Gaussian node features. A node's label is
/// 1 iff <h_v, sum of its neighbors' h_u> > 0.
struct SecondOrderConfig {
    SplitSizes sizes;
    std::size_t nodes = 8;
    double p_extra = 0.1;                   // leaf-leaf edges on top of the star
    std::uint64_t seed = 0;
};

/// Molecule-shaped graph regression: categorical atoms and bonds on a random
/// tree with a few ring closures.
struct MoleculeConfig {
    SplitSizes sizes;
    std::size_t min_nodes = 9;
    std::size_t max_nodes = 37;
    std::size_t atom_types = 28;
    std::size_t bond_types = 4;
    double ring_edges = 2.0;                // expected extra edges per graph
    bool node_features = true;              // false: every atom gets code 0
    std::uint64_t seed = 0;
};

/// Points in the unit square joined to their k nearest neighbors; an edge is
/// labeled 1 when it lies on a nearest-neighbor tour.
struct TourConfig {
    SplitSizes sizes;
    std::size_t min_nodes = 12;
    std::size_t max_nodes = 20;
    std::size_t k = 6;
    std::uint64_t seed = 0;
};

DatasetSplit gen_sbm_pattern(const PatternConfig& cfg);
DatasetSplit gen_sbm_cluster(const ClusterConfig& cfg);
DatasetSplit gen_second_order_task(const SecondOrderConfig& cfg);
DatasetSplit gen_molecules(const MoleculeConfig& cfg);
DatasetSplit gen_tours(const TourConfig& cfg);

/// 1 iff <h_v, sum_u h_u> > 0 over the neighbors of v.
std::int32_t second_order_label(const Graph& g, std::size_t v);

/// Two nodes in one graph with equal neighbor-feature sums but different
/// labels, or nullopt-like {-1, -1, -1} when none exists.
struct DiscordantPair {
    std::ptrdiff_t graph = -1;
    std::ptrdiff_t a = -1;
    std::ptrdiff_t b = -1;
};
DiscordantPair find_discordant_pair(const std::vector<Graph>& graphs);

}  // namespace fog
