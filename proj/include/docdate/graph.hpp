#pragma once

#include <vector>

#include "docdate/errors.hpp"

namespace docdate {

struct LabeledEdge {
    int src = 0;
    int dst = 0;
    int label = 0;
    bool operator==(const LabeledEdge&) const = default;
};

// Directed multigraph with small integer edge labels, indexed for the
// per-destination (in-neighbor) queries the S-GCN aggregation needs.
class LabeledDirectedGraph {
public:
    explicit LabeledDirectedGraph(int n) : n_(n), in_(static_cast<std::size_t>(n)) {
        if (n < 1) throw ValueError("graph must have at least one node");
    }

    void add_edge(int src, int dst, int label) {
        if (src < 0 || src >= n_ || dst < 0 || dst >= n_)
            throw ValueError("edge (" + std::to_string(src) + ", " + std::to_string(dst) +
                             ") out of range for " + std::to_string(n_) + " nodes");
        LabeledEdge e{src, dst, label};
        edges_.push_back(e);
        in_[static_cast<std::size_t>(dst)].push_back(e);
    }

    int num_nodes() const { return n_; }
    const std::vector<LabeledEdge>& edges() const { return edges_; }
    const std::vector<LabeledEdge>& in_edges(int dst) const { return in_[static_cast<std::size_t>(dst)]; }

private:
    int n_;
    std::vector<LabeledEdge> edges_;
    std::vector<std::vector<LabeledEdge>> in_;
};

}  // namespace docdate
