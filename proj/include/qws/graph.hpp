#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

namespace qws {

// Undirected graph with explicitly stored self-loops. Immutable after
// construction; safe to share across threads.
class Graph {
public:
    Graph(int n, std::vector<std::pair<int, int>> edge_list);

    int vertex_count() const { return n_; }
    // Sorted unique unordered pairs with u <= v.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    bool has_edge(int u, int v) const;
    // Sorted; contains v itself iff the self-loop (v,v) is present.
    const std::vector<int>& neighbors(int v) const { return adj_[v]; }
    // Number of moves available at v, counting the self-loop once.
    int move_count(int v) const { return static_cast<int>(adj_[v].size()); }
    bool is_connected() const;

private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adj_;
};

enum class GridBoundary { Torus, Open };

// side x side grid, 4 axis neighbors plus one self-loop per vertex. The
// default wraps around, which keeps the graph 5-regular and vertex-transitive;
// the open-boundary variant is available but loses regularity at the border.
Graph make_grid_2d(int side, GridBoundary boundary = GridBoundary::Torus);

Graph make_complete(int n, bool with_self_loops);

Graph make_cycle(int n, bool with_self_loops = false);

Graph make_hypercube(int dim, bool with_self_loops = false);

// Sorted duplicate-free subset of [0, n).
class MarkedSet {
public:
    MarkedSet() = default;
    MarkedSet(std::vector<int> members, int n);

    static MarkedSet parse(const std::string& csv, int n);

    int size() const { return static_cast<int>(members_.size()); }
    bool empty() const { return members_.empty(); }
    bool contains(int v) const;
    const std::vector<int>& members() const { return members_; }

private:
    std::vector<int> members_;
};

struct LocalityReport {
    bool ok = false;
    // Off-diagonal (x, y) with p_xy > 0 and (x, y) not an edge. Diagonal
    // transitions never appear here: Shift fixes (x, x) whether or not the
    // self-loop edge exists.
    std::vector<std::pair<int, int>> violations;
};

// Certifies that every positive transition of P is supported by an edge of g.
LocalityReport validate_chain_locality(const Eigen::MatrixXd& transition, const Graph& g);

// Translation automorphism test for torus grids: adjacency must be invariant
// under every cyclic shift of both coordinates.
bool grid_is_translation_invariant(const Graph& g, int side);

} // namespace qws
