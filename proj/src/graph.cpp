#include "qws/graph.hpp"

#include <algorithm>
#include <sstream>

#include "qws/errors.hpp"

namespace qws {

Graph::Graph(int n, std::vector<std::pair<int, int>> edge_list) : n_(n) {
    if (n <= 0) throw InvalidParameterError("graph needs a positive vertex count");
    for (auto& [u, v] : edge_list) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw InvalidParameterError("edge endpoint out of range");
        if (u > v) std::swap(u, v);
    }
    std::sort(edge_list.begin(), edge_list.end());
    edge_list.erase(std::unique(edge_list.begin(), edge_list.end()), edge_list.end());
    edges_ = std::move(edge_list);

    adj_.assign(n_, {});
    for (const auto& [u, v] : edges_) {
        adj_[u].push_back(v);
        if (u != v) adj_[v].push_back(u);
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(int u, int v) const {
    if (u < 0 || u >= n_ || v < 0 || v >= n_) return false;
    const auto& nb = adj_[u];
    return std::binary_search(nb.begin(), nb.end(), v);
}

bool Graph::is_connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj_[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    return reached == n_;
}

Graph make_grid_2d(int side, GridBoundary boundary) {
    if (side < 2) throw InvalidParameterError("grid side must be at least 2");
    const int n = side * side;
    auto id = [side](int row, int col) { return row * side + col; };
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(3 * n));
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            int v = id(r, c);
            edges.emplace_back(v, v); // explicit self-loop
            if (boundary == GridBoundary::Torus) {
                edges.emplace_back(v, id((r + 1) % side, c));
                edges.emplace_back(v, id(r, (c + 1) % side));
            } else {
                if (r + 1 < side) edges.emplace_back(v, id(r + 1, c));
                if (c + 1 < side) edges.emplace_back(v, id(r, c + 1));
            }
        }
    }
    return Graph(n, std::move(edges));
}

Graph make_complete(int n, bool with_self_loops) {
    if (n < 2) throw InvalidParameterError("complete graph needs n >= 2");
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
        if (with_self_loops) edges.emplace_back(u, u);
        for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
    }
    return Graph(n, std::move(edges));
}

Graph make_cycle(int n, bool with_self_loops) {
    if (n < 3) throw InvalidParameterError("cycle needs n >= 3");
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
        if (with_self_loops) edges.emplace_back(u, u);
        edges.emplace_back(u, (u + 1) % n);
    }
    return Graph(n, std::move(edges));
}

Graph make_hypercube(int dim, bool with_self_loops) {
    if (dim < 1) throw InvalidParameterError("hypercube needs dim >= 1");
    if (dim > 20) throw InvalidParameterError("hypercube dimension too large");
    const int n = 1 << dim;
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
        if (with_self_loops) edges.emplace_back(u, u);
        for (int b = 0; b < dim; ++b) {
            int v = u ^ (1 << b);
            if (u < v) edges.emplace_back(u, v);
        }
    }
    return Graph(n, std::move(edges));
}

MarkedSet::MarkedSet(std::vector<int> members, int n) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (int v : members) {
        if (v < 0 || v >= n) throw InvalidParameterError("marked vertex out of range");
    }
    members_ = std::move(members);
}

MarkedSet MarkedSet::parse(const std::string& csv, int n) {
    std::vector<int> members;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(item, &pos);
        } catch (const std::exception&) {
            throw InvalidParameterError("bad marked-set entry: " + item);
        }
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (pos != item.size()) throw InvalidParameterError("bad marked-set entry: " + item);
        members.push_back(v);
    }
    return MarkedSet(std::move(members), n);
}

bool MarkedSet::contains(int v) const {
    return std::binary_search(members_.begin(), members_.end(), v);
}

LocalityReport validate_chain_locality(const Eigen::MatrixXd& transition, const Graph& g) {
    if (transition.rows() != transition.cols())
        throw InvalidParameterError("transition matrix must be square");
    if (transition.rows() != g.vertex_count())
        throw InvalidParameterError("chain dimension does not match graph");
    LocalityReport report;
    const int n = g.vertex_count();
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            if (x == y) continue; // Shift fixes the diagonal either way
            if (transition(x, y) > 0.0 && !g.has_edge(x, y))
                report.violations.emplace_back(x, y);
        }
    }
    report.ok = report.violations.empty();
    return report;
}

bool grid_is_translation_invariant(const Graph& g, int side) {
    if (g.vertex_count() != side * side) return false;
    auto id = [side](int r, int c) { return r * side + c; };
    for (int dr = 0; dr < side; ++dr) {
        for (int dc = 0; dc < side; ++dc) {
            for (const auto& [u, v] : g.edges()) {
                int ur = u / side, uc = u % side;
                int vr = v / side, vc = v % side;
                int tu = id((ur + dr) % side, (uc + dc) % side);
                int tv = id((vr + dr) % side, (vc + dc) % side);
                if (!g.has_edge(tu, tv)) return false;
            }
        }
    }
    return true;
}

} // namespace qws
