#include "qws/families.hpp"

#include <cmath>
#include <sstream>

#include "qws/errors.hpp"
#include "qws/search.hpp"

namespace qws {

MarkovChain grid_walk_chain(int side, bool lazy) {
    Graph g = make_grid_2d(side);
    const int n = g.vertex_count();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int v = 0; v < n; ++v) {
        // Five moves with weight 1/5 each; wrap-around collisions on side 2
        // stack their weight on the same neighbor.
        int row = v / side, col = v % side;
        auto id = [side](int r, int c) {
            return ((r + side) % side) * side + ((c + side) % side);
        };
        p(v, v) += 0.2;
        p(v, id(row + 1, col)) += 0.2;
        p(v, id(row - 1, col)) += 0.2;
        p(v, id(row, col + 1)) += 0.2;
        p(v, id(row, col - 1)) += 0.2;
    }
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    MarkovChain chain = MarkovChain::from_matrix_with_stationary(std::move(p), std::move(pi));
    return lazy ? lazify(chain) : chain;
}

MarkovChain complete_uniform_chain(int n) {
    if (n < 2) throw InvalidParameterError("complete chain needs n >= 2");
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    return MarkovChain::from_matrix_with_stationary(std::move(p), std::move(pi));
}

MarkovChain two_state_chain() { return complete_uniform_chain(2); }

MarkovChain cycle_walk_chain(int n) {
    if (n < 3) throw InvalidParameterError("cycle chain needs n >= 3");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int v = 0; v < n; ++v) {
        p(v, v) = 0.5;
        p(v, (v + 1) % n) = 0.25;
        p(v, (v + n - 1) % n) = 0.25;
    }
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    return MarkovChain::from_matrix_with_stationary(std::move(p), std::move(pi));
}

MarkovChain hypercube_walk_chain(int dim) {
    if (dim < 1) throw InvalidParameterError("hypercube chain needs dim >= 1");
    const int n = 1 << dim;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int v = 0; v < n; ++v) {
        p(v, v) = 0.5;
        for (int b = 0; b < dim; ++b) p(v, v ^ (1 << b)) = 0.5 / dim;
    }
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    return MarkovChain::from_matrix_with_stationary(std::move(p), std::move(pi));
}

int minimal_success_bits(const MarkovChain& chain, const MarkedSet& marked) {
    double p_marked = chain.marked_mass(marked);
    if (p_marked > 0.5) {
        // The walk branch is unnecessary here; the first check already
        // succeeds with probability above 1/20.
        return 0;
    }
    SearchEngine engine(chain, marked, p_marked);
    for (int t = 0; t <= kPhaseBitsCap; ++t) {
        if (engine.run_exact(t).p_success_exact >= kDefaultEps1 - kDefaultEps2) return t;
    }
    return -1;
}

std::vector<GridBenchRow> grid_bench(const std::vector<int>& sides, int m, int side_cap) {
    if (m < 1) throw InvalidParameterError("need at least one marked vertex");
    std::vector<GridBenchRow> rows;
    for (int side : sides) {
        GridBenchRow row;
        row.side = side;
        row.n = side * side;
        if (side < 2) {
            row.skipped = true;
            row.skip_reason = "side must be at least 2";
            rows.push_back(row);
            continue;
        }
        if (side > side_cap) {
            std::ostringstream oss;
            oss << "exact mode capped at side " << side_cap;
            row.skipped = true;
            row.skip_reason = oss.str();
            rows.push_back(row);
            continue;
        }
        if (m >= row.n) {
            row.skipped = true;
            row.skip_reason = "marked set must leave an unmarked vertex";
            rows.push_back(row);
            continue;
        }
        MarkovChain chain = grid_walk_chain(side, true);
        std::vector<int> members(m);
        for (int i = 0; i < m; ++i) members[i] = i;
        MarkedSet marked(std::move(members), row.n);
        row.p_marked = chain.marked_mass(marked);
        row.hitting_time = hitting_time_matrix(chain, marked);
        row.minimal_t = minimal_success_bits(chain, marked);
        if (row.minimal_t >= 0) {
            row.pow2_t = std::ldexp(1.0, row.minimal_t);
            row.update_calls = expected_search_ledger(row.minimal_t).update_calls;
            row.ratio_t_sqrt_ht = row.pow2_t / std::sqrt(row.hitting_time);
        }
        row.ratio_ht_nlogn = row.hitting_time / (row.n * std::log(row.n));
        rows.push_back(row);
    }
    return rows;
}

} // namespace qws
