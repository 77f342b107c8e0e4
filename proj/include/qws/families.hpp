#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qws/graph.hpp"
#include "qws/markov.hpp"

namespace qws {

// Uniform walk on the torus grid: probability 1/5 to each of the four axis
// neighbors and the self-loop (collapsed moves on side 2 keep their weight).
MarkovChain grid_walk_chain(int side, bool lazy);

// Uniform chain on the complete graph with self-loops: p_xy = 1/n.
MarkovChain complete_uniform_chain(int n);

// Symmetric two-state chain [[1/2, 1/2], [1/2, 1/2]].
MarkovChain two_state_chain();

// Lazy nearest-neighbor walk on a cycle: 1/2 stay, 1/4 each neighbor.
MarkovChain cycle_walk_chain(int n);

// Lazy walk on the hypercube: 1/2 stay, 1/(2 dim) per direction.
MarkovChain hypercube_walk_chain(int dim);

struct GridBenchRow {
    int side = 0;
    int n = 0;
    double p_marked = 0.0;
    double hitting_time = 0.0;
    int minimal_t = -1;      // smallest t with exact success >= 1/20 at p* = p_M
    double pow2_t = 0.0;
    long long update_calls = 0; // one search run at minimal_t
    double ratio_t_sqrt_ht = 0.0;
    double ratio_ht_nlogn = 0.0;
    bool skipped = false;
    std::string skip_reason;
};

// Exact success-probability scan over t for the lazy grid walk with the
// first m vertices marked. Sides above side_cap are skipped with a reason.
std::vector<GridBenchRow> grid_bench(const std::vector<int>& sides, int m, int side_cap = 16);

// Smallest t in [0, 24] whose exact success probability reaches 1/20 at
// p* = p_M, or -1 if none does.
int minimal_success_bits(const MarkovChain& chain, const MarkedSet& marked);

} // namespace qws
