#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qws/markov.hpp"

namespace qws {

struct CheckResult {
    std::string quantity;
    double value = 0.0;     // worst observed deviation / statistic
    double tolerance = 0.0; // pinned bound the value must stay under
    bool pass = false;
};

struct SuiteReport {
    std::string name;
    std::vector<CheckResult> checks;
    bool pass = false;
};

// Module invariant suites. Each runs the full invariant list of one module
// against a seeded random corpus plus the canonical families.
SuiteReport verify_graph_core(std::uint64_t seed);
SuiteReport verify_markov_chain(std::uint64_t seed);
SuiteReport verify_szegedy_walk(std::uint64_t seed);
SuiteReport verify_oracle_circuits(std::uint64_t seed);
SuiteReport verify_quantum_search(std::uint64_t seed);

std::vector<SuiteReport> verify_all(std::uint64_t seed);

// Acceptance criteria, one runner per numbered criterion. Tolerances are
// pinned inside; the returned checks carry the observed statistics.
std::vector<CheckResult> acceptance_thm3_identity(std::uint64_t seed);         // 1
std::vector<CheckResult> acceptance_ht_ode(std::uint64_t seed);                // 2
std::vector<CheckResult> acceptance_discriminant_derivative(std::uint64_t seed); // 3
std::vector<CheckResult> acceptance_lemma1(std::uint64_t seed);                // 4
std::vector<CheckResult> acceptance_simulation_circuit(std::uint64_t seed);    // 5
std::vector<CheckResult> acceptance_thm4_desk(std::uint64_t seed);             // 6
std::vector<CheckResult> acceptance_backend_equivalence(std::uint64_t seed);   // 7
std::vector<CheckResult> acceptance_fact4_window();                            // 8
std::vector<CheckResult> acceptance_classical_baseline(std::uint64_t seed);    // 9
std::vector<CheckResult> acceptance_thm5_statistics(std::uint64_t seed);       // 10
std::vector<CheckResult> acceptance_grid_scaling();                            // 11

// Entrywise finite-difference cross-check of the discriminant derivative,
// usable at the s = 0 boundary through the raw interpolation formula.
double discriminant_derivative_defect(const MarkovChain& chain, const MarkedSet& marked,
                                      double s, double step = 1e-6);

} // namespace qws
