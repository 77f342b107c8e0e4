#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qws/circuit.hpp"
#include "qws/errors.hpp"
#include "qws/ledger.hpp"
#include "qws/markov.hpp"
#include "qws/szegedy.hpp"

namespace qws {

inline constexpr int kPhaseBitsCap = 24;
inline constexpr int kDensePhaseVertexCap = 6;
inline constexpr int kDensePhaseBitsCap = 6;
inline constexpr double kDefaultEps1 = 0.1;  // 1/10
inline constexpr double kDefaultEps2 = 0.05; // 1/20

// Search budget exhausted; carries a printable trace of what was tried.
class BudgetExceededError : public Error {
public:
    BudgetExceededError(const std::string& what, std::string trace)
        : Error(what), trace_(std::move(trace)) {}
    const std::string& trace() const { return trace_; }

private:
    std::string trace_;
};

// |(1/2^t) sum_{l<2^t} e^{i phi l}|. Equals 1 at phi = 0 and vanishes at
// nonzero multiples of 2 pi / 2^t.
double delta_magnitude(double phi, int t);

// The same geometric sum with its phase, (1/2^t) sum_l e^{i delta l}.
std::complex<double> phase_kernel(double delta, int t);

// Exact phase-estimation output. Probabilities are propagated analytically;
// nothing is ever estimated by trajectory sampling.
struct PhaseEstimationOutput {
    int t = 0;
    int n = 0;
    // One entry per eigencomponent of the input: rotation blocks contribute
    // (+phi_k) and (-phi_k) entries, the stationary line contributes phase 0.
    std::vector<double> phases;
    std::vector<std::complex<double>> coefficients;

    double total_probability = 0.0;          // sum over all outcomes; 1 for unit input
    double marked_marginal = 0.0;            // P(vertex register lands in M)
    double prob_anc_zero = 0.0;              // P(ancilla reads 0^t)
    double prob_marked_and_anc_zero = 0.0;

    std::vector<int> marked_vertices;        // aligned with the two vectors below
    std::vector<double> vertex_marginal;
    std::vector<double> vertex_and_anc_zero;

    // P(ancilla = m, vertex register = x); filled when the instance is small
    // enough to enumerate ancilla outcomes.
    bool has_vertex_table = false;
    Eigen::MatrixXd vertex_table;

    // Dense backend only: final amplitudes, row m, column (x, c).
    bool has_dense_state = false;
    Eigen::MatrixXcd dense_state;

    Eigen::VectorXd ancilla_distribution; // length 2^t when materialized, else empty
};

// Spectral backend: expands the input over the walk eigenbasis and attaches
// the closed-form ancilla amplitude to each component. The input is the
// vertex-register amplitude vector of a state sum_x input(x) |x>|0bar>.
PhaseEstimationOutput phase_estimation_spectral(const WalkSpectralForm& walk, int t,
                                                const Eigen::VectorXd& x_register_input);

// Same backend for a raw pair-space input; requires a materialized form and
// rejects inputs with components outside the walk space.
PhaseEstimationOutput phase_estimation_spectral_pair(const WalkSpectralForm& walk, int t,
                                                     const Eigen::VectorXcd& pair_input);

// Literal circuit simulation: Hadamard layer, controlled powers of W,
// inverse Fourier transform. Capacity-guarded to n <= 6, t <= 6.
PhaseEstimationOutput phase_estimation_dense(const PairSpaceOperator& walk, int t,
                                             const Eigen::VectorXcd& pair_input,
                                             const MarkedSet& marked);

// Final walk-space state conditioned on ancilla outcome m (materialized
// spectral forms only). Writes the outcome probability when prob is non-null.
Eigen::VectorXcd conditioned_walk_state(const WalkSpectralForm& walk, int t,
                                        const Eigen::VectorXd& x_register_input, long long m,
                                        double* prob = nullptr);

enum class SearchMode { Exact, Sample };

struct SearchOutcome {
    std::optional<int> found;       // sample mode; empty means "no marked vertex"
    double p_success_exact = 0.0;   // p_M + (1 - p_M) * marked marginal
    double marked_marginal = 0.0;   // success probability of the walk branch
    double eps1_term = 0.0;         // cos^2 theta sin^2 theta at s(p*)
    double eps2_term = 0.0;         // sum_k |alpha_k|^2 delta_k^2
    double eps2_ht_bound = 0.0;     // (pi^2/2) HT(s) / 4^t
    bool thm4_preconditions = false;
    double prob_anc_zero = 0.0;
    bool ran_phase_estimation = false; // sample mode: reached the walk branch
    bool anc_zero_outcome = false;     // sample mode: ancilla read 0^t
    CostLedger ledger;
    double p_marked = 0.0;
    double p_star = 0.0;
    double s = 0.0;
    int t = 0;
    SearchMode mode = SearchMode::Exact;
    std::uint64_t seed = 0;
};

struct LowerBoundTerms {
    double eps1_term = 0.0;
    double eps2_term = 0.0;
    double eps2_ht_bound = 0.0;
    double ht_s = 0.0;
};

// Shared machinery for one (chain, marked set, p*) triple: interpolated
// chain, spectral walk form, and memoized phase-estimation summaries per t.
class SearchEngine {
public:
    SearchEngine(const MarkovChain& chain, const MarkedSet& marked, double p_star);

    double p_marked() const { return p_marked_; }
    double p_star() const { return p_star_; }
    double s() const { return s_; }
    double ht_s() const { return ht_s_; }
    double eps1_term() const { return eps1_; }
    bool walk_branch_available() const { return form_.has_value(); }

    const PhaseEstimationOutput& phase_output(int t) const;

    SearchOutcome run_exact(int t) const;
    SearchOutcome run_sample(int t, Rng& rng) const;

private:
    MarkovChain chain_;
    MarkedSet marked_;
    double p_star_ = 0.0;
    double s_ = 0.0;
    double p_marked_ = 0.0;
    double eps1_ = 0.0;
    double ht_s_ = 0.0;
    std::optional<WalkSpectralForm> form_;
    Eigen::VectorXd u_register_;
    std::vector<double> marked_start_weights_; // pi restricted to M
    mutable std::map<int, PhaseEstimationOutput> memo_;
};

// One run of the fixed-parameter search: prepare |pi>|0bar>, check-measure,
// phase-estimate W(s(p*)) with t bits from |U>|0bar>, check-measure again.
// Exact mode propagates the full distribution and asserts the success
// lower bound; sample mode draws one outcome from the same law.
SearchOutcome quantum_walk_search(const MarkovChain& chain, const MarkedSet& marked,
                                  double p_star, int t, SearchMode mode, std::uint64_t seed);

LowerBoundTerms success_lower_bound(const MarkovChain& chain, const MarkedSet& marked,
                                    double p_star, int t);

struct AutoLevelTrace {
    int t = 0;
    int runs = 0;
    double p_success_exact = 0.0;
    CostLedger ledger;
    bool found = false;
};

struct AutoSearchOutcome {
    std::optional<int> found;
    int t_final = 0;
    std::vector<AutoLevelTrace> trace;
    CostLedger total_ledger;
    SearchMode mode = SearchMode::Exact;
    std::uint64_t seed = 0;
};

// Doubling loop over t with `repetitions` runs per level. Sample mode stops
// at the first found vertex; exact mode records per-level success
// probabilities and stops once a level reaches 1/20.
AutoSearchOutcome quantum_walk_search_auto(const MarkovChain& chain, const MarkedSet& marked,
                                           double p_star, int repetitions, SearchMode mode,
                                           std::uint64_t seed, int t_cap = kPhaseBitsCap);

struct PminCandidateTrace {
    int l = 0;
    double p_star = 0.0;
    double s = 0.0;
    int t = 0;
    double p_success_exact = 0.0;
    bool found = false;
};

struct PminSearchOutcome {
    std::optional<int> found;
    std::vector<PminCandidateTrace> trace;
    CostLedger total_ledger;
    bool precondition_broken = false; // p_min > p_M discovered in exact mode
    double p_marked = 0.0;
    std::uint64_t seed = 0;
};

// Candidate sweep p* in {(2/3) 2^-l : l = 1..floor(log2(1/p_min))}. Without
// ht_max the doubling loop runs outside the candidate sweep; with ht_max the
// bit count is fixed at ceil(log2 sqrt(ht_max)). The sequential sweep costs
// a log(1/p_min) factor over the quadratic speedup target.
PminSearchOutcome search_with_pmin(const MarkovChain& chain, const MarkedSet& marked,
                                   double p_min, std::optional<double> ht_max, int repetitions,
                                   SearchMode mode, std::uint64_t seed);

struct ProbeRecord {
    int depth = 0;
    double p_star = 0.0;
    int t = 0;
    int runs = 0;
    int zero_outcomes = 0;
    int walk_runs = 0;        // runs that reached phase estimation
    bool found = false;
    double p_success_exact = 0.0; // exact mode
    double prob_anc_zero = 0.0;   // exact mode
    char decision = '?';          // 'a': raise lower end, 'b': lower upper end, 'f': found
};

struct HtmaxSearchOutcome {
    std::optional<int> found;
    std::vector<ProbeRecord> trace;
    CostLedger total_ledger;
    std::uint64_t seed = 0;
};

// Dichotomic search for p* with fixed t = ceil(log2 sqrt(ht_max)). Each probe
// runs a batch at the midpoint; the branch is chosen by whether ancend
// outcomes 0^t were in the minority. Wrong branches are repaired by bounded
// backtracking: three fresh probes per level before giving up.
HtmaxSearchOutcome search_with_htmax(const MarkovChain& chain, const MarkedSet& marked,
                                     double ht_max, int repetitions_per_probe, SearchMode mode,
                                     std::uint64_t seed);

struct Fact4WindowReport {
    double p_marked = 0.0;
    double eps1 = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double min_value = 0.0; // min of cos^2 sin^2 over the grid
    std::vector<double> grid;
    std::vector<double> values;
    bool endpoint_sin_ok = false; // sin theta >= sqrt(eps1) at the upper endpoint
    bool endpoint_cos_ok = false; // cos theta >= sqrt(eps1) at the lower endpoint
    bool pass = false;
};

// Sweeps p* across [2 sqrt(eps1) p_M, 2 (1 - sqrt(eps1)) p_M] and checks
// cos^2 theta sin^2 theta >= eps1 at s = s(p*) on every grid point.
Fact4WindowReport fact4_window_check(double p_marked, double eps1, int grid_points = 20);

} // namespace qws
