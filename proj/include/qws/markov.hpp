#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "qws/graph.hpp"
#include "qws/ledger.hpp"
#include "qws/rng.hpp"

namespace qws {

inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kStationaryTol = 1e-10;
inline constexpr double kDetailedBalanceTol = 1e-10;
inline constexpr double kTopGapTol = 1e-10;

struct ErgodicityReport {
    bool strongly_connected = false;
    bool aperiodic = false;
    std::vector<std::vector<int>> components; // SCCs of the positive-entry digraph
    bool ok() const { return strongly_connected && aperiodic; }
};

ErgodicityReport check_ergodicity(const Eigen::MatrixXd& transition);

// Unique stationary distribution of an ergodic row-stochastic matrix.
// Throws ErgodicityError (with the offending components) if not ergodic.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

// Row-stochastic matrix with its cached stationary distribution.
// Immutable after construction.
class MarkovChain {
public:
    // Validates row sums and nonnegativity, then solves for the stationary
    // distribution (requires ergodicity).
    static MarkovChain from_matrix(Eigen::MatrixXd transition);
    // Same validation, but adopts a known stationary vector after checking
    // pi P = pi. Skips the ergodicity scan; used for closed-form families.
    static MarkovChain from_matrix_with_stationary(Eigen::MatrixXd transition,
                                                   Eigen::VectorXd pi);

    int size() const { return static_cast<int>(transition_.rows()); }
    const Eigen::MatrixXd& matrix() const { return transition_; }
    const Eigen::VectorXd& stationary() const { return pi_; }

    bool is_reversible(double tol = kDetailedBalanceTol) const;
    // Largest detailed-balance defect |pi_x p_xy - pi_y p_yx|.
    double detailed_balance_defect() const;
    // Stationary mass of the marked set.
    double marked_mass(const MarkedSet& marked) const;

private:
    MarkovChain(Eigen::MatrixXd transition, Eigen::VectorXd pi);
    Eigen::MatrixXd transition_;
    Eigen::VectorXd pi_;
};

// (Id + P) / 2. Leaves the stationary distribution unchanged and moves the
// discriminant spectrum into [0, 1].
MarkovChain lazify(const MarkovChain& chain);

// Marked rows replaced by unit self-loops. Marked set must be nonempty.
Eigen::MatrixXd absorbing(const MarkovChain& chain, const MarkedSet& marked);

// Raw convex-path formula (1-s) P + s P' on matrices, without chain
// validation. The chain-level interpolate() below is the validated entry.
Eigen::MatrixXd interpolated_transition(const Eigen::MatrixXd& base, const MarkedSet& marked,
                                        double s);

// Normalized projections of sqrt(pi) onto unmarked / marked vertices,
// with the corresponding stationary masses.
struct ProjectionPair {
    Eigen::VectorXd unmarked_state; // |U>, zero on marked vertices
    Eigen::VectorXd marked_state;   // |M>, zero on unmarked vertices
    double p_marked = 0.0;
    double p_unmarked = 0.0;
};

ProjectionPair projection_pair(const Eigen::VectorXd& pi, const MarkedSet& marked);

// Convex path (1-s) P + s P' between a chain and its absorbing version.
// Construction asserts ergodicity and reversibility of the interpolated
// chain for s < 1 rather than assuming them.
class InterpolatedChain {
public:
    InterpolatedChain(MarkovChain base, MarkedSet marked, double s);

    int size() const { return base_.size(); }
    double s() const { return s_; }
    const MarkovChain& base() const { return base_; }
    const MarkedSet& marked() const { return marked_; }
    const Eigen::MatrixXd& matrix() const { return matrix_s_; }      // P(s)
    const Eigen::VectorXd& stationary() const { return pi_s_; }      // pi(s)
    double p_marked() const { return p_marked_; }                    // of the base chain
    double split_angle() const;                                      // theta(s)

private:
    MarkovChain base_;
    MarkedSet marked_;
    double s_;
    Eigen::MatrixXd matrix_s_;
    Eigen::VectorXd pi_s_;
    double p_marked_;
};

InterpolatedChain interpolate(const MarkovChain& base, const MarkedSet& marked, double s);

// Closed-form stationary distribution of P(s):
//   pi(s) = [(1-s) pi_U, pi_M] / (1 - s (1 - p_M)),
// verified against pi(s) P(s) = pi(s).
Eigen::VectorXd stationary_interpolated(const MarkovChain& base, const MarkedSet& marked,
                                        double s);

// sin^2 theta(s) = p_M / (1 - s (1 - p_M)); valid for any p_M in (0, 1].
double split_sin2(double p_marked, double s);

// Same quantity parametrized by the target mass p* through s = balanced_s(p*),
// in the algebraic form that stays meaningful for p* in (0, 1).
double split_sin2_for_target(double p_marked, double p_star);

// theta(s) = arcsin sqrt(sin^2 theta). Domain-checked: p_marked in (0, 1/2].
double split_angle(double p_marked, double s);

// s(p*) = 1 - p*/(1 - p*), the interpolation value balancing the split
// when p* equals the true marked mass. Domain: p* in (0, 1/2].
double balanced_s(double p_star);

// Symmetric eigensystem, ascending eigenvalues, orthonormal columns with a
// deterministic sign convention (largest-magnitude entry positive). When
// built from an interpolated chain it also carries the overlaps <v_k|U>.
struct SpectralData {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    Eigen::VectorXd unmarked_overlaps; // empty unless built from a chain
};

SpectralData spectral_data(const Eigen::MatrixXd& symmetric);
SpectralData spectral_data(const InterpolatedChain& chain);

// Discriminant sqrt(p_xy p_yx), entrywise. For the base chain this requires
// reversibility; the interpolated overload covers s = 1 through the same
// entrywise formula, which reduces to D(P)_UU (+) Id_M there.
Eigen::MatrixXd discriminant(const MarkovChain& chain);
Eigen::MatrixXd discriminant(const InterpolatedChain& chain);

// d/ds D(s) = {Pi_M, Id - D(s)} / (2 (1 - s)). Singular at s = 1.
Eigen::MatrixXd discriminant_derivative(const InterpolatedChain& chain);

// A(s) = sum_{k != n} |v_k><v_k| / (1 - lambda_k), the pseudo-resolvent used
// by the derivative identities.
Eigen::MatrixXd pseudo_resolvent(const SpectralData& spectral);

// <U| (Id_U - D_UU)^{-1} |U>. The unmarked-mass factor p_U is omitted by
// default; include_unmarked_mass restores it. Marked set covering all
// vertices gives 0. Throws SingularityError when the block is not invertible.
double hitting_time_matrix(const MarkovChain& chain, const MarkedSet& marked,
                           bool include_unmarked_mass = false);

// HT(s) = sum_{k: lambda_k < 1} |<v_k|U>|^2 / (1 - lambda_k).
double hitting_time_spectral(const InterpolatedChain& chain);

struct HtDerivativeReport {
    double s = 0.0;
    double analytic = 0.0;          // 2 (1 - p_M) / (1 - s (1 - p_M)) * HT(s)
    double finite_difference = 0.0; // central difference of HT(s)
    double relative_error = 0.0;
};

HtDerivativeReport ht_derivative_check(const MarkovChain& base, const MarkedSet& marked,
                                       double s, double step = 1e-5);

struct ClassicalSearchOutcome {
    std::optional<int> found;
    long long steps = 0; // chain steps taken before stopping
    CostLedger ledger;
};

// Sample a start from pi (one Setup), then alternate Check and one chain step
// (one Update each) for at most max_steps steps.
ClassicalSearchOutcome random_walk_search(const MarkovChain& chain, const MarkedSet& marked,
                                          long long max_steps, std::uint64_t seed);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long long trials = 0;
    long long capped_trials = 0; // trials that hit the step cap
    bool flagged = false;        // true iff any trial was capped
};

// Mean absorption time into the marked set, starting from the stationary
// distribution restricted to unmarked vertices (matching the convention that
// omits the p_U factor). Trials hitting step_cap are counted and flagged.
MonteCarloEstimate monte_carlo_hitting_time(const MarkovChain& chain, const MarkedSet& marked,
                                            long long trials, std::uint64_t seed,
                                            long long step_cap = 1000000);

// Random ergodic reversible chain on n states: symmetric positive weights on
// a random connected graph, plus self-loop weight for aperiodicity.
MarkovChain random_reversible_chain(int n, Rng& rng, bool lazy = false);

// Random row-stochastic matrix (not necessarily reversible), with optional
// structural zeros.
Eigen::MatrixXd random_stochastic_matrix(int n, Rng& rng, double zero_fraction = 0.0);

// Random nonempty marked set whose stationary mass does not exceed the cap.
MarkedSet random_marked_set(const MarkovChain& chain, Rng& rng, double max_mass = 0.5);

} // namespace qws
