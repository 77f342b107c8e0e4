#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qws/graph.hpp"
#include "qws/ledger.hpp"
#include "qws/markov.hpp"

namespace qws {

inline constexpr double kUnitaryTol = 1e-9;
inline constexpr int kDensePairCapacity = 100; // vertex count for dense pair-space work

// Dense operator on the pair space H (x) H with index (x, c) -> x*n + c.
// Every operator the toolkit builds here is real orthogonal.
struct PairSpaceOperator {
    int n = 0;
    Eigen::MatrixXd matrix;

    int dim() const { return n * n; }
    double unitarity_defect() const;
};

// Per-vertex coin unitaries: block x has first column sqrt(p_x.), completed
// to an orthogonal matrix by a deterministic Householder reflection. The
// walk restricted to its walk space does not depend on the completion.
class CoinBlocks {
public:
    explicit CoinBlocks(const Eigen::MatrixXd& transition);

    int size() const { return n_; }
    const Eigen::MatrixXd& block(int x) const { return blocks_[x]; }

    // V, V^dagger, Shift and ref_X applied to an n x n pair amplitude array
    // whose (x, c) entry is the amplitude of |x>|c>. Shift is applied
    // graph-free (full transpose); for chains local to a graph the two agree
    // on every reachable state.
    void apply_v(Eigen::MatrixXd& pair) const;
    void apply_v_dagger(Eigen::MatrixXd& pair) const;
    static void apply_shift(Eigen::MatrixXd& pair);
    static void apply_ref_x(Eigen::MatrixXd& pair);
    // One walk step V^dagger Shift V ref_X.
    void apply_walk(Eigen::MatrixXd& pair) const;

private:
    int n_;
    std::vector<Eigen::MatrixXd> blocks_;
};

PairSpaceOperator build_isometry_v(const Eigen::MatrixXd& transition);
PairSpaceOperator build_shift(const Graph& g);
PairSpaceOperator build_ref_x(int n);

// Dense W(s) = V(s)^dagger Shift V(s) ref_X. Requires the chain to be local
// to g; throws with the offending transitions otherwise.
PairSpaceOperator build_walk_dense(const InterpolatedChain& chain, const Graph& g);

// Records the oracle cost of `count` walk applications: V and its adjoint are
// one Update each, Shift one more. An interpolated walk pays 2 Check calls
// per V through the simulation circuit.
void record_walk_applications(CostLedger& ledger, long long count, bool interpolated);

// Block spectral form of W(s): one 2D rotation block per eigenvector of D(s)
// with eigenvalue below 1, rotating by phi_k = arccos(lambda_k), plus the
// fixed stationary line. Projection data onto single vertices is kept in a
// compact n-dimensional form so success probabilities never need pair-space
// vectors; full pair-space bases are materialized only on request.
class WalkSpectralForm {
public:
    WalkSpectralForm(const InterpolatedChain& chain, bool materialize);

    int size() const { return n_; }
    double s() const { return s_; }
    const SpectralData& spectral() const { return spectral_; }
    int rotation_count() const { return static_cast<int>(rotation_.size()); }
    // Index into the spectral data of the j-th rotation block.
    int rotation_eigen_index(int j) const { return rotation_[j]; }
    double lambda(int j) const { return spectral_.eigenvalues(rotation_[j]); }
    double phi(int j) const { return phis_[j]; }
    int top_index() const { return top_; }
    double p_marked() const { return p_marked_; }
    const MarkedSet& marked() const { return marked_; }

    // <b_j restricted to first register x, b_l restricted likewise>; available
    // for every x when n is small, marked vertices only otherwise.
    const Eigen::MatrixXd& residual_gram(int x) const;
    bool has_residual_gram(int x) const;
    // v_k(x) for the j-th rotation block / the stationary block.
    double vertex_component(int j, int x) const {
        return spectral_.eigenvectors(x, rotation_[j]);
    }
    double top_vertex_component(int x) const { return spectral_.eigenvectors(x, top_); }
    double unmarked_overlap_rotation(int j) const {
        return spectral_.unmarked_overlaps(rotation_[j]);
    }
    double unmarked_overlap_top() const { return spectral_.unmarked_overlaps(top_); }

    bool materialized() const { return materialized_; }
    // Pair-space columns, materialized mode only.
    Eigen::VectorXd block_a(int j) const;
    Eigen::VectorXd block_b(int j) const;
    const Eigen::VectorXd& stationary_pair() const;
    Eigen::VectorXcd eigenvector_plus(int j) const;  // (a - i b)/sqrt(2)
    Eigen::VectorXcd eigenvector_minus(int j) const; // (a + i b)/sqrt(2)

private:
    int n_;
    double s_;
    double p_marked_;
    MarkedSet marked_;
    SpectralData spectral_;
    std::vector<int> rotation_;
    int top_ = -1;
    std::vector<double> phis_;
    std::vector<Eigen::MatrixXd> gram_;
    std::vector<int> gram_index_; // gram_index_[x] = slot in gram_, or -1
    bool materialized_ = false;
    Eigen::MatrixXd a_cols_, b_cols_;
    Eigen::VectorXd stationary_pair_;
};

WalkSpectralForm build_walk_spectral(const InterpolatedChain& chain);
WalkSpectralForm build_walk_spectral(const InterpolatedChain& chain, bool materialize);

struct Lemma1BlockRecord {
    int k = 0;
    double lambda = 0.0;
    double phi = 0.0;
    double residual = 0.0; // max of ||W psi± - e^{±i phi} psi±|| through dense W
};

struct Lemma1Report {
    double eigenphase_deviation = 0.0;     // analytic multiset vs dense restriction
    double eigenvector_residual = 0.0;     // worst block residual
    double reconstruction_residual = 0.0;  // ||(psi+ + psi-)/sqrt2 - v_k (x) 0bar||
    double invariance_defect = 0.0;        // ||(I - QQ^T) W Q||
    double max_subspace_angle = 0.0;       // analytic blocks vs numeric walk space
    int dim_analytic = 0;
    int dim_numeric = 0;
    std::vector<Lemma1BlockRecord> blocks;
    bool pass = false;
};

// Dense cross-validation of the block decomposition; n <= 16.
Lemma1Report verify_lemma1(const InterpolatedChain& chain, const Graph& g);

} // namespace qws
