#include "qws/szegedy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "qws/errors.hpp"

namespace qws {

namespace {

constexpr double kBlockDegenerateTol = 1e-10;

void check_dense_capacity(int n) {
    if (n > kDensePairCapacity) {
        std::ostringstream oss;
        oss << "dense pair-space path supports n <= " << kDensePairCapacity << ", got " << n;
        throw CapacityError(oss.str());
    }
}

// Orthogonal matrix with prescribed unit first column, via the Householder
// reflection exchanging e0 and the column.
Eigen::MatrixXd householder_completion(const Eigen::VectorXd& first_column) {
    const int n = static_cast<int>(first_column.size());
    Eigen::VectorXd w = -first_column;
    w(0) += 1.0;
    double norm = w.norm();
    if (norm < 1e-15) return Eigen::MatrixXd::Identity(n, n);
    w /= norm;
    return Eigen::MatrixXd::Identity(n, n) - 2.0 * w * w.transpose();
}

int pair_index(int n, int x, int c) { return x * n + c; }

} // namespace

double PairSpaceOperator::unitarity_defect() const {
    Eigen::MatrixXd gram = matrix.transpose() * matrix;
    gram -= Eigen::MatrixXd::Identity(dim(), dim());
    return gram.cwiseAbs().maxCoeff();
}

CoinBlocks::CoinBlocks(const Eigen::MatrixXd& transition)
    : n_(static_cast<int>(transition.rows())) {
    if (transition.rows() != transition.cols())
        throw InvalidParameterError("transition matrix must be square");
    blocks_.reserve(n_);
    for (int x = 0; x < n_; ++x) {
        Eigen::VectorXd amps = transition.row(x).transpose().cwiseSqrt();
        blocks_.push_back(householder_completion(amps));
    }
}

void CoinBlocks::apply_v(Eigen::MatrixXd& pair) const {
    for (int x = 0; x < n_; ++x) pair.row(x) = (blocks_[x] * pair.row(x).transpose()).transpose();
}

void CoinBlocks::apply_v_dagger(Eigen::MatrixXd& pair) const {
    for (int x = 0; x < n_; ++x)
        pair.row(x) = (blocks_[x].transpose() * pair.row(x).transpose()).transpose();
}

void CoinBlocks::apply_shift(Eigen::MatrixXd& pair) { pair.transposeInPlace(); }

void CoinBlocks::apply_ref_x(Eigen::MatrixXd& pair) {
    Eigen::VectorXd kept = pair.col(0);
    pair *= -1.0;
    pair.col(0) = kept;
}

void CoinBlocks::apply_walk(Eigen::MatrixXd& pair) const {
    apply_ref_x(pair);
    apply_v(pair);
    apply_shift(pair);
    apply_v_dagger(pair);
}

PairSpaceOperator build_isometry_v(const Eigen::MatrixXd& transition) {
    const int n = static_cast<int>(transition.rows());
    check_dense_capacity(n);
    CoinBlocks blocks(transition);
    PairSpaceOperator op{n, Eigen::MatrixXd::Zero(n * n, n * n)};
    for (int x = 0; x < n; ++x)
        op.matrix.block(x * n, x * n, n, n) = blocks.block(x);
    return op;
}

PairSpaceOperator build_shift(const Graph& g) {
    const int n = g.vertex_count();
    check_dense_capacity(n);
    PairSpaceOperator op{n, Eigen::MatrixXd::Zero(n * n, n * n)};
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            int source = pair_index(n, x, y);
            int target = (x != y && g.has_edge(x, y)) ? pair_index(n, y, x) : source;
            op.matrix(target, source) = 1.0;
        }
    }
    return op;
}

PairSpaceOperator build_ref_x(int n) {
    check_dense_capacity(n);
    PairSpaceOperator op{n, Eigen::MatrixXd::Identity(n * n, n * n) * -1.0};
    for (int x = 0; x < n; ++x) {
        int i = pair_index(n, x, 0);
        op.matrix(i, i) = 1.0;
    }
    return op;
}

PairSpaceOperator build_walk_dense(const InterpolatedChain& chain, const Graph& g) {
    auto locality = validate_chain_locality(chain.matrix(), g);
    if (!locality.ok) {
        std::ostringstream oss;
        oss << "chain is not local to the graph; offending transitions:";
        for (const auto& [x, y] : locality.violations) oss << " (" << x << "," << y << ")";
        throw InvalidParameterError(oss.str());
    }
    const int n = chain.size();
    check_dense_capacity(n);
    PairSpaceOperator v = build_isometry_v(chain.matrix());
    const int dim = n * n;

    // W = V^T (Shift (V ref_X)); ref_X is diagonal and Shift a permutation,
    // so only one dense product is needed.
    Eigen::MatrixXd m = v.matrix;
    for (int x = 0; x < n; ++x) {
        for (int c = 1; c < n; ++c) m.col(pair_index(n, x, c)) *= -1.0;
    }
    std::vector<int> sigma(dim);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            int i = pair_index(n, x, y);
            sigma[i] = (x != y && g.has_edge(x, y)) ? pair_index(n, y, x) : i;
        }
    }
    Eigen::MatrixXd shifted(dim, dim);
    for (int i = 0; i < dim; ++i) shifted.row(i) = m.row(sigma[i]);

    PairSpaceOperator walk{n, v.matrix.transpose() * shifted};
    return walk;
}

void record_walk_applications(CostLedger& ledger, long long count, bool interpolated) {
    ledger.update_calls += 2 * count;
    ledger.shift_calls += count;
    if (interpolated) ledger.check_calls += 4 * count;
}

WalkSpectralForm::WalkSpectralForm(const InterpolatedChain& chain, bool materialize)
    : n_(chain.size()), s_(chain.s()), p_marked_(chain.p_marked()), marked_(chain.marked()) {
    spectral_ = spectral_data(chain);

    int top_count = 0;
    for (int k = 0; k < n_; ++k) {
        if (spectral_.eigenvalues(k) >= 1.0 - kTopGapTol) {
            ++top_count;
            top_ = k;
        } else {
            rotation_.push_back(k);
        }
    }
    if (top_count != 1)
        throw ErgodicityError("spectral walk form needs a simple top eigenvalue (s < 1)");

    phis_.reserve(rotation_.size());
    for (int k : rotation_) {
        double lambda = std::clamp(spectral_.eigenvalues(k), -1.0, 1.0);
        double sin_phi = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));
        if (sin_phi < kBlockDegenerateTol)
            throw SingularityError("degenerate rotation block: eigenvalue at -1");
        phis_.push_back(std::acos(lambda));
    }

    // Residual Grams: every vertex when the full tables are affordable,
    // marked vertices only for large instances.
    std::vector<int> cover;
    if (n_ <= 64) {
        cover.resize(n_);
        for (int x = 0; x < n_; ++x) cover[x] = x;
    } else {
        cover = marked_.members();
    }
    const int blocks = static_cast<int>(rotation_.size());
    Eigen::MatrixXd rot_vectors(n_, blocks);
    for (int j = 0; j < blocks; ++j) rot_vectors.col(j) = spectral_.eigenvectors.col(rotation_[j]);
    Eigen::VectorXd sin_phis(blocks);
    for (int j = 0; j < blocks; ++j) sin_phis(j) = std::sin(phis_[j]);

    gram_index_.assign(n_, -1);
    gram_.reserve(cover.size());
    const Eigen::MatrixXd& p_s = chain.matrix();
    for (int x : cover) {
        Eigen::VectorXd col = p_s.col(x); // p_cx(s) over c
        Eigen::MatrixXd scaled = rot_vectors.array().colwise() * col.array();
        Eigen::MatrixXd inner = rot_vectors.transpose() * scaled;
        Eigen::VectorXd w(blocks);
        for (int j = 0; j < blocks; ++j)
            w(j) = spectral_.eigenvalues(rotation_[j]) * rot_vectors(x, j);
        inner -= w * w.transpose();
        inner.array() /= (sin_phis * sin_phis.transpose()).array();
        gram_index_[x] = static_cast<int>(gram_.size());
        gram_.push_back(std::move(inner));
    }

    if (materialize) {
        if (n_ > 64) throw CapacityError("pair-space block materialization supports n <= 64");
        materialized_ = true;
        const int dim = n_ * n_;
        a_cols_ = Eigen::MatrixXd::Zero(dim, blocks);
        b_cols_ = Eigen::MatrixXd::Zero(dim, blocks);
        stationary_pair_ = Eigen::VectorXd::Zero(dim);
        for (int x = 0; x < n_; ++x)
            stationary_pair_(pair_index(n_, x, 0)) = spectral_.eigenvectors(x, top_);
        CoinBlocks coins(chain.matrix());
        for (int j = 0; j < blocks; ++j) {
            Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(n_, n_);
            pair.col(0) = rot_vectors.col(j);
            Eigen::MatrixXd walked = pair;
            coins.apply_walk(walked);
            double lambda = spectral_.eigenvalues(rotation_[j]);
            Eigen::MatrixXd residual = walked - lambda * pair;
            double norm = residual.norm();
            if (norm < kBlockDegenerateTol)
                throw SingularityError("degenerate rotation block while materializing");
            residual /= norm;
            for (int x = 0; x < n_; ++x) {
                for (int c = 0; c < n_; ++c) {
                    a_cols_(pair_index(n_, x, c), j) = pair(x, c);
                    b_cols_(pair_index(n_, x, c), j) = residual(x, c);
                }
            }
        }
    }
}

const Eigen::MatrixXd& WalkSpectralForm::residual_gram(int x) const {
    if (!has_residual_gram(x))
        throw InvalidParameterError("no residual Gram stored for this vertex");
    return gram_[gram_index_[x]];
}

bool WalkSpectralForm::has_residual_gram(int x) const {
    return x >= 0 && x < n_ && gram_index_[x] >= 0;
}

Eigen::VectorXd WalkSpectralForm::block_a(int j) const {
    if (!materialized_) throw InvalidParameterError("spectral form was built without vectors");
    return a_cols_.col(j);
}

Eigen::VectorXd WalkSpectralForm::block_b(int j) const {
    if (!materialized_) throw InvalidParameterError("spectral form was built without vectors");
    return b_cols_.col(j);
}

const Eigen::VectorXd& WalkSpectralForm::stationary_pair() const {
    if (!materialized_) throw InvalidParameterError("spectral form was built without vectors");
    return stationary_pair_;
}

Eigen::VectorXcd WalkSpectralForm::eigenvector_plus(int j) const {
    using namespace std::complex_literals;
    return (block_a(j).cast<std::complex<double>>() -
            1.0i * block_b(j).cast<std::complex<double>>()) /
           std::sqrt(2.0);
}

Eigen::VectorXcd WalkSpectralForm::eigenvector_minus(int j) const {
    using namespace std::complex_literals;
    return (block_a(j).cast<std::complex<double>>() +
            1.0i * block_b(j).cast<std::complex<double>>()) /
           std::sqrt(2.0);
}

WalkSpectralForm build_walk_spectral(const InterpolatedChain& chain) {
    return WalkSpectralForm(chain, chain.size() <= 16);
}

WalkSpectralForm build_walk_spectral(const InterpolatedChain& chain, bool materialize) {
    return WalkSpectralForm(chain, materialize);
}

namespace {

// Orthonormal basis of the smallest W-invariant subspace containing the
// columns of `seed`, grown by repeated application and rank-revealing SVD.
Eigen::MatrixXd invariant_subspace(const Eigen::MatrixXd& w, const Eigen::MatrixXd& seed) {
    Eigen::MatrixXd basis = seed;
    for (int round = 0; round < 64; ++round) {
        Eigen::MatrixXd grown(w.rows(), basis.cols() * 2);
        grown << basis, w * basis;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(grown, Eigen::ComputeThinU);
        double cutoff = svd.singularValues()(0) * 1e-10;
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i) {
            if (svd.singularValues()(i) > cutoff) ++rank;
        }
        Eigen::MatrixXd next = svd.matrixU().leftCols(rank);
        if (rank == basis.cols()) return next;
        basis = std::move(next);
    }
    return basis;
}

std::vector<double> sorted_eigenphases(const Eigen::MatrixXd& restriction) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(restriction);
    std::vector<double> phases;
    phases.reserve(restriction.rows());
    for (int i = 0; i < restriction.rows(); ++i) {
        double phase = std::arg(solver.eigenvalues()(i));
        if (phase <= -M_PI + 1e-9) phase += 2.0 * M_PI;
        phases.push_back(phase);
    }
    std::sort(phases.begin(), phases.end());
    return phases;
}

} // namespace

Lemma1Report verify_lemma1(const InterpolatedChain& chain, const Graph& g) {
    const int n = chain.size();
    if (n > 16) throw CapacityError("lemma-1 verification runs the dense path; n <= 16");
    PairSpaceOperator walk = build_walk_dense(chain, g);
    WalkSpectralForm form(chain, true);
    const int blocks = form.rotation_count();
    const int dim = n * n;

    Lemma1Report report;
    report.dim_analytic = 1 + 2 * blocks;

    Eigen::MatrixXd q(dim, report.dim_analytic);
    q.col(0) = form.stationary_pair();
    for (int j = 0; j < blocks; ++j) {
        q.col(1 + 2 * j) = form.block_a(j);
        q.col(2 + 2 * j) = form.block_b(j);
    }

    Eigen::MatrixXd wq = walk.matrix * q;
    report.invariance_defect = (wq - q * (q.transpose() * wq)).cwiseAbs().maxCoeff();

    // Eigenvector residuals and reconstruction through the dense operator.
    for (int j = 0; j < blocks; ++j) {
        Eigen::VectorXcd plus = form.eigenvector_plus(j);
        Eigen::VectorXcd minus = form.eigenvector_minus(j);
        std::complex<double> mu_plus = std::polar(1.0, form.phi(j));
        double res_plus = (walk.matrix * plus - mu_plus * plus).norm();
        double res_minus = (walk.matrix * minus - std::conj(mu_plus) * minus).norm();
        double residual = std::max(res_plus, res_minus);
        double reconstruction =
            ((plus + minus) / std::sqrt(2.0) -
             form.block_a(j).cast<std::complex<double>>())
                .norm();
        report.eigenvector_residual = std::max(report.eigenvector_residual, residual);
        report.reconstruction_residual =
            std::max(report.reconstruction_residual, reconstruction);
        report.blocks.push_back(
            {form.rotation_eigen_index(j), form.lambda(j), form.phi(j), residual});
    }
    double stat_residual =
        (walk.matrix * form.stationary_pair() - form.stationary_pair()).norm();
    report.eigenvector_residual = std::max(report.eigenvector_residual, stat_residual);

    // Numeric walk space grown from the vertex states.
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(dim, n);
    for (int x = 0; x < n; ++x) seed(x * n, x) = 1.0;
    Eigen::MatrixXd numeric = invariant_subspace(walk.matrix, seed);
    report.dim_numeric = static_cast<int>(numeric.cols());

    std::vector<double> dense_phases =
        sorted_eigenphases(numeric.transpose() * walk.matrix * numeric);
    std::vector<double> analytic_phases{0.0};
    for (int j = 0; j < blocks; ++j) {
        analytic_phases.push_back(form.phi(j));
        analytic_phases.push_back(-form.phi(j));
    }
    std::sort(analytic_phases.begin(), analytic_phases.end());
    if (dense_phases.size() != analytic_phases.size()) {
        report.eigenphase_deviation = 1e100;
    } else {
        for (std::size_t i = 0; i < dense_phases.size(); ++i) {
            report.eigenphase_deviation = std::max(
                report.eigenphase_deviation, std::abs(dense_phases[i] - analytic_phases[i]));
        }
    }

    // sin of the largest principal angle between the analytic and numeric spaces.
    Eigen::MatrixXd residual_mat = numeric - q * (q.transpose() * numeric);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual_mat);
    double sin_angle = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    report.max_subspace_angle = std::asin(std::min(1.0, sin_angle));

    report.pass = report.eigenphase_deviation <= 1e-8 && report.max_subspace_angle <= 1e-8 &&
                  report.eigenvector_residual <= 1e-8 &&
                  report.reconstruction_residual <= 1e-9;
    return report;
}

} // namespace qws
