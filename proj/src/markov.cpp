#include "qws/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qws/errors.hpp"

namespace qws {

namespace {

std::vector<std::vector<int>> strongly_connected_components(const Eigen::MatrixXd& m) {
    // Iterative Tarjan on the positive-entry digraph.
    const int n = static_cast<int>(m.rows());
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> components;
    int next_index = 0;

    struct Frame {
        int v;
        int child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            bool descended = false;
            while (f.child < n) {
                int w = f.child++;
                if (m(f.v, w) <= 0.0) continue;
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
            }
            if (descended) continue;
            if (low[f.v] == index[f.v]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                } while (w != f.v);
                std::sort(comp.begin(), comp.end());
                components.push_back(std::move(comp));
            }
            int v = f.v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        }
    }
    return components;
}

bool digraph_aperiodic(const Eigen::MatrixXd& m) {
    // For a strongly connected digraph: period = gcd over edges (u,v) of
    // dist(u) + 1 - dist(v), with BFS distances from any root.
    const int n = static_cast<int>(m.rows());
    std::vector<int> dist(n, -1);
    std::vector<int> queue{0};
    dist[0] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int u = queue[qi];
        for (int v = 0; v < n; ++v) {
            if (m(u, v) > 0.0 && dist[v] == -1) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    long long g = 0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (m(u, v) > 0.0) g = std::gcd(g, static_cast<long long>(dist[u] + 1 - dist[v]));
        }
    }
    return std::llabs(g) == 1;
}

void validate_stochastic(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidParameterError("transition matrix must be square");
    if (m.rows() < 1) throw InvalidParameterError("transition matrix must be nonempty");
    for (int x = 0; x < m.rows(); ++x) {
        double row_sum = 0.0;
        for (int y = 0; y < m.cols(); ++y) {
            if (m(x, y) < 0.0) throw InvalidParameterError("negative transition probability");
            row_sum += m(x, y);
        }
        if (std::abs(row_sum - 1.0) > kRowSumTol) {
            std::ostringstream oss;
            oss << "row " << x << " sums to " << row_sum << ", expected 1";
            throw InvalidParameterError(oss.str());
        }
    }
}

std::vector<int> unmarked_indices(int n, const MarkedSet& marked) {
    std::vector<int> idx;
    idx.reserve(n - marked.size());
    for (int x = 0; x < n; ++x) {
        if (!marked.contains(x)) idx.push_back(x);
    }
    return idx;
}

} // namespace

Eigen::MatrixXd interpolated_transition(const Eigen::MatrixXd& base, const MarkedSet& marked,
                                        double s) {
    Eigen::MatrixXd m = base;
    for (int x : marked.members()) {
        m.row(x) *= (1.0 - s);
        m(x, x) += s;
    }
    return m;
}

ErgodicityReport check_ergodicity(const Eigen::MatrixXd& transition) {
    ErgodicityReport report;
    report.components = strongly_connected_components(transition);
    report.strongly_connected = report.components.size() == 1;
    report.aperiodic = report.strongly_connected && digraph_aperiodic(transition);
    return report;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
    validate_stochastic(transition);
    auto report = check_ergodicity(transition);
    if (!report.ok()) {
        std::ostringstream oss;
        oss << "chain is not ergodic (" << report.components.size()
            << " strongly connected component(s)"
            << (report.strongly_connected && !report.aperiodic ? ", periodic" : "") << ")";
        throw ErgodicityError(oss.str(), report.components);
    }
    const int n = static_cast<int>(transition.rows());
    // Solve pi^T P = pi^T with the normalization sum(pi) = 1 as a stacked
    // least-squares system; the ergodic case has a unique solution.
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd pi = a.colPivHouseholderQr().solve(rhs);
    double defect = (transition.transpose() * pi - pi).cwiseAbs().maxCoeff();
    if (defect > kStationaryTol || pi.minCoeff() <= 0.0)
        throw ErgodicityError("stationary solve failed to produce a positive fixed point");
    return pi;
}

MarkovChain::MarkovChain(Eigen::MatrixXd transition, Eigen::VectorXd pi)
    : transition_(std::move(transition)), pi_(std::move(pi)) {}

MarkovChain MarkovChain::from_matrix(Eigen::MatrixXd transition) {
    Eigen::VectorXd pi = stationary_distribution(transition);
    return MarkovChain(std::move(transition), std::move(pi));
}

MarkovChain MarkovChain::from_matrix_with_stationary(Eigen::MatrixXd transition,
                                                     Eigen::VectorXd pi) {
    validate_stochastic(transition);
    if (pi.size() != transition.rows())
        throw InvalidParameterError("stationary vector has wrong dimension");
    if (pi.minCoeff() <= 0.0) throw InvalidParameterError("stationary vector must be positive");
    if (std::abs(pi.sum() - 1.0) > kRowSumTol)
        throw InvalidParameterError("stationary vector must sum to 1");
    double defect = (transition.transpose() * pi - pi).cwiseAbs().maxCoeff();
    if (defect > kStationaryTol)
        throw InvalidParameterError("supplied vector is not stationary for the chain");
    return MarkovChain(std::move(transition), std::move(pi));
}

bool MarkovChain::is_reversible(double tol) const { return detailed_balance_defect() <= tol; }

double MarkovChain::detailed_balance_defect() const {
    const int n = size();
    double worst = 0.0;
    for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
            worst = std::max(worst,
                             std::abs(pi_(x) * transition_(x, y) - pi_(y) * transition_(y, x)));
        }
    }
    return worst;
}

double MarkovChain::marked_mass(const MarkedSet& marked) const {
    double mass = 0.0;
    for (int x : marked.members()) {
        if (x >= size()) throw InvalidParameterError("marked vertex out of range");
        mass += pi_(x);
    }
    return mass;
}

MarkovChain lazify(const MarkovChain& chain) {
    const int n = chain.size();
    Eigen::MatrixXd lazy =
        0.5 * (Eigen::MatrixXd::Identity(n, n) + chain.matrix());
    return MarkovChain::from_matrix_with_stationary(std::move(lazy), chain.stationary());
}

Eigen::MatrixXd absorbing(const MarkovChain& chain, const MarkedSet& marked) {
    if (marked.empty()) throw InvalidParameterError("absorbing chain needs a nonempty marked set");
    return interpolated_transition(chain.matrix(), marked, 1.0);
}

ProjectionPair projection_pair(const Eigen::VectorXd& pi, const MarkedSet& marked) {
    const int n = static_cast<int>(pi.size());
    ProjectionPair pair;
    pair.unmarked_state = Eigen::VectorXd::Zero(n);
    pair.marked_state = Eigen::VectorXd::Zero(n);
    for (int x = 0; x < n; ++x) {
        if (marked.contains(x))
            pair.p_marked += pi(x);
        else
            pair.p_unmarked += pi(x);
    }
    for (int x = 0; x < n; ++x) {
        if (marked.contains(x)) {
            if (pair.p_marked > 0.0) pair.marked_state(x) = std::sqrt(pi(x) / pair.p_marked);
        } else {
            if (pair.p_unmarked > 0.0)
                pair.unmarked_state(x) = std::sqrt(pi(x) / pair.p_unmarked);
        }
    }
    return pair;
}

Eigen::VectorXd stationary_interpolated(const MarkovChain& base, const MarkedSet& marked,
                                        double s) {
    if (s < 0.0 || s > 1.0) throw InvalidParameterError("interpolation parameter outside [0,1]");
    const Eigen::VectorXd& pi = base.stationary();
    if (marked.empty()) return pi;
    double p_marked = base.marked_mass(marked);
    Eigen::VectorXd scaled = pi;
    for (int x = 0; x < base.size(); ++x) {
        if (!marked.contains(x)) scaled(x) *= (1.0 - s);
    }
    Eigen::VectorXd pi_s = scaled / (1.0 - s * (1.0 - p_marked));
    Eigen::MatrixXd m = interpolated_transition(base.matrix(), marked, s);
    double defect = (m.transpose() * pi_s - pi_s).cwiseAbs().maxCoeff();
    if (defect > kStationaryTol)
        throw VerificationError("closed-form interpolated stationary vector failed its check");
    return pi_s;
}

InterpolatedChain::InterpolatedChain(MarkovChain base, MarkedSet marked, double s)
    : base_(std::move(base)), marked_(std::move(marked)), s_(s) {
    if (s < 0.0 || s > 1.0) throw InvalidParameterError("interpolation parameter outside [0,1]");
    matrix_s_ = interpolated_transition(base_.matrix(), marked_, s_);
    p_marked_ = base_.marked_mass(marked_);
    pi_s_ = stationary_interpolated(base_, marked_, s_);
    if (s_ < 1.0) {
        auto report = check_ergodicity(matrix_s_);
        if (!report.ok())
            throw ErgodicityError("interpolated chain is not ergodic", report.components);
        if (base_.is_reversible()) {
            double worst = 0.0;
            const int n = base_.size();
            for (int x = 0; x < n; ++x) {
                for (int y = x + 1; y < n; ++y) {
                    worst = std::max(worst, std::abs(pi_s_(x) * matrix_s_(x, y) -
                                                     pi_s_(y) * matrix_s_(y, x)));
                }
            }
            if (worst > kDetailedBalanceTol)
                throw ReversibilityError("interpolated chain lost detailed balance");
        }
    }
}

double InterpolatedChain::split_angle() const { return qws::split_angle(p_marked_, s_); }

InterpolatedChain interpolate(const MarkovChain& base, const MarkedSet& marked, double s) {
    return InterpolatedChain(base, marked, s);
}

double split_sin2(double p_marked, double s) {
    if (p_marked <= 0.0 || p_marked > 1.0) throw DomainError("marked mass outside (0,1]");
    if (s < 0.0 || s > 1.0) throw DomainError("interpolation parameter outside [0,1]");
    // 1 - s (1 - p) written as (1 - s) + s p so the endpoints are exact.
    return p_marked / ((1.0 - s) + s * p_marked);
}

double split_sin2_for_target(double p_marked, double p_star) {
    if (p_marked <= 0.0 || p_marked > 1.0) throw DomainError("marked mass outside (0,1]");
    if (p_star <= 0.0 || p_star >= 1.0) throw DomainError("target mass outside (0,1)");
    double odds = p_star / (1.0 - p_star);
    return p_marked / (p_marked + odds * (1.0 - p_marked));
}

double split_angle(double p_marked, double s) {
    if (p_marked <= 0.0 || p_marked > 0.5) throw DomainError("marked mass outside (0,1/2]");
    return std::asin(std::sqrt(split_sin2(p_marked, s)));
}

double balanced_s(double p_star) {
    if (p_star <= 0.0 || p_star > 0.5) throw DomainError("target mass outside (0,1/2]");
    return 1.0 - p_star / (1.0 - p_star);
}

SpectralData spectral_data(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
    if (solver.info() != Eigen::Success)
        throw SingularityError("symmetric eigendecomposition did not converge");
    SpectralData data;
    data.eigenvalues = solver.eigenvalues();
    data.eigenvectors = solver.eigenvectors();
    // Deterministic sign: make the largest-magnitude entry of each vector positive.
    for (int k = 0; k < data.eigenvectors.cols(); ++k) {
        int arg_max = 0;
        double best = 0.0;
        for (int i = 0; i < data.eigenvectors.rows(); ++i) {
            double mag = std::abs(data.eigenvectors(i, k));
            if (mag > best) {
                best = mag;
                arg_max = i;
            }
        }
        if (data.eigenvectors(arg_max, k) < 0.0) data.eigenvectors.col(k) *= -1.0;
    }
    return data;
}

SpectralData spectral_data(const InterpolatedChain& chain) {
    SpectralData data = spectral_data(discriminant(chain));
    ProjectionPair pair = projection_pair(chain.base().stationary(), chain.marked());
    data.unmarked_overlaps = data.eigenvectors.transpose() * pair.unmarked_state;
    return data;
}

Eigen::MatrixXd discriminant(const MarkovChain& chain) {
    if (!chain.is_reversible())
        throw ReversibilityError("discriminant requires a reversible chain");
    const Eigen::MatrixXd& p = chain.matrix();
    return p.cwiseProduct(p.transpose()).cwiseSqrt();
}

Eigen::MatrixXd discriminant(const InterpolatedChain& chain) {
    const Eigen::MatrixXd& m = chain.matrix();
    if (chain.s() < 1.0) {
        // Construction already certified detailed balance when the base chain
        // is reversible; reject the remaining non-reversible cases here.
        const Eigen::VectorXd& pi_s = chain.stationary();
        double worst = 0.0;
        for (int x = 0; x < chain.size(); ++x) {
            for (int y = x + 1; y < chain.size(); ++y) {
                worst = std::max(worst, std::abs(pi_s(x) * m(x, y) - pi_s(y) * m(y, x)));
            }
        }
        if (worst > kDetailedBalanceTol)
            throw ReversibilityError("interpolated chain is not reversible");
    }
    return m.cwiseProduct(m.transpose()).cwiseSqrt();
}

Eigen::MatrixXd discriminant_derivative(const InterpolatedChain& chain) {
    if (chain.s() >= 1.0)
        throw SingularityError("discriminant derivative is singular at s = 1");
    const int n = chain.size();
    Eigen::MatrixXd rest = Eigen::MatrixXd::Identity(n, n) - discriminant(chain);
    Eigen::MatrixXd anti = Eigen::MatrixXd::Zero(n, n);
    // {Pi_M, Id - D}: Pi_M selects marked rows on one side, marked columns on
    // the other.
    for (int x : chain.marked().members()) {
        anti.row(x) += rest.row(x);
        anti.col(x) += rest.col(x);
    }
    return anti / (2.0 * (1.0 - chain.s()));
}

Eigen::MatrixXd pseudo_resolvent(const SpectralData& spectral) {
    const int n = static_cast<int>(spectral.eigenvalues.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        double lambda = spectral.eigenvalues(k);
        if (lambda >= 1.0 - kTopGapTol) continue;
        a += spectral.eigenvectors.col(k) * spectral.eigenvectors.col(k).transpose() /
             (1.0 - lambda);
    }
    return a;
}

double hitting_time_matrix(const MarkovChain& chain, const MarkedSet& marked,
                           bool include_unmarked_mass) {
    if (marked.empty()) throw InvalidParameterError("hitting time needs a nonempty marked set");
    const int n = chain.size();
    auto unmarked = unmarked_indices(n, marked);
    if (unmarked.empty()) return 0.0;
    Eigen::MatrixXd d = discriminant(chain);
    const int u = static_cast<int>(unmarked.size());
    Eigen::MatrixXd block(u, u);
    for (int i = 0; i < u; ++i) {
        for (int j = 0; j < u; ++j) block(i, j) = d(unmarked[i], unmarked[j]);
    }
    ProjectionPair pair = projection_pair(chain.stationary(), marked);
    Eigen::VectorXd rhs(u);
    for (int i = 0; i < u; ++i) rhs(i) = pair.unmarked_state(unmarked[i]);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(u, u) - block;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw SingularityError("Id - D_UU is singular; marked set unreachable");
    double ht = rhs.dot(lu.solve(rhs));
    if (include_unmarked_mass) ht *= pair.p_unmarked;
    return ht;
}

double hitting_time_spectral(const InterpolatedChain& chain) {
    SpectralData data = spectral_data(chain);
    const int n = chain.size();
    int top_count = 0;
    for (int k = 0; k < n; ++k) {
        if (data.eigenvalues(k) >= 1.0 - kTopGapTol) ++top_count;
    }
    if (chain.s() < 1.0 && top_count > 1)
        throw ErgodicityError("top eigenvalue of D(s) is not simple");
    double ht = 0.0;
    for (int k = 0; k < n; ++k) {
        double lambda = data.eigenvalues(k);
        double overlap = data.unmarked_overlaps(k);
        if (lambda >= 1.0 - kTopGapTol) {
            // At s = 1 the extra 1-eigenvectors live on the marked block and
            // carry no overlap with |U>; anything else means HT diverges.
            if (k < n - 1 && std::abs(overlap) > 1e-8)
                throw ErgodicityError("degenerate top eigenvector overlaps |U>");
            continue;
        }
        ht += overlap * overlap / (1.0 - lambda);
    }
    return ht;
}

HtDerivativeReport ht_derivative_check(const MarkovChain& base, const MarkedSet& marked,
                                       double s, double step) {
    if (s <= 0.0 || s >= 1.0) throw DomainError("derivative check needs s in (0,1)");
    HtDerivativeReport report;
    report.s = s;
    double ht_s = hitting_time_spectral(InterpolatedChain(base, marked, s));
    double p_marked = base.marked_mass(marked);
    report.analytic = 2.0 * (1.0 - p_marked) / (1.0 - s * (1.0 - p_marked)) * ht_s;
    double hi = hitting_time_spectral(InterpolatedChain(base, marked, s + step));
    double lo = hitting_time_spectral(InterpolatedChain(base, marked, s - step));
    report.finite_difference = (hi - lo) / (2.0 * step);
    report.relative_error =
        std::abs(report.finite_difference - report.analytic) / std::abs(report.analytic);
    return report;
}

namespace {

// Cumulative rows for fast repeated sampling.
struct RowSampler {
    Eigen::MatrixXd cumulative;
    explicit RowSampler(const Eigen::MatrixXd& p) : cumulative(p.rows(), p.cols()) {
        for (int x = 0; x < p.rows(); ++x) {
            double acc = 0.0;
            for (int y = 0; y < p.cols(); ++y) {
                acc += p(x, y);
                cumulative(x, y) = acc;
            }
        }
    }
    int step(int x, double u) const {
        const int n = static_cast<int>(cumulative.cols());
        int lo = 0, hi = n - 1;
        double target = u * cumulative(x, n - 1);
        while (lo < hi) {
            int mid = (lo + hi) / 2;
            if (cumulative(x, mid) <= target)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }
};

int sample_from_pi(const Eigen::VectorXd& pi, double u) {
    double acc = 0.0;
    for (int x = 0; x + 1 < pi.size(); ++x) {
        acc += pi(x);
        if (u < acc) return x;
    }
    return static_cast<int>(pi.size()) - 1;
}

} // namespace

ClassicalSearchOutcome random_walk_search(const MarkovChain& chain, const MarkedSet& marked,
                                          long long max_steps, std::uint64_t seed) {
    if (max_steps < 0) throw InvalidParameterError("step budget must be nonnegative");
    Rng rng(seed);
    RowSampler sampler(chain.matrix());
    ClassicalSearchOutcome outcome;
    outcome.ledger.setup_calls = 1;
    int x = sample_from_pi(chain.stationary(), rng.uniform01());
    while (true) {
        outcome.ledger.check_calls += 1;
        if (marked.contains(x)) {
            outcome.found = x;
            return outcome;
        }
        if (outcome.steps >= max_steps) return outcome;
        x = sampler.step(x, rng.uniform01());
        outcome.ledger.update_calls += 1;
        outcome.steps += 1;
    }
}

MonteCarloEstimate monte_carlo_hitting_time(const MarkovChain& chain, const MarkedSet& marked,
                                            long long trials, std::uint64_t seed,
                                            long long step_cap) {
    if (trials < 1) throw InvalidParameterError("need at least one trial");
    if (marked.empty()) throw InvalidParameterError("marked set must be nonempty");
    MonteCarloEstimate estimate;
    estimate.trials = trials;
    if (marked.size() == chain.size()) return estimate; // absorbed at time 0 from any start

    Eigen::VectorXd pi_unmarked = chain.stationary();
    for (int x : marked.members()) pi_unmarked(x) = 0.0;
    pi_unmarked /= pi_unmarked.sum();

    Rng rng(seed);
    RowSampler sampler(chain.matrix());
    double sum = 0.0, sum_sq = 0.0;
    for (long long trial = 0; trial < trials; ++trial) {
        int x = sample_from_pi(pi_unmarked, rng.uniform01());
        long long steps = 0;
        while (!marked.contains(x) && steps < step_cap) {
            x = sampler.step(x, rng.uniform01());
            ++steps;
        }
        if (steps >= step_cap && !marked.contains(x)) {
            estimate.capped_trials += 1;
            estimate.flagged = true;
        }
        sum += static_cast<double>(steps);
        sum_sq += static_cast<double>(steps) * static_cast<double>(steps);
    }
    estimate.mean = sum / static_cast<double>(trials);
    double variance =
        std::max(0.0, sum_sq / static_cast<double>(trials) - estimate.mean * estimate.mean);
    estimate.std_error = std::sqrt(variance / static_cast<double>(trials));
    return estimate;
}

MarkovChain random_reversible_chain(int n, Rng& rng, bool lazy) {
    if (n < 2) throw InvalidParameterError("need at least two states");
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
    // Random spanning tree keeps the chain irreducible.
    for (int v = 1; v < n; ++v) {
        int u = rng.uniform_int(0, v - 1);
        double w = 0.2 + 0.8 * rng.uniform01();
        weights(u, v) = weights(v, u) = w;
    }
    // Extra symmetric edges for variety.
    int extra = rng.uniform_int(0, n);
    for (int e = 0; e < extra; ++e) {
        int u = rng.uniform_int(0, n - 1);
        int v = rng.uniform_int(0, n - 1);
        if (u == v) continue;
        double w = 0.2 + 0.8 * rng.uniform01();
        weights(u, v) = weights(v, u) = w;
    }
    // Self-loop weight guarantees aperiodicity.
    for (int v = 0; v < n; ++v) weights(v, v) = 0.05 + 0.45 * rng.uniform01();

    Eigen::VectorXd strength = weights.rowwise().sum();
    Eigen::MatrixXd p = weights.array().colwise() / strength.array();
    Eigen::VectorXd pi = strength / strength.sum();
    MarkovChain chain = MarkovChain::from_matrix_with_stationary(std::move(p), std::move(pi));
    return lazy ? lazify(chain) : chain;
}

Eigen::MatrixXd random_stochastic_matrix(int n, Rng& rng, double zero_fraction) {
    if (n < 2) throw InvalidParameterError("need at least two states");
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::MatrixXd m(n, n);
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                bool keep = rng.uniform01() >= zero_fraction;
                m(x, y) = keep ? 0.05 + rng.uniform01() : 0.0;
            }
            // Half the rows lose their self-loop to exercise p_xx = 0 paths.
            if (rng.uniform01() < 0.5) m(x, x) = 0.0;
            // Directed cycle keeps the matrix irreducible.
            m(x, (x + 1) % n) = std::max(m(x, (x + 1) % n), 0.1);
        }
        m(0, 0) = std::max(m(0, 0), 0.1); // one self-loop suffices for aperiodicity
        for (int x = 0; x < n; ++x) m.row(x) /= m.row(x).sum();
        if (check_ergodicity(m).ok()) return m;
    }
    throw ErgodicityError("failed to generate an ergodic random matrix");
}

MarkedSet random_marked_set(const MarkovChain& chain, Rng& rng, double max_mass) {
    const int n = chain.size();
    for (int attempt = 0; attempt < 256; ++attempt) {
        int count = rng.uniform_int(1, std::max(1, n / 2));
        std::vector<int> members;
        for (int c = 0; c < count; ++c) members.push_back(rng.uniform_int(0, n - 1));
        MarkedSet candidate(std::move(members), n);
        if (!candidate.empty() && candidate.size() < n &&
            chain.marked_mass(candidate) <= max_mass)
            return candidate;
    }
    // Fall back to the lightest single vertex.
    int best = 0;
    for (int x = 1; x < n; ++x) {
        if (chain.stationary()(x) < chain.stationary()(best)) best = x;
    }
    return MarkedSet({best}, n);
}

} // namespace qws
