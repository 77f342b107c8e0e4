#include "qws/search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qws/errors.hpp"

namespace qws {

namespace {

constexpr double kAssertSlack = 1e-12;

void check_bits(int t, int cap = kPhaseBitsCap) {
    if (t < 0) throw InvalidParameterError("bit count must be nonnegative");
    if (t > cap) {
        std::ostringstream oss;
        oss << "phase estimation with t = " << t << " exceeds the capacity t <= " << cap;
        throw CapacityError(oss.str());
    }
}

std::complex<double> polar_signed(double magnitude, double angle) {
    if (magnitude < 0.0) return std::polar(-magnitude, angle + M_PI);
    return std::polar(magnitude, angle);
}

} // namespace

double delta_magnitude(double phi, int t) {
    check_bits(t);
    double half = 0.5 * phi;
    double denom = std::sin(half);
    if (std::abs(denom) < 1e-14) return 1.0; // phi = 0 (mod 2 pi): exact phase
    double size = std::ldexp(1.0, t);
    return std::abs(std::sin(std::ldexp(phi, t - 1)) / (size * denom));
}

std::complex<double> phase_kernel(double delta, int t) {
    check_bits(t);
    double half = 0.5 * delta;
    double denom = std::sin(half);
    double size = std::ldexp(1.0, t);
    if (std::abs(denom) < 1e-14) return {1.0, 0.0};
    double ratio = std::sin(std::ldexp(delta, t - 1)) / (size * denom);
    return polar_signed(ratio, half * (size - 1.0));
}

namespace {

// Input expansion over the walk eigenbasis: one complex coefficient per
// psi+_k, psi-_k and the stationary line.
struct SpectralInput {
    Eigen::VectorXcd c_plus;
    Eigen::VectorXcd c_minus;
    std::complex<double> c_top = 0.0;
};

SpectralInput expand_x_register(const WalkSpectralForm& form, const Eigen::VectorXd& input) {
    if (input.size() != form.size())
        throw InvalidParameterError("input dimension does not match the walk");
    SpectralInput si;
    const int blocks = form.rotation_count();
    si.c_plus.resize(blocks);
    si.c_minus.resize(blocks);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < blocks; ++j) {
        double u =
            form.spectral().eigenvectors.col(form.rotation_eigen_index(j)).dot(input);
        si.c_plus(j) = u * inv_sqrt2;
        si.c_minus(j) = u * inv_sqrt2;
    }
    si.c_top = form.spectral().eigenvectors.col(form.top_index()).dot(input);
    return si;
}

// Every observable here is a quadratic form sum_{j',j} W_{j'j} <psi_j'|Pi|psi_j>
// over a Hermitian ancilla weight W. Since <a|Pi_x|b> vanishes and the a/b
// projections reduce to n-dimensional data, the form collapses to four real
// tables evaluated per vertex:
//   value(x) = 1/2 v_x^T s1 v_x + 1/2 sum(B^x o s2) + h(x) <v_x, r> + top h(x)^2
// with v_x the rotation eigenvector entries at x, B^x the residual Gram and
// h(x) the stationary entry.
struct VertexWeights {
    Eigen::MatrixXd s1;
    Eigen::MatrixXd s2;
    Eigen::VectorXd r;
    double top = 0.0;

    double evaluate(const WalkSpectralForm& form, int x) const {
        const int blocks = form.rotation_count();
        Eigen::VectorXd vx(blocks);
        for (int j = 0; j < blocks; ++j) vx(j) = form.vertex_component(j, x);
        double h = form.top_vertex_component(x);
        double value = 0.5 * vx.dot(s1 * vx);
        value += 0.5 * (form.residual_gram(x).array() * s2.array()).sum();
        value += h * vx.dot(r);
        value += top * h * h;
        return value;
    }
};

// Weight tables for the total vertex marginal: W_{j'j} equals
// conj(c_j') c_j <anc_j', anc_j>, with the ancilla Gram given by the
// geometric kernel of the phase difference.
VertexWeights total_weights(const WalkSpectralForm& form, const SpectralInput& si, int t) {
    const int blocks = form.rotation_count();
    VertexWeights w;
    w.s1.resize(blocks, blocks);
    w.s2.resize(blocks, blocks);
    w.r.resize(blocks);
    for (int j = 0; j < blocks; ++j) {   // j indexes the bra block k'
        for (int l = 0; l < blocks; ++l) { // l indexes the ket block k
            std::complex<double> pp =
                std::conj(si.c_plus(j)) * si.c_plus(l) * phase_kernel(form.phi(l) - form.phi(j), t);
            std::complex<double> pm = std::conj(si.c_plus(j)) * si.c_minus(l) *
                                      phase_kernel(-form.phi(l) - form.phi(j), t);
            std::complex<double> mp = std::conj(si.c_minus(j)) * si.c_plus(l) *
                                      phase_kernel(form.phi(l) + form.phi(j), t);
            std::complex<double> mm = std::conj(si.c_minus(j)) * si.c_minus(l) *
                                      phase_kernel(form.phi(j) - form.phi(l), t);
            w.s1(j, l) = std::real(pp + pm + mp + mm);
            w.s2(j, l) = std::real(pp - pm - mp + mm);
        }
        std::complex<double> cross =
            std::conj(si.c_top) * (si.c_plus(j) * phase_kernel(form.phi(j), t) +
                                   si.c_minus(j) * phase_kernel(-form.phi(j), t));
        w.r(j) = std::sqrt(2.0) * std::real(cross);
    }
    w.top = std::norm(si.c_top);
    return w;
}

// Weight tables for one ancilla outcome omega_m: the weight is rank one,
// W_{j'j} = conj(w_j') w_j with w_j = c_j kernel(phi_j - omega).
VertexWeights outcome_weights(const WalkSpectralForm& form, const SpectralInput& si, int t,
                              double omega) {
    const int blocks = form.rotation_count();
    Eigen::VectorXcd w1(blocks), w2(blocks);
    for (int j = 0; j < blocks; ++j) {
        std::complex<double> plus = si.c_plus(j) * phase_kernel(form.phi(j) - omega, t);
        std::complex<double> minus = si.c_minus(j) * phase_kernel(-form.phi(j) - omega, t);
        w1(j) = plus + minus;
        w2(j) = plus - minus;
    }
    std::complex<double> w_top = si.c_top * phase_kernel(-omega, t);

    VertexWeights w;
    w.s1 = (w1.conjugate() * w1.transpose()).real();
    w.s2 = (w2.conjugate() * w2.transpose()).real();
    w.r = std::sqrt(2.0) * (std::conj(w_top) * w1).real();
    w.top = std::norm(w_top);
    return w;
}

PhaseEstimationOutput spectral_output_from_components(const WalkSpectralForm& walk, int t,
                                                      const SpectralInput& si) {
    PhaseEstimationOutput out;
    out.t = t;
    out.n = walk.size();
    const int blocks = walk.rotation_count();

    for (int j = 0; j < blocks; ++j) {
        out.phases.push_back(walk.phi(j));
        out.coefficients.push_back(si.c_plus(j));
    }
    for (int j = 0; j < blocks; ++j) {
        out.phases.push_back(-walk.phi(j));
        out.coefficients.push_back(si.c_minus(j));
    }
    out.phases.push_back(0.0);
    out.coefficients.push_back(si.c_top);

    out.total_probability =
        si.c_plus.squaredNorm() + si.c_minus.squaredNorm() + std::norm(si.c_top);

    for (int j = 0; j < blocks; ++j) {
        double d = delta_magnitude(walk.phi(j), t);
        out.prob_anc_zero += (std::norm(si.c_plus(j)) + std::norm(si.c_minus(j))) * d * d;
    }
    out.prob_anc_zero += std::norm(si.c_top);

    VertexWeights marginal = total_weights(walk, si, t);
    VertexWeights zero = outcome_weights(walk, si, t, 0.0);
    for (int x : walk.marked().members()) {
        double px = std::max(0.0, marginal.evaluate(walk, x));
        double px0 = std::max(0.0, zero.evaluate(walk, x));
        out.marked_vertices.push_back(x);
        out.vertex_marginal.push_back(px);
        out.vertex_and_anc_zero.push_back(px0);
        out.marked_marginal += px;
        out.prob_marked_and_anc_zero += px0;
    }

    if (t <= 12) {
        long long size = 1LL << t;
        out.ancilla_distribution.resize(size);
        for (long long m = 0; m < size; ++m) {
            double omega = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(size);
            double mass = std::norm(si.c_top) * std::norm(phase_kernel(-omega, t));
            for (int j = 0; j < blocks; ++j) {
                double dp = delta_magnitude(walk.phi(j) - omega, t);
                double dm = delta_magnitude(-walk.phi(j) - omega, t);
                mass += std::norm(si.c_plus(j)) * dp * dp + std::norm(si.c_minus(j)) * dm * dm;
            }
            out.ancilla_distribution(m) = mass;
        }
    }

    bool full_coverage = true;
    for (int x = 0; x < walk.size() && full_coverage; ++x)
        full_coverage = walk.has_residual_gram(x);
    if (full_coverage && t <= 12 && walk.size() <= 16) {
        long long size = 1LL << t;
        out.vertex_table.resize(size, walk.size());
        for (long long m = 0; m < size; ++m) {
            double omega = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(size);
            VertexWeights wm = outcome_weights(walk, si, t, omega);
            for (int x = 0; x < walk.size(); ++x)
                out.vertex_table(m, x) = std::max(0.0, wm.evaluate(walk, x));
        }
        out.has_vertex_table = true;
    }
    return out;
}

} // namespace

PhaseEstimationOutput phase_estimation_spectral(const WalkSpectralForm& walk, int t,
                                                const Eigen::VectorXd& x_register_input) {
    check_bits(t);
    return spectral_output_from_components(walk, t, expand_x_register(walk, x_register_input));
}

PhaseEstimationOutput phase_estimation_spectral_pair(const WalkSpectralForm& walk, int t,
                                                     const Eigen::VectorXcd& pair_input) {
    check_bits(t);
    if (!walk.materialized())
        throw InvalidParameterError("pair-space inputs need a materialized spectral form");
    if (pair_input.size() != static_cast<long>(walk.size()) * walk.size())
        throw InvalidParameterError("input dimension does not match the pair space");

    const int blocks = walk.rotation_count();
    SpectralInput si;
    si.c_plus.resize(blocks);
    si.c_minus.resize(blocks);
    Eigen::VectorXcd residual = pair_input;
    for (int j = 0; j < blocks; ++j) {
        Eigen::VectorXcd plus = walk.eigenvector_plus(j);
        Eigen::VectorXcd minus = walk.eigenvector_minus(j);
        si.c_plus(j) = plus.dot(pair_input);
        si.c_minus(j) = minus.dot(pair_input);
        residual -= si.c_plus(j) * plus + si.c_minus(j) * minus;
    }
    si.c_top = walk.stationary_pair().cast<std::complex<double>>().dot(pair_input);
    residual -= si.c_top * walk.stationary_pair().cast<std::complex<double>>();
    if (residual.norm() > 1e-9)
        throw InvalidParameterError("input has a component outside the walk space");
    return spectral_output_from_components(walk, t, si);
}

PhaseEstimationOutput phase_estimation_dense(const PairSpaceOperator& walk, int t,
                                             const Eigen::VectorXcd& pair_input,
                                             const MarkedSet& marked) {
    if (walk.n > kDensePhaseVertexCap || t > kDensePhaseBitsCap) {
        std::ostringstream oss;
        oss << "dense phase estimation supports n <= " << kDensePhaseVertexCap << " and t <= "
            << kDensePhaseBitsCap;
        throw CapacityError(oss.str());
    }
    check_bits(t);
    const int n = walk.n;
    const int dim = n * n;
    if (pair_input.size() != dim) throw InvalidParameterError("input dimension mismatch");
    const long long size = 1LL << t;

    Eigen::MatrixXcd state = Eigen::MatrixXcd::Zero(size, dim);
    state.row(0) = pair_input.transpose();

    // Hadamard layer on the ancilla register.
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int q = 0; q < t; ++q) {
        long long bit = 1LL << q;
        for (long long a = 0; a < size; ++a) {
            if (a & bit) continue;
            Eigen::RowVectorXcd lo = state.row(a);
            Eigen::RowVectorXcd hi = state.row(a | bit);
            state.row(a) = (lo + hi) * inv_sqrt2;
            state.row(a | bit) = (lo - hi) * inv_sqrt2;
        }
    }

    // Controlled W^(2^q) ladder.
    Eigen::MatrixXd power = walk.matrix;
    for (int q = 0; q < t; ++q) {
        long long bit = 1LL << q;
        for (long long a = 0; a < size; ++a) {
            if (a & bit) state.row(a) = (power * state.row(a).transpose()).transpose();
        }
        if (q + 1 < t) power = power * power;
    }

    // Inverse Fourier transform on the ancilla register.
    Eigen::MatrixXcd qft_dag(size, size);
    for (long long m = 0; m < size; ++m) {
        for (long long l = 0; l < size; ++l) {
            double angle = -2.0 * M_PI * static_cast<double>(m * l) / static_cast<double>(size);
            qft_dag(m, l) = std::polar(1.0 / std::sqrt(static_cast<double>(size)), angle);
        }
    }
    state = qft_dag * state;

    PhaseEstimationOutput out;
    out.t = t;
    out.n = n;
    out.has_dense_state = true;
    out.dense_state = state;
    out.total_probability = state.squaredNorm();
    out.prob_anc_zero = state.row(0).squaredNorm();

    out.vertex_table.resize(size, n);
    for (long long m = 0; m < size; ++m) {
        for (int x = 0; x < n; ++x)
            out.vertex_table(m, x) = state.row(m).segment(x * n, n).squaredNorm();
    }
    out.has_vertex_table = true;

    out.ancilla_distribution = out.vertex_table.rowwise().sum();
    for (int x : marked.members()) {
        double px = out.vertex_table.col(x).sum();
        double px0 = state.row(0).segment(x * n, n).squaredNorm();
        out.marked_vertices.push_back(x);
        out.vertex_marginal.push_back(px);
        out.vertex_and_anc_zero.push_back(px0);
        out.marked_marginal += px;
        out.prob_marked_and_anc_zero += px0;
    }
    return out;
}

Eigen::VectorXcd conditioned_walk_state(const WalkSpectralForm& walk, int t,
                                        const Eigen::VectorXd& x_register_input, long long m,
                                        double* prob) {
    check_bits(t);
    if (!walk.materialized())
        throw InvalidParameterError("conditioned states need a materialized spectral form");
    long long size = 1LL << t;
    if (m < 0 || m >= size) throw InvalidParameterError("ancilla outcome out of range");
    SpectralInput si = expand_x_register(walk, x_register_input);
    double omega = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(size);

    Eigen::VectorXcd state = si.c_top * phase_kernel(-omega, t) *
                             walk.stationary_pair().cast<std::complex<double>>();
    for (int j = 0; j < walk.rotation_count(); ++j) {
        std::complex<double> cp = si.c_plus(j) * phase_kernel(walk.phi(j) - omega, t);
        std::complex<double> cm = si.c_minus(j) * phase_kernel(-walk.phi(j) - omega, t);
        state += cp * walk.eigenvector_plus(j) + cm * walk.eigenvector_minus(j);
    }
    double mass = state.squaredNorm();
    if (prob) *prob = mass;
    if (mass > 0.0) state /= std::sqrt(mass);
    return state;
}

SearchEngine::SearchEngine(const MarkovChain& chain, const MarkedSet& marked, double p_star)
    : chain_(chain), marked_(marked), p_star_(p_star) {
    if (marked.empty()) throw InvalidParameterError("search needs a nonempty marked set");
    s_ = balanced_s(p_star); // domain-checks p_star
    p_marked_ = chain.marked_mass(marked);
    for (int x : marked.members()) marked_start_weights_.push_back(chain.stationary()(x));

    if (p_marked_ < 1.0 - 1e-15) {
        InterpolatedChain interp(chain_, marked_, s_);
        form_.emplace(interp, false);
        ht_s_ = 0.0;
        for (int j = 0; j < form_->rotation_count(); ++j) {
            double alpha = form_->unmarked_overlap_rotation(j);
            ht_s_ += alpha * alpha / (1.0 - form_->lambda(j));
        }
        u_register_ = projection_pair(chain_.stationary(), marked_).unmarked_state;
        double sin2 = split_sin2(p_marked_, s_);
        eps1_ = sin2 * (1.0 - sin2);
    }
}

const PhaseEstimationOutput& SearchEngine::phase_output(int t) const {
    auto it = memo_.find(t);
    if (it != memo_.end()) return it->second;
    if (!form_) throw InvalidParameterError("no walk branch: every vertex is marked");
    auto [ins, ok] = memo_.emplace(t, phase_estimation_spectral(*form_, t, u_register_));
    return ins->second;
}

SearchOutcome SearchEngine::run_exact(int t) const {
    check_bits(t);
    SearchOutcome o;
    o.mode = SearchMode::Exact;
    o.t = t;
    o.p_star = p_star_;
    o.s = s_;
    o.p_marked = p_marked_;
    if (!form_) {
        o.p_success_exact = 1.0;
        o.ledger.setup_calls = 1;
        o.ledger.check_calls = 1;
        return o;
    }
    const PhaseEstimationOutput& pe = phase_output(t);
    o.marked_marginal = pe.marked_marginal;
    o.prob_anc_zero = pe.prob_anc_zero;
    o.p_success_exact =
        std::clamp(p_marked_ + (1.0 - p_marked_) * pe.marked_marginal, 0.0, 1.0);
    o.eps1_term = eps1_;
    for (int j = 0; j < form_->rotation_count(); ++j) {
        double alpha = form_->unmarked_overlap_rotation(j);
        double d = delta_magnitude(form_->phi(j), t);
        o.eps2_term += alpha * alpha * d * d;
    }
    double four_t = std::ldexp(1.0, 2 * t);
    o.eps2_ht_bound = 0.5 * M_PI * M_PI * ht_s_ / four_t;
    o.thm4_preconditions =
        eps1_ >= kDefaultEps1 - kAssertSlack &&
        std::ldexp(1.0, t) >= M_PI * std::sqrt(ht_s_ / (2.0 * kDefaultEps2)) - kAssertSlack;

    if (o.marked_marginal < o.eps1_term - o.eps2_term - kAssertSlack) {
        std::ostringstream oss;
        oss << "success bound violated: marginal " << o.marked_marginal << " < "
            << o.eps1_term - o.eps2_term;
        throw VerificationError(oss.str());
    }
    if (o.thm4_preconditions &&
        o.p_success_exact < kDefaultEps1 - kDefaultEps2 - kAssertSlack) {
        throw VerificationError("success probability fell below the guaranteed 1/20");
    }
    o.ledger = expected_search_ledger(t);
    return o;
}

SearchOutcome SearchEngine::run_sample(int t, Rng& rng) const {
    check_bits(t);
    SearchOutcome o;
    o.mode = SearchMode::Sample;
    o.t = t;
    o.p_star = p_star_;
    o.s = s_;
    o.p_marked = p_marked_;
    o.seed = rng.seed();
    o.ledger.setup_calls = 1;
    o.ledger.check_calls = 1; // first check-and-measure

    if (form_) {
        const PhaseEstimationOutput& pe = phase_output(t);
        o.p_success_exact =
            std::clamp(p_marked_ + (1.0 - p_marked_) * pe.marked_marginal, 0.0, 1.0);
        o.marked_marginal = pe.marked_marginal;
        o.prob_anc_zero = pe.prob_anc_zero;
    } else {
        o.p_success_exact = 1.0;
    }

    if (rng.uniform01() < p_marked_) {
        int idx = rng.sample_discrete(marked_start_weights_);
        o.found = marked_.members()[idx];
        return o;
    }

    const PhaseEstimationOutput& pe = phase_output(t);
    o.ran_phase_estimation = true;
    o.ledger += expected_phase_estimation_ledger(t);
    o.ledger.check_calls += 1; // second check-and-measure

    double pm0 = std::max(0.0, pe.prob_marked_and_anc_zero);
    double pm = std::max(pm0, pe.marked_marginal);
    double p0 = std::max(pm0, pe.prob_anc_zero);
    double u = rng.uniform01();
    bool marked_outcome;
    if (u < pm0) {
        marked_outcome = true;
        o.anc_zero_outcome = true;
    } else if (u < pm) {
        marked_outcome = true;
        o.anc_zero_outcome = false;
    } else if (u < pm + (p0 - pm0)) {
        marked_outcome = false;
        o.anc_zero_outcome = true;
    } else {
        marked_outcome = false;
        o.anc_zero_outcome = false;
    }
    if (marked_outcome) {
        std::vector<double> weights(pe.marked_vertices.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = o.anc_zero_outcome
                             ? pe.vertex_and_anc_zero[i]
                             : std::max(0.0, pe.vertex_marginal[i] - pe.vertex_and_anc_zero[i]);
        }
        o.found = pe.marked_vertices[rng.sample_discrete(weights)];
    }
    return o;
}

SearchOutcome quantum_walk_search(const MarkovChain& chain, const MarkedSet& marked,
                                  double p_star, int t, SearchMode mode, std::uint64_t seed) {
    SearchEngine engine(chain, marked, p_star);
    if (mode == SearchMode::Exact) return engine.run_exact(t);
    Rng rng(seed);
    return engine.run_sample(t, rng);
}

LowerBoundTerms success_lower_bound(const MarkovChain& chain, const MarkedSet& marked,
                                    double p_star, int t) {
    SearchEngine engine(chain, marked, p_star);
    SearchOutcome o = engine.run_exact(t);
    return {o.eps1_term, o.eps2_term, o.eps2_ht_bound, engine.ht_s()};
}

namespace {

std::string format_auto_trace(const std::vector<AutoLevelTrace>& trace) {
    std::ostringstream oss;
    for (const auto& lvl : trace) {
        oss << "t=" << lvl.t << " runs=" << lvl.runs << " p=" << lvl.p_success_exact
            << " updates=" << lvl.ledger.update_calls << "\n";
    }
    return oss.str();
}

} // namespace

AutoSearchOutcome quantum_walk_search_auto(const MarkovChain& chain, const MarkedSet& marked,
                                           double p_star, int repetitions, SearchMode mode,
                                           std::uint64_t seed, int t_cap) {
    if (repetitions < 1) throw InvalidParameterError("need at least one repetition per level");
    if (t_cap < 1 || t_cap > kPhaseBitsCap)
        throw InvalidParameterError("bit-count cap outside [1, 24]");
    SearchEngine engine(chain, marked, p_star);
    AutoSearchOutcome outcome;
    outcome.mode = mode;
    outcome.seed = seed;
    Rng root(seed);
    std::uint64_t counter = 0;

    for (int t = 1; t <= t_cap; ++t) {
        AutoLevelTrace level;
        level.t = t;
        if (mode == SearchMode::Exact) {
            SearchOutcome run = engine.run_exact(t);
            level.p_success_exact = run.p_success_exact;
            level.runs = repetitions;
            level.ledger = run.ledger;
            outcome.total_ledger += run.ledger;
            outcome.trace.push_back(level);
            if (run.p_success_exact >= kDefaultEps1 - kDefaultEps2) {
                outcome.t_final = t;
                return outcome;
            }
            continue;
        }
        for (int r = 0; r < repetitions; ++r) {
            Rng sub = root.derive(counter++);
            SearchOutcome run = engine.run_sample(t, sub);
            level.runs += 1;
            level.ledger += run.ledger;
            outcome.total_ledger += run.ledger;
            level.p_success_exact = run.p_success_exact;
            if (run.found) {
                level.found = true;
                outcome.found = run.found;
                outcome.t_final = t;
                outcome.trace.push_back(level);
                return outcome;
            }
        }
        outcome.trace.push_back(level);
    }
    throw BudgetExceededError("doubling loop reached the bit-count cap without finding",
                              format_auto_trace(outcome.trace));
}

PminSearchOutcome search_with_pmin(const MarkovChain& chain, const MarkedSet& marked,
                                   double p_min, std::optional<double> ht_max, int repetitions,
                                   SearchMode mode, std::uint64_t seed) {
    if (p_min <= 0.0 || p_min > 0.5) throw DomainError("p_min outside (0, 1/2]");
    if (ht_max && *ht_max < 1.0) throw InvalidParameterError("ht_max must be at least 1");
    PminSearchOutcome outcome;
    outcome.seed = seed;
    outcome.p_marked = chain.marked_mass(marked);
    outcome.precondition_broken = p_min > outcome.p_marked + 1e-15;

    const int l_max = std::max(1, static_cast<int>(std::floor(std::log2(1.0 / p_min))));
    std::vector<double> candidates;
    for (int l = 1; l <= l_max; ++l) candidates.push_back((2.0 / 3.0) * std::ldexp(1.0, -l));
    std::vector<SearchEngine> engines;
    engines.reserve(candidates.size());
    for (double p_star : candidates) engines.emplace_back(chain, marked, p_star);

    int fixed_t = -1;
    if (ht_max) fixed_t = std::max(0, static_cast<int>(std::ceil(std::log2(std::sqrt(*ht_max)))));

    if (mode == SearchMode::Exact) {
        for (int l = 1; l <= l_max; ++l) {
            const SearchEngine& engine = engines[l - 1];
            PminCandidateTrace rec;
            rec.l = l;
            rec.p_star = candidates[l - 1];
            rec.s = engine.s();
            if (ht_max) {
                rec.t = fixed_t;
                SearchOutcome run = engine.run_exact(fixed_t);
                rec.p_success_exact = run.p_success_exact;
                outcome.total_ledger += run.ledger;
            } else {
                for (int t = 1; t <= kPhaseBitsCap; ++t) {
                    SearchOutcome run = engine.run_exact(t);
                    rec.t = t;
                    rec.p_success_exact = run.p_success_exact;
                    outcome.total_ledger += run.ledger;
                    if (run.p_success_exact >= kDefaultEps1 - kDefaultEps2) break;
                }
            }
            rec.found = rec.p_success_exact >= kDefaultEps1 - kDefaultEps2;
            outcome.trace.push_back(rec);
        }
        return outcome;
    }

    Rng root(seed);
    std::uint64_t counter = 0;
    auto run_batch = [&](int l, int t) -> bool {
        const SearchEngine& engine = engines[l - 1];
        PminCandidateTrace rec;
        rec.l = l;
        rec.p_star = candidates[l - 1];
        rec.s = engine.s();
        rec.t = t;
        for (int r = 0; r < repetitions; ++r) {
            Rng sub = root.derive(counter++);
            SearchOutcome run = engine.run_sample(t, sub);
            outcome.total_ledger += run.ledger;
            rec.p_success_exact = run.p_success_exact;
            if (run.found) {
                rec.found = true;
                outcome.found = run.found;
                outcome.trace.push_back(rec);
                return true;
            }
        }
        outcome.trace.push_back(rec);
        return false;
    };

    if (ht_max) {
        for (int sweep = 0; sweep < kPhaseBitsCap; ++sweep) {
            for (int l = 1; l <= l_max; ++l) {
                if (run_batch(l, fixed_t)) return outcome;
            }
        }
    } else {
        for (int t = 1; t <= kPhaseBitsCap; ++t) {
            for (int l = 1; l <= l_max; ++l) {
                if (run_batch(l, t)) return outcome;
            }
        }
    }
    std::ostringstream oss;
    for (const auto& rec : outcome.trace)
        oss << "l=" << rec.l << " p*=" << rec.p_star << " t=" << rec.t << "\n";
    throw BudgetExceededError("candidate sweep exhausted its budget", oss.str());
}

HtmaxSearchOutcome search_with_htmax(const MarkovChain& chain, const MarkedSet& marked,
                                     double ht_max, int repetitions_per_probe, SearchMode mode,
                                     std::uint64_t seed) {
    if (ht_max < 1.0) throw InvalidParameterError("ht_max must be at least 1");
    if (repetitions_per_probe < 1) throw InvalidParameterError("need at least one probe run");
    const int t = std::max(0, static_cast<int>(std::ceil(std::log2(std::sqrt(ht_max)))));
    constexpr int kDepthCap = 30;  // ceil(log2(1 / p_floor)) with p_floor = 2^-30
    constexpr int kRetriesPerLevel = 3;

    HtmaxSearchOutcome outcome;
    outcome.seed = seed;
    Rng root(seed);
    std::uint64_t counter = 0;

    std::map<double, SearchEngine> engines;
    auto engine_at = [&](double p_star) -> const SearchEngine& {
        auto it = engines.find(p_star);
        if (it == engines.end())
            it = engines.emplace(p_star, SearchEngine(chain, marked, p_star)).first;
        return it->second;
    };

    struct Interval {
        double a, b;
    };
    std::vector<Interval> stack{{0.0, 1.0}};
    std::vector<int> retries(kDepthCap, 0);

    while (true) {
        int depth = static_cast<int>(stack.size()) - 1;
        if (depth >= kDepthCap) {
            // Bounded backtracking: revisit the deepest level with retry
            // budget left and probe it again with fresh randomness.
            int back = kDepthCap - 1;
            while (back >= 0 && retries[back] >= kRetriesPerLevel) --back;
            if (back < 0) {
                std::ostringstream oss;
                for (const auto& rec : outcome.trace)
                    oss << "depth=" << rec.depth << " p*=" << rec.p_star << " decision="
                        << rec.decision << "\n";
                throw BudgetExceededError("dichotomy exhausted depth and retries", oss.str());
            }
            retries[back] += 1;
            for (int d = back + 1; d < kDepthCap; ++d) retries[d] = 0;
            stack.resize(back + 1);
            depth = back;
        }
        Interval iv = stack.back();
        double p_star = std::min(0.5, 0.5 * (iv.a + iv.b));
        const SearchEngine& engine = engine_at(p_star);

        ProbeRecord rec;
        rec.depth = depth;
        rec.p_star = p_star;
        rec.t = t;

        bool minority;
        if (mode == SearchMode::Exact) {
            SearchOutcome run = engine.run_exact(t);
            outcome.total_ledger += run.ledger;
            rec.runs = 1;
            rec.p_success_exact = run.p_success_exact;
            rec.prob_anc_zero = run.prob_anc_zero;
            if (run.p_success_exact >= kDefaultEps1 - kDefaultEps2) {
                rec.found = true;
                rec.decision = 'f';
                outcome.trace.push_back(rec);
                return outcome;
            }
            minority = run.prob_anc_zero < 0.5;
        } else {
            for (int r = 0; r < repetitions_per_probe; ++r) {
                Rng sub = root.derive(counter++);
                SearchOutcome run = engine.run_sample(t, sub);
                outcome.total_ledger += run.ledger;
                rec.runs += 1;
                rec.p_success_exact = run.p_success_exact;
                if (run.ran_phase_estimation) {
                    rec.walk_runs += 1;
                    if (run.anc_zero_outcome) rec.zero_outcomes += 1;
                }
                if (run.found) {
                    rec.found = true;
                    rec.decision = 'f';
                    outcome.found = run.found;
                    outcome.trace.push_back(rec);
                    return outcome;
                }
            }
            minority = 2 * rec.zero_outcomes < rec.walk_runs;
        }
        rec.decision = minority ? 'a' : 'b';
        outcome.trace.push_back(rec);
        if (minority)
            stack.push_back({p_star, iv.b});
        else
            stack.push_back({iv.a, p_star});
    }
}

Fact4WindowReport fact4_window_check(double p_marked, double eps1, int grid_points) {
    if (eps1 <= 0.0 || eps1 > 0.25) throw DomainError("eps1 outside (0, 1/4]");
    if (p_marked <= 0.0 || p_marked > 0.5) throw DomainError("marked mass outside (0, 1/2]");
    if (grid_points < 2) throw InvalidParameterError("need at least two grid points");
    Fact4WindowReport report;
    report.p_marked = p_marked;
    report.eps1 = eps1;
    double root = std::sqrt(eps1);
    report.window_lo = 2.0 * root * p_marked;
    report.window_hi = 2.0 * (1.0 - root) * p_marked;
    report.min_value = 1.0;
    for (int i = 0; i < grid_points; ++i) {
        double frac = grid_points == 1 ? 0.0
                                       : static_cast<double>(i) / (grid_points - 1);
        double p_star = report.window_lo + frac * (report.window_hi - report.window_lo);
        double sin2 = split_sin2_for_target(p_marked, p_star);
        double value = sin2 * (1.0 - sin2);
        report.grid.push_back(p_star);
        report.values.push_back(value);
        report.min_value = std::min(report.min_value, value);
    }
    double sin2_hi = split_sin2_for_target(p_marked, report.window_hi);
    double sin2_lo = split_sin2_for_target(p_marked, report.window_lo);
    report.endpoint_sin_ok = std::sqrt(sin2_hi) >= root - kAssertSlack;
    report.endpoint_cos_ok = std::sqrt(1.0 - sin2_lo) >= root - kAssertSlack;
    report.pass = report.min_value >= eps1 - kAssertSlack && report.endpoint_sin_ok &&
                  report.endpoint_cos_ok;
    return report;
}

} // namespace qws
