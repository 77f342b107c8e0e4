#include "qws/circuit.hpp"

#include <cmath>
#include <sstream>

#include "qws/errors.hpp"
#include "qws/szegedy.hpp"

namespace qws {

AncillaRegisterState::AncillaRegisterState(int n)
    : n_(n), amps_(Eigen::VectorXcd::Zero(4 * n * n)) {
    if (n < 1) throw InvalidParameterError("register needs a positive vertex count");
}

AncillaRegisterState AncillaRegisterState::vertex_basis(int n, int x) {
    if (x < 0 || x >= n) throw InvalidParameterError("basis vertex out of range");
    AncillaRegisterState state(n);
    state.amp(x, 0, 0, 0) = 1.0;
    return state;
}

double AncillaRegisterState::ancilla_zero_fidelity() const {
    double mass = 0.0;
    for (int x = 0; x < n_; ++x) {
        for (int c = 0; c < n_; ++c) mass += std::norm(amp(x, c, 0, 0));
    }
    return mass;
}

Eigen::MatrixXcd AncillaRegisterState::pair_amplitudes() const {
    Eigen::MatrixXcd pair(n_, n_);
    for (int x = 0; x < n_; ++x) {
        for (int c = 0; c < n_; ++c) pair(x, c) = amp(x, c, 0, 0);
    }
    return pair;
}

void apply_check_oracle(const MarkedSet& marked, AncillaRegisterState& state) {
    const int n = state.vertex_count();
    for (int x : marked.members()) {
        if (x >= n) throw InvalidParameterError("marked vertex out of range");
        for (int c = 0; c < n; ++c) {
            for (int r = 0; r < 2; ++r) std::swap(state.amp(x, c, 0, r), state.amp(x, c, 1, r));
        }
    }
}

namespace {

// R(angle)|0> = cos|0> + sin|1>.
void rotate_qubit(std::complex<double>& zero, std::complex<double>& one, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    std::complex<double> new_zero = c * zero - s * one;
    std::complex<double> new_one = s * zero + c * one;
    zero = new_zero;
    one = new_one;
}

} // namespace

InterpolatedUpdateCircuit::InterpolatedUpdateCircuit(const Eigen::MatrixXd& base_transition,
                                                     const MarkedSet& marked, double s)
    : n_(static_cast<int>(base_transition.rows())), s_(s), marked_(marked) {
    if (base_transition.rows() != base_transition.cols())
        throw InvalidParameterError("transition matrix must be square");
    if (s < 0.0 || s > 1.0) throw InvalidParameterError("interpolation parameter outside [0,1]");
    CoinBlocks blocks(base_transition);
    coin_blocks_.reserve(n_);
    for (int x = 0; x < n_; ++x) coin_blocks_.push_back(blocks.block(x));

    branch_angle_ = std::asin(std::sqrt(s));
    marked_lookup_.assign(n_, -1);
    for (int x : marked_.members()) {
        if (x >= n_) throw InvalidParameterError("marked vertex out of range");
        marked_lookup_[x] = static_cast<int>(correct_angles_.size());
        double denom = (1.0 - s) * base_transition(x, x) + s;
        // denom = 0 only when s = 0 and p_xx = 0; the rotated branch carries
        // no amplitude there, so the angle is immaterial and set to 0.
        double angle = denom > 0.0 ? std::asin(std::sqrt(std::min(1.0, s / denom))) : 0.0;
        correct_angles_.push_back(angle);
    }
}

void InterpolatedUpdateCircuit::controlled_v(AncillaRegisterState& state, bool adjoint) const {
    // One V(P) call, controlled away from the (mark=1, rot=1) branch.
    Eigen::VectorXcd coin(n_);
    for (int x = 0; x < n_; ++x) {
        const Eigen::MatrixXd& block = coin_blocks_[x];
        for (int m = 0; m < 2; ++m) {
            for (int r = 0; r < 2; ++r) {
                if (m == 1 && r == 1) continue;
                for (int c = 0; c < n_; ++c) coin(c) = state.amp(x, c, m, r);
                Eigen::VectorXcd mixed =
                    adjoint ? (block.transpose() * coin).eval() : (block * coin).eval();
                for (int c = 0; c < n_; ++c) state.amp(x, c, m, r) = mixed(c);
            }
        }
    }
}

void InterpolatedUpdateCircuit::marked_branch_rotation(AncillaRegisterState& state,
                                                       double sign) const {
    for (int x = 0; x < n_; ++x) {
        for (int c = 0; c < n_; ++c) rotate_qubit(state.amp(x, c, 1, 0), state.amp(x, c, 1, 1),
                                                  sign * branch_angle_);
    }
}

void InterpolatedUpdateCircuit::coin_add_vertex(AncillaRegisterState& state,
                                                bool subtract) const {
    // coin <- coin ± x (mod n) on the (mark=1, rot=1) branch; reduces to
    // copying the vertex when the coin holds the reference state.
    Eigen::VectorXcd shifted(n_);
    for (int x = 0; x < n_; ++x) {
        for (int c = 0; c < n_; ++c) {
            int target = subtract ? (c - x % n_ + n_) % n_ : (c + x) % n_;
            shifted(target) = state.amp(x, c, 1, 1);
        }
        for (int c = 0; c < n_; ++c) state.amp(x, c, 1, 1) = shifted(c);
    }
}

void InterpolatedUpdateCircuit::correcting_rotation(AncillaRegisterState& state,
                                                    double sign) const {
    for (int x : marked_.members()) {
        double angle = correct_angles_[marked_lookup_[x]];
        rotate_qubit(state.amp(x, x, 1, 0), state.amp(x, x, 1, 1), sign * angle);
    }
}

void InterpolatedUpdateCircuit::apply(AncillaRegisterState& state, CostLedger& ledger) const {
    apply_check_oracle(marked_, state);
    ledger.check_calls += 1;
    marked_branch_rotation(state, +1.0);
    controlled_v(state, false);
    ledger.update_calls += 1;
    coin_add_vertex(state, false);
    correcting_rotation(state, -1.0);
    apply_check_oracle(marked_, state);
    ledger.check_calls += 1;
}

void InterpolatedUpdateCircuit::apply_inverse(AncillaRegisterState& state,
                                              CostLedger& ledger) const {
    apply_check_oracle(marked_, state);
    ledger.check_calls += 1;
    correcting_rotation(state, +1.0);
    coin_add_vertex(state, true);
    controlled_v(state, true);
    ledger.update_calls += 1;
    marked_branch_rotation(state, -1.0);
    apply_check_oracle(marked_, state);
    ledger.check_calls += 1;
}

Eigen::MatrixXd InterpolatedUpdateCircuit::induced_isometry(CostLedger* ledger) const {
    Eigen::MatrixXd induced(n_ * n_, n_);
    CostLedger scratch;
    for (int x = 0; x < n_; ++x) {
        AncillaRegisterState state = AncillaRegisterState::vertex_basis(n_, x);
        apply(state, ledger ? *ledger : scratch);
        if (std::abs(state.norm() - 1.0) > kStateNormTol)
            throw CircuitError("circuit did not preserve the state norm");
        double residual = 1.0 - state.ancilla_zero_fidelity();
        if (residual > kAncillaResidualTol) {
            std::ostringstream oss;
            oss << "ancillas left entangled on input " << x << " (residual " << residual << ")";
            throw CircuitError(oss.str());
        }
        Eigen::MatrixXcd pair = state.pair_amplitudes();
        for (int y = 0; y < n_; ++y) {
            for (int c = 0; c < n_; ++c) induced(y * n_ + c, x) = pair(y, c).real();
        }
    }
    return induced;
}

CostLedger expected_phase_estimation_ledger(int t) {
    if (t < 0) throw InvalidParameterError("bit count must be nonnegative");
    CostLedger ledger;
    long long walks = 1LL << t;
    ledger.update_calls = 2 * walks;
    ledger.shift_calls = walks;
    ledger.check_calls = 4 * walks;
    return ledger;
}

CostLedger expected_search_ledger(int t) {
    CostLedger ledger = expected_phase_estimation_ledger(t);
    ledger.setup_calls += 1;
    ledger.check_calls += 2;
    return ledger;
}

LedgerAuditReport ledger_formula_check(const CostLedger& actual, int t) {
    LedgerAuditReport report;
    report.expected = expected_search_ledger(t);
    report.actual = actual;
    if (actual.setup_calls != report.expected.setup_calls) report.divergent.push_back("setup");
    if (actual.update_calls != report.expected.update_calls) report.divergent.push_back("update");
    if (actual.check_calls != report.expected.check_calls) report.divergent.push_back("check");
    if (actual.shift_calls != report.expected.shift_calls) report.divergent.push_back("shift");
    report.ok = report.divergent.empty();
    return report;
}

} // namespace qws
