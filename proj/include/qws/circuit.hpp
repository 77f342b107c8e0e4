#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "qws/graph.hpp"
#include "qws/ledger.hpp"
#include "qws/markov.hpp"

namespace qws {

inline constexpr double kStateNormTol = 1e-12;
inline constexpr double kAncillaResidualTol = 1e-9;

// Working registers of the interpolated-update circuit:
// vertex (n) (x) coin (n) (x) marking qubit (x) rotation qubit.
class AncillaRegisterState {
public:
    explicit AncillaRegisterState(int n);
    static AncillaRegisterState vertex_basis(int n, int x); // |x>|0bar>|0>|0>

    int vertex_count() const { return n_; }
    int dim() const { return static_cast<int>(amps_.size()); }

    std::complex<double>& amp(int x, int c, int m, int r) { return amps_(index(x, c, m, r)); }
    const std::complex<double>& amp(int x, int c, int m, int r) const {
        return amps_(index(x, c, m, r));
    }
    Eigen::VectorXcd& data() { return amps_; }
    const Eigen::VectorXcd& data() const { return amps_; }

    double norm() const { return amps_.norm(); }
    // Probability mass with both ancillas back at |0>.
    double ancilla_zero_fidelity() const;
    // Pair amplitudes at ancillas |0>|0>, as an n x n array over (x, c).
    Eigen::MatrixXcd pair_amplitudes() const;

private:
    int index(int x, int c, int m, int r) const { return ((x * n_ + c) * 2 + m) * 2 + r; }
    int n_;
    Eigen::VectorXcd amps_;
};

// Check(M): flip the marking qubit on marked vertices. Self-inverse.
void apply_check_oracle(const MarkedSet& marked, AncillaRegisterState& state);

// Circuit computing the interpolated update V(P(s)) from one (controlled)
// V(P) call and two Check(M) calls, with a marking qubit and a rotation
// qubit as work space. The per-vertex self-loop probabilities enter through
// the correcting rotation angle.
class InterpolatedUpdateCircuit {
public:
    InterpolatedUpdateCircuit(const Eigen::MatrixXd& base_transition, const MarkedSet& marked,
                              double s);

    int size() const { return n_; }
    double s() const { return s_; }

    void apply(AncillaRegisterState& state, CostLedger& ledger) const;
    void apply_inverse(AncillaRegisterState& state, CostLedger& ledger) const;

    // The induced map |x>|0bar> -> |x>|p_x(s)> as an n^2 x n matrix, after
    // verifying the ancillas disentangle on every basis input. Throws
    // CircuitError if residual entanglement exceeds tolerance.
    Eigen::MatrixXd induced_isometry(CostLedger* ledger = nullptr) const;

private:
    void controlled_v(AncillaRegisterState& state, bool adjoint) const;
    void marked_branch_rotation(AncillaRegisterState& state, double sign) const;
    void coin_add_vertex(AncillaRegisterState& state, bool subtract) const;
    void correcting_rotation(AncillaRegisterState& state, double sign) const;

    int n_;
    double s_;
    MarkedSet marked_;
    std::vector<Eigen::MatrixXd> coin_blocks_;
    double branch_angle_;                 // arcsin sqrt(s)
    std::vector<double> correct_angles_;  // per marked vertex, 0/0 guarded
    std::vector<int> marked_lookup_;      // -1 for unmarked vertices
};

struct LedgerAuditReport {
    bool ok = false;
    CostLedger expected;
    CostLedger actual;
    std::vector<std::string> divergent; // names of counters that disagree
};

// Closed-form ledgers of the oracle cost model: one phase estimation with t
// bits applies the interpolated walk exactly 2^t times; a full search run
// adds one Setup and the two Check-and-measure steps.
CostLedger expected_phase_estimation_ledger(int t);
CostLedger expected_search_ledger(int t);

LedgerAuditReport ledger_formula_check(const CostLedger& actual, int t);

} // namespace qws
