#include "doctest.h"

#include <cmath>

#include "qws/circuit.hpp"
#include "qws/errors.hpp"
#include "qws/families.hpp"
#include "qws/szegedy.hpp"

using namespace qws;

TEST_CASE("check oracle") {
    MarkedSet marked({1}, 3);
    AncillaRegisterState state = AncillaRegisterState::vertex_basis(3, 1);
    apply_check_oracle(marked, state);
    CHECK(std::abs(state.amp(1, 0, 1, 0) - std::complex<double>(1.0)) <= 1e-15);
    CHECK(std::abs(state.amp(1, 0, 0, 0)) <= 1e-15);

    // Unmarked vertices are untouched.
    AncillaRegisterState other = AncillaRegisterState::vertex_basis(3, 0);
    apply_check_oracle(marked, other);
    CHECK(std::abs(other.amp(0, 0, 0, 0) - std::complex<double>(1.0)) <= 1e-15);

    // Involution.
    apply_check_oracle(marked, state);
    CHECK(std::abs(state.amp(1, 0, 0, 0) - std::complex<double>(1.0)) <= 1e-15);
}

namespace {

double circuit_vs_direct(const Eigen::MatrixXd& base, const MarkedSet& marked, double s) {
    InterpolatedUpdateCircuit circuit(base, marked, s);
    Eigen::MatrixXd induced = circuit.induced_isometry();
    PairSpaceOperator direct = build_isometry_v(interpolated_transition(base, marked, s));
    double worst = 0.0;
    const int n = static_cast<int>(base.rows());
    for (int x = 0; x < n; ++x)
        worst = std::max(worst,
                         (induced.col(x) - direct.matrix.col(x * n)).cwiseAbs().maxCoeff());
    return worst;
}

} // namespace

TEST_CASE("interpolated update circuit") {
    Rng rng(41);

    SUBCASE("unmarked vertices bypass the interpolation") {
        Eigen::MatrixXd base = random_stochastic_matrix(5, rng, 0.3);
        MarkedSet marked({2}, 5);
        InterpolatedUpdateCircuit circuit(base, marked, 0.8);
        CostLedger ledger;
        AncillaRegisterState state = AncillaRegisterState::vertex_basis(5, 0);
        circuit.apply(state, ledger);
        Eigen::MatrixXcd pair = state.pair_amplitudes();
        for (int c = 0; c < 5; ++c)
            CHECK(std::abs(pair(0, c) - std::sqrt(base(0, c))) <= 1e-12);
    }

    SUBCASE("marked vertex at s = 0 reproduces the base row") {
        Eigen::MatrixXd base = random_stochastic_matrix(4, rng, 0.0);
        MarkedSet marked({3}, 4);
        CHECK(circuit_vs_direct(base, marked, 0.0) <= 1e-12);
    }

    SUBCASE("marked vertex at s = 1/2 matches the direct build entrywise") {
        Eigen::MatrixXd base = random_stochastic_matrix(6, rng, 0.2);
        MarkedSet marked({0, 4}, 6);
        CHECK(circuit_vs_direct(base, marked, 0.5) <= 1e-10);
    }

    SUBCASE("guarded 0/0 case: p_xx = 0 at s = 0") {
        Eigen::MatrixXd base(2, 2);
        base << 0.0, 1.0, 1.0, 0.0;
        // Periodic, but the circuit only needs the rows.
        MarkedSet marked({0}, 2);
        CHECK(circuit_vs_direct(base, marked, 0.0) <= 1e-12);
    }

    SUBCASE("absorbing endpoint") {
        Eigen::MatrixXd base = random_stochastic_matrix(4, rng, 0.0);
        MarkedSet marked({1}, 4);
        CHECK(circuit_vs_direct(base, marked, 1.0) <= 1e-12);
    }

    SUBCASE("ledger counts one V path and two checks per application") {
        Eigen::MatrixXd base = random_stochastic_matrix(3, rng, 0.0);
        InterpolatedUpdateCircuit circuit(base, MarkedSet({1}, 3), 0.5);
        CostLedger ledger;
        AncillaRegisterState state = AncillaRegisterState::vertex_basis(3, 1);
        circuit.apply(state, ledger);
        CHECK(ledger.update_calls == 1);
        CHECK(ledger.check_calls == 2);
        CHECK(ledger.setup_calls == 0);
        CHECK(ledger.shift_calls == 0);
    }

    SUBCASE("reverse circuit undoes the forward circuit") {
        Eigen::MatrixXd base = random_stochastic_matrix(5, rng, 0.25);
        InterpolatedUpdateCircuit circuit(base, MarkedSet({0, 3}, 5), 0.7);
        CostLedger ledger;
        for (int x = 0; x < 5; ++x) {
            AncillaRegisterState state = AncillaRegisterState::vertex_basis(5, x);
            circuit.apply(state, ledger);
            circuit.apply_inverse(state, ledger);
            AncillaRegisterState reference = AncillaRegisterState::vertex_basis(5, x);
            CHECK((state.data() - reference.data()).norm() <= 1e-10);
        }
    }

    SUBCASE("ancillas disentangle") {
        Eigen::MatrixXd base = random_stochastic_matrix(6, rng, 0.3);
        InterpolatedUpdateCircuit circuit(base, MarkedSet({2, 5}, 6), 0.4);
        CostLedger ledger;
        for (int x = 0; x < 6; ++x) {
            AncillaRegisterState state = AncillaRegisterState::vertex_basis(6, x);
            circuit.apply(state, ledger);
            CHECK(1.0 - state.ancilla_zero_fidelity() <= 1e-12);
            CHECK(std::abs(state.norm() - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("ledger closed forms") {
    SUBCASE("t = 0: one controlled walk, one shift") {
        CostLedger pe = expected_phase_estimation_ledger(0);
        CHECK(pe.shift_calls == 1);
        CHECK(pe.update_calls == 2);
        CHECK(pe.check_calls == 4);
    }

    SUBCASE("t = 3: eight controlled walks") {
        CostLedger pe = expected_phase_estimation_ledger(3);
        CHECK(pe.shift_calls == 8);
        CHECK(pe.update_calls == 16);
    }

    SUBCASE("full search audit") {
        CostLedger good = expected_search_ledger(4);
        auto report = ledger_formula_check(good, 4);
        CHECK(report.ok);
        CHECK(good.setup_calls == 1);
        CHECK(good.check_calls == 2 + 4 * 16);

        CostLedger bad = good;
        bad.update_calls -= 1;
        auto failed = ledger_formula_check(bad, 4);
        CHECK_FALSE(failed.ok);
        REQUIRE(failed.divergent.size() == 1);
        CHECK(failed.divergent[0] == "update");
    }
}
