#include "doctest.h"

#include <cmath>
#include <complex>

#include "qws/errors.hpp"
#include "qws/families.hpp"
#include "qws/szegedy.hpp"

using namespace qws;

TEST_CASE("isometry construction") {
    SUBCASE("deterministic row maps the reference coin to the target") {
        Eigen::MatrixXd p(3, 3);
        p << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0;
        PairSpaceOperator v = build_isometry_v(p);
        // |0>|0bar> -> |0>|1>
        Eigen::VectorXd input = Eigen::VectorXd::Zero(9);
        input(0) = 1.0;
        Eigen::VectorXd output = v.matrix * input;
        CHECK(output(1) == doctest::Approx(1.0));
        CHECK(output.norm() == doctest::Approx(1.0));
    }

    SUBCASE("uniform row spreads amplitude 1/2 on four states") {
        Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 4, 0.25);
        PairSpaceOperator v = build_isometry_v(p);
        Eigen::VectorXd input = Eigen::VectorXd::Zero(16);
        input(2 * 4) = 1.0; // |2>|0bar>
        Eigen::VectorXd output = v.matrix * input;
        for (int c = 0; c < 4; ++c) CHECK(output(2 * 4 + c) == doctest::Approx(0.5));
    }

    SUBCASE("per-vertex blocks are orthonormal") {
        Rng rng(3);
        Eigen::MatrixXd p = random_stochastic_matrix(6, rng, 0.2);
        CoinBlocks blocks(p);
        for (int x = 0; x < 6; ++x) {
            Eigen::MatrixXd gram = blocks.block(x).transpose() * blocks.block(x);
            CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("shift operator") {
    Graph path(3, {{0, 1}, {1, 2}});
    PairSpaceOperator shift = build_shift(path);

    auto basis = [](int n, int x, int y) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n * n);
        v(x * n + y) = 1.0;
        return v;
    };

    SUBCASE("edge pairs swap") {
        Eigen::VectorXd out = shift.matrix * basis(3, 0, 1);
        CHECK(out(1 * 3 + 0) == 1.0);
    }
    SUBCASE("non-edge pairs are fixed") {
        Eigen::VectorXd out = shift.matrix * basis(3, 0, 2);
        CHECK(out(0 * 3 + 2) == 1.0);
    }
    SUBCASE("involution") {
        CHECK((shift.matrix * shift.matrix - Eigen::MatrixXd::Identity(9, 9))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    SUBCASE("permutation matrix: unit rows and columns") {
        for (int i = 0; i < 9; ++i) {
            CHECK(shift.matrix.row(i).sum() == 1.0);
            CHECK(shift.matrix.col(i).sum() == 1.0);
            CHECK(shift.matrix.row(i).maxCoeff() == 1.0);
        }
    }
    SUBCASE("reflection about the reference slice is an involution") {
        PairSpaceOperator ref = build_ref_x(3);
        CHECK((ref.matrix * ref.matrix - Eigen::MatrixXd::Identity(9, 9))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
}

TEST_CASE("dense walk operator") {
    SUBCASE("two-state chain: eigenphases {0, +-phi} with cos phi = lambda") {
        MarkovChain chain = two_state_chain();
        InterpolatedChain interp(chain, MarkedSet({1}, 2), 0.0);
        PairSpaceOperator walk = build_walk_dense(interp, make_complete(2, true));
        CHECK(walk.unitarity_defect() <= 1e-12);

        // D = P has eigenvalues {0, 1}: phases {0, +-pi/2} on the walk space.
        Eigen::EigenSolver<Eigen::MatrixXd> solver(walk.matrix);
        int quarter_turns = 0;
        for (int i = 0; i < 4; ++i) {
            double phase = std::abs(std::arg(solver.eigenvalues()(i)));
            if (std::abs(phase - M_PI / 2) < 1e-10) ++quarter_turns;
        }
        CHECK(quarter_turns == 2);
    }

    SUBCASE("stationary pair state is fixed") {
        MarkovChain chain = complete_uniform_chain(4);
        InterpolatedChain interp(chain, MarkedSet({0}, 4), 0.5);
        PairSpaceOperator walk = build_walk_dense(interp, make_complete(4, true));
        WalkSpectralForm form(interp, true);
        Eigen::VectorXd fixed = form.stationary_pair();
        CHECK((walk.matrix * fixed - fixed).norm() <= 1e-9);
    }

    SUBCASE("unitarity on K4") {
        MarkovChain chain = complete_uniform_chain(4);
        InterpolatedChain interp(chain, MarkedSet({1}, 4), 0.25);
        PairSpaceOperator walk = build_walk_dense(interp, make_complete(4, true));
        CHECK(walk.unitarity_defect() <= 1e-10);
    }

    SUBCASE("locality violation is rejected with the offending pair") {
        MarkovChain chain = complete_uniform_chain(3);
        InterpolatedChain interp(chain, MarkedSet({0}, 3), 0.0);
        Graph path(3, {{0, 1}, {1, 2}});
        CHECK_THROWS_AS(build_walk_dense(interp, path), InvalidParameterError);
    }
}

TEST_CASE("block spectral form") {
    SUBCASE("rotation angles follow arccos") {
        MarkovChain chain = two_state_chain();
        InterpolatedChain interp(chain, MarkedSet({1}, 2), 0.0);
        WalkSpectralForm form(interp, true);
        REQUIRE(form.rotation_count() == 1);
        CHECK(form.lambda(0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(form.phi(0) == doctest::Approx(M_PI / 2).epsilon(1e-12));
    }

    SUBCASE("lambda = 1/2 gives phi = pi/3") {
        CHECK(std::acos(0.5) == doctest::Approx(M_PI / 3).epsilon(1e-15));
    }

    SUBCASE("pair reconstruction against the dense operator on random chains") {
        Rng rng(17);
        for (int i = 0; i < 6; ++i) {
            Rng sub = rng.derive(i);
            int n = sub.uniform_int(3, 12);
            MarkovChain chain = random_reversible_chain(n, sub);
            MarkedSet marked = random_marked_set(chain, sub);
            InterpolatedChain interp(chain, marked, 0.5);
            WalkSpectralForm form(interp, true);
            PairSpaceOperator walk = build_walk_dense(interp, make_complete(n, true));
            for (int j = 0; j < form.rotation_count(); ++j) {
                Eigen::VectorXcd plus = form.eigenvector_plus(j);
                Eigen::VectorXcd minus = form.eigenvector_minus(j);
                std::complex<double> mu = std::polar(1.0, form.phi(j));
                CHECK((walk.matrix * plus - mu * plus).norm() <= 1e-9);
                CHECK((walk.matrix * minus - std::conj(mu) * minus).norm() <= 1e-9);
                Eigen::VectorXcd recombined = (plus + minus) / std::sqrt(2.0);
                CHECK((recombined - form.block_a(j).cast<std::complex<double>>()).norm() <=
                      1e-9);
            }
        }
    }

    SUBCASE("compact residual Grams match materialized blocks") {
        Rng rng(29);
        MarkovChain chain = random_reversible_chain(7, rng);
        MarkedSet marked({1, 4}, 7);
        InterpolatedChain interp(chain, marked, 0.3);
        WalkSpectralForm form(interp, true);
        const int n = 7;
        for (int x = 0; x < n; ++x) {
            REQUIRE(form.has_residual_gram(x));
            const Eigen::MatrixXd& gram = form.residual_gram(x);
            for (int j = 0; j < form.rotation_count(); ++j) {
                for (int l = 0; l < form.rotation_count(); ++l) {
                    Eigen::VectorXd bj = form.block_b(j).segment(x * n, n);
                    Eigen::VectorXd bl = form.block_b(l).segment(x * n, n);
                    CHECK(gram(j, l) == doctest::Approx(bj.dot(bl)).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("lemma 1 verification report") {
    SUBCASE("two-state chain") {
        InterpolatedChain interp(two_state_chain(), MarkedSet({1}, 2), 0.5);
        auto report = verify_lemma1(interp, make_complete(2, true));
        CHECK(report.pass);
        CHECK(report.dim_analytic == report.dim_numeric);
    }

    SUBCASE("K4 uniform at s = 0") {
        InterpolatedChain interp(complete_uniform_chain(4), MarkedSet({0}, 4), 0.0);
        auto report = verify_lemma1(interp, make_complete(4, true));
        CHECK(report.pass);
    }

    SUBCASE("4x4 lazy torus walk at s = 0.5") {
        InterpolatedChain interp(grid_walk_chain(4, true), MarkedSet({0}, 16), 0.5);
        auto report = verify_lemma1(interp, make_grid_2d(4));
        CHECK(report.pass);
        CHECK(report.eigenphase_deviation <= 1e-8);
        CHECK(report.max_subspace_angle <= 1e-8);
    }

    CHECK_THROWS_AS(
        verify_lemma1(InterpolatedChain(complete_uniform_chain(20), MarkedSet({0}, 20), 0.5),
                      make_complete(20, true)),
        CapacityError);
}

TEST_CASE("walk cost bookkeeping") {
    CostLedger ledger;
    record_walk_applications(ledger, 1, true);
    CHECK(ledger.update_level() == 3);
    CHECK(ledger.update_calls == 2);
    CHECK(ledger.shift_calls == 1);
    CHECK(ledger.check_calls == 4);

    CostLedger plain;
    record_walk_applications(plain, 7, false);
    CHECK(plain.update_level() == 21);
    CHECK(plain.check_calls == 0);
}
