#include "qws/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "qws/circuit.hpp"
#include "qws/errors.hpp"
#include "qws/families.hpp"
#include "qws/search.hpp"
#include "qws/szegedy.hpp"

namespace qws {

namespace {

CheckResult make_check(const std::string& quantity, double value, double tolerance,
                       bool pass) {
    return {quantity, value, tolerance, pass};
}

CheckResult bounded_check(const std::string& quantity, double value, double tolerance) {
    return {quantity, value, tolerance, value <= tolerance};
}

void finish(SuiteReport& report) {
    report.pass = true;
    for (const auto& c : report.checks) report.pass = report.pass && c.pass;
}

struct Instance {
    MarkovChain chain;
    MarkedSet marked;
};

std::vector<Instance> random_reversible_corpus(Rng& rng, int count, int n_min, int n_max,
                                               bool lazy) {
    std::vector<Instance> corpus;
    corpus.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng sub = rng.derive(i);
        int n = sub.uniform_int(n_min, n_max);
        MarkovChain chain = random_reversible_chain(n, sub, lazy);
        MarkedSet marked = random_marked_set(chain, sub);
        corpus.push_back({std::move(chain), std::move(marked)});
    }
    return corpus;
}

Eigen::MatrixXd raw_discriminant(const Eigen::MatrixXd& base, const MarkedSet& marked,
                                 double s) {
    Eigen::MatrixXd m = interpolated_transition(base, marked, s);
    return m.cwiseProduct(m.transpose()).cwiseSqrt();
}

double tv_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return 0.5 * (a - b).cwiseAbs().sum();
}

std::vector<double> restricted_eigenphases(const Eigen::MatrixXd& op,
                                           const Eigen::MatrixXd& basis) {
    Eigen::MatrixXd restriction = basis.transpose() * op * basis;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(restriction);
    std::vector<double> phases;
    for (int i = 0; i < restriction.rows(); ++i) {
        double phase = std::arg(solver.eigenvalues()(i));
        if (phase <= -M_PI + 1e-9) phase += 2.0 * M_PI;
        phases.push_back(phase);
    }
    std::sort(phases.begin(), phases.end());
    return phases;
}

} // namespace

double discriminant_derivative_defect(const MarkovChain& chain, const MarkedSet& marked,
                                      double s, double step) {
    InterpolatedChain interp(chain, marked, s);
    Eigen::MatrixXd closed = discriminant_derivative(interp);
    Eigen::MatrixXd fd;
    if (s >= step) {
        fd = (raw_discriminant(chain.matrix(), marked, s + step) -
              raw_discriminant(chain.matrix(), marked, s - step)) /
             (2.0 * step);
    } else {
        // One-sided second-order stencil at the s = 0 boundary.
        fd = (-3.0 * raw_discriminant(chain.matrix(), marked, s) +
              4.0 * raw_discriminant(chain.matrix(), marked, s + step) -
              raw_discriminant(chain.matrix(), marked, s + 2.0 * step)) /
             (2.0 * step);
    }
    double worst = 0.0;
    for (int x = 0; x < chain.size(); ++x) {
        for (int y = 0; y < chain.size(); ++y) {
            worst = std::max(worst, std::abs(closed(x, y) - fd(x, y)) /
                                        (1.0 + std::abs(closed(x, y))));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Acceptance criteria
// ---------------------------------------------------------------------------

std::vector<CheckResult> acceptance_thm3_identity(std::uint64_t seed) {
    // Literal criterion: HT(s) = sin^4 theta(s) * HT over random nonempty
    // marked sets. This fails for |M| >= 2 on generic chains: the derivative
    // identity (criterion 2) forces HT(s) proportional to sin^4 theta(s), but
    // the proportionality constant is lim_{s->1} HT(s), which exceeds HT
    // whenever the marked-block eigenvectors keep Theta(sqrt(1-s)) overlap
    // with |U>. The two companion checks below document the laws that do
    // hold: the identity for single marked vertices, and s-independence of
    // the ratio for arbitrary marked sets.
    Rng rng(seed);
    auto corpus = random_reversible_corpus(rng, 200, 2, 30, false);
    const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99};
    double worst_literal = 0.0;
    double worst_constancy = 0.0;
    for (const auto& inst : corpus) {
        double ht = hitting_time_matrix(inst.chain, inst.marked);
        double p_marked = inst.chain.marked_mass(inst.marked);
        double first_ratio = 0.0;
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            double s = grid[gi];
            double ht_s = hitting_time_spectral(InterpolatedChain(inst.chain, inst.marked, s));
            double sin2 = split_sin2(p_marked, s);
            worst_literal = std::max(worst_literal,
                                     std::abs(ht_s - sin2 * sin2 * ht) / (1.0 + ht));
            double ratio = ht_s / (sin2 * sin2);
            if (gi == 0)
                first_ratio = ratio;
            else
                worst_constancy = std::max(worst_constancy,
                                           std::abs(ratio - first_ratio) / first_ratio);
        }
    }

    Rng single_rng(mix_seed(seed, 777));
    double worst_single = 0.0;
    for (int i = 0; i < 200; ++i) {
        Rng sub = single_rng.derive(i);
        int n = sub.uniform_int(2, 30);
        MarkovChain chain = random_reversible_chain(n, sub);
        int vertex = sub.uniform_int(0, n - 1);
        if (chain.stationary()(vertex) > 0.5) vertex = 0; // keep p_M <= 1/2
        MarkedSet marked({vertex}, n);
        double ht = hitting_time_matrix(chain, marked);
        double p_marked = chain.marked_mass(marked);
        for (double s : grid) {
            double ht_s = hitting_time_spectral(InterpolatedChain(chain, marked, s));
            double sin2 = split_sin2(p_marked, s);
            worst_single = std::max(worst_single,
                                    std::abs(ht_s - sin2 * sin2 * ht) / (1.0 + ht));
        }
    }
    return {bounded_check("thm3.ht_identity.random_marked_sets", worst_literal, 1e-8),
            bounded_check("thm3.ht_identity.single_marked", worst_single, 1e-8),
            bounded_check("thm3.ratio_constant_in_s", worst_constancy, 1e-8)};
}

std::vector<CheckResult> acceptance_ht_ode(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Instance> corpus;
    corpus.push_back({two_state_chain(), MarkedSet({1}, 2)});
    corpus.push_back({complete_uniform_chain(4), MarkedSet({0}, 4)});
    corpus.push_back({grid_walk_chain(4, true), MarkedSet({0}, 16)});
    for (const auto& inst : random_reversible_corpus(rng, 7, 3, 12, false))
        corpus.push_back(inst);
    double worst = 0.0;
    for (const auto& inst : corpus) {
        for (int i = 1; i <= 9; ++i) {
            double s = 0.1 * i;
            auto report = ht_derivative_check(inst.chain, inst.marked, s, 1e-5);
            worst = std::max(worst, report.relative_error);
        }
    }
    return {bounded_check("appendixA.ht_ode.max_relative_error", worst, 1e-4)};
}

std::vector<CheckResult> acceptance_discriminant_derivative(std::uint64_t seed) {
    Rng rng(seed);
    auto corpus = random_reversible_corpus(rng, 50, 2, 20, false);
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75};
    double worst = 0.0;
    for (const auto& inst : corpus) {
        for (double s : grid)
            worst = std::max(worst, discriminant_derivative_defect(inst.chain, inst.marked, s));
    }
    return {bounded_check("appendixA.discriminant_derivative.max_relative_error", worst, 1e-6)};
}

std::vector<CheckResult> acceptance_lemma1(std::uint64_t seed) {
    Rng rng(seed);
    struct Case {
        MarkovChain chain;
        MarkedSet marked;
        Graph graph;
        double s;
    };
    std::vector<Case> cases;
    cases.push_back({two_state_chain(), MarkedSet({1}, 2), make_complete(2, true), 0.5});
    cases.push_back(
        {complete_uniform_chain(4), MarkedSet({0}, 4), make_complete(4, true), 0.0});
    cases.push_back(
        {complete_uniform_chain(4), MarkedSet({0}, 4), make_complete(4, true), 0.7});
    cases.push_back({grid_walk_chain(3, true), MarkedSet({0}, 9), make_grid_2d(3), 0.5});
    for (int i = 0; i < 8; ++i) {
        Rng sub = rng.derive(i);
        int n = sub.uniform_int(3, 12);
        MarkovChain chain = random_reversible_chain(n, sub);
        MarkedSet marked = random_marked_set(chain, sub);
        double s = std::vector<double>{0.0, 0.5, 0.9}[i % 3];
        cases.push_back({std::move(chain), std::move(marked), make_complete(n, true), s});
    }
    double worst_phase = 0.0, worst_reconstruction = 0.0, worst_residual = 0.0,
           worst_angle = 0.0;
    for (const auto& c : cases) {
        auto report = verify_lemma1(InterpolatedChain(c.chain, c.marked, c.s), c.graph);
        worst_phase = std::max(worst_phase, report.eigenphase_deviation);
        worst_reconstruction = std::max(worst_reconstruction, report.reconstruction_residual);
        worst_residual = std::max(worst_residual, report.eigenvector_residual);
        worst_angle = std::max(worst_angle, report.max_subspace_angle);
    }
    return {bounded_check("lemma1.eigenphase_multiset", worst_phase, 1e-8),
            bounded_check("lemma1.pair_reconstruction", worst_reconstruction, 1e-9),
            bounded_check("lemma1.eigenvector_residual", worst_residual, 1e-8),
            bounded_check("lemma1.walkspace_angle", worst_angle, 1e-8)};
}

std::vector<CheckResult> acceptance_simulation_circuit(std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    bool ledger_ok = true;
    const std::vector<double> s_grid{0.0, 0.25, 0.5, 0.9, 0.999};
    for (int i = 0; i < 100; ++i) {
        Rng sub = rng.derive(i);
        int n = sub.uniform_int(2, 10);
        Eigen::MatrixXd base = random_stochastic_matrix(n, sub, 0.3);
        int count = sub.uniform_int(1, n - 1);
        std::vector<int> members;
        for (int c = 0; c < count; ++c) members.push_back(sub.uniform_int(0, n - 1));
        MarkedSet marked(std::move(members), n);
        double s = s_grid[i % s_grid.size()];

        InterpolatedUpdateCircuit circuit(base, marked, s);
        CostLedger ledger;
        Eigen::MatrixXd induced = circuit.induced_isometry(&ledger);
        ledger_ok = ledger_ok && ledger.update_calls == n && ledger.check_calls == 2 * n &&
                    ledger.setup_calls == 0 && ledger.shift_calls == 0;

        PairSpaceOperator direct =
            build_isometry_v(interpolated_transition(base, marked, s));
        for (int x = 0; x < n; ++x) {
            double dev =
                (induced.col(x) - direct.matrix.col(x * n)).cwiseAbs().maxCoeff();
            worst = std::max(worst, dev);
        }
    }
    return {bounded_check("simulation.induced_vs_direct", worst, 1e-10),
            make_check("simulation.ledger_one_v_two_checks", ledger_ok ? 0.0 : 1.0, 0.0,
                       ledger_ok)};
}

std::vector<CheckResult> acceptance_thm4_desk(std::uint64_t seed) {
    (void)seed;
    std::vector<CheckResult> checks;
    double worst_margin = 0.0; // max of (eps1 - eps2) - marginal over runs

    auto run_case = [&](const std::string& name, const MarkovChain& chain,
                        const MarkedSet& marked) {
        double p_marked = chain.marked_mass(marked);
        double ht = hitting_time_matrix(chain, marked);
        int t = static_cast<int>(std::ceil(std::log2(10.0 * std::sqrt(ht))));
        SearchOutcome run = quantum_walk_search(chain, marked, p_marked, t, SearchMode::Exact,
                                                0);
        checks.push_back(make_check("thm4." + name + ".success_probability",
                                    run.p_success_exact, 0.05,
                                    run.p_success_exact >= 0.05));
        worst_margin = std::max(worst_margin,
                                (run.eps1_term - run.eps2_term) - run.marked_marginal);
    };

    run_case("grid8", grid_walk_chain(8, true), MarkedSet({0}, 64));
    MarkovChain k64 = complete_uniform_chain(64);
    run_case("k64_m1", k64, MarkedSet({0}, 64));
    run_case("k64_m2", k64, MarkedSet({0, 1}, 64));
    run_case("k64_m4", k64, MarkedSet({0, 1, 2, 3}, 64));
    checks.push_back(bounded_check("thm4.proof_inequality_margin", worst_margin, 1e-12));
    return checks;
}

std::vector<CheckResult> acceptance_backend_equivalence(std::uint64_t seed) {
    Rng rng(seed);
    struct Case {
        MarkovChain chain;
        MarkedSet marked;
        Graph graph;
        double s;
    };
    std::vector<Case> cases;
    cases.push_back({two_state_chain(), MarkedSet({1}, 2), make_complete(2, true), 0.5});
    cases.push_back(
        {complete_uniform_chain(3), MarkedSet({2}, 3), make_complete(3, true), 0.25});
    cases.push_back(
        {complete_uniform_chain(4), MarkedSet({1}, 4), make_complete(4, true), 0.5});
    cases.push_back({cycle_walk_chain(4), MarkedSet({0}, 4), make_cycle(4, true), 0.5});
    {
        Rng sub = rng.derive(17);
        MarkovChain chain = random_reversible_chain(5, sub);
        cases.push_back({std::move(chain), MarkedSet({0, 2}, 5), make_complete(5, true), 0.4});
    }
    cases.push_back(
        {complete_uniform_chain(6), MarkedSet({0, 3}, 6), make_complete(6, true), 0.6});

    double worst_tv = 0.0;
    for (const auto& c : cases) {
        InterpolatedChain interp(c.chain, c.marked, c.s);
        WalkSpectralForm form(interp, true);
        PairSpaceOperator dense = build_walk_dense(interp, c.graph);
        const int n = c.chain.size();

        // Inputs: the unmarked stationary state and one mixed eigenvector
        // superposition spanning several blocks.
        std::vector<Eigen::VectorXcd> inputs;
        ProjectionPair pair = projection_pair(c.chain.stationary(), c.marked);
        Eigen::VectorXcd u_pair = Eigen::VectorXcd::Zero(n * n);
        for (int x = 0; x < n; ++x) u_pair(x * n) = pair.unmarked_state(x);
        inputs.push_back(u_pair);
        Eigen::VectorXcd mixed = form.stationary_pair().cast<std::complex<double>>();
        mixed += form.eigenvector_plus(0);
        if (form.rotation_count() > 1) mixed += 0.5 * form.eigenvector_minus(1);
        mixed /= mixed.norm();
        inputs.push_back(mixed);

        for (const auto& input : inputs) {
            for (int t = 0; t <= 5; ++t) {
                PhaseEstimationOutput spec = phase_estimation_spectral_pair(form, t, input);
                PhaseEstimationOutput dns = phase_estimation_dense(dense, t, input, c.marked);
                worst_tv = std::max(worst_tv, tv_distance(spec.vertex_table, dns.vertex_table));
            }
        }
    }
    return {bounded_check("phase_estimation.backend_tv", worst_tv, 1e-8)};
}

std::vector<CheckResult> acceptance_fact4_window() {
    double worst_slack = 1.0; // min over all windows of (min_value - eps1)
    bool all_pass = true;
    for (double eps1 : {1.0 / 16.0, 0.1, 0.25}) {
        for (int i = 1; i <= 10; ++i) {
            double p_marked = 0.05 * i;
            Fact4WindowReport report = fact4_window_check(p_marked, eps1);
            all_pass = all_pass && report.pass;
            worst_slack = std::min(worst_slack, report.min_value - eps1);
        }
    }
    return {make_check("fact4.window_min_slack", worst_slack, 0.0,
                       all_pass && worst_slack >= -1e-12)};
}

std::vector<CheckResult> acceptance_classical_baseline(std::uint64_t seed) {
    std::vector<CheckResult> checks;
    auto run_case = [&](const std::string& name, const MarkovChain& chain,
                        const MarkedSet& marked, double expected, std::uint64_t sub_seed) {
        MonteCarloEstimate estimate =
            monte_carlo_hitting_time(chain, marked, 100000, sub_seed);
        double sigmas = std::abs(estimate.mean - expected) /
                        std::max(estimate.std_error, 1e-300);
        checks.push_back(bounded_check("monte_carlo." + name + ".sigmas", sigmas, 3.0));
    };
    run_case("k32", complete_uniform_chain(32), MarkedSet({0}, 32), 32.0, mix_seed(seed, 1));
    run_case("two_state", two_state_chain(), MarkedSet({1}, 2), 2.0, mix_seed(seed, 2));
    return checks;
}

std::vector<CheckResult> acceptance_thm5_statistics(std::uint64_t seed) {
    MarkovChain chain = complete_uniform_chain(64);
    MarkedSet marked({0}, 64);
    double p_marked = chain.marked_mass(marked);
    double ht = hitting_time_matrix(chain, marked);

    const int runs = 200;
    int terminated = 0;
    int correct = 0;
    double total_updates = 0.0;
    for (int i = 0; i < runs; ++i) {
        try {
            AutoSearchOutcome outcome = quantum_walk_search_auto(
                chain, marked, p_marked, 28, SearchMode::Sample, mix_seed(seed, i));
            ++terminated;
            if (outcome.found && marked.contains(*outcome.found)) ++correct;
            total_updates += static_cast<double>(outcome.total_ledger.update_calls);
        } catch (const BudgetExceededError&) {
        }
    }
    double termination_rate = static_cast<double>(terminated) / runs;
    double mean_updates = total_updates / std::max(1, terminated);
    double budget = 60.0 * std::sqrt(ht);
    return {make_check("thm5.termination_rate", termination_rate, 0.99,
                       termination_rate >= 0.99),
            bounded_check("thm5.mean_update_calls", mean_updates, budget),
            make_check("thm5.found_vertices_marked", static_cast<double>(correct),
                       static_cast<double>(terminated), correct == terminated)};
}

std::vector<CheckResult> acceptance_grid_scaling() {
    auto rows = grid_bench({4, 8, 16}, 1);
    double ht_lo = 1e300, ht_hi = 0.0, t_lo = 1e300, t_hi = 0.0;
    bool all_present = true;
    for (const auto& row : rows) {
        if (row.skipped || row.minimal_t < 0) {
            all_present = false;
            continue;
        }
        ht_lo = std::min(ht_lo, row.ratio_ht_nlogn);
        ht_hi = std::max(ht_hi, row.ratio_ht_nlogn);
        t_lo = std::min(t_lo, row.ratio_t_sqrt_ht);
        t_hi = std::max(t_hi, row.ratio_t_sqrt_ht);
    }
    double ht_band = all_present ? ht_hi / ht_lo : 1e300;
    double t_band = all_present ? t_hi / t_lo : 1e300;
    return {bounded_check("corollary2.ht_over_nlogn_band", ht_band, 4.0),
            bounded_check("corollary2.t_over_sqrt_ht_band", t_band, 8.0)};
}

// ---------------------------------------------------------------------------
// Module invariant suites
// ---------------------------------------------------------------------------

SuiteReport verify_graph_core(std::uint64_t seed) {
    SuiteReport report{"graph_core", {}, false};
    Rng rng(seed);

    int transit_failures = 0;
    for (int side : {2, 3, 4, 8}) {
        if (!grid_is_translation_invariant(make_grid_2d(side), side)) ++transit_failures;
    }
    report.checks.push_back(bounded_check("grid.translation_invariance_failures",
                                          transit_failures, 0));

    int degree_failures = 0;
    for (int side : {3, 4, 8}) {
        Graph g = make_grid_2d(side);
        for (int v = 0; v < g.vertex_count(); ++v) {
            if (g.move_count(v) != 5) ++degree_failures;
        }
    }
    report.checks.push_back(bounded_check("grid.five_regular_failures", degree_failures, 0));

    int connected_failures = 0;
    for (int side : {2, 3, 5, 8}) {
        if (!make_grid_2d(side).is_connected()) ++connected_failures;
    }
    report.checks.push_back(bounded_check("grid.connectivity_failures", connected_failures, 0));

    bool lazy_ok =
        validate_chain_locality(grid_walk_chain(4, true).matrix(), make_grid_2d(4)).ok;
    report.checks.push_back(make_check("locality.lazy_grid_certificate", lazy_ok ? 0 : 1, 0,
                                       lazy_ok));

    // Exhaustive cross-check of the locality scan against an independent
    // edge-set query on random instances.
    int mismatches = 0;
    for (int i = 0; i < 20; ++i) {
        Rng sub = rng.derive(i);
        int n = sub.uniform_int(2, 10);
        Eigen::MatrixXd p = random_stochastic_matrix(n, sub, 0.4);
        Graph g = make_complete(n, false);
        auto scan = validate_chain_locality(p, g);
        bool expected_ok = true;
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                if (x != y && p(x, y) > 0.0 && !g.has_edge(x, y)) expected_ok = false;
            }
        }
        if (scan.ok != expected_ok) ++mismatches;
    }
    report.checks.push_back(bounded_check("locality.scan_crosscheck_mismatches", mismatches, 0));

    finish(report);
    return report;
}

SuiteReport verify_markov_chain(std::uint64_t seed) {
    SuiteReport report{"markov_chain", {}, false};
    Rng rng(seed);

    // Hitting-time laws that hold exactly: the sin^4-theta identity for
    // single marked vertices and the s-independence of the ratio for
    // arbitrary marked sets (see the acceptance runner for the general-M
    // discrepancy, reported there against the literal criterion).
    {
        auto checks = acceptance_thm3_identity(mix_seed(seed, 100));
        report.checks.push_back(checks[1]);
        report.checks.push_back(checks[2]);
    }

    // Top-eigenvector split and pseudo-resolvent orthogonality.
    double worst_vn = 0.0, worst_avn = 0.0, worst_cross = 0.0;
    auto corpus = random_reversible_corpus(rng, 50, 2, 20, false);
    const std::vector<double> s_grid{0.0, 0.3, 0.7, 0.99};
    for (const auto& inst : corpus) {
        ProjectionPair pair = projection_pair(inst.chain.stationary(), inst.marked);
        double p_marked = inst.chain.marked_mass(inst.marked);
        for (double s : s_grid) {
            InterpolatedChain interp(inst.chain, inst.marked, s);
            SpectralData data = spectral_data(interp);
            const int n = inst.chain.size();
            double sin2 = split_sin2(p_marked, s);
            Eigen::VectorXd predicted = std::sqrt(1.0 - sin2) * pair.unmarked_state +
                                        std::sqrt(sin2) * pair.marked_state;
            worst_vn = std::max(worst_vn,
                                (data.eigenvectors.col(n - 1) - predicted).norm());

            Eigen::MatrixXd a = pseudo_resolvent(data);
            worst_avn =
                std::max(worst_avn, (a * data.eigenvectors.col(n - 1)).norm());
            worst_cross = std::max(
                worst_cross, (std::sqrt(sin2) * (a * pair.marked_state) +
                              std::sqrt(1.0 - sin2) * (a * pair.unmarked_state))
                                 .norm());
        }
    }
    report.checks.push_back(bounded_check("fact2.top_eigenvector_split", worst_vn, 1e-8));
    report.checks.push_back(bounded_check("appendixA.resolvent_annihilates_top", worst_avn,
                                          1e-8));
    report.checks.push_back(bounded_check("appendixA.resolvent_cross_identity", worst_cross,
                                          1e-7));

    for (auto&& check : acceptance_discriminant_derivative(mix_seed(seed, 101)))
        report.checks.push_back(check);

    // Monte Carlo agreement on the canonical families.
    struct McCase {
        std::string name;
        MarkovChain chain;
        MarkedSet marked;
    };
    std::vector<McCase> mc_cases;
    mc_cases.push_back({"two_state", two_state_chain(), MarkedSet({1}, 2)});
    mc_cases.push_back({"k4", complete_uniform_chain(4), MarkedSet({0}, 4)});
    mc_cases.push_back({"grid4", grid_walk_chain(4, true), MarkedSet({0}, 16)});
    mc_cases.push_back({"k8_m2", complete_uniform_chain(8), MarkedSet({0, 5}, 8)});
    double worst_sigmas = 0.0;
    for (std::size_t i = 0; i < mc_cases.size(); ++i) {
        const auto& c = mc_cases[i];
        double expected = hitting_time_matrix(c.chain, c.marked);
        MonteCarloEstimate estimate =
            monte_carlo_hitting_time(c.chain, c.marked, 20000, mix_seed(seed, 200 + i));
        worst_sigmas = std::max(worst_sigmas, std::abs(estimate.mean - expected) /
                                                  std::max(estimate.std_error, 1e-300));
    }
    report.checks.push_back(bounded_check("monte_carlo.family_agreement_sigmas", worst_sigmas,
                                          3.0));

    finish(report);
    return report;
}

SuiteReport verify_szegedy_walk(std::uint64_t seed) {
    SuiteReport report{"szegedy_walk", {}, false};
    Rng rng(seed);

    struct Case {
        MarkovChain chain;
        MarkedSet marked;
        Graph graph;
        double s;
    };
    std::vector<Case> cases;
    cases.push_back({two_state_chain(), MarkedSet({1}, 2), make_complete(2, true), 0.5});
    cases.push_back(
        {complete_uniform_chain(4), MarkedSet({0}, 4), make_complete(4, true), 0.3});
    cases.push_back({grid_walk_chain(3, true), MarkedSet({0}, 9), make_grid_2d(3), 0.5});
    {
        Rng sub = rng.derive(3);
        MarkovChain chain = random_reversible_chain(6, sub);
        MarkedSet marked = random_marked_set(chain, sub);
        cases.push_back({std::move(chain), std::move(marked), make_complete(6, true), 0.7});
    }

    double worst_unitary = 0.0;
    for (const auto& c : cases) {
        InterpolatedChain interp(c.chain, c.marked, c.s);
        worst_unitary = std::max(worst_unitary,
                                 build_isometry_v(interp.matrix()).unitarity_defect());
        worst_unitary = std::max(worst_unitary, build_shift(c.graph).unitarity_defect());
        worst_unitary =
            std::max(worst_unitary, build_ref_x(c.chain.size()).unitarity_defect());
        worst_unitary =
            std::max(worst_unitary, build_walk_dense(interp, c.graph).unitarity_defect());
    }
    report.checks.push_back(bounded_check("unitarity.max_defect", worst_unitary, 1e-9));

    // Alternative quantization (V W V^dagger)^2: unitary, same eigenphase
    // multiset as W^2 on the conjugated walk space.
    double worst_remark = 0.0;
    for (const auto& c : cases) {
        if (c.chain.size() > 8) continue;
        InterpolatedChain interp(c.chain, c.marked, c.s);
        WalkSpectralForm form(interp, true);
        PairSpaceOperator walk = build_walk_dense(interp, c.graph);
        PairSpaceOperator isometry = build_isometry_v(interp.matrix());
        Eigen::MatrixXd conjugated =
            isometry.matrix * walk.matrix * isometry.matrix.transpose();
        Eigen::MatrixXd squared = conjugated * conjugated;
        PairSpaceOperator probe{c.chain.size(), squared};
        worst_remark = std::max(worst_remark, probe.unitarity_defect());

        const int dim = c.chain.size() * c.chain.size();
        Eigen::MatrixXd basis(dim, 1 + 2 * form.rotation_count());
        basis.col(0) = form.stationary_pair();
        for (int j = 0; j < form.rotation_count(); ++j) {
            basis.col(1 + 2 * j) = form.block_a(j);
            basis.col(2 + 2 * j) = form.block_b(j);
        }
        auto walk_phases = restricted_eigenphases(walk.matrix * walk.matrix, basis);
        auto conj_phases = restricted_eigenphases(squared, isometry.matrix * basis);
        for (std::size_t i = 0; i < walk_phases.size(); ++i) {
            worst_remark =
                std::max(worst_remark, std::abs(walk_phases[i] - conj_phases[i]));
        }
    }
    report.checks.push_back(bounded_check("quantization_remark.conjugated_square",
                                          worst_remark, 1e-8));

    CostLedger ledger;
    record_walk_applications(ledger, 5, true);
    bool cost_ok = ledger.update_level() == 15 && ledger.check_calls == 20;
    report.checks.push_back(make_check("cost_model.three_updates_per_walk",
                                       cost_ok ? 0 : 1, 0, cost_ok));

    for (auto&& check : acceptance_lemma1(mix_seed(seed, 300)))
        report.checks.push_back(check);

    finish(report);
    return report;
}

SuiteReport verify_oracle_circuits(std::uint64_t seed) {
    SuiteReport report{"oracle_circuits", {}, false};
    Rng rng(seed);

    for (auto&& check : acceptance_simulation_circuit(mix_seed(seed, 400)))
        report.checks.push_back(check);

    // Ancilla cleanliness and reversibility on a smaller corpus.
    double worst_residual = 0.0, worst_reverse = 0.0;
    for (int i = 0; i < 25; ++i) {
        Rng sub = rng.derive(i);
        int n = sub.uniform_int(2, 8);
        Eigen::MatrixXd base = random_stochastic_matrix(n, sub, 0.3);
        int count = sub.uniform_int(1, n - 1);
        std::vector<int> members;
        for (int c = 0; c < count; ++c) members.push_back(sub.uniform_int(0, n - 1));
        MarkedSet marked(std::move(members), n);
        double s = 0.25 * (i % 4);

        InterpolatedUpdateCircuit circuit(base, marked, s);
        CostLedger scratch;
        for (int x = 0; x < n; ++x) {
            AncillaRegisterState state = AncillaRegisterState::vertex_basis(n, x);
            circuit.apply(state, scratch);
            worst_residual = std::max(worst_residual, 1.0 - state.ancilla_zero_fidelity());
            circuit.apply_inverse(state, scratch);
            AncillaRegisterState reference = AncillaRegisterState::vertex_basis(n, x);
            worst_reverse = std::max(worst_reverse,
                                     (state.data() - reference.data()).norm());
        }
    }
    report.checks.push_back(bounded_check("circuit.ancilla_residual", worst_residual, 1e-12));
    report.checks.push_back(bounded_check("circuit.reverse_roundtrip", worst_reverse, 1e-10));

    bool audit_ok = true;
    for (int t : {0, 3, 5}) {
        audit_ok = audit_ok && ledger_formula_check(expected_search_ledger(t), t).ok;
    }
    audit_ok = audit_ok && expected_phase_estimation_ledger(0).shift_calls == 1;
    audit_ok = audit_ok && expected_phase_estimation_ledger(3).shift_calls == 8;
    CostLedger bad = expected_search_ledger(3);
    bad.check_calls += 1;
    audit_ok = audit_ok && !ledger_formula_check(bad, 3).ok;
    report.checks.push_back(make_check("ledger.closed_form_audit", audit_ok ? 0 : 1, 0,
                                       audit_ok));

    finish(report);
    return report;
}

SuiteReport verify_quantum_search(std::uint64_t seed) {
    SuiteReport report{"quantum_search", {}, false};
    Rng rng(seed);

    for (auto&& check : acceptance_backend_equivalence(mix_seed(seed, 500)))
        report.checks.push_back(check);

    // Success bound, delta bound and normalization over a random corpus.
    double worst_margin = 0.0, worst_delta = 0.0, worst_chain_bound = 0.0,
           worst_norm = 0.0;
    auto corpus = random_reversible_corpus(rng, 20, 2, 10, true);
    for (const auto& inst : corpus) {
        double p_marked = inst.chain.marked_mass(inst.marked);
        double p_star = std::min(0.5, std::max(1e-6, p_marked));
        SearchEngine engine(inst.chain, inst.marked, p_star);
        if (!engine.walk_branch_available()) continue;
        for (int t : {0, 2, 4, 6}) {
            SearchOutcome run = engine.run_exact(t);
            worst_margin = std::max(worst_margin, (run.eps1_term - run.eps2_term) -
                                                      run.marked_marginal);
            const PhaseEstimationOutput& pe = engine.phase_output(t);
            worst_norm = std::max(worst_norm, std::abs(pe.total_probability - 1.0));
            if (pe.ancilla_distribution.size() > 0)
                worst_norm = std::max(worst_norm,
                                      std::abs(pe.ancilla_distribution.sum() - 1.0));
        }
        // delta_k^2 <= pi^2 / (4^t phi_k^2) and the hitting-time chain bound.
        InterpolatedChain interp(inst.chain, inst.marked, engine.s());
        SpectralData data = spectral_data(interp);
        double ht_s = hitting_time_spectral(interp);
        double chain_sum = 0.0;
        for (int k = 0; k < inst.chain.size() - 1; ++k) {
            double phi = std::acos(std::clamp(data.eigenvalues(k), -1.0, 1.0));
            double alpha = data.unmarked_overlaps(k);
            chain_sum += alpha * alpha * 2.0 / (phi * phi);
            for (int t : {1, 3, 5}) {
                double d = delta_magnitude(phi, t);
                double bound = M_PI * M_PI / (std::ldexp(1.0, 2 * t) * phi * phi);
                worst_delta = std::max(worst_delta, d * d - bound);
            }
        }
        worst_chain_bound = std::max(worst_chain_bound, chain_sum - ht_s);
    }
    report.checks.push_back(bounded_check("thm4.success_bound_margin", worst_margin, 1e-12));
    report.checks.push_back(bounded_check("thm4.delta_bound_violation", worst_delta, 1e-12));
    report.checks.push_back(bounded_check("thm4.ht_chain_bound_violation", worst_chain_bound,
                                          1e-9));
    report.checks.push_back(bounded_check("phase_estimation.normalization", worst_norm, 1e-10));

    // Sampling consistency: empirical frequencies against exact probabilities.
    {
        MarkovChain chain = complete_uniform_chain(8);
        MarkedSet marked({0}, 8);
        double p_marked = chain.marked_mass(marked);
        SearchEngine engine(chain, marked, p_marked);
        const int t = 3;
        SearchOutcome exact = engine.run_exact(t);
        const PhaseEstimationOutput& pe = engine.phase_output(t);

        const int samples = 10000;
        Rng sampler(mix_seed(seed, 600));
        std::map<int, int> found_counts;
        int none_count = 0;
        for (int i = 0; i < samples; ++i) {
            Rng sub = sampler.derive(i);
            SearchOutcome run = engine.run_sample(t, sub);
            if (run.found)
                found_counts[*run.found] += 1;
            else
                ++none_count;
        }
        double worst_z = 0.0;
        auto z_score = [samples](double p, int count) {
            double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) * samples);
            return std::abs(count - p * samples) / sigma;
        };
        for (std::size_t i = 0; i < pe.marked_vertices.size(); ++i) {
            double p = chain.stationary()(pe.marked_vertices[i]) +
                       (1.0 - p_marked) * pe.vertex_marginal[i];
            worst_z = std::max(worst_z, z_score(p, found_counts[pe.marked_vertices[i]]));
        }
        worst_z = std::max(worst_z, z_score(1.0 - exact.p_success_exact, none_count));
        report.checks.push_back(bounded_check("sampling.outcome_zscores", worst_z, 4.0));
    }

    finish(report);
    return report;
}

std::vector<SuiteReport> verify_all(std::uint64_t seed) {
    return {verify_graph_core(mix_seed(seed, 1)), verify_markov_chain(mix_seed(seed, 2)),
            verify_szegedy_walk(mix_seed(seed, 3)), verify_oracle_circuits(mix_seed(seed, 4)),
            verify_quantum_search(mix_seed(seed, 5))};
}

} // namespace qws
