// Command-line front end: hitting-time reports, walk verification, the
// search algorithms, the grid benchmark and the full invariant suite.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 capacity.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qws/circuit.hpp"
#include "qws/errors.hpp"
#include "qws/families.hpp"
#include "qws/io.hpp"
#include "qws/search.hpp"
#include "qws/szegedy.hpp"
#include "qws/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;

struct InstanceConfig {
    std::string family = "grid";
    int side = 4;
    int n = 8;
    int dim = 3;
    std::string chain_file;
    std::string graph_file;
    bool lazy = false;
    std::string marked_csv;
    int marked_random = 0;
    std::uint64_t seed = 1;
};

struct Instance {
    qws::MarkovChain chain;
    qws::Graph graph;
    qws::MarkedSet marked;
    nlohmann::json config;
};

void add_instance_options(CLI::App* cmd, InstanceConfig& cfg) {
    cmd->add_option("--family", cfg.family, "grid|complete|cycle|hypercube|file")
        ->check(CLI::IsMember({"grid", "complete", "cycle", "hypercube", "file"}));
    cmd->add_option("--side", cfg.side, "grid side length");
    cmd->add_option("--n", cfg.n, "vertex count for complete/cycle families");
    cmd->add_option("--dim", cfg.dim, "hypercube dimension");
    cmd->add_option("--chain-file", cfg.chain_file, "chain file for --family file");
    cmd->add_option("--graph-file", cfg.graph_file, "graph file for --family file");
    cmd->add_flag("--lazy", cfg.lazy, "replace P by (Id + P)/2");
    cmd->add_option("--marked", cfg.marked_csv, "comma-separated marked vertices");
    cmd->add_option("--marked-random", cfg.marked_random,
                    "draw this many marked vertices from the seed");
    cmd->add_option("--seed", cfg.seed, "base seed");
}

Instance build_instance(const InstanceConfig& cfg) {
    std::optional<qws::MarkovChain> chain;
    std::optional<qws::Graph> graph;
    if (cfg.family == "grid") {
        chain = qws::grid_walk_chain(cfg.side, false);
        graph = qws::make_grid_2d(cfg.side);
    } else if (cfg.family == "complete") {
        chain = qws::complete_uniform_chain(cfg.n);
        graph = qws::make_complete(cfg.n, true);
    } else if (cfg.family == "cycle") {
        chain = qws::cycle_walk_chain(cfg.n);
        graph = qws::make_cycle(cfg.n, true);
    } else if (cfg.family == "hypercube") {
        chain = qws::hypercube_walk_chain(cfg.dim);
        graph = qws::make_hypercube(cfg.dim, true);
    } else {
        if (cfg.chain_file.empty())
            throw qws::InvalidParameterError("--family file needs --chain-file");
        // Content problems in user files are verification failures, not
        // usage errors; rethrow them under the verification exit code.
        try {
            chain = qws::load_chain(cfg.chain_file);
            if (!cfg.graph_file.empty()) graph = qws::load_graph(cfg.graph_file);
        } catch (const qws::Error& err) {
            throw qws::VerificationError(err.what());
        }
        if (!graph) graph = qws::make_complete(chain->size(), true);
    }
    if (cfg.lazy) chain = qws::lazify(*chain);

    qws::MarkedSet marked;
    if (!cfg.marked_csv.empty()) {
        marked = qws::MarkedSet::parse(cfg.marked_csv, chain->size());
    } else if (cfg.marked_random > 0) {
        qws::Rng rng(qws::mix_seed(cfg.seed, 0xabcd));
        std::vector<int> members;
        while (static_cast<int>(members.size()) < cfg.marked_random) {
            int v = rng.uniform_int(0, chain->size() - 1);
            members.push_back(v);
            qws::MarkedSet dedup(members, chain->size());
            members = dedup.members();
        }
        marked = qws::MarkedSet(members, chain->size());
    } else {
        marked = qws::MarkedSet({0}, chain->size());
    }

    nlohmann::json config{{"family", cfg.family}, {"lazy", cfg.lazy},
                          {"seed", cfg.seed},     {"n", chain->size()},
                          {"m", marked.size()},   {"marked", marked.members()}};
    if (cfg.family == "grid") config["side"] = cfg.side;
    if (cfg.family == "hypercube") config["dim"] = cfg.dim;
    if (cfg.family == "file") {
        config["chain_file"] = cfg.chain_file;
        config["graph_file"] = cfg.graph_file;
    }
    return {std::move(*chain), std::move(*graph), std::move(marked), std::move(config)};
}

// Output stream selection: --out path, resolved against QWSEARCH_OUT_DIR for
// relative paths; stdout otherwise.
class OutputTarget {
public:
    explicit OutputTarget(const std::string& path) {
        if (path.empty()) return;
        std::string resolved = path;
        const char* dir = std::getenv("QWSEARCH_OUT_DIR");
        if (dir && *dir && path.front() != '/') resolved = std::string(dir) + "/" + path;
        file_ = std::make_unique<std::ofstream>(resolved);
        if (!*file_) throw qws::InvalidParameterError("cannot open output file: " + resolved);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

int run_ht(const InstanceConfig& cfg, const std::string& out_path, long long mc_trials) {
    Instance inst = build_instance(cfg);
    OutputTarget out(out_path);

    double ht = qws::hitting_time_matrix(inst.chain, inst.marked);
    double p_marked = inst.chain.marked_mass(inst.marked);
    auto emit = [&](nlohmann::json j) {
        j["config"] = inst.config;
        out.stream() << j.dump() << "\n";
    };
    emit({{"quantity", "ht.matrix"}, {"value", ht}});
    emit({{"quantity", "ht.spectral_s1"},
          {"value", qws::hitting_time_spectral(
                        qws::InterpolatedChain(inst.chain, inst.marked, 1.0))}});
    for (int i = 0; i <= 10; ++i) {
        double s = std::min(0.99, 0.1 * i);
        double ht_s =
            qws::hitting_time_spectral(qws::InterpolatedChain(inst.chain, inst.marked, s));
        double sin2 = qws::split_sin2(p_marked, s);
        emit({{"quantity", "ht.interpolated"},
              {"s", s},
              {"value", ht_s},
              {"sin4_ratio", ht_s / (sin2 * sin2)},
              {"predicted", sin2 * sin2 * ht}});
    }
    if (mc_trials > 0) {
        auto estimate = qws::monte_carlo_hitting_time(inst.chain, inst.marked, mc_trials,
                                                      qws::mix_seed(cfg.seed, 7));
        emit({{"quantity", "ht.monte_carlo"},
              {"value", estimate.mean},
              {"std_error", estimate.std_error},
              {"trials", estimate.trials},
              {"capped", estimate.capped_trials}});
    }
    return kExitOk;
}

int run_walk_verify(const InstanceConfig& cfg, const std::string& out_path, double s) {
    Instance inst = build_instance(cfg);
    OutputTarget out(out_path);
    bool all_pass = true;
    auto emit = [&](const std::string& quantity, double value, double tol, bool pass) {
        all_pass = all_pass && pass;
        nlohmann::json j = qws::check_record(quantity, value, tol, pass);
        j["config"] = inst.config;
        out.stream() << j.dump() << "\n";
    };

    qws::InterpolatedChain interp(inst.chain, inst.marked, s);
    auto lemma = qws::verify_lemma1(interp, inst.graph);
    emit("lemma1.eigenphase_multiset", lemma.eigenphase_deviation, 1e-8,
         lemma.eigenphase_deviation <= 1e-8);
    emit("lemma1.pair_reconstruction", lemma.reconstruction_residual, 1e-9,
         lemma.reconstruction_residual <= 1e-9);
    emit("lemma1.walkspace_angle", lemma.max_subspace_angle, 1e-8,
         lemma.max_subspace_angle <= 1e-8);

    qws::PairSpaceOperator walk = qws::build_walk_dense(interp, inst.graph);
    emit("walk.unitarity_defect", walk.unitarity_defect(), 1e-9,
         walk.unitarity_defect() <= 1e-9);

    qws::InterpolatedUpdateCircuit circuit(inst.chain.matrix(), inst.marked, s);
    Eigen::MatrixXd induced = circuit.induced_isometry();
    qws::PairSpaceOperator direct = qws::build_isometry_v(interp.matrix());
    double worst = 0.0;
    for (int x = 0; x < inst.chain.size(); ++x) {
        worst = std::max(worst, (induced.col(x) - direct.matrix.col(x * inst.chain.size()))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    emit("circuit.induced_vs_direct", worst, 1e-10, worst <= 1e-10);

    return all_pass ? kExitOk : kExitVerificationFailure;
}

int run_search(const InstanceConfig& cfg, const std::string& out_path, double p_star, int t,
               bool auto_mode, double pmin, double htmax, int reps, const std::string& mode_str,
               int runs) {
    int selected = 0;
    if (p_star > 0.0 && !auto_mode && pmin <= 0.0 && htmax <= 0.0) selected = 1;
    if (auto_mode) ++selected;
    if (pmin > 0.0) ++selected;
    if (htmax > 0.0 && !auto_mode && pmin <= 0.0) ++selected;
    if (selected != 1)
        throw CLI::ValidationError(
            "search", "select exactly one of: fixed (--p-star with --t), --auto, --pmin, --htmax");
    qws::SearchMode mode =
        mode_str == "sample" ? qws::SearchMode::Sample : qws::SearchMode::Exact;

    Instance inst = build_instance(cfg);
    OutputTarget out(out_path);
    auto emit = [&](nlohmann::json j) {
        j["config"] = inst.config;
        out.stream() << j.dump() << "\n";
    };

    for (int run = 0; run < runs; ++run) {
        std::uint64_t run_seed = qws::mix_seed(cfg.seed, run);
        if (auto_mode) {
            double p = p_star > 0.0 ? p_star : inst.chain.marked_mass(inst.marked);
            auto outcome =
                qws::quantum_walk_search_auto(inst.chain, inst.marked, p, reps, mode, run_seed);
            emit(qws::to_json(outcome));
        } else if (pmin > 0.0) {
            std::optional<double> bound;
            if (htmax > 0.0) bound = htmax;
            auto outcome = qws::search_with_pmin(inst.chain, inst.marked, pmin, bound, reps,
                                                 mode, run_seed);
            emit(qws::to_json(outcome));
        } else if (htmax > 0.0) {
            auto outcome =
                qws::search_with_htmax(inst.chain, inst.marked, htmax, reps, mode, run_seed);
            emit(qws::to_json(outcome));
        } else {
            auto outcome =
                qws::quantum_walk_search(inst.chain, inst.marked, p_star, t, mode, run_seed);
            emit(qws::to_json(outcome));
        }
    }
    return kExitOk;
}

int run_grid_bench(const std::string& sides_csv, int m, const std::string& out_path,
                   int side_cap) {
    std::vector<int> sides;
    std::stringstream ss(sides_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) sides.push_back(std::stoi(item));
    }
    if (sides.empty()) throw CLI::ValidationError("grid-bench", "--sides must be nonempty");

    OutputTarget out(out_path);
    out.stream() << "side,n,p_marked,ht,minimal_t,pow2_t,update_calls,ratio_t_sqrt_ht,"
                    "ratio_ht_nlogn,skipped,reason\n";
    for (const auto& row : qws::grid_bench(sides, m, side_cap)) {
        out.stream() << row.side << "," << row.n << "," << row.p_marked << ","
                     << row.hitting_time << "," << row.minimal_t << "," << row.pow2_t << ","
                     << row.update_calls << "," << row.ratio_t_sqrt_ht << ","
                     << row.ratio_ht_nlogn << "," << (row.skipped ? 1 : 0) << ","
                     << row.skip_reason << "\n";
    }
    return kExitOk;
}

int run_verify_all(std::uint64_t seed, const std::string& out_path) {
    OutputTarget out(out_path);
    bool all_pass = true;
    for (const auto& suite : qws::verify_all(seed)) {
        for (const auto& check : suite.checks) {
            nlohmann::json j =
                qws::check_record(suite.name + "." + check.quantity, check.value,
                                  check.tolerance, check.pass);
            out.stream() << j.dump() << "\n";
        }
        nlohmann::json summary{{"suite", suite.name},
                               {"status", suite.pass ? "pass" : "fail"}};
        out.stream() << summary.dump() << "\n";
        all_pass = all_pass && suite.pass;
    }
    return all_pass ? kExitOk : kExitVerificationFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-walk search toolkit"};
    app.require_subcommand(1);

    InstanceConfig cfg;
    std::string out_path;
    long long mc_trials = 0;
    double s = 0.5;
    double p_star = 0.0;
    int t = 0;
    bool auto_mode = false;
    double pmin = 0.0, htmax = 0.0;
    int reps = 28;
    std::string mode_str = "exact";
    int runs = 1;
    std::string sides_csv = "4,8,16";
    int bench_m = 1;
    int side_cap = 16;
    std::uint64_t verify_seed = 1;

    auto* ht_cmd = app.add_subcommand("ht", "hitting-time report");
    add_instance_options(ht_cmd, cfg);
    ht_cmd->add_option("--out", out_path, "output file (JSON lines)");
    ht_cmd->add_option("--mc-trials", mc_trials, "Monte Carlo trials (0 to skip)");

    auto* wv_cmd = app.add_subcommand("walk-verify", "verify the walk on one instance");
    add_instance_options(wv_cmd, cfg);
    wv_cmd->add_option("--out", out_path, "output file (JSON lines)");
    wv_cmd->add_option("--s", s, "interpolation parameter");

    auto* search_cmd = app.add_subcommand("search", "quantum walk search");
    add_instance_options(search_cmd, cfg);
    search_cmd->add_option("--out", out_path, "output file (JSON lines)");
    search_cmd->add_option("--p-star", p_star, "target marked mass (fixed mode)");
    search_cmd->add_option("--t", t, "phase-estimation bits (fixed mode)");
    search_cmd->add_flag("--auto", auto_mode, "doubling loop over t");
    search_cmd->add_option("--pmin", pmin, "lower bound on the marked mass");
    search_cmd->add_option("--htmax", htmax, "upper bound on the hitting time");
    search_cmd->add_option("--reps", reps, "repetitions per level/probe");
    search_cmd->add_option("--mode", mode_str, "exact|sample")
        ->check(CLI::IsMember({"exact", "sample"}));
    search_cmd->add_option("--runs", runs, "number of seeded runs to emit");

    auto* bench_cmd = app.add_subcommand("grid-bench", "2D-grid scaling benchmark");
    bench_cmd->add_option("--sides", sides_csv, "comma-separated grid sides");
    bench_cmd->add_option("--m", bench_m, "number of marked vertices");
    bench_cmd->add_option("--side-cap", side_cap, "largest side run exactly");
    bench_cmd->add_option("--out", out_path, "output file (CSV)");

    auto* verify_cmd = app.add_subcommand("verify-all", "run every invariant suite");
    verify_cmd->add_option("--seed", verify_seed, "corpus seed");
    verify_cmd->add_option("--out", out_path, "output file (JSON lines)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ht_cmd->parsed()) return run_ht(cfg, out_path, mc_trials);
        if (wv_cmd->parsed()) return run_walk_verify(cfg, out_path, s);
        if (search_cmd->parsed())
            return run_search(cfg, out_path, p_star, t, auto_mode, pmin, htmax, reps, mode_str,
                              runs);
        if (bench_cmd->parsed()) return run_grid_bench(sides_csv, bench_m, out_path, side_cap);
        if (verify_cmd->parsed()) return run_verify_all(verify_seed, out_path);
    } catch (const CLI::ValidationError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const qws::CapacityError& err) {
        std::cerr << "capacity error: " << err.what() << "\n";
        return kExitCapacity;
    } catch (const qws::VerificationError& err) {
        std::cerr << "verification failure: " << err.what() << "\n";
        return kExitVerificationFailure;
    } catch (const qws::DomainError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const qws::InvalidParameterError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "verification failure: " << err.what() << "\n";
        return kExitVerificationFailure;
    }
    return kExitUsage;
}
