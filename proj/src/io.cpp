#include "qws/io.hpp"

#include <fstream>
#include <sstream>

#include "qws/errors.hpp"

namespace qws {

namespace {

// Strips comments and blank lines, yielding content lines one at a time.
bool next_content_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = true;
        for (char ch : line) {
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                blank = false;
                break;
            }
        }
        if (!blank) return true;
    }
    return false;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameterError("cannot open file: " + path);
    return in;
}

} // namespace

Graph parse_graph(std::istream& in) {
    std::string line;
    if (!next_content_line(in, line)) throw InvalidParameterError("empty graph file");
    int n = 0;
    {
        std::istringstream iss(line);
        if (!(iss >> n)) throw InvalidParameterError("graph file must start with a vertex count");
    }
    std::vector<std::pair<int, int>> edges;
    while (next_content_line(in, line)) {
        std::istringstream iss(line);
        int u, v;
        if (!(iss >> u >> v)) throw InvalidParameterError("bad edge line: " + line);
        edges.emplace_back(u, v);
    }
    return Graph(n, std::move(edges));
}

Graph load_graph(const std::string& path) {
    auto in = open_or_throw(path);
    return parse_graph(in);
}

void write_graph(const Graph& g, std::ostream& out) {
    out << g.vertex_count() << "\n";
    for (const auto& [u, v] : g.edges()) out << u << " " << v << "\n";
}

Eigen::MatrixXd parse_chain_matrix(std::istream& in) {
    std::string line;
    if (!next_content_line(in, line)) throw InvalidParameterError("empty chain file");
    int n = 0;
    {
        std::istringstream iss(line);
        if (!(iss >> n)) throw InvalidParameterError("chain file must start with a dimension");
    }
    if (n < 1) throw InvalidParameterError("chain dimension must be positive");
    Eigen::MatrixXd m(n, n);
    for (int x = 0; x < n; ++x) {
        if (!next_content_line(in, line))
            throw InvalidParameterError("chain file ended before all rows were read");
        std::istringstream iss(line);
        for (int y = 0; y < n; ++y) {
            if (!(iss >> m(x, y))) throw InvalidParameterError("bad chain row: " + line);
        }
    }
    return m;
}

MarkovChain load_chain(const std::string& path) {
    auto in = open_or_throw(path);
    return MarkovChain::from_matrix(parse_chain_matrix(in));
}

void write_chain(const MarkovChain& chain, std::ostream& out) {
    const auto& m = chain.matrix();
    out << m.rows() << "\n";
    out.precision(17);
    for (int x = 0; x < m.rows(); ++x) {
        for (int y = 0; y < m.cols(); ++y) out << (y ? " " : "") << m(x, y);
        out << "\n";
    }
}

nlohmann::json to_json(const CostLedger& ledger) {
    return {{"setup", ledger.setup_calls},
            {"update", ledger.update_calls},
            {"check", ledger.check_calls},
            {"shift", ledger.shift_calls}};
}

nlohmann::json to_json(const SearchOutcome& outcome) {
    nlohmann::json j{
        {"result", outcome.found ? nlohmann::json(*outcome.found) : nlohmann::json("none")},
        {"p_success_exact", outcome.p_success_exact},
        {"marked_marginal", outcome.marked_marginal},
        {"eps1_term", outcome.eps1_term},
        {"eps2_term", outcome.eps2_term},
        {"eps2_ht_bound", outcome.eps2_ht_bound},
        {"thm4_preconditions", outcome.thm4_preconditions},
        {"prob_anc_zero", outcome.prob_anc_zero},
        {"ledger", to_json(outcome.ledger)},
        {"p_marked", outcome.p_marked},
        {"p_star", outcome.p_star},
        {"s", outcome.s},
        {"t", outcome.t},
        {"mode", outcome.mode == SearchMode::Exact ? "exact" : "sample"},
        {"seed", outcome.seed}};
    return j;
}

nlohmann::json to_json(const AutoSearchOutcome& outcome) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& lvl : outcome.trace) {
        levels.push_back({{"t", lvl.t},
                          {"runs", lvl.runs},
                          {"p_success_exact", lvl.p_success_exact},
                          {"found", lvl.found},
                          {"ledger", to_json(lvl.ledger)}});
    }
    return {{"result", outcome.found ? nlohmann::json(*outcome.found) : nlohmann::json("none")},
            {"t_final", outcome.t_final},
            {"trace", levels},
            {"ledger", to_json(outcome.total_ledger)},
            {"mode", outcome.mode == SearchMode::Exact ? "exact" : "sample"},
            {"seed", outcome.seed}};
}

nlohmann::json to_json(const PminSearchOutcome& outcome) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& rec : outcome.trace) {
        records.push_back({{"l", rec.l},
                           {"p_star", rec.p_star},
                           {"s", rec.s},
                           {"t", rec.t},
                           {"p_success_exact", rec.p_success_exact},
                           {"found", rec.found}});
    }
    return {{"result", outcome.found ? nlohmann::json(*outcome.found) : nlohmann::json("none")},
            {"trace", records},
            {"ledger", to_json(outcome.total_ledger)},
            {"precondition_broken", outcome.precondition_broken},
            {"p_marked", outcome.p_marked},
            {"seed", outcome.seed}};
}

nlohmann::json to_json(const HtmaxSearchOutcome& outcome) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& rec : outcome.trace) {
        probes.push_back({{"depth", rec.depth},
                          {"p_star", rec.p_star},
                          {"t", rec.t},
                          {"runs", rec.runs},
                          {"zero_outcomes", rec.zero_outcomes},
                          {"walk_runs", rec.walk_runs},
                          {"found", rec.found},
                          {"p_success_exact", rec.p_success_exact},
                          {"prob_anc_zero", rec.prob_anc_zero},
                          {"decision", std::string(1, rec.decision)}});
    }
    return {{"result", outcome.found ? nlohmann::json(*outcome.found) : nlohmann::json("none")},
            {"trace", probes},
            {"ledger", to_json(outcome.total_ledger)},
            {"seed", outcome.seed}};
}

nlohmann::json to_json(const Lemma1Report& report) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : report.blocks) {
        blocks.push_back(
            {{"k", b.k}, {"lambda", b.lambda}, {"phi", b.phi}, {"residual", b.residual}});
    }
    return {{"eigenphase_deviation", report.eigenphase_deviation},
            {"eigenvector_residual", report.eigenvector_residual},
            {"reconstruction_residual", report.reconstruction_residual},
            {"invariance_defect", report.invariance_defect},
            {"max_subspace_angle", report.max_subspace_angle},
            {"dim_analytic", report.dim_analytic},
            {"dim_numeric", report.dim_numeric},
            {"blocks", blocks},
            {"pass", report.pass}};
}

nlohmann::json to_json(const Fact4WindowReport& report) {
    return {{"p_marked", report.p_marked},
            {"eps1", report.eps1},
            {"window_lo", report.window_lo},
            {"window_hi", report.window_hi},
            {"min_value", report.min_value},
            {"endpoint_sin_ok", report.endpoint_sin_ok},
            {"endpoint_cos_ok", report.endpoint_cos_ok},
            {"pass", report.pass}};
}

nlohmann::json check_record(const std::string& quantity, double value, double tolerance,
                            bool pass) {
    return {{"quantity", quantity},
            {"value", value},
            {"tolerance", tolerance},
            {"status", pass ? "pass" : "fail"}};
}

} // namespace qws
