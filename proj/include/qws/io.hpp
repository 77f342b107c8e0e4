#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "qws/graph.hpp"
#include "qws/ledger.hpp"
#include "qws/markov.hpp"
#include "qws/search.hpp"
#include "qws/szegedy.hpp"

namespace qws {

// Graph text format: first line "n", then one "u v" pair per line
// ("u u" for a self-loop). Blank lines and '#' comments are ignored.
Graph parse_graph(std::istream& in);
Graph load_graph(const std::string& path);
void write_graph(const Graph& g, std::ostream& out);

// Chain text format: first line "n", then n rows of n decimals.
Eigen::MatrixXd parse_chain_matrix(std::istream& in);
MarkovChain load_chain(const std::string& path);
void write_chain(const MarkovChain& chain, std::ostream& out);

nlohmann::json to_json(const CostLedger& ledger);
nlohmann::json to_json(const SearchOutcome& outcome);
nlohmann::json to_json(const AutoSearchOutcome& outcome);
nlohmann::json to_json(const PminSearchOutcome& outcome);
nlohmann::json to_json(const HtmaxSearchOutcome& outcome);
nlohmann::json to_json(const Lemma1Report& report);
nlohmann::json to_json(const Fact4WindowReport& report);

// Structured verification record {quantity, value, tolerance, status}.
nlohmann::json check_record(const std::string& quantity, double value, double tolerance,
                            bool pass);

} // namespace qws
