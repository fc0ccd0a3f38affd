#pragma once

#include <string>

#include "gopt/dynkin.hpp"
#include "gopt/hedge.hpp"

namespace gopt {

// Versioned JSON container ("gopt.solution" / "gopt.hedge", version 1).
// Solutions persist market, scheme, n, payoff label, price and the exercise
// rules as stop-set lists (prefix codes, or per-level state labels plus the
// reducer id). Values and payoff callables are not persisted; loaded
// solutions support rule queries and metadata. Hedges persist the per-prefix
// gamma/beta maps (explicit backing only) and the cancel rule.
//
// Loading validates the format tag, version, and rule minimality (a stop
// set containing a proper ancestor of another entry is rejected).

void save_solution(const GameSolution& solution, const std::string& path);
GameSolution load_solution(const std::string& path);

// Reattaches payoff-dependent parts after load: rebuilds the reducer for
// state-backed rules; throws if the payoff does not match the stored id.
void rebind_solution(GameSolution& solution, const PayoffFunctional& payoff);

void save_hedge(const HedgeStrategy& strategy, const std::string& path);
HedgeStrategy load_hedge(const std::string& path);

std::string solution_to_json(const GameSolution& solution);
std::string hedge_to_json(const HedgeStrategy& strategy);
GameSolution solution_from_json(const std::string& text);
HedgeStrategy hedge_from_json(const std::string& text);

}  // namespace gopt
