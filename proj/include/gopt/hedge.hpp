#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "gopt/dynkin.hpp"
#include "gopt/market.hpp"
#include "gopt/payoff.hpp"

namespace gopt {

// Writer's self-financing hedge built from a GameSolution via the discrete
// Doob decomposition / martingale representation:
//   gamma_{k+1} = (V_{k+1}^up - V_{k+1}^down) / (S~_{k+1}^up - S~_{k+1}^down)
// in discounted units, bond leg from the self-financing identity. Holdings
// for step k+1 depend only on the first k signs (predictability).
//
// Two backings share one evaluation pathway (Cursor):
//  - explicit per-prefix maps (FullTree solutions, n <= 20);
//  - lazy evaluation from a memoized solution's level values.
struct HedgeStrategy {
    double initial_capital = 0.0;
    int n = 0;
    StoppingRule cancel_rule;  // zeta* from the solution

    struct Node {
        double gamma;  // stock holding for step k+1
        double beta;   // discounted bond holding for step k+1
    };
    // levels[k]: holdings applied on step k+1, indexed by the k prefix bits
    // (slot = prefix code - 2^k); size 2^k
    std::vector<std::vector<Node>> levels;
    bool is_explicit = false;

    // lazy backing
    std::shared_ptr<const GameSolution> backing;

    // Walks a sign path and yields holdings per step. For step k+1 call
    // holdings() after k pushes; gamma is a pure function of the prefix.
    class Cursor {
    public:
        Cursor(const HedgeStrategy& strategy, const StepDistribution& dist);
        void push(int sign);
        void pop();
        // holdings (gamma_{k+1}, beta_{k+1}) for the next step given the
        // current prefix; beta is in discounted units (bond price 1)
        Node holdings() const;
        // discounted lattice stock price at the current node
        double disc_stock() const;
        // discounted node value V_k at the current node (needs a backing)
        double value() const;
        // discounted portfolio value Z_k carried by the stored holdings
        double portfolio() const { return zcheck_stack_.back(); }
        int depth() const { return depth_; }

    private:
        const HedgeStrategy* strat_;
        const GameSolution* sol_;
        int depth_ = 0;
        std::uint64_t code_ = kEmptyPrefix;
        std::vector<int> state_stack_;
        std::vector<double> zcheck_stack_;  // discounted portfolio value per level
        std::vector<double> s_stack_;       // discounted stock price per level
        double up_ = 0.0, down_ = 0.0;  // one-step discounted price factors
    };
    Cursor cursor(const StepDistribution& dist) const { return Cursor(*this, dist); }
};

// capital_override supports the minimal-capital property test; the hedge is
// otherwise built with initial_capital = solution.price
HedgeStrategy build_hedge(const GameSolution& solution,
                          const StepDistribution& dist,
                          std::optional<double> capital_override = std::nullopt);

struct HedgeReport {
    double max_domination_violation = 0.0;  // max over nodes of (R - Z)^+
    double max_selffinancing_residual = 0.0;
    bool pass = false;
    int worst_k = -1;
    std::uint64_t worst_prefix = kEmptyPrefix;
};

// Exhaustive DFS check (n <= 20), in discounted units, of domination
//   Z~_{zeta* ^ k} >= Q~(zeta*, k) - 1e-9*scale   for every path and k,
// and of the self-financing residual at every rebalance.
HedgeReport verify_hedge(const HedgeStrategy& strategy,
                         const MarketParams& params,
                         const StepDistribution& dist,
                         const PayoffFunctional& payoff);

}  // namespace gopt
