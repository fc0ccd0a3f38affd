#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "gopt/market.hpp"
#include "gopt/payoff.hpp"

namespace gopt {

enum class EngineKind { FullTree, MemoizedState };

// Sign prefixes are coded as (1 << k) | bits with bit j (0-based, LSB =
// oldest sign) set iff sign_{j+1} = +1; the leading 1 makes lengths
// self-delimiting. The empty prefix is code 1.
inline std::uint64_t prefix_push(std::uint64_t code, int sign) {
    return (code << 1) | static_cast<std::uint64_t>(sign > 0 ? 1 : 0);
}
constexpr std::uint64_t kEmptyPrefix = 1;

// Element of the consistent stopping-rule family: a first-hit rule over a
// stop set, represented either by explicit sign prefixes (FullTree) or by
// per-level reducer states (MemoizedState). First-hit semantics makes
// consistency automatic; when no stop-set member is hit the rule returns n.
class StoppingRule {
public:
    struct StateSets {
        std::shared_ptr<const ReducerBase> reducer;
        std::vector<std::vector<int>> levels;  // sorted state indices per level
    };

    StoppingRule() = default;
    static StoppingRule from_prefixes(int n, std::unordered_set<std::uint64_t> stops);
    static StoppingRule from_states(int n, StateSets sets);

    int n() const { return n_; }
    bool is_prefix_backed() const { return !state_.has_value(); }
    const std::unordered_set<std::uint64_t>& prefixes() const { return prefix_; }
    const StateSets& states() const { return *state_; }

    // first k with the prefix/state in the stop set, else n
    int first_stop(const SignSequence& signs) const;

    // incremental evaluation along a sign stream (usable mid-DFS)
    class Cursor {
    public:
        explicit Cursor(const StoppingRule& rule);
        bool stops_now() const;  // is the current prefix/state in the stop set
        void push(int sign);
        void pop();
        int depth() const { return depth_; }

    private:
        const StoppingRule* rule_;
        int depth_ = 0;
        std::uint64_t code_ = kEmptyPrefix;
        std::vector<int> state_stack_;
    };
    Cursor cursor() const { return Cursor(*this); }

    // minimality: no stored stop prefix is an ancestor of another
    bool is_minimal() const;

private:
    int n_ = 0;
    std::unordered_set<std::uint64_t> prefix_;
    std::optional<StateSets> state_;
};

struct SolveOptions {
    bool keep_values = true;  // retain per-node (or per-level) values
    bool allow_big = false;   // lift the FullTree n <= 20 comfort cap up to 24
    std::size_t state_budget = 30000000;  // memoized engine state ceiling
};

// Backward-induction result. Values are stored discounted to time 0:
// V_k = min(e^{-rkT/n} X_k, max(e^{-rkT/n} Y_k, E[V_{k+1}])), V_n =
// e^{-rT} Y_n. For homogeneous reducers level_values hold per-unit values
// w with V = e^{-rkT/n} * S * w.
struct GameSolution {
    MarketParams params{};
    StepDistribution dist{};
    std::string payoff_label;
    int n = 0;
    EngineKind engine = EngineKind::FullTree;
    double price = 0.0;
    double F0 = 0.0;
    double Delta0 = 0.0;
    double scale = 0.0;

    StoppingRule writer_rule;  // zeta*: first k with V >= disc X - tol
    StoppingRule holder_rule;  // eta*:  first k with V <= disc Y + tol

    // FullTree backing: level k holds 2^k discounted values, slot = the k
    // prefix bits (oldest sign most significant), i.e. code - 2^k
    std::vector<std::vector<double>> node_values;
    bool has_node_values = false;

    // MemoizedState backing: per-level slot values (discounted, or per-unit
    // when values_are_unit)
    std::shared_ptr<const ReducerBase> reducer;
    std::vector<std::vector<double>> level_values;
    bool has_level_values = false;
    bool values_are_unit = false;

    std::shared_ptr<const PayoffFunctional> payoff;
};

GameSolution solve(const MarketParams& params, const StepDistribution& dist,
                   const PayoffFunctional& payoff, EngineKind engine,
                   const SolveOptions& options = {});

// returns (zeta*, eta*) as stored in the solution
std::pair<StoppingRule, StoppingRule> extract_exercise_rules(
    const GameSolution& solution);

enum class Side { writer_fixed, holder_fixed };

// One-sided value with one player's rule fixed: holder_fixed minimizes over
// the writer (lower value), writer_fixed maximizes over the holder (upper
// value). DFS engine, n <= 24.
double value_against_fixed(const MarketParams& params,
                           const StepDistribution& dist,
                           const PayoffFunctional& payoff,
                           const StoppingRule& fixed, Side side);

struct BruteForceResult {
    double value = 0.0;    // min-max (= max-min, asserted)
    double minmax = 0.0;
    double maxmin = 0.0;
    std::size_t rule_count = 0;
    StoppingRule argmin_rule;  // writer's minimizer
    StoppingRule argmax_rule;  // holder's maximizer
};

// Literal evaluation of the min-max over all consistent rule pairs by
// exact summation over the 2^n sign paths; n <= 4 (|rules| at n=4 is 677).
BruteForceResult brute_force_value(const MarketParams& params,
                                   const StepDistribution& dist,
                                   const PayoffFunctional& payoff, int n);

// all consistent stopping rules for an n-step tree (exported for the
// walkgame brute-force oracle); n <= 4
std::vector<StoppingRule> enumerate_rules(int n);

// Both players forbidden to stop before k_eps = ceil(n*epsilon/T);
// stopping decisions before k_eps are deferred to k_eps and payoffs are
// evaluated at the deferred time. epsilon = 0 reproduces solve exactly.
double truncated_value(const MarketParams& params, const StepDistribution& dist,
                       const PayoffFunctional& payoff, double epsilon);

}  // namespace gopt
