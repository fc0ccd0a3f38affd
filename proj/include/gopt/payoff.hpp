#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gopt/market.hpp"

namespace gopt {

// Incremental evaluator for Monte Carlo scans: the path is fed one grid
// point at a time and F/Delta at the current time are O(1) queries.
// Feeding order: reset(S0) establishes value S0 on [0, t1); advance(t, S)
// appends breakpoint t with value S. F_now()/Delta_now() evaluate at the
// time of the last appended breakpoint.
class PayoffScanner {
public:
    virtual ~PayoffScanner() = default;
    virtual void reset(double S0) = 0;
    virtual void advance(double t, double S) = 0;
    virtual double F_now() const = 0;
    virtual double Delta_now() const = 0;
};

// Exact canonical state reducer for the memoized lattice engine.
// States at level k live on the index range [0, domain_size(k)); the
// domain may be a superset of the reachable set. Transitions are pure
// index arithmetic; payoffs are functions of (level, state) only.
//
// Two flavors:
//  - plain (homogeneous() == false): payoff_at gives absolute (F, Delta)
//    at the node;
//  - homogeneous degree 1 (homogeneous() == true): payoff_unit gives
//    per-unit-of-stock (f, d) with F = S*f and Delta = S*d, and the value
//    recursion runs in per-unit terms.
class ReducerBase {
public:
    virtual ~ReducerBase() = default;
    virtual int domain_size(int k) const = 0;
    virtual int root_index() const = 0;
    virtual int child_index(int k, int idx, int sign) const = 0;
    virtual bool homogeneous() const = 0;
    virtual void payoff_at(int k, int idx, double& F, double& Delta) const;
    virtual void payoff_unit(int k, int idx, double& f, double& d) const;
    // stable integer label for serialization of state stop-sets
    virtual std::array<int, 3> label_of(int k, int idx) const = 0;
    virtual int index_of(int k, const std::array<int, 3>& label) const = 0;
    virtual std::string id() const = 0;
};

// Catalogue descriptor; also the CLI-facing payoff addressing scheme.
struct PayoffSpec {
    std::string name;                 // vanilla_put, vanilla_call, russian,
                                      // integral_call, integral_put,
                                      // asian_call, asian_put
    double K = 0.0;                   // strike (vanilla / asian / integral)
    double m_floor = 0.0;             // russian floor
    double integrand_a = 1.0;         // linear integrand slope for integral payoffs
    std::string penalty = "none";     // none, constant, proportional, integral
    double delta0 = 0.0;              // constant penalty
    double delta = 0.0;               // proportional penalty rate
    double penalty_rate_a = 0.0;      // linear integral-penalty slope
};

// A pair (F, Delta) of path functionals with declared Lipschitz constant.
// G = F + Delta is the writer-side payoff. F and Delta must be >= 0
// everywhere, so G >= F always.
struct PayoffFunctional {
    std::string label;
    double lipschitz_L = 1.0;       // declared L >= 1
    bool truncation_required = false;  // Asian-style: not Lipschitz near t = 0

    std::function<double(const PiecewiseConstantPath&, double)> F;
    std::function<double(const PiecewiseConstantPath&, double)> Delta;

    // optional exact state reducer (memoized engine support)
    std::function<std::shared_ptr<const ReducerBase>(
        const MarketParams&, const StepDistribution&)>
        make_reducer;

    // sequential O(1)-per-step evaluator (all catalogue payoffs provide one)
    std::function<std::unique_ptr<PayoffScanner>()> make_scanner;

    // catalogue metadata; null for user-constructed functionals
    std::shared_ptr<const PayoffSpec> spec;

    bool has_reducer() const { return static_cast<bool>(make_reducer); }
};

// evaluate F, Delta, G at time t; requires 0 <= t <= path.horizon
struct PayoffValues {
    double F;
    double Delta;
    double G;
};
PayoffValues evaluate(const PayoffFunctional& payoff,
                      const PiecewiseConstantPath& path, double t);

// scale = 1 + F_0(z) + Delta_0(z) + z, the normalization used by every
// relative tolerance in the engine
double payoff_scale(const PayoffFunctional& payoff, const MarketParams& params);

// ---- catalogue ----------------------------------------------------------

struct Integrand {
    // f_u(x); must satisfy |f_u(x) - f_u(y)| <= K|x - y|, |f_u(x)| <= K|x|
    std::function<double(double, double)> f;
    double K = 1.0;
};

Integrand linear_integrand(double a);  // f_u(x) = a*x, K = |a|

PayoffFunctional make_vanilla_put(double K);
PayoffFunctional make_vanilla_call(double K);
PayoffFunctional make_russian(double m_floor);
PayoffFunctional make_integral_call(const Integrand& f, double L_strike);
PayoffFunctional make_integral_put(const Integrand& f, double L_strike);
PayoffFunctional make_asian_call(double K);
PayoffFunctional make_asian_put(double K);

// penalty attachments (return a new functional with Delta replaced)
PayoffFunctional with_constant_penalty(PayoffFunctional base, double delta0);
PayoffFunctional with_proportional_penalty(PayoffFunctional base, double delta);
PayoffFunctional with_integral_penalty(PayoffFunctional base,
                                       const Integrand& rate);
PayoffFunctional with_no_penalty(PayoffFunctional base);

// name + parameters lookup used by the CLI config; throws on unknown names
PayoffFunctional make_payoff(const PayoffSpec& spec);

// ---- Lipschitz audit ----------------------------------------------------

struct LipschitzReport {
    double max_ratio_2_1 = 0.0;  // space modulus: |dF| + |dDelta| vs L(s+1)*dist
    double max_ratio_2_2 = 0.0;  // time modulus
    bool pass = false;
};

// Empirical check of the two declared moduli over all path pairs and all
// ordered time pairs s <= t from `times`. pass iff every ratio <= 1 + 1e-9.
LipschitzReport lipschitz_check(const PayoffFunctional& payoff,
                                const std::vector<PiecewiseConstantPath>& sample_paths,
                                const std::vector<double>& times);

}  // namespace gopt
