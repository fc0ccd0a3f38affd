#pragma once

#include <string>
#include <vector>

#include "gopt/dynkin.hpp"
#include "gopt/market.hpp"
#include "gopt/payoff.hpp"

namespace gopt {

struct ConvergenceRow {
    int n = 0;
    double V = 0.0;           // martingale-scheme price
    double V_hat = 0.0;       // symmetric-scheme price (NaN when not computed)
    double error = 0.0;       // |V - reference|
    double scheme_gap = 0.0;  // |V - V_hat| (NaN when V_hat absent)
    double runtime_sec = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    int n_ref = 0;
    double reference = 0.0;   // martingale-scheme price at n_ref
    double fitted_alpha = 0.0;  // least-squares slope of -log error vs log n
    double envelope_C = 0.0;  // max error(n) / (n^{-1/4} (ln n)^{3/4})
    bool monotone_ok = false; // dyadic errors within 2x slack and last < first
};

struct ConvergenceOptions {
    std::vector<int> n_list;      // ascending
    int n_ref = 0;                // default 4 * max(n_list)
    bool both_schemes = true;     // compute the symmetric-scheme column
    std::size_t state_budget = 30000000;
};

// Prices every n in n_list with the memoized engine when the payoff has a
// reducer (FullTree otherwise, capping n at 24), computes errors against
// the n_ref reference, fits the empirical rate, and fits the minimal
// envelope constant for the n^{-1/4} (ln n)^{3/4} profile.
ConvergenceReport convergence_study(const MarketParams& params,
                                    const PayoffFunctional& payoff,
                                    const ConvergenceOptions& options);

}  // namespace gopt
