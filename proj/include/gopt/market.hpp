#pragma once

#include <cstdint>
#include <vector>

namespace gopt {

// Black-Scholes market primitives.
struct MarketParams {
    double z;      // initial stock price, > 0
    double r;      // continuously compounded rate, >= 0
    double kappa;  // volatility, > 0
    double T;      // expiry, > 0
};

enum class LatticeScheme { Martingale, Symmetric };

// One-step log-increment law of the n-step binomial lattice.
//
// Martingale scheme: log moves rT/n +- kappa*sqrt(T/n), up-probability
// 1/(exp(kappa*sqrt(T/n)) + 1), so the discounted price is a martingale
// under the per-period simple rate r_n = exp(rT/n) - 1.
// Symmetric scheme:  log moves (r - kappa^2/2)T/n +- kappa*sqrt(T/n),
// up-probability exactly 1/2.
//
// drift and halfwidth are the primary stored fields; log_up = drift +
// halfwidth and log_down = drift - halfwidth are derived once, which is
// what makes the symmetric structure of the moves exact by construction.
struct StepDistribution {
    int n = 0;
    LatticeScheme scheme = LatticeScheme::Martingale;
    double drift = 0.0;      // per-step log drift
    double halfwidth = 0.0;  // kappa * sqrt(T/n)
    double log_up = 0.0;
    double log_down = 0.0;
    double p_up = 0.0;
    double r_n = 0.0;        // exp(rT/n) - 1
    double disc_step = 0.0;  // exp(-rT/n) = 1/(1 + r_n)
    double dt = 0.0;         // T/n
};

// Right-continuous step function of time: value on [t_i, t_{i+1}) is
// values[i]; breakpoints[0] == 0 and the last breakpoint is <= horizon.
struct PiecewiseConstantPath {
    std::vector<double> breakpoints;
    std::vector<double> values;
    double horizon = 0.0;

    // value at time t (right-continuous convention)
    double at(double t) const;
    // sup over [0, t] of |value|
    double sup_abs(double t) const;
    // sup over [s, t] of |value(u) - value(s)|
    double oscillation(double s, double t) const;
};

using SignSequence = std::vector<int>;  // entries in {-1, +1}

void validate(const MarketParams& params);

StepDistribution crr_step_params(const MarketParams& params, int n,
                                 LatticeScheme scheme);

// Path on breakpoints {kT/n} with value z*exp(sum of the first k log
// increments); horizon T. signs may be shorter than dist.n, in which case
// the path ends at the last provided step.
PiecewiseConstantPath stock_path_from_signs(const MarketParams& params,
                                            const StepDistribution& dist,
                                            const SignSequence& signs);

// Discount factors exp(-r k T/n), k = 0..n.
std::vector<double> discount_factors(const MarketParams& params,
                                     const StepDistribution& dist);

}  // namespace gopt
