#include "gopt/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gopt {

double PiecewiseConstantPath::at(double t) const {
    if (breakpoints.empty()) throw std::invalid_argument("empty path");
    if (t < 0.0 || t > horizon) throw std::invalid_argument("time out of range");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    std::size_t i = static_cast<std::size_t>(it - breakpoints.begin());
    return values[i - 1];
}

double PiecewiseConstantPath::sup_abs(double t) const {
    double m = 0.0;
    for (std::size_t i = 0; i < breakpoints.size() && breakpoints[i] <= t; ++i)
        m = std::max(m, std::fabs(values[i]));
    return m;
}

double PiecewiseConstantPath::oscillation(double s, double t) const {
    double vs = at(s);
    double m = 0.0;
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        if (breakpoints[i] > t) break;
        if (breakpoints[i] >= s) m = std::max(m, std::fabs(values[i] - vs));
    }
    return m;
}

void validate(const MarketParams& params) {
    if (!(params.z > 0.0) || !std::isfinite(params.z))
        throw std::invalid_argument("z must be positive and finite");
    if (!(params.kappa > 0.0) || !std::isfinite(params.kappa))
        throw std::invalid_argument("kappa must be positive and finite");
    if (!(params.T > 0.0) || !std::isfinite(params.T))
        throw std::invalid_argument("T must be positive and finite");
    if (!(params.r >= 0.0) || !std::isfinite(params.r))
        throw std::invalid_argument("r must be nonnegative and finite");
}

StepDistribution crr_step_params(const MarketParams& params, int n,
                                 LatticeScheme scheme) {
    validate(params);
    if (n < 1) throw std::invalid_argument("n must be >= 1");

    StepDistribution d;
    d.n = n;
    d.scheme = scheme;
    d.dt = params.T / n;
    d.halfwidth = params.kappa * std::sqrt(d.dt);
    d.r_n = std::exp(params.r * d.dt) - 1.0;
    d.disc_step = std::exp(-params.r * d.dt);
    if (scheme == LatticeScheme::Martingale) {
        d.drift = params.r * d.dt;
        d.p_up = 1.0 / (std::exp(d.halfwidth) + 1.0);
    } else {
        d.drift = (params.r - 0.5 * params.kappa * params.kappa) * d.dt;
        d.p_up = 0.5;
    }
    d.log_up = d.drift + d.halfwidth;
    d.log_down = d.drift - d.halfwidth;
    return d;
}

PiecewiseConstantPath stock_path_from_signs(const MarketParams& params,
                                            const StepDistribution& dist,
                                            const SignSequence& signs) {
    validate(params);
    if (static_cast<int>(signs.size()) > dist.n)
        throw std::invalid_argument("more signs than lattice steps");
    PiecewiseConstantPath path;
    path.horizon = params.T;
    path.breakpoints.reserve(signs.size() + 1);
    path.values.reserve(signs.size() + 1);
    path.breakpoints.push_back(0.0);
    path.values.push_back(params.z);
    double log_s = 0.0;
    for (std::size_t k = 0; k < signs.size(); ++k) {
        int s = signs[k];
        if (s != 1 && s != -1) throw std::invalid_argument("sign not in {-1,+1}");
        log_s += (s > 0) ? dist.log_up : dist.log_down;
        path.breakpoints.push_back(static_cast<double>(k + 1) * dist.dt);
        path.values.push_back(params.z * std::exp(log_s));
    }
    return path;
}

std::vector<double> discount_factors(const MarketParams& params,
                                     const StepDistribution& dist) {
    std::vector<double> disc(static_cast<std::size_t>(dist.n) + 1);
    for (int k = 0; k <= dist.n; ++k)
        disc[static_cast<std::size_t>(k)] = std::exp(-params.r * k * dist.dt);
    return disc;
}

}  // namespace gopt
