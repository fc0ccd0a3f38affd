#include "gopt/convergence.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double price_at(const MarketParams& params, const PayoffFunctional& payoff,
                int n, LatticeScheme scheme, const ConvergenceOptions& opt) {
    StepDistribution dist = crr_step_params(params, n, scheme);
    SolveOptions so;
    so.keep_values = false;
    so.state_budget = opt.state_budget;
    EngineKind engine =
        payoff.has_reducer() ? EngineKind::MemoizedState : EngineKind::FullTree;
    return solve(params, dist, payoff, engine, so).price;
}

double profile(int n) {
    return std::pow(static_cast<double>(n), -0.25) *
           std::pow(std::log(static_cast<double>(n)), 0.75);
}

}  // namespace

ConvergenceReport convergence_study(const MarketParams& params,
                                    const PayoffFunctional& payoff,
                                    const ConvergenceOptions& options) {
    if (options.n_list.empty())
        throw std::invalid_argument("convergence study needs a nonempty n list");
    for (std::size_t i = 0; i < options.n_list.size(); ++i) {
        if (options.n_list[i] < 2)
            throw std::invalid_argument("convergence study needs n >= 2");
        if (i > 0 && options.n_list[i] <= options.n_list[i - 1])
            throw std::invalid_argument("n list must be strictly ascending");
    }
    int cap = payoff.has_reducer() ? std::numeric_limits<int>::max() : 24;
    if (options.n_list.back() > cap)
        throw std::invalid_argument("n exceeds the full-tree engine cap");

    ConvergenceReport rep;
    rep.n_ref = options.n_ref > 0 ? options.n_ref : 4 * options.n_list.back();
    if (rep.n_ref <= options.n_list.back())
        throw std::invalid_argument("n_ref must exceed max(n_list)");
    if (rep.n_ref > cap)
        throw std::invalid_argument("n_ref exceeds the full-tree engine cap");

    rep.reference =
        price_at(params, payoff, rep.n_ref, LatticeScheme::Martingale, options);

    for (int n : options.n_list) {
        ConvergenceRow row;
        row.n = n;
        auto t0 = std::chrono::steady_clock::now();
        row.V = price_at(params, payoff, n, LatticeScheme::Martingale, options);
        if (options.both_schemes) {
            row.V_hat =
                price_at(params, payoff, n, LatticeScheme::Symmetric, options);
            row.scheme_gap = std::fabs(row.V - row.V_hat);
        } else {
            row.V_hat = kNaN;
            row.scheme_gap = kNaN;
        }
        auto t1 = std::chrono::steady_clock::now();
        row.runtime_sec = std::chrono::duration<double>(t1 - t0).count();
        row.error = std::fabs(row.V - rep.reference);
        rep.rows.push_back(row);
    }

    // least-squares slope of -log error against log n, skipping converged
    // rows where the error is at the noise floor
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const auto& row : rep.rows) {
        if (!(row.error > 1e-15)) continue;
        double x = std::log(static_cast<double>(row.n));
        double y = -std::log(row.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    rep.fitted_alpha =
        m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : kNaN;

    rep.envelope_C = 0.0;
    for (const auto& row : rep.rows)
        rep.envelope_C = std::max(rep.envelope_C, row.error / profile(row.n));

    // dyadic monotonicity with 2x slack: each later error may exceed the
    // running minimum only by that factor, and the last row must improve
    // on the first
    bool ok = true;
    double run_min = std::numeric_limits<double>::infinity();
    for (const auto& row : rep.rows) {
        if (row.error > 2.0 * run_min) ok = false;
        run_min = std::min(run_min, row.error);
    }
    if (rep.rows.back().error >= rep.rows.front().error) ok = false;
    rep.monotone_ok = ok;
    return rep;
}

}  // namespace gopt
