#include "gopt/hedge.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace gopt {

namespace {
constexpr int kExplicitCap = 20;
}

// ---- Cursor ----------------------------------------------------------------

HedgeStrategy::Cursor::Cursor(const HedgeStrategy& strategy,
                              const StepDistribution& dist)
    : strat_(&strategy), sol_(strategy.backing.get()) {
    up_ = std::exp(dist.log_up) * dist.disc_step;
    down_ = std::exp(dist.log_down) * dist.disc_step;
    if (sol_) {
        s_stack_.push_back(sol_->params.z);
        if (sol_->engine == EngineKind::MemoizedState && sol_->reducer)
            state_stack_.push_back(sol_->reducer->root_index());
    } else {
        s_stack_.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    zcheck_stack_.push_back(strategy.initial_capital);
}

HedgeStrategy::Node HedgeStrategy::Cursor::holdings() const {
    int k = depth_;
    if (k >= strat_->n) throw std::logic_error("holdings requested at expiry");
    if (strat_->is_explicit) {
        return strat_->levels[static_cast<std::size_t>(k)]
                             [static_cast<std::size_t>(code_ - (1ull << k))];
    }
    if (!sol_) throw std::logic_error("hedge cursor has no backing");
    double s = s_stack_.back();
    double zv = zcheck_stack_.back();
    double gamma;
    if (sol_->engine == EngineKind::FullTree) {
        if (!sol_->has_node_values)
            throw std::logic_error("backing solution kept no node values");
        const auto& next = sol_->node_values[static_cast<std::size_t>(k + 1)];
        std::uint64_t cu = prefix_push(code_, +1) - (1ull << (k + 1));
        std::uint64_t cd = prefix_push(code_, -1) - (1ull << (k + 1));
        double su = s * up_, sd = s * down_;
        gamma = (next[cu] - next[cd]) / (su - sd);
    } else {
        if (!sol_->has_level_values)
            throw std::logic_error("backing solution kept no level values");
        const auto& next = sol_->level_values[static_cast<std::size_t>(k + 1)];
        int cu = sol_->reducer->child_index(k, state_stack_.back(), +1);
        int cd = sol_->reducer->child_index(k, state_stack_.back(), -1);
        double vu = next[static_cast<std::size_t>(cu)];
        double vd = next[static_cast<std::size_t>(cd)];
        if (sol_->values_are_unit) {
            gamma = (up_ * vu - down_ * vd) / (up_ - down_);
        } else {
            double su = s * up_, sd = s * down_;
            gamma = (vu - vd) / (su - sd);
        }
    }
    return Node{gamma, zv - gamma * s};
}

void HedgeStrategy::Cursor::push(int sign) {
    Node h = holdings();
    double s_new = s_stack_.back() * (sign > 0 ? up_ : down_);
    s_stack_.push_back(s_new);
    zcheck_stack_.push_back(h.beta + h.gamma * s_new);
    if (!state_stack_.empty())
        state_stack_.push_back(
            sol_->reducer->child_index(depth_, state_stack_.back(), sign));
    code_ = prefix_push(code_, sign);
    ++depth_;
}

void HedgeStrategy::Cursor::pop() {
    if (depth_ == 0) throw std::logic_error("cursor pop at root");
    s_stack_.pop_back();
    zcheck_stack_.pop_back();
    if (!state_stack_.empty()) state_stack_.pop_back();
    code_ >>= 1;
    --depth_;
}

double HedgeStrategy::Cursor::disc_stock() const {
    if (!sol_) throw std::logic_error("hedge cursor has no backing");
    return s_stack_.back();
}

double HedgeStrategy::Cursor::value() const {
    if (!sol_) throw std::logic_error("hedge cursor has no backing");
    if (sol_->engine == EngineKind::FullTree) {
        if (!sol_->has_node_values)
            throw std::logic_error("backing solution kept no node values");
        return sol_->node_values[static_cast<std::size_t>(depth_)]
                                [static_cast<std::size_t>(code_ - (1ull << depth_))];
    }
    if (!sol_->has_level_values)
        throw std::logic_error("backing solution kept no level values");
    double v = sol_->level_values[static_cast<std::size_t>(depth_)]
                                 [static_cast<std::size_t>(state_stack_.back())];
    return sol_->values_are_unit ? s_stack_.back() * v : v;
}

// ---- construction -----------------------------------------------------------

HedgeStrategy build_hedge(const GameSolution& solution,
                          const StepDistribution& dist,
                          std::optional<double> capital_override) {
    if (solution.n != dist.n)
        throw std::invalid_argument("distribution does not match the solution");
    HedgeStrategy strat;
    strat.initial_capital = capital_override.value_or(solution.price);
    strat.n = solution.n;
    strat.cancel_rule = solution.writer_rule;
    strat.backing = std::make_shared<GameSolution>(solution);

    if (solution.engine == EngineKind::FullTree) {
        if (!solution.has_node_values)
            throw std::invalid_argument("hedge needs a solution with kept values");
        if (solution.n > kExplicitCap)
            throw std::invalid_argument("explicit hedge supports n <= 20");
        int n = solution.n;
        strat.levels.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            strat.levels[static_cast<std::size_t>(k)].resize(1ull << k);
        // fill the tables through the lazy pathway so both backings yield
        // bitwise identical holdings
        HedgeStrategy::Cursor cur = strat.cursor(dist);
        std::function<void(int, std::uint64_t)> dfs = [&](int k,
                                                          std::uint64_t code) {
            if (k == n) return;
            strat.levels[static_cast<std::size_t>(k)]
                        [static_cast<std::size_t>(code - (1ull << k))] =
                cur.holdings();
            cur.push(+1);
            dfs(k + 1, prefix_push(code, +1));
            cur.pop();
            cur.push(-1);
            dfs(k + 1, prefix_push(code, -1));
            cur.pop();
        };
        dfs(0, kEmptyPrefix);
        strat.is_explicit = true;
    } else {
        if (!solution.has_level_values)
            throw std::invalid_argument("hedge needs a solution with kept values");
        strat.is_explicit = false;
    }
    return strat;
}

// ---- verification -----------------------------------------------------------

HedgeReport verify_hedge(const HedgeStrategy& strategy,
                         const MarketParams& params,
                         const StepDistribution& dist,
                         const PayoffFunctional& payoff) {
    validate(params);
    if (strategy.n != dist.n)
        throw std::invalid_argument("distribution does not match the strategy");
    if (strategy.n > kExplicitCap)
        throw std::invalid_argument("verify_hedge supports n <= 20");

    int n = strategy.n;
    double scale = payoff_scale(payoff, params);
    double tol_dom = 1e-9 * scale;
    double tol_sf = 1e-10 * scale;

    std::vector<double> disc = discount_factors(params, dist);
    double up_factor = std::exp(dist.log_up);
    double down_factor = std::exp(dist.log_down);
    double up_disc = up_factor * dist.disc_step;
    double down_disc = down_factor * dist.disc_step;

    auto cursor = strategy.cursor(dist);
    auto cancel = strategy.cancel_rule.cursor();

    PiecewiseConstantPath path;
    path.horizon = params.T;
    path.breakpoints.push_back(0.0);
    path.values.push_back(params.z);

    // portfolio and discounted stock maintained here, not via the cursor, so
    // loaded strategies without a backing verify the same way as fresh ones
    std::vector<double> Z{strategy.initial_capital};
    std::vector<double> S{params.z};

    HedgeReport rep;

    std::function<void(int, std::uint64_t)> dfs = [&](int k,
                                                      std::uint64_t code) {
        PayoffValues pv = evaluate(payoff, path, k * dist.dt);
        double Ytil = disc[static_cast<std::size_t>(k)] * pv.F;
        double Xtil = disc[static_cast<std::size_t>(k)] * (pv.F + pv.Delta);
        double z_here = Z.back();
        bool stops = cancel.stops_now();

        double viol = Ytil - z_here;
        if (stops && k < n) viol = std::max(viol, Xtil - z_here);
        if (viol > rep.max_domination_violation) {
            rep.max_domination_violation = viol;
            rep.worst_k = k;
            rep.worst_prefix = code;
        }
        if (stops) return;  // cancelled (or expiry): portfolio frozen

        HedgeStrategy::Node h = cursor.holdings();
        double res = std::fabs(h.beta + h.gamma * S.back() - z_here);
        if (res > rep.max_selffinancing_residual)
            rep.max_selffinancing_residual = res;

        double s_prev = path.values.back();
        path.breakpoints.push_back((k + 1) * dist.dt);
        for (int sign : {+1, -1}) {
            path.values.push_back(s_prev * (sign > 0 ? up_factor : down_factor));
            double s_new = S.back() * (sign > 0 ? up_disc : down_disc);
            S.push_back(s_new);
            Z.push_back(h.beta + h.gamma * s_new);
            cursor.push(sign);
            cancel.push(sign);
            dfs(k + 1, prefix_push(code, sign));
            cancel.pop();
            cursor.pop();
            Z.pop_back();
            S.pop_back();
            path.values.pop_back();
        }
        path.breakpoints.pop_back();
    };

    dfs(0, kEmptyPrefix);

    rep.pass = rep.max_domination_violation <= tol_dom &&
               rep.max_selffinancing_residual <= tol_sf;
    return rep;
}

}  // namespace gopt
