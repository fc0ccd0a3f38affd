#include "gopt/dynkin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace gopt {

// ---- StoppingRule ---------------------------------------------------------

StoppingRule StoppingRule::from_prefixes(int n,
                                         std::unordered_set<std::uint64_t> stops) {
    StoppingRule r;
    r.n_ = n;
    r.prefix_ = std::move(stops);
    return r;
}

StoppingRule StoppingRule::from_states(int n, StateSets sets) {
    if (!sets.reducer) throw std::invalid_argument("state rule needs a reducer");
    sets.levels.resize(static_cast<std::size_t>(n) + 1);
    for (auto& lv : sets.levels) std::sort(lv.begin(), lv.end());
    StoppingRule r;
    r.n_ = n;
    r.state_ = std::move(sets);
    return r;
}

int StoppingRule::first_stop(const SignSequence& signs) const {
    Cursor c(*this);
    if (c.stops_now()) return 0;
    int limit = std::min<int>(n_, static_cast<int>(signs.size()));
    for (int k = 0; k < limit; ++k) {
        c.push(signs[static_cast<std::size_t>(k)]);
        if (c.stops_now()) return k + 1;
    }
    return n_;
}

StoppingRule::Cursor::Cursor(const StoppingRule& rule) : rule_(&rule) {
    if (rule.state_.has_value())
        state_stack_.push_back(rule.state_->reducer->root_index());
}

bool StoppingRule::Cursor::stops_now() const {
    if (depth_ >= rule_->n_) return true;  // stop at expiry is forced
    if (rule_->state_.has_value()) {
        const auto& lv = rule_->state_->levels[static_cast<std::size_t>(depth_)];
        return std::binary_search(lv.begin(), lv.end(), state_stack_.back());
    }
    return rule_->prefix_.count(code_) != 0;
}

void StoppingRule::Cursor::push(int sign) {
    if (rule_->state_.has_value()) {
        int idx = rule_->state_->reducer->child_index(depth_, state_stack_.back(),
                                                      sign);
        state_stack_.push_back(idx);
    }
    code_ = prefix_push(code_, sign);
    ++depth_;
}

void StoppingRule::Cursor::pop() {
    if (depth_ == 0) throw std::logic_error("cursor pop at root");
    if (rule_->state_.has_value()) state_stack_.pop_back();
    code_ >>= 1;
    --depth_;
}

bool StoppingRule::is_minimal() const {
    if (state_.has_value()) return true;
    for (std::uint64_t code : prefix_) {
        for (std::uint64_t c = code >> 1; c >= kEmptyPrefix; c >>= 1)
            if (prefix_.count(c)) return false;
    }
    return true;
}

// ---- full-tree engine -----------------------------------------------------

namespace {

constexpr int kFullTreeComfortCap = 20;
constexpr int kFullTreeHardCap = 24;

// Shared per-solve context for the path-walking recursions. The path is
// mutated in place: one breakpoint per depth, values multiplied by the
// up/down factor of each branch.
struct TreeContext {
    const StepDistribution& dist;
    const PayoffFunctional& payoff;
    int n;
    int k_min;
    double tol;
    std::vector<double> disc;
    double up_factor, down_factor, p, q;
    PiecewiseConstantPath path;

    explicit TreeContext(const MarketParams& params, const StepDistribution& d,
                         const PayoffFunctional& po, int kmin, double tolerance)
        : dist(d),
          payoff(po),
          n(d.n),
          k_min(kmin),
          tol(tolerance),
          disc(discount_factors(params, d)),
          up_factor(std::exp(d.log_up)),
          down_factor(std::exp(d.log_down)),
          p(d.p_up),
          q(1.0 - d.p_up) {
        path.horizon = params.T;
        path.breakpoints.reserve(static_cast<std::size_t>(n) + 1);
        path.values.reserve(static_cast<std::size_t>(n) + 1);
        path.breakpoints.push_back(0.0);
        path.values.push_back(params.z);
    }

    void discounted_payoffs(int k, double& Ytil, double& Xtil) {
        PayoffValues pv = evaluate(payoff, path, k * dist.dt);
        Ytil = disc[static_cast<std::size_t>(k)] * pv.F;
        Xtil = disc[static_cast<std::size_t>(k)] * (pv.F + pv.Delta);
    }

    template <typename Fn>
    void descend(int k, Fn&& fn) {
        double S = path.values.back();
        path.breakpoints.push_back((k + 1) * dist.dt);
        path.values.push_back(S * up_factor);
        fn(+1);
        path.values.back() = S * down_factor;
        fn(-1);
        path.breakpoints.pop_back();
        path.values.pop_back();
    }
};

double tree_values(TreeContext& ctx, int k, std::uint64_t code,
                   std::vector<std::vector<double>>& values) {
    double Ytil, Xtil;
    ctx.discounted_payoffs(k, Ytil, Xtil);
    double V;
    if (k == ctx.n) {
        V = Ytil;
    } else {
        double child[2];
        ctx.descend(k, [&](int sign) {
            child[sign > 0 ? 0 : 1] =
                tree_values(ctx, k + 1, prefix_push(code, sign), values);
        });
        double E = ctx.p * child[0] + ctx.q * child[1];
        V = (k < ctx.k_min) ? E : std::min(Xtil, std::max(Ytil, E));
    }
    values[static_cast<std::size_t>(k)]
          [static_cast<std::size_t>(code - (1ull << k))] = V;
    return V;
}

// Stop sets come from a second walk: a node's own stop decision must be
// known before its descendants can be skipped, so extraction cannot ride
// along with the value recursion.
void tree_stops(TreeContext& ctx, int k, std::uint64_t code, bool w_stopped,
                bool h_stopped, const std::vector<std::vector<double>>& values,
                std::unordered_set<std::uint64_t>& wstops,
                std::unordered_set<std::uint64_t>& hstops) {
    if (k == ctx.n || (w_stopped && h_stopped)) return;
    if (k >= ctx.k_min) {
        double Ytil, Xtil;
        ctx.discounted_payoffs(k, Ytil, Xtil);
        double V = values[static_cast<std::size_t>(k)]
                         [static_cast<std::size_t>(code - (1ull << k))];
        if (!w_stopped && V >= Xtil - ctx.tol) {
            wstops.insert(code);
            w_stopped = true;
        }
        if (!h_stopped && V <= Ytil + ctx.tol) {
            hstops.insert(code);
            h_stopped = true;
        }
    }
    ctx.descend(k, [&](int sign) {
        tree_stops(ctx, k + 1, prefix_push(code, sign), w_stopped, h_stopped,
                   values, wstops, hstops);
    });
}

GameSolution solve_fulltree(const MarketParams& params,
                            const StepDistribution& dist,
                            const PayoffFunctional& payoff,
                            const SolveOptions& options, int k_min) {
    int n = dist.n;
    int cap = options.allow_big ? kFullTreeHardCap : kFullTreeComfortCap;
    if (n > cap)
        throw std::invalid_argument(
            "FullTree supports n <= " + std::to_string(cap) +
            (options.allow_big ? "" : "; raise allow_big for up to 24"));

    GameSolution sol;
    sol.params = params;
    sol.dist = dist;
    sol.payoff_label = payoff.label;
    sol.n = n;
    sol.engine = EngineKind::FullTree;
    sol.scale = payoff_scale(payoff, params);
    sol.payoff = std::make_shared<PayoffFunctional>(payoff);

    TreeContext ctx(params, dist, payoff, k_min, 1e-12 * sol.scale);

    std::vector<std::vector<double>> values(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k)
        values[static_cast<std::size_t>(k)].resize(1ull << k);

    sol.price = tree_values(ctx, 0, kEmptyPrefix, values);

    PayoffValues pv0 = evaluate(payoff, ctx.path, 0.0);
    sol.F0 = pv0.F;
    sol.Delta0 = pv0.Delta;

    std::unordered_set<std::uint64_t> wstops, hstops;
    tree_stops(ctx, 0, kEmptyPrefix, false, false, values, wstops, hstops);
    sol.writer_rule = StoppingRule::from_prefixes(n, std::move(wstops));
    sol.holder_rule = StoppingRule::from_prefixes(n, std::move(hstops));

    if (options.keep_values) {
        sol.node_values = std::move(values);
        sol.has_node_values = true;
    }
    return sol;
}

// ---- memoized engine ------------------------------------------------------

GameSolution solve_memoized(const MarketParams& params,
                            const StepDistribution& dist,
                            const PayoffFunctional& payoff,
                            const SolveOptions& options, int k_min) {
    if (!payoff.has_reducer())
        throw std::invalid_argument("MemoizedState engine requires a reducer");
    auto reducer = payoff.make_reducer(params, dist);
    int n = dist.n;

    std::size_t total_states = 0;
    for (int k = 0; k <= n; ++k) {
        total_states += static_cast<std::size_t>(reducer->domain_size(k));
        if (total_states > options.state_budget)
            throw std::invalid_argument(
                "state budget exceeded for payoff '" + payoff.label +
                "' at n = " + std::to_string(n));
    }

    GameSolution sol;
    sol.params = params;
    sol.dist = dist;
    sol.payoff_label = payoff.label;
    sol.n = n;
    sol.engine = EngineKind::MemoizedState;
    sol.scale = payoff_scale(payoff, params);
    sol.payoff = std::make_shared<PayoffFunctional>(payoff);
    sol.reducer = reducer;
    sol.values_are_unit = reducer->homogeneous();

    std::vector<double> disc = discount_factors(params, dist);
    double p = dist.p_up, q = 1.0 - dist.p_up;
    double up_factor = std::exp(dist.log_up);
    double down_factor = std::exp(dist.log_down);
    bool unit = reducer->homogeneous();
    double tol = 1e-12 * sol.scale;

    std::vector<std::vector<double>> vals(static_cast<std::size_t>(n) + 1);
    std::vector<std::vector<int>> wstops(static_cast<std::size_t>(n) + 1);
    std::vector<std::vector<int>> hstops(static_cast<std::size_t>(n) + 1);

    auto& terminal = vals[static_cast<std::size_t>(n)];
    terminal.resize(static_cast<std::size_t>(reducer->domain_size(n)));
    for (int idx = 0; idx < reducer->domain_size(n); ++idx) {
        double V;
        if (unit) {
            double f, d;
            reducer->payoff_unit(n, idx, f, d);
            V = f;
        } else {
            double F, D;
            reducer->payoff_at(n, idx, F, D);
            V = disc[static_cast<std::size_t>(n)] * F;
        }
        terminal[static_cast<std::size_t>(idx)] = V;
    }

    for (int k = n - 1; k >= 0; --k) {
        const auto& next = vals[static_cast<std::size_t>(k + 1)];
        auto& cur = vals[static_cast<std::size_t>(k)];
        cur.resize(static_cast<std::size_t>(reducer->domain_size(k)));
        auto& ws = wstops[static_cast<std::size_t>(k)];
        auto& hs = hstops[static_cast<std::size_t>(k)];
        for (int idx = 0; idx < reducer->domain_size(k); ++idx) {
            int cu = reducer->child_index(k, idx, +1);
            int cd = reducer->child_index(k, idx, -1);
            double V;
            if (unit) {
                double f, d;
                reducer->payoff_unit(k, idx, f, d);
                double E = dist.disc_step *
                           (p * up_factor * next[static_cast<std::size_t>(cu)] +
                            q * down_factor * next[static_cast<std::size_t>(cd)]);
                if (k < k_min) {
                    V = E;
                } else {
                    V = std::min(f + d, std::max(f, E));
                    double tol_u = 1e-12 * (1.0 + f + d);
                    if (V >= f + d - tol_u) ws.push_back(idx);
                    if (V <= f + tol_u) hs.push_back(idx);
                }
            } else {
                double F, D;
                reducer->payoff_at(k, idx, F, D);
                double Ytil = disc[static_cast<std::size_t>(k)] * F;
                double Xtil = disc[static_cast<std::size_t>(k)] * (F + D);
                double E = p * next[static_cast<std::size_t>(cu)] +
                           q * next[static_cast<std::size_t>(cd)];
                if (k < k_min) {
                    V = E;
                } else {
                    V = std::min(Xtil, std::max(Ytil, E));
                    if (V >= Xtil - tol) ws.push_back(idx);
                    if (V <= Ytil + tol) hs.push_back(idx);
                }
            }
            cur[static_cast<std::size_t>(idx)] = V;
        }
    }

    int root = reducer->root_index();
    double v_root = vals[0][static_cast<std::size_t>(root)];
    sol.price = unit ? params.z * v_root : v_root;

    {
        double F, D;
        if (unit) {
            reducer->payoff_unit(0, root, F, D);
            F *= params.z;
            D *= params.z;
        } else {
            reducer->payoff_at(0, root, F, D);
        }
        sol.F0 = F;
        sol.Delta0 = D;
    }

    sol.writer_rule = StoppingRule::from_states(
        n, StoppingRule::StateSets{reducer, std::move(wstops)});
    sol.holder_rule = StoppingRule::from_states(
        n, StoppingRule::StateSets{reducer, std::move(hstops)});

    if (options.keep_values) {
        sol.level_values = std::move(vals);
        sol.has_level_values = true;
    }
    return sol;
}

}  // namespace

GameSolution solve(const MarketParams& params, const StepDistribution& dist,
                   const PayoffFunctional& payoff, EngineKind engine,
                   const SolveOptions& options) {
    validate(params);
    if (dist.n < 1) throw std::invalid_argument("n must be >= 1");
    if (engine == EngineKind::FullTree)
        return solve_fulltree(params, dist, payoff, options, 0);
    return solve_memoized(params, dist, payoff, options, 0);
}

std::pair<StoppingRule, StoppingRule> extract_exercise_rules(
    const GameSolution& solution) {
    return {solution.writer_rule, solution.holder_rule};
}

// ---- play against a fixed rule --------------------------------------------

double value_against_fixed(const MarketParams& params,
                           const StepDistribution& dist,
                           const PayoffFunctional& payoff,
                           const StoppingRule& fixed, Side side) {
    validate(params);
    if (fixed.n() != dist.n)
        throw std::invalid_argument("inconsistent rule rejected: length mismatch");
    if (!fixed.is_minimal())
        throw std::invalid_argument("inconsistent rule rejected: nested prefixes");
    if (dist.n > kFullTreeHardCap)
        throw std::invalid_argument("value_against_fixed supports n <= 24");

    TreeContext ctx(params, dist, payoff, 0, 0.0);
    auto cursor = fixed.cursor();

    std::function<double(int)> dfs = [&](int k) -> double {
        double Ytil, Xtil;
        ctx.discounted_payoffs(k, Ytil, Xtil);
        bool stopped = cursor.stops_now();
        double child[2];
        if (side == Side::holder_fixed) {
            if (stopped) return Ytil;
            ctx.descend(k, [&](int sign) {
                cursor.push(sign);
                child[sign > 0 ? 0 : 1] = dfs(k + 1);
                cursor.pop();
            });
            return std::min(Xtil, ctx.p * child[0] + ctx.q * child[1]);
        }
        if (stopped) return (k == ctx.n) ? Ytil : Xtil;
        ctx.descend(k, [&](int sign) {
            cursor.push(sign);
            child[sign > 0 ? 0 : 1] = dfs(k + 1);
            cursor.pop();
        });
        return std::max(Ytil, ctx.p * child[0] + ctx.q * child[1]);
    };

    return dfs(0);
}

// ---- exhaustive small-n check ---------------------------------------------

std::vector<StoppingRule> enumerate_rules(int n) {
    if (n < 0 || n > 4)
        throw std::invalid_argument("rule enumeration supports 0 <= n <= 4");
    // A rule on the subtree under a prefix either stops at the prefix or
    // recurses into both children; depth n stops implicitly.
    std::function<std::vector<std::vector<std::uint64_t>>(int, std::uint64_t)>
        gen = [&](int depth, std::uint64_t code)
        -> std::vector<std::vector<std::uint64_t>> {
        if (depth == n) return {{}};
        std::vector<std::vector<std::uint64_t>> out;
        out.push_back({code});
        auto left = gen(depth + 1, prefix_push(code, +1));
        auto right = gen(depth + 1, prefix_push(code, -1));
        for (const auto& l : left) {
            for (const auto& r : right) {
                std::vector<std::uint64_t> merged = l;
                merged.insert(merged.end(), r.begin(), r.end());
                out.push_back(std::move(merged));
            }
        }
        return out;
    };
    std::vector<StoppingRule> rules;
    for (auto& stops : gen(0, kEmptyPrefix)) {
        rules.push_back(StoppingRule::from_prefixes(
            n, std::unordered_set<std::uint64_t>(stops.begin(), stops.end())));
    }
    return rules;
}

BruteForceResult brute_force_value(const MarketParams& params,
                                   const StepDistribution& dist,
                                   const PayoffFunctional& payoff, int n) {
    validate(params);
    if (n < 0 || n > 4) throw std::invalid_argument("brute force supports n <= 4");
    if (n > dist.n) throw std::invalid_argument("n exceeds the lattice");

    std::vector<StoppingRule> rules = enumerate_rules(n);
    std::size_t R = rules.size();
    std::size_t P = 1ull << n;
    std::vector<double> disc = discount_factors(params, dist);
    double p = dist.p_up, q = 1.0 - dist.p_up;

    std::vector<double> prob(P);
    std::vector<std::vector<double>> Ytil(P), Xtil(P);
    std::vector<std::vector<int>> stop_at(R, std::vector<int>(P));

    for (std::size_t pi = 0; pi < P; ++pi) {
        SignSequence signs(static_cast<std::size_t>(n));
        double pr = 1.0;
        for (int k = 0; k < n; ++k) {
            int s = ((pi >> (n - 1 - k)) & 1) ? +1 : -1;
            signs[static_cast<std::size_t>(k)] = s;
            pr *= (s > 0) ? p : q;
        }
        prob[pi] = pr;
        PiecewiseConstantPath path = stock_path_from_signs(params, dist, signs);
        Ytil[pi].resize(static_cast<std::size_t>(n) + 1);
        Xtil[pi].resize(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) {
            PayoffValues pv = evaluate(payoff, path, k * dist.dt);
            Ytil[pi][static_cast<std::size_t>(k)] =
                disc[static_cast<std::size_t>(k)] * pv.F;
            Xtil[pi][static_cast<std::size_t>(k)] =
                disc[static_cast<std::size_t>(k)] * (pv.F + pv.Delta);
        }
        for (std::size_t ri = 0; ri < R; ++ri)
            stop_at[ri][pi] = rules[ri].first_stop(signs);
    }

    // E Q(zeta, eta) over every rule pair; the writer pays X at zeta when it
    // strictly precedes eta, otherwise the holder collects Y at eta.
    std::vector<std::vector<double>> EQ(R, std::vector<double>(R, 0.0));
    for (std::size_t zi = 0; zi < R; ++zi) {
        for (std::size_t hi = 0; hi < R; ++hi) {
            double acc = 0.0;
            for (std::size_t pi = 0; pi < P; ++pi) {
                int zk = stop_at[zi][pi], hk = stop_at[hi][pi];
                acc += prob[pi] *
                       ((zk < hk) ? Xtil[pi][static_cast<std::size_t>(zk)]
                                  : Ytil[pi][static_cast<std::size_t>(hk)]);
            }
            EQ[zi][hi] = acc;
        }
    }

    BruteForceResult res;
    res.rule_count = R;
    double minmax = 0.0;
    std::size_t arg_z = 0;
    for (std::size_t zi = 0; zi < R; ++zi) {
        double worst = EQ[zi][0];
        for (std::size_t hi = 1; hi < R; ++hi) worst = std::max(worst, EQ[zi][hi]);
        if (zi == 0 || worst < minmax) {
            minmax = worst;
            arg_z = zi;
        }
    }
    double maxmin = 0.0;
    std::size_t arg_h = 0;
    for (std::size_t hi = 0; hi < R; ++hi) {
        double best = EQ[0][hi];
        for (std::size_t zi = 1; zi < R; ++zi) best = std::min(best, EQ[zi][hi]);
        if (hi == 0 || best > maxmin) {
            maxmin = best;
            arg_h = hi;
        }
    }
    res.minmax = minmax;
    res.maxmin = maxmin;
    res.value = minmax;
    res.argmin_rule = rules[arg_z];
    res.argmax_rule = rules[arg_h];
    return res;
}

double truncated_value(const MarketParams& params, const StepDistribution& dist,
                       const PayoffFunctional& payoff, double epsilon) {
    validate(params);
    if (epsilon < 0.0 || epsilon > params.T)
        throw std::invalid_argument("epsilon outside [0, T]");
    int k_min =
        static_cast<int>(std::ceil(dist.n * epsilon / params.T - 1e-12));
    if (k_min < 0) k_min = 0;
    if (k_min > dist.n) k_min = dist.n;
    SolveOptions options;
    options.keep_values = false;
    options.allow_big = true;
    if (payoff.has_reducer())
        return solve_memoized(params, dist, payoff, options, k_min).price;
    return solve_fulltree(params, dist, payoff, options, k_min).price;
}

}  // namespace gopt
