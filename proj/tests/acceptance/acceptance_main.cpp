// Acceptance harness: twelve end-to-end criteria, one PASS/FAIL line each.
// Every tolerance is pinned here; the exit code is 0 iff all selected
// criteria pass. --criterion N (repeatable) restricts the run.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gopt/convergence.hpp"
#include "gopt/dynkin.hpp"
#include "gopt/embed.hpp"
#include "gopt/hedge.hpp"
#include "gopt/market.hpp"
#include "gopt/payoff.hpp"
#include "gopt/walkgame.hpp"
#include "support/battery.hpp"
#include "support/oracles.hpp"

using namespace gopt;
using gopt_tests::battery;
using gopt_tests::BatteryCase;

namespace {

constexpr std::array<int, 3> kThreadCounts{1, 4, 8};

double now_minus(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

void feed_digest(std::uint64_t& h, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
    }
}

std::uint64_t digest(const std::vector<double>& xs) {
    std::uint64_t h = 1469598103934665603ull;
    for (double x : xs) feed_digest(h, x);
    return h;
}

struct CritOut {
    bool done = false;
    bool pass = false;
    std::string detail;
    double secs = 0.0;
    // per-thread-count reported statistics (criteria that consume threads)
    std::array<std::vector<double>, 3> stats;
};

struct Ctx {
    std::map<int, CritOut> out;
};

std::string fmt(double x, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

MarketParams std_market() { return MarketParams{100.0, 0.02, 0.3, 1.0}; }
MarketParams doubling_market() {
    return MarketParams{100.0, 0.0, std::log(2.0), 1.0};
}

GameSolution auto_solve(const MarketParams& params, const StepDistribution& dist,
                        const PayoffFunctional& payoff) {
    EngineKind engine = payoff.has_reducer() ? EngineKind::MemoizedState
                                             : EngineKind::FullTree;
    return solve(params, dist, payoff, engine);
}

// ---- criterion 1: one-step doubling market by hand ----------------------

void run_c1(Ctx& ctx) {
    CritOut& o = ctx.out[1];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    MarketParams params = doubling_market();
    StepDistribution dist = crr_step_params(params, 1, LatticeScheme::Martingale);
    bool ok = std::fabs(dist.p_up - 1.0 / 3.0) <= 1e-12;

    auto pay5 = with_constant_penalty(make_vanilla_put(100.0), 5.0);
    GameSolution s5 = solve(params, dist, pay5, EngineKind::FullTree);
    ok = ok && std::fabs(s5.price - 5.0) <= 1e-12;

    auto pay50 = with_constant_penalty(make_vanilla_put(100.0), 50.0);
    GameSolution s50 = solve(params, dist, pay50, EngineKind::FullTree);
    ok = ok && std::fabs(s50.price - 100.0 / 3.0) <= 1e-12;

    HedgeStrategy hedge = build_hedge(s50, dist);
    auto cur = hedge.cursor(dist);
    double gamma = cur.holdings().gamma;
    ok = ok && std::fabs(gamma + 1.0 / 3.0) <= 1e-12;
    cur.push(+1);
    ok = ok && std::fabs(cur.portfolio() - 0.0) <= 1e-12;
    cur.pop();
    cur.push(-1);
    ok = ok && std::fabs(cur.portfolio() - 50.0) <= 1e-12;

    o.secs = now_minus(t0);
    o.pass = ok && o.secs < 1.0;
    o.detail = "price(d5)=" + fmt(s5.price, 15) +
               " price(d50)=" + fmt(s50.price, 15) + " gamma=" + fmt(gamma, 15);
    o.done = true;
}

// ---- criterion 2: literal min-max on small trees -------------------------

void run_c2(Ctx& ctx) {
    CritOut& o = ctx.out[2];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    const std::array<std::size_t, 4> expect_rules{2, 5, 26, 677};
    auto cases = battery();
    bool ok = true;
    double worst = 0.0;
    int combos = 0;
    for (const auto& bc : cases) {
        if (bc.label == "put100_none" || bc.label == "russian105_const4")
            continue;  // six combos are enough and these duplicate families
        ++combos;
        for (int n = 1; n <= 4; ++n) {
            StepDistribution dist =
                crr_step_params(bc.market, n, LatticeScheme::Martingale);
            GameSolution sol = solve(bc.market, dist, bc.payoff,
                                     EngineKind::FullTree);
            BruteForceResult bf =
                brute_force_value(bc.market, dist, bc.payoff, n);
            double d1 = std::fabs(bf.minmax - bf.maxmin);
            double d2 = std::fabs(sol.price - bf.minmax);
            worst = std::max(worst, std::max(d1, d2));
            ok = ok && d1 <= 1e-12 && d2 <= 1e-12;
            ok = ok && bf.rule_count == expect_rules[static_cast<std::size_t>(n - 1)];
        }
    }
    o.secs = now_minus(t0);
    o.pass = ok && combos >= 6 && o.secs < 120.0;
    o.detail = std::to_string(combos) + " combos, n=1..4, worst gap " +
               fmt(worst, 3) + ", rule counts 2/5/26/677";
    o.done = true;
}

// ---- criterion 3: saddle property of the extracted rules -----------------

void run_c3(Ctx& ctx) {
    CritOut& o = ctx.out[3];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    bool ok = true;
    double worst = 0.0;
    int n = 12;
    for (const auto& bc : battery()) {
        StepDistribution dist =
            crr_step_params(bc.market, n, LatticeScheme::Martingale);
        GameSolution sol = auto_solve(bc.market, dist, bc.payoff);
        auto rules = extract_exercise_rules(sol);
        double up = value_against_fixed(bc.market, dist, bc.payoff, rules.first,
                                        Side::writer_fixed);
        double dn = value_against_fixed(bc.market, dist, bc.payoff, rules.second,
                                        Side::holder_fixed);
        worst = std::max(worst,
                         std::max(std::fabs(up - sol.price),
                                  std::fabs(dn - sol.price)));
        ok = ok && std::fabs(up - sol.price) <= 1e-10 &&
             std::fabs(dn - sol.price) <= 1e-10;
    }
    o.secs = now_minus(t0);
    o.pass = ok && o.secs < 120.0;
    o.detail = "8 cases at n=12, worst one-sided gap " + fmt(worst, 3);
    o.done = true;
}

// ---- criterion 4: American degeneration, bit for bit ---------------------

void run_c4(Ctx& ctx) {
    CritOut& o = ctx.out[4];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    bool ok = true;
    int checked = 0;
    for (int n : {1, 2, 5, 16, 64, 256, 512}) {
        MarketParams params = std_market();
        StepDistribution dist =
            crr_step_params(params, n, LatticeScheme::Martingale);
        auto put = with_constant_penalty(make_vanilla_put(100.0), 1000.0);
        GameSolution sol = solve(params, dist, put, EngineKind::MemoizedState);
        double oracle = gopt_tests::american_value(params, dist, 100.0, true);
        ok = ok && sol.price == oracle;
        ++checked;
    }
    for (int n : {8, 128, 512}) {
        MarketParams params = std_market();
        StepDistribution dist =
            crr_step_params(params, n, LatticeScheme::Martingale);
        auto call = with_constant_penalty(make_vanilla_call(90.0), 900.0);
        GameSolution sol = solve(params, dist, call, EngineKind::MemoizedState);
        double oracle = gopt_tests::american_value(params, dist, 90.0, false);
        ok = ok && sol.price == oracle;
        ++checked;
    }
    o.secs = now_minus(t0);
    o.pass = ok && o.secs < 30.0;
    o.detail = std::to_string(checked) +
               " lattices up to n=512 bitwise equal to the American induction";
    o.done = true;
}

// ---- criterion 5: hedge domination audits --------------------------------

void run_c5(Ctx& ctx) {
    CritOut& o = ctx.out[5];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    bool ok = true;
    double worst = 0.0;
    int n = 12;
    for (const auto& bc : battery()) {
        StepDistribution dist =
            crr_step_params(bc.market, n, LatticeScheme::Martingale);
        GameSolution sol = solve(bc.market, dist, bc.payoff, EngineKind::FullTree);
        HedgeStrategy hedge = build_hedge(sol, dist);
        HedgeReport rep = verify_hedge(hedge, bc.market, dist, bc.payoff);
        ok = ok && rep.pass;
        worst = std::max(worst, rep.max_domination_violation / sol.scale);
    }

    // seeded perturbation fixtures must be caught; the payoff must not
    // cancel at the root or the tampered node is unreachable
    MarketParams fm{100.0, 0.03, 0.35, 0.75};
    auto fix_payoff = with_constant_penalty(make_vanilla_put(100.0), 15.0);
    StepDistribution dist = crr_step_params(fm, n, LatticeScheme::Martingale);
    GameSolution sol = solve(fm, dist, fix_payoff, EngineKind::FullTree);
    HedgeStrategy tampered = build_hedge(sol, dist);
    tampered.levels[5][13].gamma += 1e-5;
    bool caught_tamper = !verify_hedge(tampered, fm, dist, fix_payoff).pass;
    HedgeStrategy poor = build_hedge(sol, dist, sol.price - 1e-5 * sol.scale);
    bool caught_poor = !verify_hedge(poor, fm, dist, fix_payoff).pass;
    ok = ok && caught_tamper && caught_poor;

    o.secs = now_minus(t0);
    o.pass = ok && o.secs < 120.0;
    o.detail = "8 cases dominate at n=12 (worst normalized violation " +
               fmt(worst, 3) + "), both perturbations detected";
    o.done = true;
}

// ---- criterion 6: the two engines agree ----------------------------------

void run_c6(Ctx& ctx) {
    CritOut& o = ctx.out[6];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    struct Probe {
        std::string label;
        MarketParams market;
        PayoffFunctional payoff;
        int n;
    };
    MarketParams flat{100.0, 0.0, 0.35, 0.75};
    std::vector<Probe> probes;
    // vanilla pairings run at any rate; the memoized russian reduction is
    // exercised on flat-rate markets per its supported penalty kinds
    for (const auto& bc : battery()) {
        if (bc.label == "put100_const5" || bc.label == "put110_prop05")
            probes.push_back({bc.label, bc.market, bc.payoff, 20});
        else if (bc.label == "call90_prop03")
            probes.push_back({bc.label, bc.market, bc.payoff, 18});
        else if (bc.label == "russian110_prop02")
            probes.push_back({bc.label, bc.market, bc.payoff, 14});
    }
    probes.push_back({"russian105_nopen", flat, make_russian(105.0), 14});

    bool ok = probes.size() == 5;
    double worst = 0.0;
    for (const auto& probe : probes) {
        StepDistribution dist =
            crr_step_params(probe.market, probe.n, LatticeScheme::Martingale);
        GameSolution tree =
            solve(probe.market, dist, probe.payoff, EngineKind::FullTree);
        GameSolution memo =
            solve(probe.market, dist, probe.payoff, EngineKind::MemoizedState);
        double rel = std::fabs(tree.price - memo.price) / tree.scale;
        worst = std::max(worst, rel);
        ok = ok && rel <= 1e-12;
    }
    o.secs = now_minus(t0);
    o.pass = ok && o.secs < 300.0;
    o.detail = "5 pairings up to n=20, worst relative gap " + fmt(worst, 3);
    o.done = true;
}

// ---- criterion 7: convergence rate envelope ------------------------------

double profile(int n) {
    double ln = std::log(static_cast<double>(n));
    return std::pow(static_cast<double>(n), -0.25) * std::pow(ln, 0.75);
}

struct EnvelopeCheck {
    bool ok = true;
    double worst_ratio = 0.0;  // error / (C_anchor * profile) over n >= 128
};

EnvelopeCheck check_envelope(const ConvergenceReport& rep) {
    double c_anchor = 0.0;
    for (const auto& row : rep.rows)
        if (row.n <= 64) c_anchor = std::max(c_anchor, row.error / profile(row.n));
    EnvelopeCheck ec;
    for (const auto& row : rep.rows) {
        if (row.n < 128) continue;
        double ratio = row.error / (c_anchor * profile(row.n));
        ec.worst_ratio = std::max(ec.worst_ratio, ratio);
        ec.ok = ec.ok && ratio <= 1.0;
    }
    return ec;
}

void run_c7(Ctx& ctx) {
    CritOut& o = ctx.out[7];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    ConvergenceOptions opt;
    opt.n_list = {16, 32, 64, 128, 256, 512, 1024};
    opt.n_ref = 4096;

    // the penalty must exceed the continuation premium at the start or the
    // writer cancels immediately and the price is n-independent
    auto put = with_constant_penalty(make_vanilla_put(100.0), 15.0);
    ConvergenceReport va = convergence_study(std_market(), put, opt);

    MarketParams flat{100.0, 0.0, 0.35, 0.75};
    auto rus = with_proportional_penalty(make_russian(110.0), 0.02);
    ConvergenceOptions ropt = opt;
    ropt.both_schemes = false;
    ConvergenceReport ru = convergence_study(flat, rus, ropt);

    EnvelopeCheck ea = check_envelope(va);
    EnvelopeCheck er = check_envelope(ru);

    bool ok = ea.ok && er.ok;
    ok = ok && va.rows.back().error < va.rows.front().error;
    ok = ok && ru.rows.back().error < ru.rows.front().error;
    ok = ok && va.rows.back().scheme_gap < va.rows.front().scheme_gap;
    ok = ok && va.fitted_alpha > 0.2 && ru.fitted_alpha > 0.2;

    o.secs = now_minus(t0);
    o.pass = ok && o.secs < 600.0;
    o.detail = "alpha=" + fmt(va.fitted_alpha, 3) + "/" + fmt(ru.fitted_alpha, 3) +
               " envelope ratios " + fmt(ea.worst_ratio, 3) + "/" +
               fmt(er.worst_ratio, 3) + " err1024<err16 both, scheme gap shrinks";
    o.done = true;
}

// ---- criterion 8: embedding statistics -----------------------------------

void run_c8(Ctx& ctx) {
    CritOut& o = ctx.out[8];
    if (o.done) return;

    MarketParams params = std_market();
    int n = 64;
    double dt = params.T / n;
    double lvl = params.kappa * std::sqrt(dt);
    double p = 1.0 / (std::exp(lvl) + 1.0);

    SimReport first;
    double t1_secs = 0.0;
    for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti) {
        SimConfig cfg;
        cfg.paths = 100000;
        cfg.oversample = 64;
        cfg.seed = 2026;
        cfg.threads = kThreadCounts[ti];
        auto t0 = std::chrono::steady_clock::now();
        SimReport rep = embedding_diagnostics(params, n, cfg);
        if (ti == 0) {
            t1_secs = now_minus(t0);
            first = rep;
        }
        ctx.out[8].stats[ti] = {rep.mean_theta1,
                                rep.sign_plus_freq,
                                rep.chi2_signs,
                                rep.mean_theta_n,
                                static_cast<double>(rep.paths),
                                static_cast<double>(rep.failed_paths)};
    }

    double sigma =
        std::sqrt(p * (1.0 - p) / static_cast<double>(first.paths));
    bool ok = std::fabs(first.sign_plus_freq - p) <= 3.0 * sigma;
    ok = ok && std::fabs(first.mean_theta1 - dt) <= 0.02 * dt;

    CritOut& o2 = ctx.out[8];
    o2.secs = t1_secs;
    o2.pass = ok && t1_secs < 300.0;
    o2.detail = "freq=" + fmt(first.sign_plus_freq, 6) + " vs p=" + fmt(p, 6) +
                " (3sig=" + fmt(3.0 * sigma, 3) + "), mean theta1=" +
                fmt(first.mean_theta1, 6) + " vs " + fmt(dt, 6);
    o2.done = true;
    (void)o;
}

// ---- criterion 9: exercise rules transfer --------------------------------

struct QualityProbe {
    std::string label;
    MarketParams market;
    PayoffFunctional payoff;
    std::uint64_t seed16;
    std::uint64_t seed256;
};

void run_c9(Ctx& ctx) {
    CritOut& o = ctx.out[9];
    if (o.done) return;

    // both probes carry a transfer bias at n = 16 that clears the paired
    // noise floor by a wide margin; smaller penalties die too close to the
    // root to leave a measurable bias decay
    std::vector<QualityProbe> probes;
    probes.push_back({"put115_const8", MarketParams{100.0, 0.03, 0.45, 1.0},
                      with_constant_penalty(make_vanilla_put(115.0), 8.0), 9101,
                      9102});
    probes.push_back({"russian110_prop05",
                      MarketParams{100.0, 0.0, 0.35, 0.75},
                      with_proportional_penalty(make_russian(110.0), 0.05), 9103,
                      9104});

    bool ok = true;
    std::string detail;
    double t1_secs = 0.0;
    for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti)
        ctx.out[9].stats[ti].clear();

    for (const auto& probe : probes) {
        std::array<SimReport, 2> first_reports;
        for (int which = 0; which < 2; ++which) {
            int n = which == 0 ? 16 : 256;
            StepDistribution dist =
                crr_step_params(probe.market, n, LatticeScheme::Martingale);
            GameSolution sol =
                solve(probe.market, dist, probe.payoff, EngineKind::MemoizedState);
            for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti) {
                SimConfig cfg;
                cfg.paths = 100000;
                // matched fine grid: T/(16*1024) == T/(256*64), so the
                // discretization artifact is common to both lattices and
                // the bias decay is attributable to n alone
                cfg.oversample = which == 0 ? 1024 : 64;
                cfg.seed = which == 0 ? probe.seed16 : probe.seed256;
                cfg.threads = kThreadCounts[ti];
                auto t0 = std::chrono::steady_clock::now();
                SimReport rep =
                    evaluate_exercise_quality(sol, probe.market, probe.payoff, cfg);
                if (ti == 0) {
                    t1_secs += now_minus(t0);
                    first_reports[static_cast<std::size_t>(which)] = rep;
                }
                auto& s = ctx.out[9].stats[ti];
                s.push_back(rep.estimate);
                s.push_back(rep.std_error);
                s.push_back(rep.gap);
                s.push_back(rep.paired_gap);
                s.push_back(rep.paired_se);
            }
        }
        // the paired statistic measures |E Q - price| with the common path
        // noise cancelled, which is what makes a 3 sigma decrease test
        // meaningful at this path budget
        const SimReport& r16 = first_reports[0];
        const SimReport& r256 = first_reports[1];
        double comb = std::sqrt(r16.paired_se * r16.paired_se +
                                r256.paired_se * r256.paired_se);
        bool shrink = (r16.paired_gap - r256.paired_gap) > 3.0 * comb;
        ok = ok && shrink;
        if (!detail.empty()) detail += "; ";
        detail += probe.label + " gap16=" + fmt(r16.paired_gap, 4) + " gap256=" +
                  fmt(r256.paired_gap, 4) + " 3sig=" + fmt(3.0 * comb, 4);
    }

    CritOut& o2 = ctx.out[9];
    o2.secs = t1_secs;
    o2.pass = ok && t1_secs < 900.0;
    o2.detail = detail;
    o2.done = true;
    (void)o;
}

// ---- criterion 10: hedge shortfall shrinks -------------------------------

void run_c10(Ctx& ctx) {
    CritOut& o = ctx.out[10];
    if (o.done) return;

    MarketParams params = std_market();
    auto payoff = with_constant_penalty(make_vanilla_put(100.0), 15.0);

    std::array<SimReport, 2> first_reports;
    double scale = 0.0;
    double t1_secs = 0.0;
    for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti)
        ctx.out[10].stats[ti].clear();

    for (int which = 0; which < 2; ++which) {
        int n = which == 0 ? 16 : 256;
        StepDistribution dist =
            crr_step_params(params, n, LatticeScheme::Martingale);
        GameSolution sol = solve(params, dist, payoff, EngineKind::MemoizedState);
        scale = sol.scale;
        HedgeStrategy hedge = build_hedge(sol, dist);
        for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti) {
            SimConfig cfg;
            cfg.paths = 100000;
            cfg.oversample = 64;
            cfg.seed = which == 0 ? 1016 : 1025;
            cfg.threads = kThreadCounts[ti];
            auto t0 = std::chrono::steady_clock::now();
            SimReport rep = simulate_shortfall(hedge, sol, params, payoff, cfg);
            if (ti == 0) {
                t1_secs += now_minus(t0);
                first_reports[static_cast<std::size_t>(which)] = rep;
            }
            auto& s = ctx.out[10].stats[ti];
            s.push_back(rep.estimate);
            s.push_back(rep.std_error);
        }
    }

    // one-step doubling market: replication is exact on the lattice, the
    // residual shortfall is pure grid-detection bias
    MarketParams hand = doubling_market();
    StepDistribution dist1 = crr_step_params(hand, 1, LatticeScheme::Martingale);
    auto pay50 = with_constant_penalty(make_vanilla_put(100.0), 50.0);
    GameSolution sol1 = solve(hand, dist1, pay50, EngineKind::FullTree);
    HedgeStrategy hedge1 = build_hedge(sol1, dist1);
    SimReport floor_rep;
    for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti) {
        SimConfig cfg;
        cfg.paths = 100000;
        cfg.oversample = 64;
        cfg.seed = 101;
        cfg.threads = kThreadCounts[ti];
        auto t0 = std::chrono::steady_clock::now();
        SimReport rep = simulate_shortfall(hedge1, sol1, hand, pay50, cfg);
        if (ti == 0) {
            t1_secs += now_minus(t0);
            floor_rep = rep;
        }
        auto& s = ctx.out[10].stats[ti];
        s.push_back(rep.estimate);
        s.push_back(rep.std_error);
    }

    const SimReport& r16 = first_reports[0];
    const SimReport& r256 = first_reports[1];
    double comb = std::sqrt(r16.std_error * r16.std_error +
                            r256.std_error * r256.std_error);
    bool ok = (r16.estimate - r256.estimate) > 3.0 * comb;
    ok = ok && floor_rep.estimate / sol1.scale <= 0.01;

    CritOut& o2 = ctx.out[10];
    o2.secs = t1_secs;
    o2.pass = ok && t1_secs < 900.0;
    o2.detail = "sf16=" + fmt(r16.estimate / scale, 4) + " sf256=" +
                fmt(r256.estimate / scale, 4) + " (norm), 3sig=" +
                fmt(3.0 * comb / scale, 4) + ", one-step floor " +
                fmt(floor_rep.estimate / sol1.scale, 4);
    o2.done = true;
    (void)o;
}

// ---- criterion 11: walk exit variance and the explicit bound -------------

void run_c11(Ctx& ctx) {
    CritOut& o = ctx.out[11];
    if (o.done) return;

    double rho = std::sqrt(2.0 / 3.0);
    // deterministic part first
    SmoothPayoffPair unit;
    unit.label = "unit-norms";
    unit.f = [](double, double) { return 0.0; };
    unit.g = [](double, double) { return 1.0; };
    unit.Lf_sup = unit.Lg_sup = unit.ft_sup = unit.gt_sup = 1.0;
    double expect = 0.8 * rho + 0.02;
    bool ok = std::fabs(lr_bound(unit, rho, 1.0, 100) - expect) <= 1e-12;

    // peaks shifted into the convex tail so the lattice values actually
    // move with n instead of pinning at one of the root payoffs
    std::vector<SmoothPayoffPair> pairs{
        make_bump_pair_at(1.0, 0.3, 0.8, 1.2, 0.25),
        make_bump_vs_const_at(1.0, 0.25, 0.7, 1.4, 1.05)};
    std::vector<double> fixed_stats;
    double worst_use = 0.0;
    for (const auto& pair : pairs) {
        ok = ok && audit_norms(pair, 1.0, 6.0, 41).pass;
        for (int n : {16, 64, 256}) {
            double v = walk_game_value(pair, StepLaw::rademacher(), n, 1.0);
            double v4 = walk_game_value(pair, StepLaw::rademacher(), 4 * n, 1.0);
            double bound =
                lr_bound(pair, rho, 1.0, n) + lr_bound(pair, rho, 1.0, 4 * n);
            worst_use = std::max(worst_use, std::fabs(v - v4) / bound);
            ok = ok && std::fabs(v - v4) <= bound;
            fixed_stats.push_back(v);
            fixed_stats.push_back(v4);
        }
    }

    RhoEstimate first;
    double t1_secs = 0.0;
    for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti) {
        auto t0 = std::chrono::steady_clock::now();
        RhoEstimate est = estimate_rho(StepLaw::rademacher(), 200000, 4242,
                                       kThreadCounts[ti], 2.5e-4);
        if (ti == 0) {
            t1_secs = now_minus(t0);
            first = est;
        }
        auto& s = ctx.out[11].stats[ti];
        s = fixed_stats;
        s.push_back(est.rho_hat);
        s.push_back(est.rho_hat_sq);
        s.push_back(est.std_error);
        s.push_back(est.std_error_sq);
        s.push_back(est.mean_theta);
    }
    ok = ok && std::fabs(first.rho_hat_sq - 2.0 / 3.0) <= 3.0 * first.std_error_sq;

    CritOut& o2 = ctx.out[11];
    o2.secs = t1_secs;
    o2.pass = ok && t1_secs < 300.0;
    o2.detail = "rho^2=" + fmt(first.rho_hat_sq, 5) + " (3sig=" +
                fmt(3.0 * first.std_error_sq, 5) + "), bound use " +
                fmt(worst_use, 3) + ", hand bound exact";
    o2.done = true;
    (void)o;
}

// ---- criterion 12: bit-identical across thread counts --------------------

void run_c12(Ctx& ctx) {
    run_c8(ctx);
    run_c9(ctx);
    run_c10(ctx);
    run_c11(ctx);
    CritOut& o = ctx.out[12];
    if (o.done) return;
    auto t0 = std::chrono::steady_clock::now();

    bool ok = true;
    std::uint64_t combined0 = 1469598103934665603ull;
    std::string digests;
    for (std::size_t ti = 0; ti < kThreadCounts.size(); ++ti) {
        std::vector<double> all;
        for (int c : {8, 9, 10, 11}) {
            const auto& s = ctx.out[c].stats[ti];
            all.insert(all.end(), s.begin(), s.end());
        }
        std::uint64_t h = digest(all);
        if (ti == 0) combined0 = h;
        ok = ok && h == combined0 && !all.empty();
        if (!digests.empty()) digests += "/";
        std::ostringstream os;
        os << std::hex << h;
        digests += os.str();
    }

    // the lattice solvers and audits take no thread parameter, so the
    // deterministic criteria cannot vary by thread count by construction
    o.secs = now_minus(t0);
    o.pass = ok;
    o.detail = "digests at threads 1/4/8: " + digests;
    o.done = true;
}

using Runner = void (*)(Ctx&);

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--criterion" || arg == "-c") {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "error: %s needs a number\n", arg.c_str());
                return 2;
            }
            int c = std::atoi(argv[++i]);
            if (c < 1 || c > 12) {
                std::fprintf(stderr, "error: criterion out of range: %d\n", c);
                return 2;
            }
            selected.insert(c);
        } else if (arg == "--help" || arg == "-h") {
            std::printf("usage: gopt_acceptance [--criterion N]...\n");
            return 0;
        } else {
            std::fprintf(stderr, "error: unknown argument %s\n", arg.c_str());
            return 2;
        }
    }
    if (selected.empty())
        for (int c = 1; c <= 12; ++c) selected.insert(c);

    const std::map<int, Runner> runners{
        {1, run_c1}, {2, run_c2},  {3, run_c3},  {4, run_c4},
        {5, run_c5}, {6, run_c6},  {7, run_c7},  {8, run_c8},
        {9, run_c9}, {10, run_c10}, {11, run_c11}, {12, run_c12}};

    Ctx ctx;
    int failures = 0;
    for (int c : selected) {
        try {
            runners.at(c)(ctx);
        } catch (const std::exception& e) {
            ctx.out[c].done = true;
            ctx.out[c].pass = false;
            ctx.out[c].detail = std::string("exception: ") + e.what();
        }
        const CritOut& o = ctx.out[c];
        std::printf("criterion %d: %s %s (%.1fs)\n", c, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), o.secs);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
