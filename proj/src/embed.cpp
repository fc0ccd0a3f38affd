#include "gopt/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gopt/parallel.hpp"
#include "gopt/rng.hpp"

namespace gopt {

namespace {

// Siegmund's continuity correction: a barrier observed on a grid of step
// dt acts like one moved 0.5826*sigma*sqrt(dt) closer, so detection uses
// thresholds narrowed by that amount. Plain thresholds would overstate
// mean passage times by ~2*0.5826/sqrt(m).
constexpr double kBarrierShift = 0.5826;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct WalkParams {
    double dt_f;        // fine grid step T/(n*m)
    double drift_step;  // -kappa^2/2 * dt_f
    double vol_step;    // kappa * sqrt(dt_f)
    double lvl;         // kappa * sqrt(T/n), the embedding level
    double lvl_eff;     // lvl - barrier shift
    long steps_to_T;    // n*m
    long steps_max;     // horizon_slack * n * m
};

WalkParams make_walk(const MarketParams& params, int n, const SimConfig& cfg) {
    validate(params);
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (cfg.paths < 1) throw std::invalid_argument("paths must be >= 1");
    if (cfg.oversample < 8)
        throw std::invalid_argument("oversample must be >= 8");
    if (cfg.horizon_slack < 1.0)
        throw std::invalid_argument("horizon_slack must be >= 1");
    WalkParams w;
    double m = static_cast<double>(cfg.oversample);
    w.dt_f = params.T / (static_cast<double>(n) * m);
    w.drift_step = -0.5 * params.kappa * params.kappa * w.dt_f;
    w.vol_step = params.kappa * std::sqrt(w.dt_f);
    w.lvl = params.kappa * std::sqrt(params.T / n);
    w.lvl_eff = w.lvl - kBarrierShift * w.vol_step;
    w.steps_to_T = static_cast<long>(n) * cfg.oversample;
    w.steps_max = static_cast<long>(
        std::ceil(cfg.horizon_slack * static_cast<double>(w.steps_to_T)));
    return w;
}

// Level-hitting state of one path: X is the log of the discounted price
// ratio (S~_t = z*exp(X_t)); anchors snap to exact lattice multiples of
// lvl on every hit.
struct Walker {
    const WalkParams& w;
    double X = 0.0;
    int m_lat = 0;
    double up_thr, dn_thr;

    explicit Walker(const WalkParams& wp)
        : w(wp), up_thr(wp.lvl_eff), dn_thr(-wp.lvl_eff) {}

    // one grid step; +1/-1 when a level hit completes
    int step(Philox& rng) {
        X += w.drift_step + w.vol_step * rng.next_normal();
        int sign = 0;
        if (X >= up_thr)
            sign = +1;
        else if (X <= dn_thr)
            sign = -1;
        if (sign) {
            m_lat += sign;
            double anchor = m_lat * w.lvl;
            up_thr = anchor + w.lvl_eff;
            dn_thr = anchor - w.lvl_eff;
        }
        return sign;
    }
};

// two-pass mean / standard error over per-path slots, in index order
void mean_stderr(const std::vector<double>& x, double& mean, double& se) {
    mean = 0.0;
    se = 0.0;
    if (x.empty()) return;
    double s = 0.0;
    for (double v : x) s += v;
    mean = s / static_cast<double>(x.size());
    if (x.size() < 2) return;
    double s2 = 0.0;
    for (double v : x) s2 += (v - mean) * (v - mean);
    se = std::sqrt(s2 / (static_cast<double>(x.size()) - 1.0) /
                   static_cast<double>(x.size()));
}

}  // namespace

void simulate_embedding(const MarketParams& params, int n, const SimConfig& cfg,
                        const std::function<void(const EmbeddedPath&)>& sink) {
    WalkParams w = make_walk(params, n, cfg);
    double growth = std::exp(params.r * w.dt_f);

    EmbeddedPath buf;
    for (long id = 0; id < cfg.paths; ++id) {
        Philox rng(cfg.seed, static_cast<std::uint64_t>(id));
        Walker walk(w);
        buf.fine_path.breakpoints.assign(1, 0.0);
        buf.fine_path.values.assign(1, params.z);
        buf.theta.assign(1, 0.0);
        buf.signs.clear();
        buf.exhausted = false;

        double gacc = 1.0;
        int hits = 0;
        long j = 1;
        for (; j <= w.steps_max; ++j) {
            int sign = walk.step(rng);
            gacc *= growth;
            double t = j * w.dt_f;
            buf.fine_path.breakpoints.push_back(t);
            buf.fine_path.values.push_back(params.z * gacc * std::exp(walk.X));
            if (sign) {
                ++hits;
                buf.theta.push_back(t);
                buf.signs.push_back(sign);
            }
            if (hits >= n && j >= w.steps_to_T) break;
        }
        buf.exhausted = hits < n;
        buf.fine_path.horizon = buf.fine_path.breakpoints.back();
        sink(buf);
    }
}

SimReport embedding_diagnostics(const MarketParams& params, int n,
                                const SimConfig& cfg,
                                std::vector<TraceRow>* trace) {
    WalkParams w = make_walk(params, n, cfg);
    std::size_t M = static_cast<std::size_t>(cfg.paths);

    std::vector<double> theta1(M, kNaN), thetan(M, kNaN);
    std::vector<signed char> first_sign(M, 0);
    std::vector<int> hit_count(M, 0);

    parallel_for(M, cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t id = b; id < e; ++id) {
            Philox rng(cfg.seed, static_cast<std::uint64_t>(id));
            Walker walk(w);
            int hits = 0;
            for (long j = 1; j <= w.steps_max && hits < n; ++j) {
                int sign = walk.step(rng);
                if (sign) {
                    ++hits;
                    double t = j * w.dt_f;
                    if (hits == 1) {
                        theta1[id] = t;
                        first_sign[id] = static_cast<signed char>(sign);
                    }
                    if (hits == n) thetan[id] = t;
                }
            }
            hit_count[id] = hits;
        }
    });

    SimReport rep;
    std::vector<double> t1_ok, tn_ok;
    t1_ok.reserve(M);
    tn_ok.reserve(M);
    long plus = 0, ok = 0;
    for (std::size_t id = 0; id < M; ++id) {
        if (hit_count[id] < n) continue;  // exhausted: excluded throughout
        ++ok;
        t1_ok.push_back(theta1[id]);
        tn_ok.push_back(thetan[id]);
        if (first_sign[id] > 0) ++plus;
    }
    rep.paths = ok;
    rep.failed_paths = cfg.paths - ok;
    mean_stderr(t1_ok, rep.mean_theta1, rep.std_error);
    rep.estimate = rep.mean_theta1;
    double dummy_se;
    mean_stderr(tn_ok, rep.mean_theta_n, dummy_se);
    if (ok > 0) {
        rep.sign_plus_freq = static_cast<double>(plus) / static_cast<double>(ok);
        double p = 1.0 / (std::exp(w.lvl) + 1.0);
        double e_plus = p * static_cast<double>(ok);
        double e_minus = (1.0 - p) * static_cast<double>(ok);
        double o_plus = static_cast<double>(plus);
        double o_minus = static_cast<double>(ok - plus);
        rep.chi2_signs = (o_plus - e_plus) * (o_plus - e_plus) / e_plus +
                         (o_minus - e_minus) * (o_minus - e_minus) / e_minus;
    }
    rep.gap = std::fabs(rep.mean_theta1 - params.T / n);

    if (trace) {
        trace->clear();
        trace->reserve(M);
        for (std::size_t id = 0; id < M; ++id)
            trace->push_back(TraceRow{static_cast<long>(id), kNaN, kNaN,
                                      thetan[id], hit_count[id]});
    }
    return rep;
}

SimReport evaluate_exercise_quality(const GameSolution& solution,
                                    const MarketParams& params,
                                    const PayoffFunctional& payoff,
                                    const SimConfig& cfg,
                                    std::vector<TraceRow>* trace) {
    int n = solution.n;
    WalkParams w = make_walk(params, n, cfg);
    if (!payoff.make_scanner)
        throw std::invalid_argument("payoff provides no scanner");
    const StepDistribution& dist = solution.dist;
    std::size_t M = static_cast<std::size_t>(cfg.paths);

    std::vector<double> Q(M, 0.0), D(M, 0.0);
    std::vector<int> stop_hits(M, 0);

    parallel_for(M, cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t id = b; id < e; ++id) {
            Philox rng(cfg.seed, static_cast<std::uint64_t>(id));
            auto scan = payoff.make_scanner();
            scan->reset(params.z);
            // lattice replay of the embedded signs under the same rules;
            // the replayed payoff has exact mean solution.price, which
            // makes Q - rq a paired estimate of the transfer bias
            auto lat = payoff.make_scanner();
            lat->reset(params.z);
            auto wc = solution.writer_rule.cursor();
            auto hc = solution.holder_rule.cursor();

            double q = 0.0, rq = 0.0;
            double log_s = 0.0, lacc = 1.0;
            int hits = 0, q_hits = 0;
            bool rq_done = false;
            auto feed_lattice = [&](int sign) {
                ++hits;
                log_s += (sign > 0) ? dist.log_up : dist.log_down;
                lat->advance(hits * dist.dt, params.z * std::exp(log_s));
                lacc *= dist.disc_step;
                wc.push(sign);
                hc.push(sign);
                if (hc.stops_now()) {
                    rq = lacc * lat->F_now();
                    rq_done = true;
                } else if (wc.stops_now()) {
                    rq = lacc * (lat->F_now() + lat->Delta_now());
                    rq_done = true;
                }
            };
            if (hc.stops_now()) {
                q = scan->F_now();
                rq = q;
            } else if (wc.stops_now()) {
                q = scan->F_now() + scan->Delta_now();
                rq = q;
            } else {
                Walker walk(w);
                double growth = std::exp(params.r * w.dt_f);
                double dstep = std::exp(-params.r * w.dt_f);
                double gacc = 1.0, dacc = 1.0;
                bool done = false;
                long j = 1;
                for (; j < w.steps_to_T; ++j) {
                    int sign = walk.step(rng);
                    gacc *= growth;
                    dacc *= dstep;
                    scan->advance(j * w.dt_f,
                                  params.z * gacc * std::exp(walk.X));
                    if (!sign) continue;
                    feed_lattice(sign);
                    if (rq_done) {
                        q = hc.stops_now() ? dacc * scan->F_now()
                                           : dacc * (scan->F_now() +
                                                     scan->Delta_now());
                        done = true;
                        break;
                    }
                }
                if (!done) {
                    // grid time T reached first: both transferred times
                    // clamp to T and the claim is the expiry settlement
                    int sign = walk.step(rng);
                    gacc *= growth;
                    dacc *= dstep;
                    scan->advance(params.T, params.z * gacc * std::exp(walk.X));
                    q = dacc * scan->F_now();
                    q_hits = hits;
                    // the lattice game is not over yet: keep consuming
                    // embedded signs past T until a rule fires
                    if (sign) feed_lattice(sign);
                    for (long j2 = w.steps_to_T + 1;
                         j2 <= w.steps_max && !rq_done; ++j2) {
                        sign = walk.step(rng);
                        if (sign) feed_lattice(sign);
                    }
                    if (!rq_done) rq = lacc * lat->F_now();
                } else {
                    q_hits = hits;
                }
            }
            Q[id] = q;
            D[id] = q - rq;
            stop_hits[id] = q_hits;
        }
    });

    SimReport rep;
    rep.paths = cfg.paths;
    mean_stderr(Q, rep.estimate, rep.std_error);
    rep.gap = std::fabs(rep.estimate - solution.price);
    double dmean, dse;
    mean_stderr(D, dmean, dse);
    rep.paired_gap = std::fabs(dmean);
    rep.paired_se = dse;

    if (trace) {
        trace->clear();
        trace->reserve(M);
        for (std::size_t id = 0; id < M; ++id)
            trace->push_back(TraceRow{static_cast<long>(id), Q[id], kNaN, kNaN,
                                      stop_hits[id]});
    }
    return rep;
}

SimReport simulate_shortfall(const HedgeStrategy& strategy,
                             const GameSolution& solution,
                             const MarketParams& params,
                             const PayoffFunctional& payoff,
                             const SimConfig& cfg,
                             std::vector<TraceRow>* trace) {
    int n = strategy.n;
    if (solution.n != n)
        throw std::invalid_argument("solution does not match the strategy");
    WalkParams w = make_walk(params, n, cfg);
    if (!payoff.make_scanner)
        throw std::invalid_argument("payoff provides no scanner");
    const StepDistribution& dist = solution.dist;
    std::size_t M = static_cast<std::size_t>(cfg.paths);

    std::vector<double> shortfall(M, 0.0), thetan(M, kNaN);
    std::vector<int> hit_count(M, 0);

    parallel_for(M, cfg.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t id = b; id < e; ++id) {
            Philox rng(cfg.seed, static_cast<std::uint64_t>(id));
            auto scan = payoff.make_scanner();
            scan->reset(params.z);
            auto cancel = strategy.cancel_rule.cursor();
            auto cur = strategy.cursor(dist);

            double short_sup = std::max(0.0, scan->F_now() -
                                                 strategy.initial_capital);
            int hits = 0;
            double th_n = kNaN;

            if (cancel.stops_now()) {
                // cancellation at index 0: settle G_0 against the capital
                double frozen = scan->F_now() + scan->Delta_now();
                short_sup = std::max(short_sup,
                                     frozen - strategy.initial_capital);
            } else {
                Walker walk(w);
                double growth = std::exp(params.r * w.dt_f);
                double dstep = std::exp(-params.r * w.dt_f);
                double gacc = 1.0, dacc = 1.0;
                double g = cur.holdings().gamma;
                double bond = strategy.initial_capital - g * params.z;
                for (long j = 1; j <= w.steps_to_T; ++j) {
                    int sign = walk.step(rng);
                    gacc *= growth;
                    dacc *= dstep;
                    double eX = std::exp(walk.X);
                    double t = (j == w.steps_to_T) ? params.T : j * w.dt_f;
                    scan->advance(t, params.z * gacc * eX);
                    double s_disc = params.z * eX;
                    double zv = bond + g * s_disc;
                    double deficit = dacc * scan->F_now() - zv;
                    if (deficit > short_sup) short_sup = deficit;
                    if (!sign) continue;
                    ++hits;
                    cancel.push(sign);
                    cur.push(sign);
                    if (hits == n) {
                        // embedded expiry: settlement F_{theta_n} already
                        // compared above; portfolio freezes here
                        th_n = t;
                        break;
                    }
                    if (cancel.stops_now()) {
                        double frozen =
                            dacc * (scan->F_now() + scan->Delta_now());
                        if (frozen - zv > short_sup) short_sup = frozen - zv;
                        break;  // cancelled: both sides frozen
                    }
                    g = cur.holdings().gamma;
                    bond = zv - g * s_disc;
                }
            }
            shortfall[id] = short_sup;
            thetan[id] = th_n;
            hit_count[id] = hits;
        }
    });

    SimReport rep;
    rep.paths = cfg.paths;
    mean_stderr(shortfall, rep.estimate, rep.std_error);
    std::vector<double> tn_ok;
    for (double v : thetan)
        if (!std::isnan(v)) tn_ok.push_back(v);
    double dummy;
    mean_stderr(tn_ok, rep.mean_theta_n, dummy);

    if (trace) {
        trace->clear();
        trace->reserve(M);
        for (std::size_t id = 0; id < M; ++id)
            trace->push_back(TraceRow{static_cast<long>(id), kNaN,
                                      shortfall[id], thetan[id],
                                      hit_count[id]});
    }
    return rep;
}

}  // namespace gopt
