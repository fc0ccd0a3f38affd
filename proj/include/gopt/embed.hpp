#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gopt/dynkin.hpp"
#include "gopt/hedge.hpp"
#include "gopt/market.hpp"
#include "gopt/payoff.hpp"

namespace gopt {

struct SimConfig {
    long paths = 100000;        // Monte Carlo path count M
    int oversample = 64;        // grid refinement m; grid step = T/(n*m)
    std::uint64_t seed = 1;
    double horizon_slack = 2.0; // simulate up to horizon_slack * T
    int threads = 1;
};

// One simulated path with its embedding data. theta[0] = 0 and theta[k]
// is the first grid time with the discounted price at the +-kappa*sqrt(T/n)
// level relative to the previous anchor; signs[k-1] says which level.
struct EmbeddedPath {
    PiecewiseConstantPath fine_path;  // S_t on the fine grid
    std::vector<double> theta;        // size n_hits + 1, theta[0] = 0
    SignSequence signs;               // size n_hits
    bool exhausted = false;           // ran past horizon_slack*T before n hits
};

struct SimReport {
    double estimate = 0.0;
    double std_error = 0.0;
    long paths = 0;          // paths contributing
    long failed_paths = 0;   // exhausted and excluded
    // diagnostics
    double mean_theta1 = 0.0;
    double sign_plus_freq = 0.0;
    double chi2_signs = 0.0;
    double mean_theta_n = 0.0;
    double gap = 0.0;        // |estimate - reference| where applicable
    // paired rule-transfer statistics (evaluate_exercise_quality only):
    // per path, the same stop decisions replayed on the lattice path of the
    // embedded signs give a payoff whose exact mean is the solution price,
    // so mean(Q - Q_lattice) estimates E Q - price with the common path
    // noise cancelled
    double paired_gap = 0.0;  // |mean(Q - Q_lattice)|
    double paired_se = 0.0;   // stderr of mean(Q - Q_lattice)
};

// Streams one EmbeddedPath per path id into sink (buffer reused between
// calls); single-threaded by contract. Level detection uses the
// continuity-corrected threshold and anchors snapped to the exact lattice
// levels; paths that fail to realize n hits by horizon_slack*T are flagged
// exhausted.
void simulate_embedding(const MarketParams& params, int n, const SimConfig& cfg,
                        const std::function<void(const EmbeddedPath&)>& sink);

// optional per-path trace (CSV columns: path_id, Q_value, shortfall_sup,
// theta_n, n_hits); NaN marks fields that do not apply to the run
struct TraceRow {
    long path_id = 0;
    double Q_value = 0.0;
    double shortfall_sup = 0.0;
    double theta_n = 0.0;
    int n_hits = 0;
};

// Parallel diagnostics over M paths: sign frequency (first sign per path),
// chi^2 against the two-point sign law, mean theta_1 and theta_n,
// exhaustion count. Exhausted paths are excluded from every statistic and
// reported in failed_paths.
SimReport embedding_diagnostics(const MarketParams& params, int n,
                                const SimConfig& cfg,
                                std::vector<TraceRow>* trace = nullptr);

// Transfers the solution's exercise rules onto simulated paths: per path,
// phi* and psi* are the embedding times of the rules' stop indices clamped
// to T, and the report estimates E Q(phi*, psi*) with Q the discounted
// game payoff on the fine path. gap = |estimate - solution.price|.
// paired_gap/paired_se use the lattice replay of the same decisions as a
// control variate with exactly known mean; the pairing assumes the
// solution's lattice is the martingale scheme, whose sign law the
// embedding realizes.
SimReport evaluate_exercise_quality(const GameSolution& solution,
                                    const MarketParams& params,
                                    const PayoffFunctional& payoff,
                                    const SimConfig& cfg,
                                    std::vector<TraceRow>* trace = nullptr);

// Transfers the hedge: holdings switch at embedding times (gamma from the
// CRR table, bond leg from portfolio-value continuity on the true path, so
// self-financing is exact by construction). The deficit claim is F_t on
// the fine path while t <= theta_phi, and the settlement value at
// theta_phi afterwards (with the penalty only when the stop index is < n:
// a writer rule stopping at index n counts as never cancelling, so its
// settlement is the plain expiry claim). The portfolio freezes at
// theta_phi ^ T, where theta_phi includes theta_n for the never-cancel
// case: the embedded game is over after its n-th hit. The statistic is the
// expected sup over grid times t <= T of the discounted deficit^+.
SimReport simulate_shortfall(const HedgeStrategy& strategy,
                             const GameSolution& solution,
                             const MarketParams& params,
                             const PayoffFunctional& payoff,
                             const SimConfig& cfg,
                             std::vector<TraceRow>* trace = nullptr);

}  // namespace gopt
