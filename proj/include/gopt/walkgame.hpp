#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gopt {

// Smooth payoff pair (f <= g) for the undiscounted Brownian/walk Dynkin
// game, with declared sup-norms of Lh = dh/dt + (1/2) d2h/dx2 and dh/dt.
struct SmoothPayoffPair {
    std::string label;
    std::function<double(double, double)> f;  // (t, x)
    std::function<double(double, double)> g;
    double Lf_sup = 0.0;
    double Lg_sup = 0.0;
    double ft_sup = 0.0;
    double gt_sup = 0.0;
};

// i.i.d. step law with E xi = 0, E xi^2 = 1, E xi^4 < infinity. Two-point
// laws take values {a, -b} with p = P(xi = a) = b/(a+b) and a*b = 1 for
// unit variance; Theta is the exit time of Brownian motion from (-b, a).
struct StepLaw {
    double a = 1.0;
    double b = 1.0;
    double p = 0.5;
    double rho_known = -1.0;  // sqrt(Var Theta) if known, else < 0

    static StepLaw rademacher() { return StepLaw{1.0, 1.0, 0.5, -1.0}; }
    static StepLaw two_point(double a, double b);
    bool is_rademacher() const { return a == 1.0 && b == 1.0; }
};

// Backward induction on the recombining walk lattice x = j*sqrt(T/n):
// V_n = f(T, x), V_k = min(g, max(f, (V_up + V_down)/2)). Rademacher only.
double walk_game_value(const SmoothPayoffPair& pair, const StepLaw& law, int n,
                       double T);

// Explicit error bound:
// (rho*T/sqrt(n)) * (3||Lf|| + 3||Lg|| + ||ft|| + ||gt||) + (T/n)(||Lf|| + ||Lg||)
double lr_bound(const SmoothPayoffPair& pair, double rho, double T, int n);

struct RhoEstimate {
    double rho_hat = 0.0;
    double rho_hat_sq = 0.0;
    double std_error = 0.0;      // stderr of rho_hat (delta method)
    double std_error_sq = 0.0;   // stderr of rho_hat_sq
    double mean_theta = 0.0;
    long samples = 0;
};

// Monte Carlo over fine-grid Brownian first exits from (-b, a) with the
// continuity-corrected detection threshold; returns sqrt(sample Var Theta).
RhoEstimate estimate_rho(const StepLaw& law, long samples, std::uint64_t seed,
                         int threads = 1, double grid_dt = 2.5e-4);

struct WalkBruteForceResult {
    double minmax = 0.0;
    double maxmin = 0.0;
};

// literal min-max over all consistent stopping-rule pairs, n <= 3
WalkBruteForceResult walk_brute_force(const SmoothPayoffPair& pair, int n,
                                      double T);

struct NormAuditReport {
    double worst_L_ratio = 0.0;   // numeric |Lh| / declared, over f and g
    double worst_t_ratio = 0.0;   // numeric |dh/dt| / declared
    bool pass = false;
};

// Spot audit of the declared norms on a t-x sample grid via central finite
// differences; pass iff no sampled value exceeds declared * (1 + 1e-6).
NormAuditReport audit_norms(const SmoothPayoffPair& pair, double t_max,
                            double x_max, int grid_points);

// documented smooth-pair catalogue
// bump: f = A exp(-lambda t) exp(-(x - x0)^2/(2 w^2)), g = f + c (c >= 0);
//   ||ft|| = lambda*A, ||Lf|| = A*(lambda + 1/(2 w^2)), same for g.
// The norms are translation invariant; x0 = 0 peaks at the start, which
// pins the game value at f(0,0) = A for every n (the holder just stops),
// so refinement studies should shift the peak with x0 != 0.
SmoothPayoffPair make_bump_pair_at(double A, double lambda, double w, double x0,
                                   double c);
SmoothPayoffPair make_bump_pair(double A, double lambda, double w, double c);
// bump_vs_const: same f, g == B with B >= A (so Lg = gt = 0)
SmoothPayoffPair make_bump_vs_const_at(double A, double lambda, double w,
                                       double x0, double B);
SmoothPayoffPair make_bump_vs_const(double A, double lambda, double w, double B);

}  // namespace gopt
