#include "gopt/walkgame.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gopt/dynkin.hpp"
#include "gopt/parallel.hpp"
#include "gopt/rng.hpp"

namespace gopt {

namespace {
constexpr double kBarrierShift = 0.5826;
}

StepLaw StepLaw::two_point(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("two-point law needs a > 0, b > 0");
    if (std::fabs(a * b - 1.0) > 1e-12)
        throw std::invalid_argument("two-point law needs a*b = 1 (unit variance)");
    return StepLaw{a, b, b / (a + b), -1.0};
}

double walk_game_value(const SmoothPayoffPair& pair, const StepLaw& law, int n,
                       double T) {
    if (!law.is_rademacher())
        throw std::invalid_argument("lattice recursion supports the Rademacher law");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("T must be > 0");

    double h = std::sqrt(T / n);
    double dt = T / n;

    // level k holds x = (2i - k)*h, i = 0..k
    std::vector<double> next(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        next[static_cast<std::size_t>(i)] = pair.f(T, (2.0 * i - n) * h);

    std::vector<double> cur;
    for (int k = n - 1; k >= 0; --k) {
        double t = k * dt;
        cur.assign(static_cast<std::size_t>(k) + 1, 0.0);
        for (int i = 0; i <= k; ++i) {
            double x = (2.0 * i - k) * h;
            double E = 0.5 * (next[static_cast<std::size_t>(i + 1)] +
                              next[static_cast<std::size_t>(i)]);
            cur[static_cast<std::size_t>(i)] =
                std::min(pair.g(t, x), std::max(pair.f(t, x), E));
        }
        next.swap(cur);
    }
    return next[0];
}

double lr_bound(const SmoothPayoffPair& pair, double rho, double T, int n) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
    double first = rho * T / std::sqrt(static_cast<double>(n)) *
                   (3.0 * pair.Lf_sup + 3.0 * pair.Lg_sup + pair.ft_sup +
                    pair.gt_sup);
    double second = T / static_cast<double>(n) * (pair.Lf_sup + pair.Lg_sup);
    return first + second;
}

RhoEstimate estimate_rho(const StepLaw& law, long samples, std::uint64_t seed,
                         int threads, double grid_dt) {
    if (samples < 2) throw std::invalid_argument("samples must be >= 2");
    if (!(grid_dt > 0.0) || grid_dt > 0.01)
        throw std::invalid_argument("grid_dt must be in (0, 0.01]");

    double sq_dt = std::sqrt(grid_dt);
    double up_thr = law.a - kBarrierShift * sq_dt;
    double dn_thr = -(law.b - kBarrierShift * sq_dt);
    if (!(up_thr > 0.0) || !(dn_thr < 0.0))
        throw std::invalid_argument("grid_dt too coarse for this law");
    // exit from a bounded interval has exponential tails; the cap is a pure
    // infinite-loop guard and is never reached at these widths
    double span = law.a + law.b;
    long cap = static_cast<long>(std::ceil(80.0 * span * span / grid_dt));

    std::size_t N = static_cast<std::size_t>(samples);
    std::vector<double> theta(N, 0.0);

    parallel_for(N, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t sid = b; sid < e; ++sid) {
            Philox rng(seed, static_cast<std::uint64_t>(sid));
            double X = 0.0;
            long j = 0;
            while (j < cap) {
                ++j;
                X += sq_dt * rng.next_normal();
                if (X >= up_thr || X <= dn_thr) break;
            }
            theta[sid] = j * grid_dt;
        }
    });

    double mean = 0.0;
    for (double v : theta) mean += v;
    mean /= static_cast<double>(N);
    double m2 = 0.0, m4 = 0.0;
    for (double v : theta) {
        double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    double var = m2 / (static_cast<double>(N) - 1.0);
    m4 /= static_cast<double>(N);

    RhoEstimate est;
    est.samples = samples;
    est.mean_theta = mean;
    est.rho_hat_sq = var;
    est.rho_hat = std::sqrt(std::max(0.0, var));
    est.std_error_sq =
        std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(N));
    est.std_error = est.rho_hat > 0.0 ? est.std_error_sq / (2.0 * est.rho_hat)
                                      : 0.0;
    return est;
}

WalkBruteForceResult walk_brute_force(const SmoothPayoffPair& pair, int n,
                                      double T) {
    if (n < 0 || n > 3)
        throw std::invalid_argument("walk brute force supports n <= 3");
    double h = std::sqrt(T / std::max(1, n));
    double dt = T / std::max(1, n);

    std::vector<StoppingRule> rules = enumerate_rules(n);
    std::size_t R = rules.size();
    std::size_t P = 1ull << n;
    double prob = 1.0 / static_cast<double>(P);

    std::vector<std::vector<double>> fval(P), gval(P);
    std::vector<std::vector<int>> stop_at(R, std::vector<int>(P));
    for (std::size_t pi = 0; pi < P; ++pi) {
        SignSequence signs(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            signs[static_cast<std::size_t>(k)] =
                ((pi >> (n - 1 - k)) & 1) ? +1 : -1;
        fval[pi].resize(static_cast<std::size_t>(n) + 1);
        gval[pi].resize(static_cast<std::size_t>(n) + 1);
        double x = 0.0;
        for (int k = 0; k <= n; ++k) {
            fval[pi][static_cast<std::size_t>(k)] = pair.f(k * dt, x);
            gval[pi][static_cast<std::size_t>(k)] = pair.g(k * dt, x);
            if (k < n) x += signs[static_cast<std::size_t>(k)] * h;
        }
        for (std::size_t ri = 0; ri < R; ++ri)
            stop_at[ri][pi] = rules[ri].first_stop(signs);
    }

    std::vector<std::vector<double>> EQ(R, std::vector<double>(R, 0.0));
    for (std::size_t zi = 0; zi < R; ++zi)
        for (std::size_t hi = 0; hi < R; ++hi) {
            double acc = 0.0;
            for (std::size_t pi = 0; pi < P; ++pi) {
                int zk = stop_at[zi][pi], hk = stop_at[hi][pi];
                acc += prob * ((zk < hk) ? gval[pi][static_cast<std::size_t>(zk)]
                                         : fval[pi][static_cast<std::size_t>(hk)]);
            }
            EQ[zi][hi] = acc;
        }

    WalkBruteForceResult res;
    double minmax = 0.0, maxmin = 0.0;
    for (std::size_t zi = 0; zi < R; ++zi) {
        double worst = EQ[zi][0];
        for (std::size_t hi = 1; hi < R; ++hi)
            worst = std::max(worst, EQ[zi][hi]);
        if (zi == 0 || worst < minmax) minmax = worst;
    }
    for (std::size_t hi = 0; hi < R; ++hi) {
        double best = EQ[0][hi];
        for (std::size_t zi = 1; zi < R; ++zi) best = std::min(best, EQ[zi][hi]);
        if (hi == 0 || best > maxmin) maxmin = best;
    }
    res.minmax = minmax;
    res.maxmin = maxmin;
    return res;
}

NormAuditReport audit_norms(const SmoothPayoffPair& pair, double t_max,
                            double x_max, int grid_points) {
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
    double eps = 1e-4;
    NormAuditReport rep;
    auto probe = [&](const std::function<double(double, double)>& hfn,
                     double L_decl, double t_decl) {
        for (int it = 0; it < grid_points; ++it) {
            double t = t_max * it / (grid_points - 1);
            for (int ix = 0; ix < grid_points; ++ix) {
                double x = -x_max + 2.0 * x_max * ix / (grid_points - 1);
                double ht = (hfn(t + eps, x) - hfn(t - eps, x)) / (2.0 * eps);
                double hxx = (hfn(t, x + eps) - 2.0 * hfn(t, x) +
                              hfn(t, x - eps)) /
                             (eps * eps);
                double L = std::fabs(ht + 0.5 * hxx);
                if (L_decl > 0.0)
                    rep.worst_L_ratio = std::max(rep.worst_L_ratio, L / L_decl);
                else if (L > 1e-7)
                    rep.worst_L_ratio = std::max(rep.worst_L_ratio, 2.0);
                double tr = std::fabs(ht);
                if (t_decl > 0.0)
                    rep.worst_t_ratio = std::max(rep.worst_t_ratio, tr / t_decl);
                else if (tr > 1e-7)
                    rep.worst_t_ratio = std::max(rep.worst_t_ratio, 2.0);
            }
        }
    };
    probe(pair.f, pair.Lf_sup, pair.ft_sup);
    probe(pair.g, pair.Lg_sup, pair.gt_sup);
    rep.pass = rep.worst_L_ratio <= 1.0 + 1e-6 && rep.worst_t_ratio <= 1.0 + 1e-6;
    return rep;
}

SmoothPayoffPair make_bump_pair_at(double A, double lambda, double w,
                                   double x0, double c) {
    if (!(A > 0.0) || !(w > 0.0) || lambda < 0.0 || c < 0.0)
        throw std::invalid_argument("bump pair needs A > 0, w > 0, lambda >= 0, c >= 0");
    if (!std::isfinite(x0))
        throw std::invalid_argument("bump center must be finite");
    auto f = [A, lambda, w, x0](double t, double x) {
        double d = x - x0;
        return A * std::exp(-lambda * t) * std::exp(-d * d / (2.0 * w * w));
    };
    auto g = [f, c](double t, double x) { return f(t, x) + c; };
    SmoothPayoffPair pair;
    pair.label = "bump";
    pair.f = f;
    pair.g = g;
    // |Lf| peaks at x = x0: lambda*A + A/(2w^2); the off-center positive
    // branch maxes at e^{-3/2-lambda w^2} A/w^2, always smaller
    pair.Lf_sup = A * (lambda + 1.0 / (2.0 * w * w));
    pair.Lg_sup = pair.Lf_sup;
    pair.ft_sup = lambda * A;
    pair.gt_sup = pair.ft_sup;
    return pair;
}

SmoothPayoffPair make_bump_pair(double A, double lambda, double w, double c) {
    return make_bump_pair_at(A, lambda, w, 0.0, c);
}

SmoothPayoffPair make_bump_vs_const_at(double A, double lambda, double w,
                                       double x0, double B) {
    if (!(B >= A))
        throw std::invalid_argument("constant upper payoff needs B >= A");
    SmoothPayoffPair pair = make_bump_pair_at(A, lambda, w, x0, 0.0);
    pair.label = "bump_vs_const";
    pair.g = [B](double, double) { return B; };
    pair.Lg_sup = 0.0;
    pair.gt_sup = 0.0;
    return pair;
}

SmoothPayoffPair make_bump_vs_const(double A, double lambda, double w,
                                    double B) {
    return make_bump_vs_const_at(A, lambda, w, 0.0, B);
}

}  // namespace gopt
