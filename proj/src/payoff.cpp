#include "gopt/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace gopt {

void ReducerBase::payoff_at(int, int, double&, double&) const {
    throw std::logic_error("plain payoff query on a homogeneous reducer");
}

void ReducerBase::payoff_unit(int, int, double&, double&) const {
    throw std::logic_error("unit payoff query on a plain reducer");
}

PayoffValues evaluate(const PayoffFunctional& payoff,
                      const PiecewiseConstantPath& path, double t) {
    if (t < 0.0 || t > path.horizon)
        throw std::invalid_argument("evaluation time out of range");
    PayoffValues v;
    v.F = payoff.F(path, t);
    v.Delta = payoff.Delta(path, t);
    v.G = v.F + v.Delta;
    if (!std::isfinite(v.F) || !std::isfinite(v.Delta) || v.F < 0.0 || v.Delta < 0.0)
        throw std::runtime_error("payoff produced a negative or non-finite value");
    return v;
}

double payoff_scale(const PayoffFunctional& payoff, const MarketParams& params) {
    PiecewiseConstantPath p0;
    p0.breakpoints = {0.0};
    p0.values = {params.z};
    p0.horizon = 0.0;
    PayoffValues v = evaluate(payoff, p0, 0.0);
    return 1.0 + v.F + v.Delta + params.z;
}

Integrand linear_integrand(double a) {
    Integrand g;
    g.f = [a](double, double x) { return a * x; };
    g.K = std::fabs(a);
    return g;
}

namespace {

enum class AtomKind {
    VanillaPut,
    VanillaCall,
    Russian,
    IntegralCall,
    IntegralPut,
    AsianCall,
    AsianPut
};

enum class PenKind { None, Constant, Proportional, Integral };

AtomKind atom_of(const std::string& name) {
    if (name == "vanilla_put") return AtomKind::VanillaPut;
    if (name == "vanilla_call") return AtomKind::VanillaCall;
    if (name == "russian") return AtomKind::Russian;
    if (name == "integral_call") return AtomKind::IntegralCall;
    if (name == "integral_put") return AtomKind::IntegralPut;
    if (name == "asian_call") return AtomKind::AsianCall;
    if (name == "asian_put") return AtomKind::AsianPut;
    throw std::invalid_argument("unknown payoff name: " + name);
}

PenKind pen_of(const std::string& name) {
    if (name == "none") return PenKind::None;
    if (name == "constant") return PenKind::Constant;
    if (name == "proportional") return PenKind::Proportional;
    if (name == "integral") return PenKind::Integral;
    throw std::invalid_argument("unknown penalty name: " + name);
}

// exact integral of f(u, v_u) du over [0, t] on a step path; f is treated
// as constant in u on each constancy interval (true for all built-ins)
double step_integral(const PiecewiseConstantPath& path, double t,
                     const std::function<double(double, double)>& f) {
    double acc = 0.0;
    std::size_t count = path.breakpoints.size();
    for (std::size_t i = 0; i < count; ++i) {
        double a = path.breakpoints[i];
        if (a >= t) break;
        double b = (i + 1 < count) ? std::min(path.breakpoints[i + 1], t) : t;
        if (b > a) acc += f(a, path.values[i]) * (b - a);
    }
    return acc;
}

double running_max(const PiecewiseConstantPath& path, double t) {
    double m = path.values[0];
    for (std::size_t i = 0; i < path.breakpoints.size(); ++i) {
        if (path.breakpoints[i] > t) break;
        m = std::max(m, path.values[i]);
    }
    return m;
}

// ---- scanner -------------------------------------------------------------

class CatalogueScanner final : public PayoffScanner {
public:
    CatalogueScanner(AtomKind atom, PenKind pen, const PayoffSpec& spec,
                     Integrand integrand, Integrand pen_rate)
        : atom_(atom),
          pen_(pen),
          K_(spec.K),
          m_floor_(spec.m_floor),
          delta0_(spec.delta0),
          delta_(spec.delta),
          integrand_(std::move(integrand)),
          pen_rate_(std::move(pen_rate)) {}

    void reset(double S0) override {
        t_ = 0.0;
        S_ = S0;
        runmax_ = S0;
        acc_ = 0.0;
        pen_acc_ = 0.0;
    }

    void advance(double t, double S) override {
        double dt = t - t_;
        if (atom_ == AtomKind::IntegralCall || atom_ == AtomKind::IntegralPut ||
            atom_ == AtomKind::AsianCall || atom_ == AtomKind::AsianPut)
            acc_ += integrand_.f(t_, S_) * dt;
        if (pen_ == PenKind::Integral) pen_acc_ += pen_rate_.f(t_, S_) * dt;
        t_ = t;
        S_ = S;
        if (S > runmax_) runmax_ = S;
    }

    double F_now() const override {
        switch (atom_) {
            case AtomKind::VanillaPut: return std::max(K_ - S_, 0.0);
            case AtomKind::VanillaCall: return std::max(S_ - K_, 0.0);
            case AtomKind::Russian: return std::max(m_floor_, runmax_);
            case AtomKind::IntegralCall: return std::max(acc_ - K_, 0.0);
            case AtomKind::IntegralPut: return std::max(K_ - acc_, 0.0);
            case AtomKind::AsianCall: {
                double avg = t_ > 0.0 ? acc_ / t_ : S_;
                return std::max(avg - K_, 0.0);
            }
            case AtomKind::AsianPut: {
                double avg = t_ > 0.0 ? acc_ / t_ : S_;
                return std::max(K_ - avg, 0.0);
            }
        }
        return 0.0;
    }

    double Delta_now() const override {
        switch (pen_) {
            case PenKind::None: return 0.0;
            case PenKind::Constant: return delta0_;
            case PenKind::Proportional: return delta_ * S_;
            case PenKind::Integral: return pen_acc_;
        }
        return 0.0;
    }

private:
    AtomKind atom_;
    PenKind pen_;
    double K_, m_floor_, delta0_, delta_;
    Integrand integrand_, pen_rate_;
    double t_ = 0.0, S_ = 0.0, runmax_ = 0.0, acc_ = 0.0, pen_acc_ = 0.0;
};

// ---- reducers ------------------------------------------------------------

// Vanilla put/call on the recombining lattice: state = signed step count m,
// level-k slot (m + k)/2 in [0, k]. Supports no/constant/proportional
// penalties (all functions of (k, m)).
class VanillaReducer final : public ReducerBase {
public:
    VanillaReducer(const MarketParams& params, const StepDistribution& dist,
                   bool is_put, double K, PenKind pen, double pen_value,
                   std::string id)
        : z_(params.z),
          drift_(dist.drift),
          halfwidth_(dist.halfwidth),
          K_(K),
          is_put_(is_put),
          pen_(pen),
          pen_value_(pen_value),
          id_(std::move(id)) {}

    int domain_size(int k) const override { return k + 1; }
    int root_index() const override { return 0; }
    int child_index(int, int idx, int sign) const override {
        return sign > 0 ? idx + 1 : idx;
    }
    bool homogeneous() const override { return false; }

    void payoff_at(int k, int idx, double& F, double& Delta) const override {
        int m = 2 * idx - k;
        double S = z_ * std::exp(k * drift_ + m * halfwidth_);
        F = is_put_ ? std::max(K_ - S, 0.0) : std::max(S - K_, 0.0);
        switch (pen_) {
            case PenKind::None: Delta = 0.0; break;
            case PenKind::Constant: Delta = pen_value_; break;
            case PenKind::Proportional: Delta = pen_value_ * S; break;
            default: Delta = 0.0; break;
        }
    }

    std::array<int, 3> label_of(int k, int idx) const override {
        return {2 * idx - k, 0, 0};
    }
    int index_of(int k, const std::array<int, 3>& label) const override {
        int m = label[0];
        if ((m + k) % 2 != 0 || m < -k || m > k)
            throw std::invalid_argument("state label out of domain");
        return (m + k) / 2;
    }
    std::string id() const override { return id_; }

private:
    double z_, drift_, halfwidth_, K_;
    bool is_put_;
    PenKind pen_;
    double pen_value_;
    std::string id_;
};

// Russian option, homogeneous degree-1 reduction on x = log(M'/S) >= 0
// with M' = max(m_floor, running max of S). Per-unit payoffs f = e^x,
// d = delta (proportional penalty) or 0. States live on the affine lattice
// x = base + a*c + b*dd clamped at 0:
//   family 0 (base = x0 = log(max(m_floor, z)/z)): never clamped; at level
//     k it always has a = -k, so only b in [-k, k] is stored;
//   family 1 (base = 0, entered by clamping): pairs (a, b) with -k <= a
//     <= 0 and |b| <= -a; when c == 0 the a-coordinate is canonicalized
//     away and family 1 is just b in [0, k].
class RussianReducer final : public ReducerBase {
public:
    RussianReducer(const MarketParams& params, const StepDistribution& dist,
                   double m_floor, double delta, std::string id)
        : x0_(std::log(std::max(m_floor, params.z) / params.z)),
          c_(dist.drift),
          dd_(dist.halfwidth),
          c_zero_(dist.drift == 0.0),
          delta_(delta),
          id_(std::move(id)) {
        if (!(dd_ > 0.0)) throw std::invalid_argument("degenerate lattice step");
    }

    int domain_size(int k) const override {
        if (c_zero_) return (2 * k + 1) + (k + 1);
        return (2 * k + 1) + (k + 1) * (k + 1);
    }

    int root_index() const override {
        // family 0 root (a = 0, b = 0) unless x0 == 0, then family 1 origin
        if (x0_ == 0.0) return fam1_origin(0);
        return 0;  // level 0: single fam0 slot (b = 0 at index 0)
    }

    int child_index(int k, int idx, int sign) const override {
        double x;
        int a, b;
        bool fam0 = decode(k, idx, a, b, x);
        int b_new = b - sign;
        double x_new = x - (c_ + sign * dd_);
        if (x_new < 0.0) return fam1_origin(k + 1);
        if (fam0) {
            // stays family 0 with implicit a = -(k+1)
            return (b_new + (k + 1));
        }
        int a_new = a - 1;
        return fam1_index(k + 1, a_new, b_new);
    }

    bool homogeneous() const override { return true; }

    void payoff_unit(int k, int idx, double& f, double& d) const override {
        int a, b;
        double x;
        decode(k, idx, a, b, x);
        f = std::exp(std::max(x, 0.0));
        d = delta_;
    }

    std::array<int, 3> label_of(int k, int idx) const override {
        int a, b;
        double x;
        bool fam0 = decode(k, idx, a, b, x);
        return {fam0 ? 0 : 1, a, b};
    }

    int index_of(int k, const std::array<int, 3>& label) const override {
        int fam = label[0], a = label[1], b = label[2];
        if (fam == 0) {
            if (b < -k || b > k) throw std::invalid_argument("state label out of domain");
            return b + k;
        }
        if (c_zero_) {
            if (b < 0 || b > k) throw std::invalid_argument("state label out of domain");
            return (2 * k + 1) + b;
        }
        if (a > 0 || a < -k || std::abs(b) > -a)
            throw std::invalid_argument("state label out of domain");
        return fam1_index(k, a, b);
    }

    std::string id() const override { return id_; }

private:
    // returns true for family 0; fills (a, b) and x
    bool decode(int k, int idx, int& a, int& b, double& x) const {
        int fam0_count = 2 * k + 1;
        if (idx < fam0_count) {
            b = idx - k;
            a = c_zero_ ? 0 : -k;
            x = x0_ + a * c_ + b * dd_;
            return true;
        }
        int rest = idx - fam0_count;
        if (c_zero_) {
            a = 0;
            b = rest;
            x = b * dd_;
            return false;
        }
        int j = static_cast<int>(std::sqrt(static_cast<double>(rest)));
        while (j * j > rest) --j;
        while ((j + 1) * (j + 1) <= rest) ++j;
        a = -j;
        b = (rest - j * j) - j;
        x = a * c_ + b * dd_;
        return false;
    }

    int fam1_origin(int k) const { return 2 * k + 1; }

    int fam1_index(int k, int a, int b) const {
        if (c_zero_) return (2 * k + 1) + b;
        int j = -a;
        return (2 * k + 1) + j * j + (b + j);
    }

    double x0_, c_, dd_;
    bool c_zero_;
    double delta_;
    std::string id_;
};

// ---- label -----------------------------------------------------------

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string make_label(const PayoffSpec& spec) {
    AtomKind atom = atom_of(spec.name);
    std::string s = spec.name + "(";
    switch (atom) {
        case AtomKind::VanillaPut:
        case AtomKind::VanillaCall:
        case AtomKind::AsianCall:
        case AtomKind::AsianPut: s += "K=" + fmt(spec.K); break;
        case AtomKind::Russian: s += "m=" + fmt(spec.m_floor); break;
        case AtomKind::IntegralCall:
        case AtomKind::IntegralPut:
            s += "a=" + fmt(spec.integrand_a) + ",K=" + fmt(spec.K);
            break;
    }
    s += ")";
    PenKind pen = pen_of(spec.penalty);
    switch (pen) {
        case PenKind::None: break;
        case PenKind::Constant: s += "+constant(" + fmt(spec.delta0) + ")"; break;
        case PenKind::Proportional:
            s += "+proportional(" + fmt(spec.delta) + ")";
            break;
        case PenKind::Integral:
            s += "+integral(" + fmt(spec.penalty_rate_a) + ")";
            break;
    }
    return s;
}

double atom_L(AtomKind atom, const Integrand& integrand) {
    switch (atom) {
        case AtomKind::VanillaPut:
        case AtomKind::VanillaCall:
        case AtomKind::Russian: return 1.0;
        case AtomKind::IntegralCall:
        case AtomKind::IntegralPut: return integrand.K;
        case AtomKind::AsianCall:
        case AtomKind::AsianPut: return 1.0;  // not Lipschitz near t = 0
    }
    return 1.0;
}

double pen_L(PenKind pen, const PayoffSpec& spec, const Integrand& rate) {
    switch (pen) {
        case PenKind::None: return 0.0;
        case PenKind::Constant: return 0.0;
        case PenKind::Proportional: return spec.delta;
        case PenKind::Integral: return rate.K;
    }
    return 0.0;
}

}  // namespace

PayoffFunctional make_payoff(const PayoffSpec& spec) {
    AtomKind atom = atom_of(spec.name);
    PenKind pen = pen_of(spec.penalty);
    if (spec.delta0 < 0.0 || spec.delta < 0.0)
        throw std::invalid_argument("penalty parameters must be nonnegative");

    Integrand integrand = linear_integrand(spec.integrand_a);
    Integrand pen_rate = linear_integrand(spec.penalty_rate_a);

    auto spec_ptr = std::make_shared<const PayoffSpec>(spec);
    PayoffFunctional p;
    p.spec = spec_ptr;
    p.label = make_label(spec);
    p.lipschitz_L = std::max(1.0, atom_L(atom, integrand) + pen_L(pen, spec, pen_rate));
    p.truncation_required =
        (atom == AtomKind::AsianCall || atom == AtomKind::AsianPut);

    double K = spec.K, m_floor = spec.m_floor;
    auto f_fn = integrand.f;

    switch (atom) {
        case AtomKind::VanillaPut:
            p.F = [K](const PiecewiseConstantPath& v, double t) {
                return std::max(K - v.at(t), 0.0);
            };
            break;
        case AtomKind::VanillaCall:
            p.F = [K](const PiecewiseConstantPath& v, double t) {
                return std::max(v.at(t) - K, 0.0);
            };
            break;
        case AtomKind::Russian:
            p.F = [m_floor](const PiecewiseConstantPath& v, double t) {
                return std::max(m_floor, running_max(v, t));
            };
            break;
        case AtomKind::IntegralCall:
            p.F = [K, f_fn](const PiecewiseConstantPath& v, double t) {
                return std::max(step_integral(v, t, f_fn) - K, 0.0);
            };
            break;
        case AtomKind::IntegralPut:
            p.F = [K, f_fn](const PiecewiseConstantPath& v, double t) {
                return std::max(K - step_integral(v, t, f_fn), 0.0);
            };
            break;
        case AtomKind::AsianCall:
            p.F = [K, f_fn](const PiecewiseConstantPath& v, double t) {
                double avg = t > 0.0 ? step_integral(v, t, f_fn) / t : v.at(0.0);
                return std::max(avg - K, 0.0);
            };
            break;
        case AtomKind::AsianPut:
            p.F = [K, f_fn](const PiecewiseConstantPath& v, double t) {
                double avg = t > 0.0 ? step_integral(v, t, f_fn) / t : v.at(0.0);
                return std::max(K - avg, 0.0);
            };
            break;
    }

    double delta0 = spec.delta0, delta = spec.delta;
    auto rate_fn = pen_rate.f;
    switch (pen) {
        case PenKind::None:
            p.Delta = [](const PiecewiseConstantPath&, double) { return 0.0; };
            break;
        case PenKind::Constant:
            p.Delta = [delta0](const PiecewiseConstantPath&, double) {
                return delta0;
            };
            break;
        case PenKind::Proportional:
            p.Delta = [delta](const PiecewiseConstantPath& v, double t) {
                return delta * v.at(t);
            };
            break;
        case PenKind::Integral:
            p.Delta = [rate_fn](const PiecewiseConstantPath& v, double t) {
                return step_integral(v, t, rate_fn);
            };
            break;
    }

    p.make_scanner = [atom, pen, spec, integrand, pen_rate]() {
        return std::make_unique<CatalogueScanner>(atom, pen, spec, integrand,
                                                  pen_rate);
    };

    // exact state reducers where the node payoff is a function of the state
    bool vanilla_atom =
        (atom == AtomKind::VanillaPut || atom == AtomKind::VanillaCall);
    bool vanilla_pen = (pen != PenKind::Integral);
    if (vanilla_atom && vanilla_pen) {
        bool is_put = (atom == AtomKind::VanillaPut);
        double pen_value = (pen == PenKind::Constant)
                               ? spec.delta0
                               : (pen == PenKind::Proportional ? spec.delta : 0.0);
        PenKind pk = pen;
        std::string label = p.label;
        p.make_reducer = [is_put, K, pk, pen_value, label](
                             const MarketParams& params,
                             const StepDistribution& dist) {
            return std::make_shared<const VanillaReducer>(params, dist, is_put, K,
                                                          pk, pen_value, label);
        };
    } else if (atom == AtomKind::Russian &&
               (pen == PenKind::None || pen == PenKind::Proportional)) {
        double d = (pen == PenKind::Proportional) ? spec.delta : 0.0;
        std::string label = p.label;
        p.make_reducer = [m_floor, d, label](const MarketParams& params,
                                             const StepDistribution& dist) {
            return std::make_shared<const RussianReducer>(params, dist, m_floor,
                                                          d, label);
        };
    }
    return p;
}

PayoffFunctional make_vanilla_put(double K) {
    PayoffSpec s;
    s.name = "vanilla_put";
    s.K = K;
    return make_payoff(s);
}

PayoffFunctional make_vanilla_call(double K) {
    PayoffSpec s;
    s.name = "vanilla_call";
    s.K = K;
    return make_payoff(s);
}

PayoffFunctional make_russian(double m_floor) {
    PayoffSpec s;
    s.name = "russian";
    s.m_floor = m_floor;
    return make_payoff(s);
}

PayoffFunctional make_integral_call(const Integrand& f, double L_strike) {
    PayoffSpec s;
    s.name = "integral_call";
    s.K = L_strike;
    s.integrand_a = f.K;  // catalogue integrands are linear; slope = K
    return make_payoff(s);
}

PayoffFunctional make_integral_put(const Integrand& f, double L_strike) {
    PayoffSpec s;
    s.name = "integral_put";
    s.K = L_strike;
    s.integrand_a = f.K;
    return make_payoff(s);
}

PayoffFunctional make_asian_call(double K) {
    PayoffSpec s;
    s.name = "asian_call";
    s.K = K;
    return make_payoff(s);
}

PayoffFunctional make_asian_put(double K) {
    PayoffSpec s;
    s.name = "asian_put";
    s.K = K;
    return make_payoff(s);
}

namespace {
PayoffFunctional respecced(const PayoffFunctional& base, const std::string& pen,
                           double delta0, double delta, double rate_a) {
    if (!base.spec)
        throw std::invalid_argument(
            "penalty attachment requires a catalogue payoff");
    PayoffSpec s = *base.spec;
    s.penalty = pen;
    s.delta0 = delta0;
    s.delta = delta;
    s.penalty_rate_a = rate_a;
    return make_payoff(s);
}
}  // namespace

PayoffFunctional with_constant_penalty(PayoffFunctional base, double delta0) {
    return respecced(base, "constant", delta0, 0.0, 0.0);
}

PayoffFunctional with_proportional_penalty(PayoffFunctional base, double delta) {
    return respecced(base, "proportional", 0.0, delta, 0.0);
}

PayoffFunctional with_integral_penalty(PayoffFunctional base,
                                       const Integrand& rate) {
    return respecced(base, "integral", 0.0, 0.0, rate.K);
}

PayoffFunctional with_no_penalty(PayoffFunctional base) {
    return respecced(base, "none", 0.0, 0.0, 0.0);
}

LipschitzReport lipschitz_check(const PayoffFunctional& payoff,
                                const std::vector<PiecewiseConstantPath>& sample_paths,
                                const std::vector<double>& times) {
    if (sample_paths.size() < 2)
        throw std::invalid_argument("lipschitz_check needs at least 2 paths");
    LipschitzReport rep;
    double L = payoff.lipschitz_L;

    auto d0 = [](const PiecewiseConstantPath& v, const PiecewiseConstantPath& w,
                 double s) {
        double m = 0.0;
        for (double t : v.breakpoints)
            if (t <= s) m = std::max(m, std::fabs(v.at(t) - w.at(t)));
        for (double t : w.breakpoints)
            if (t <= s) m = std::max(m, std::fabs(v.at(t) - w.at(t)));
        return m;
    };

    for (std::size_t i = 0; i < sample_paths.size(); ++i) {
        for (std::size_t j = i + 1; j < sample_paths.size(); ++j) {
            const auto& v = sample_paths[i];
            const auto& w = sample_paths[j];
            for (double s : times) {
                double dist = d0(v, w, s);
                if (dist <= 0.0) continue;
                PayoffValues a = evaluate(payoff, v, s);
                PayoffValues b = evaluate(payoff, w, s);
                double lhs = std::fabs(a.F - b.F) + std::fabs(a.Delta - b.Delta);
                double ratio = lhs / (L * (s + 1.0) * dist);
                rep.max_ratio_2_1 = std::max(rep.max_ratio_2_1, ratio);
            }
        }
    }

    for (const auto& v : sample_paths) {
        for (double s : times) {
            for (double t : times) {
                if (t <= s) continue;
                PayoffValues a = evaluate(payoff, v, t);
                PayoffValues b = evaluate(payoff, v, s);
                double lhs = std::fabs(a.F - b.F) + std::fabs(a.Delta - b.Delta);
                double rhs =
                    L * ((t - s) * (1.0 + v.sup_abs(t)) + v.oscillation(s, t));
                if (rhs <= 0.0) continue;
                rep.max_ratio_2_2 = std::max(rep.max_ratio_2_2, lhs / rhs);
            }
        }
    }

    rep.pass = rep.max_ratio_2_1 <= 1.0 + 1e-9 && rep.max_ratio_2_2 <= 1.0 + 1e-9;
    return rep;
}

}  // namespace gopt
