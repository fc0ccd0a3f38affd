#include <cmath>
#include <memory>

#include "doctest.h"
#include "gopt/market.hpp"
#include "gopt/payoff.hpp"
#include "gopt/rng.hpp"

using namespace gopt;

namespace {

PiecewiseConstantPath step_path() {
    PiecewiseConstantPath p;
    p.breakpoints = {0.0, 0.25, 0.5, 0.75};
    p.values = {100.0, 120.0, 90.0, 105.0};
    p.horizon = 1.0;
    return p;
}

}  // namespace

TEST_SUITE("payoff") {

TEST_CASE("vanilla put and call") {
    auto put = make_vanilla_put(110.0);
    auto call = make_vanilla_call(95.0);
    auto path = step_path();
    CHECK(evaluate(put, path, 0.0).F == 10.0);
    CHECK(evaluate(put, path, 0.3).F == 0.0);
    CHECK(evaluate(put, path, 0.6).F == 20.0);
    CHECK(evaluate(call, path, 0.3).F == 25.0);
    CHECK(evaluate(call, path, 1.0).F == 10.0);
    CHECK(evaluate(put, path, 0.6).Delta == 0.0);
    CHECK(evaluate(put, path, 0.6).G == 20.0);
}

TEST_CASE("penalty attachments") {
    auto path = step_path();
    auto c = with_constant_penalty(make_vanilla_put(110.0), 5.0);
    CHECK(evaluate(c, path, 0.6).Delta == 5.0);
    CHECK(evaluate(c, path, 0.6).G == 25.0);
    auto pr = with_proportional_penalty(make_vanilla_put(110.0), 0.1);
    CHECK(evaluate(pr, path, 0.3).Delta == doctest::Approx(12.0).epsilon(1e-15));
    auto ip = with_integral_penalty(make_vanilla_put(110.0),
                                    linear_integrand(0.01));
    // integral of 0.01*S over [0, 0.6]: 0.25*(1 + 1.2) + 0.1*0.9
    CHECK(evaluate(ip, path, 0.6).Delta ==
          doctest::Approx(0.25 * 1.0 + 0.25 * 1.2 + 0.1 * 0.9).epsilon(1e-12));
    auto none = with_no_penalty(c);
    CHECK(evaluate(none, path, 0.6).Delta == 0.0);
}

TEST_CASE("russian payoff") {
    auto path = step_path();
    auto rus = make_russian(110.0);
    CHECK(evaluate(rus, path, 0.0).F == 110.0);
    CHECK(evaluate(rus, path, 0.3).F == 120.0);
    CHECK(evaluate(rus, path, 0.6).F == 120.0);
    auto rus95 = make_russian(95.0);
    CHECK(evaluate(rus95, path, 0.0).F == 100.0);
}

TEST_CASE("integral and asian payoffs") {
    auto path = step_path();
    auto ic = make_integral_call(linear_integrand(1.0), 50.0);
    // integral of S over [0, 0.5] = 0.25*100 + 0.25*120 = 55
    CHECK(evaluate(ic, path, 0.5).F == doctest::Approx(5.0).epsilon(1e-12));
    auto ac = make_asian_call(100.0);
    CHECK(ac.truncation_required);
    // average over [0, 0.5] = 55/0.5 = 110
    CHECK(evaluate(ac, path, 0.5).F == doctest::Approx(10.0).epsilon(1e-12));
    // t = 0 average falls back to the spot value
    CHECK(evaluate(ac, path, 0.0).F == 0.0);
    auto ap = make_asian_put(120.0);
    CHECK(evaluate(ap, path, 0.5).F == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("payoff scale") {
    MarketParams p{100.0, 0.02, 0.3, 1.0};
    auto c = with_constant_penalty(make_vanilla_put(110.0), 5.0);
    CHECK(payoff_scale(c, p) == doctest::Approx(1.0 + 10.0 + 5.0 + 100.0).epsilon(1e-15));
}

TEST_CASE("scanner matches functional on lattice paths") {
    MarketParams params{100.0, 0.03, 0.35, 0.75};
    StepDistribution dist = crr_step_params(params, 12, LatticeScheme::Martingale);
    Philox rng(7, 0);
    for (const auto& payoff :
         {with_constant_penalty(make_vanilla_put(100.0), 5.0),
          with_proportional_penalty(make_russian(110.0), 0.02),
          with_integral_penalty(make_integral_call(linear_integrand(1.0), 60.0),
                                linear_integrand(0.05)),
          make_asian_call(95.0)}) {
        for (int trial = 0; trial < 20; ++trial) {
            SignSequence signs(12);
            for (auto& s : signs) s = rng.next_uniform() < 0.5 ? -1 : +1;
            PiecewiseConstantPath path = stock_path_from_signs(params, dist, signs);
            auto scan = payoff.make_scanner();
            scan->reset(path.values[0]);
            for (std::size_t k = 1; k < path.breakpoints.size(); ++k) {
                scan->advance(path.breakpoints[k], path.values[k]);
                PayoffValues ref = evaluate(payoff, path, path.breakpoints[k]);
                CHECK(scan->F_now() == doctest::Approx(ref.F).epsilon(1e-12));
                CHECK(scan->Delta_now() == doctest::Approx(ref.Delta).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("reducer payoffs match the functional on lattice paths") {
    MarketParams params{100.0, 0.03, 0.35, 0.75};
    StepDistribution dist = crr_step_params(params, 10, LatticeScheme::Martingale);
    Philox rng(11, 0);
    for (const auto& payoff :
         {with_constant_penalty(make_vanilla_put(100.0), 5.0),
          with_proportional_penalty(make_vanilla_call(90.0), 0.03),
          with_proportional_penalty(make_russian(110.0), 0.02)}) {
        REQUIRE(payoff.has_reducer());
        auto reducer = payoff.make_reducer(params, dist);
        for (int trial = 0; trial < 30; ++trial) {
            SignSequence signs(10);
            for (auto& s : signs) s = rng.next_uniform() < 0.5 ? -1 : +1;
            PiecewiseConstantPath path = stock_path_from_signs(params, dist, signs);
            int idx = reducer->root_index();
            for (int k = 0; k <= 10; ++k) {
                double t = k * dist.dt;
                double S = path.at(t);
                PayoffValues ref = evaluate(payoff, path, t);
                double F, D;
                if (reducer->homogeneous()) {
                    double f, d;
                    reducer->payoff_unit(k, idx, f, d);
                    F = S * f;
                    D = S * d;
                } else {
                    reducer->payoff_at(k, idx, F, D);
                }
                CHECK(F == doctest::Approx(ref.F).epsilon(1e-11));
                CHECK(D == doctest::Approx(ref.Delta).epsilon(1e-11));
                if (k < 10) idx = reducer->child_index(k, idx, signs[static_cast<std::size_t>(k)]);
            }
        }
    }
}

TEST_CASE("reducer label round trip") {
    MarketParams params{100.0, 0.0, 0.35, 0.75};
    StepDistribution dist = crr_step_params(params, 8, LatticeScheme::Martingale);
    for (const auto& payoff :
         {with_constant_penalty(make_vanilla_put(100.0), 5.0),
          with_proportional_penalty(make_russian(110.0), 0.02)}) {
        auto reducer = payoff.make_reducer(params, dist);
        for (int k = 0; k <= 8; ++k)
            for (int idx = 0; idx < reducer->domain_size(k); ++idx)
                CHECK(reducer->index_of(k, reducer->label_of(k, idx)) == idx);
    }
}

TEST_CASE("lipschitz audit passes for the catalogue") {
    MarketParams params{100.0, 0.03, 0.35, 0.75};
    StepDistribution dist = crr_step_params(params, 8, LatticeScheme::Martingale);
    Philox rng(3, 0);
    std::vector<PiecewiseConstantPath> paths;
    for (int trial = 0; trial < 6; ++trial) {
        SignSequence signs(8);
        for (auto& s : signs) s = rng.next_uniform() < 0.5 ? -1 : +1;
        paths.push_back(stock_path_from_signs(params, dist, signs));
    }
    std::vector<double> times = {0.0, 0.1, 0.2, 0.35, 0.5, 0.7, 0.75};
    for (const auto& payoff :
         {with_constant_penalty(make_vanilla_put(100.0), 5.0),
          with_proportional_penalty(make_russian(110.0), 0.02),
          with_integral_penalty(make_integral_call(linear_integrand(1.0), 60.0),
                                linear_integrand(0.05))}) {
        LipschitzReport rep = lipschitz_check(payoff, paths, times);
        CHECK(rep.pass);
    }

    // averaging payoffs are not Lipschitz near t = 0: right after an early
    // jump the average moves at rate (S - avg)/t, which beats any declared
    // modulus once t is small enough
    auto asian = make_asian_call(100.0);
    PiecewiseConstantPath jump;
    jump.breakpoints = {0.0, 0.002};
    jump.values = {100.0, 115.0};
    jump.horizon = 0.75;
    PiecewiseConstantPath flat;
    flat.breakpoints = {0.0};
    flat.values = {100.0};
    flat.horizon = 0.75;
    LipschitzReport rep =
        lipschitz_check(asian, {jump, flat}, {0.002, 0.00201, 0.5});
    CHECK_FALSE(rep.pass);
}

TEST_CASE("make_payoff rejects unknown names") {
    PayoffSpec s;
    s.name = "lookback";
    CHECK_THROWS_AS(make_payoff(s), std::invalid_argument);
    PayoffSpec bad;
    bad.name = "vanilla_put";
    bad.penalty = "quadratic";
    CHECK_THROWS_AS(make_payoff(bad), std::invalid_argument);
}

}  // TEST_SUITE
