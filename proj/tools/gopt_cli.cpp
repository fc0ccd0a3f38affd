// gopt: game option pricing, exercise policies, hedging and embedding
// diagnostics on CRR lattices.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gopt/convergence.hpp"
#include "gopt/dynkin.hpp"
#include "gopt/embed.hpp"
#include "gopt/hedge.hpp"
#include "gopt/market.hpp"
#include "gopt/payoff.hpp"
#include "gopt/serialize.hpp"
#include "gopt/walkgame.hpp"

using nlohmann::json;

namespace {

struct Opts {
    // market
    double z = 100.0, r = 0.02, kappa = 0.3, T = 1.0;
    // lattice
    int n = 64;
    std::string scheme = "martingale";
    std::string engine = "auto";
    bool allow_big = false;
    // payoff
    std::string payoff = "vanilla_put";
    double strike = 100.0;
    double m_floor = 0.0;
    double integrand_a = 1.0;
    std::string penalty = "none";
    double delta0 = 0.0;
    double delta = 0.0;
    double penalty_rate_a = 0.0;
    // monte carlo
    long paths = 100000;
    int oversample = 64;
    std::uint64_t seed = 1;
    double horizon_slack = 2.0;
    int threads = 1;
    // io
    std::string config;
    std::string out;
    std::string trace_path;
    std::string format = "text";
    // convergence
    std::vector<int> n_list;
    int n_ref = 0;
    bool single_scheme = false;
    // hedge
    double capital = -1.0;  // < 0 means solution price
    // walkgame
    std::string pair = "bump";
    double A = 1.0, lambda = 1.0, w = 1.0, c = 0.1, B = 1.1, x0 = 0.0;
    double rho = std::sqrt(2.0 / 3.0);
    long samples = 200000;
    double grid_dt = 2.5e-4;
    bool audit = false;
    // oracle
    double law_a = 1.0, law_b = 1.0;
};

void add_market_opts(CLI::App* cmd, Opts& o) {
    cmd->add_option("--z", o.z, "initial stock price");
    cmd->add_option("--r", o.r, "risk-free rate");
    cmd->add_option("--kappa", o.kappa, "volatility");
    cmd->add_option("--T", o.T, "expiry");
}

void add_lattice_opts(CLI::App* cmd, Opts& o) {
    cmd->add_option("--n", o.n, "lattice steps");
    cmd->add_option("--scheme", o.scheme, "martingale | symmetric")
        ->check(CLI::IsMember({"martingale", "symmetric"}));
    cmd->add_option("--engine", o.engine, "tree | memo | auto")
        ->check(CLI::IsMember({"tree", "memo", "auto"}));
    cmd->add_flag("--allow-big", o.allow_big, "lift the tree engine cap to 24");
}

void add_payoff_opts(CLI::App* cmd, Opts& o) {
    cmd->add_option("--payoff", o.payoff,
                    "vanilla_put | vanilla_call | russian | integral_call | "
                    "integral_put | asian_call | asian_put");
    cmd->add_option("--strike", o.strike, "strike K");
    cmd->add_option("--m-floor", o.m_floor, "russian floor");
    cmd->add_option("--integrand-a", o.integrand_a, "integral payoff slope");
    cmd->add_option("--penalty", o.penalty,
                    "none | constant | proportional | integral")
        ->check(CLI::IsMember({"none", "constant", "proportional", "integral"}));
    cmd->add_option("--delta0", o.delta0, "constant penalty");
    cmd->add_option("--delta", o.delta, "proportional penalty rate");
    cmd->add_option("--penalty-rate-a", o.penalty_rate_a,
                    "integral penalty slope");
}

void add_mc_opts(CLI::App* cmd, Opts& o) {
    cmd->add_option("--paths", o.paths, "Monte Carlo paths");
    cmd->add_option("--oversample", o.oversample, "fine grid steps per lattice step");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--horizon-slack", o.horizon_slack, "simulate up to slack*T");
    cmd->add_option("--threads", o.threads, "worker threads");
}

void add_io_opts(CLI::App* cmd, Opts& o, bool with_trace = false) {
    cmd->add_option("--config", o.config, "JSON config file (flags win)");
    cmd->add_option("--out", o.out, "output file");
    if (with_trace)
        cmd->add_option("--trace", o.trace_path, "per-path trace CSV");
    cmd->add_option("--format", o.format, "text | json")
        ->check(CLI::IsMember({"text", "json"}));
}

// config file merge: a key fills its field only when the flag was not given
void apply_config(CLI::App* cmd, Opts& o) {
    if (o.config.empty()) return;
    std::ifstream in(o.config);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + o.config);
    json cfg = json::parse(in);

    auto untouched = [&](const std::string& flag) {
        auto* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() == 0;
    };
    auto num = [&](const std::string& flag, const char* key, auto& field) {
        if (cfg.contains(key) && untouched(flag))
            field = cfg.at(key).get<std::decay_t<decltype(field)>>();
    };
    num("--z", "z", o.z);
    num("--r", "r", o.r);
    num("--kappa", "kappa", o.kappa);
    num("--T", "T", o.T);
    num("--n", "n", o.n);
    num("--scheme", "scheme", o.scheme);
    num("--engine", "engine", o.engine);
    num("--payoff", "payoff", o.payoff);
    num("--strike", "strike", o.strike);
    num("--m-floor", "m_floor", o.m_floor);
    num("--integrand-a", "integrand_a", o.integrand_a);
    num("--penalty", "penalty", o.penalty);
    num("--delta0", "delta0", o.delta0);
    num("--delta", "delta", o.delta);
    num("--penalty-rate-a", "penalty_rate_a", o.penalty_rate_a);
    num("--paths", "paths", o.paths);
    num("--oversample", "oversample", o.oversample);
    num("--seed", "seed", o.seed);
    num("--horizon-slack", "horizon_slack", o.horizon_slack);
    num("--threads", "threads", o.threads);
    num("--n-list", "n_list", o.n_list);
    num("--n-ref", "n_ref", o.n_ref);
    num("--capital", "capital", o.capital);
    num("--samples", "samples", o.samples);
    num("--grid-dt", "grid_dt", o.grid_dt);
}

gopt::MarketParams market_of(const Opts& o) {
    return gopt::MarketParams{o.z, o.r, o.kappa, o.T};
}

gopt::LatticeScheme scheme_of(const Opts& o) {
    return o.scheme == "symmetric" ? gopt::LatticeScheme::Symmetric
                                   : gopt::LatticeScheme::Martingale;
}

gopt::PayoffFunctional payoff_of(const Opts& o) {
    gopt::PayoffSpec spec;
    spec.name = o.payoff;
    spec.K = o.strike;
    spec.m_floor = o.m_floor;
    spec.integrand_a = o.integrand_a;
    spec.penalty = o.penalty;
    spec.delta0 = o.delta0;
    spec.delta = o.delta;
    spec.penalty_rate_a = o.penalty_rate_a;
    return gopt::make_payoff(spec);
}

gopt::EngineKind engine_of(const Opts& o, const gopt::PayoffFunctional& payoff) {
    if (o.engine == "tree") return gopt::EngineKind::FullTree;
    if (o.engine == "memo") return gopt::EngineKind::MemoizedState;
    return payoff.has_reducer() ? gopt::EngineKind::MemoizedState
                                : gopt::EngineKind::FullTree;
}

gopt::SimConfig simcfg_of(const Opts& o) {
    gopt::SimConfig cfg;
    cfg.paths = o.paths;
    cfg.oversample = o.oversample;
    cfg.seed = o.seed;
    cfg.horizon_slack = o.horizon_slack;
    cfg.threads = o.threads;
    return cfg;
}

std::size_t rule_size(const gopt::StoppingRule& rule) {
    if (rule.is_prefix_backed()) return rule.prefixes().size();
    std::size_t total = 0;
    for (const auto& lv : rule.states().levels) total += lv.size();
    return total;
}

void emit(const Opts& o, const json& j) {
    if (o.format == "json") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    for (const auto& [key, val] : j.items())
        std::cout << key << ": "
                  << (val.is_string() ? val.get<std::string>() : val.dump())
                  << "\n";
}

void write_trace(const std::string& path, const std::vector<gopt::TraceRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "path_id,Q_value,shortfall_sup,theta_n,n_hits\n";
    auto cell = [&](double v) {
        if (std::isnan(v)) return std::string();
        std::ostringstream ss;
        ss.precision(17);
        ss << v;
        return ss.str();
    };
    for (const auto& r : rows)
        out << r.path_id << ',' << cell(r.Q_value) << ',' << cell(r.shortfall_sup)
            << ',' << cell(r.theta_n) << ',' << r.n_hits << "\n";
}

gopt::GameSolution solve_of(const Opts& o, const gopt::PayoffFunctional& payoff,
                            bool keep_values = true) {
    gopt::MarketParams params = market_of(o);
    gopt::StepDistribution dist =
        gopt::crr_step_params(params, o.n, scheme_of(o));
    gopt::SolveOptions so;
    so.keep_values = keep_values;
    so.allow_big = o.allow_big;
    return gopt::solve(params, dist, payoff, engine_of(o, payoff), so);
}

int cmd_price(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::PayoffFunctional payoff = payoff_of(o);
    gopt::GameSolution sol = solve_of(o, payoff);
    json j{{"price", sol.price},
           {"F0", sol.F0},
           {"Delta0", sol.Delta0},
           {"scale", sol.scale},
           {"n", sol.n},
           {"engine", sol.engine == gopt::EngineKind::FullTree ? "tree" : "memo"},
           {"payoff", sol.payoff_label},
           {"writer_stop_set", rule_size(sol.writer_rule)},
           {"holder_stop_set", rule_size(sol.holder_rule)}};
    emit(o, j);
    if (!o.out.empty()) gopt::save_solution(sol, o.out);
    return 0;
}

int cmd_convergence(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::PayoffFunctional payoff = payoff_of(o);
    gopt::ConvergenceOptions copt;
    copt.n_list = o.n_list.empty() ? std::vector<int>{16, 32, 64, 128, 256}
                                   : o.n_list;
    copt.n_ref = o.n_ref;
    copt.both_schemes = !o.single_scheme;
    gopt::ConvergenceReport rep =
        gopt::convergence_study(market_of(o), payoff, copt);

    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back(json{{"n", r.n},
                            {"V", r.V},
                            {"V_hat", r.V_hat},
                            {"error", r.error},
                            {"scheme_gap", r.scheme_gap},
                            {"runtime_sec", r.runtime_sec}});
    json j{{"n_ref", rep.n_ref},
           {"reference", rep.reference},
           {"fitted_alpha", rep.fitted_alpha},
           {"envelope_C", rep.envelope_C},
           {"monotone_ok", rep.monotone_ok}};
    if (o.format == "json") {
        j["rows"] = rows;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "n,V,V_hat,error,scheme_gap,runtime_sec\n";
        std::cout.precision(12);
        for (const auto& r : rep.rows)
            std::cout << r.n << ',' << r.V << ',' << r.V_hat << ',' << r.error
                      << ',' << r.scheme_gap << ',' << r.runtime_sec << "\n";
        emit(o, j);
    }
    if (!o.out.empty()) {
        std::ofstream out(o.out, std::ios::trunc);
        out << "n,V,V_hat,error,scheme_gap,runtime_sec\n";
        out.precision(17);
        for (const auto& r : rep.rows)
            out << r.n << ',' << r.V << ',' << r.V_hat << ',' << r.error << ','
                << r.scheme_gap << ',' << r.runtime_sec << "\n";
    }
    return 0;
}

int cmd_hedge_backtest(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::PayoffFunctional payoff = payoff_of(o);
    gopt::GameSolution sol = solve_of(o, payoff);
    std::optional<double> cap;
    if (o.capital >= 0.0) cap = o.capital;
    gopt::HedgeStrategy hedge = gopt::build_hedge(sol, sol.dist, cap);
    std::vector<gopt::TraceRow> trace;
    gopt::SimReport rep = gopt::simulate_shortfall(
        hedge, sol, market_of(o), payoff, simcfg_of(o),
        o.trace_path.empty() ? nullptr : &trace);
    json j{{"price", sol.price},
           {"initial_capital", hedge.initial_capital},
           {"mean_shortfall_sup", rep.estimate},
           {"std_error", rep.std_error},
           {"mean_theta_n", rep.mean_theta_n},
           {"paths", rep.paths},
           {"failed_paths", rep.failed_paths}};
    emit(o, j);
    if (!o.trace_path.empty()) write_trace(o.trace_path, trace);
    if (!o.out.empty()) gopt::save_hedge(hedge, o.out);
    return 0;
}

int cmd_exercise_quality(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::PayoffFunctional payoff = payoff_of(o);
    gopt::GameSolution sol = solve_of(o, payoff);
    std::vector<gopt::TraceRow> trace;
    gopt::SimReport rep = gopt::evaluate_exercise_quality(
        sol, market_of(o), payoff, simcfg_of(o),
        o.trace_path.empty() ? nullptr : &trace);
    json j{{"price", sol.price},
           {"mean_Q", rep.estimate},
           {"std_error", rep.std_error},
           {"gap", rep.gap},
           {"paired_gap", rep.paired_gap},
           {"paired_se", rep.paired_se},
           {"mean_theta_n", rep.mean_theta_n},
           {"paths", rep.paths},
           {"failed_paths", rep.failed_paths}};
    emit(o, j);
    if (!o.trace_path.empty()) write_trace(o.trace_path, trace);
    return 0;
}

int cmd_embed_diagnostics(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::MarketParams params = market_of(o);
    std::vector<gopt::TraceRow> trace;
    gopt::SimReport rep = gopt::embedding_diagnostics(
        params, o.n, simcfg_of(o), o.trace_path.empty() ? nullptr : &trace);
    double lvl = params.kappa * std::sqrt(params.T / o.n);
    json j{{"mean_theta1", rep.mean_theta1},
           {"expected_theta1", params.T / o.n},
           {"sign_plus_freq", rep.sign_plus_freq},
           {"expected_plus_prob", 1.0 / (std::exp(lvl) + 1.0)},
           {"chi2_signs", rep.chi2_signs},
           {"mean_theta_n", rep.mean_theta_n},
           {"std_error", rep.std_error},
           {"paths", rep.paths},
           {"failed_paths", rep.failed_paths}};
    emit(o, j);
    if (!o.trace_path.empty()) write_trace(o.trace_path, trace);
    return 0;
}

gopt::SmoothPayoffPair pair_of(const Opts& o) {
    if (o.pair == "bump_vs_const")
        return gopt::make_bump_vs_const_at(o.A, o.lambda, o.w, o.x0, o.B);
    return gopt::make_bump_pair_at(o.A, o.lambda, o.w, o.x0, o.c);
}

int cmd_walkgame(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::SmoothPayoffPair pair = pair_of(o);
    gopt::StepLaw law = gopt::StepLaw::rademacher();
    double value = gopt::walk_game_value(pair, law, o.n, o.T);
    double bound = gopt::lr_bound(pair, o.rho, o.T, o.n);
    json j{{"pair", pair.label},
           {"n", o.n},
           {"T", o.T},
           {"value", value},
           {"rho", o.rho},
           {"lr_bound", bound}};
    if (o.audit) {
        gopt::NormAuditReport audit = gopt::audit_norms(pair, o.T, 6.0 * o.w, 41);
        j["norm_audit_pass"] = audit.pass;
        j["worst_L_ratio"] = audit.worst_L_ratio;
        j["worst_t_ratio"] = audit.worst_t_ratio;
    }
    emit(o, j);
    return 0;
}

int cmd_oracle(CLI::App* cmd, Opts& o) {
    apply_config(cmd, o);
    gopt::StepLaw law = (o.law_a == 1.0 && o.law_b == 1.0)
                            ? gopt::StepLaw::rademacher()
                            : gopt::StepLaw::two_point(o.law_a, o.law_b);
    gopt::RhoEstimate est =
        gopt::estimate_rho(law, o.samples, o.seed, o.threads, o.grid_dt);
    json j{{"a", law.a},
           {"b", law.b},
           {"p_up", law.p},
           {"mean_theta", est.mean_theta},
           {"expected_mean_theta", law.a * law.b},
           {"rho_hat", est.rho_hat},
           {"rho_hat_sq", est.rho_hat_sq},
           {"std_error", est.std_error},
           {"std_error_sq", est.std_error_sq},
           {"samples", est.samples}};
    emit(o, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"game option pricing and hedging on CRR lattices"};
    app.require_subcommand(1);
    Opts o;

    CLI::App* price = app.add_subcommand("price", "solve the lattice game");
    add_market_opts(price, o);
    add_lattice_opts(price, o);
    add_payoff_opts(price, o);
    add_io_opts(price, o);

    CLI::App* conv = app.add_subcommand("convergence", "price error study");
    add_market_opts(conv, o);
    add_payoff_opts(conv, o);
    add_io_opts(conv, o);
    conv->add_option("--n-list", o.n_list, "lattice sizes (ascending)");
    conv->add_option("--n-ref", o.n_ref, "reference size (0 = 4*max)");
    conv->add_flag("--single-scheme", o.single_scheme,
                   "skip the symmetric-scheme column");

    CLI::App* hedge = app.add_subcommand(
        "hedge-backtest", "shortfall of the replicating hedge on embedded paths");
    add_market_opts(hedge, o);
    add_lattice_opts(hedge, o);
    add_payoff_opts(hedge, o);
    add_mc_opts(hedge, o);
    add_io_opts(hedge, o, true);
    hedge->add_option("--capital", o.capital,
                      "initial capital (default: the solved price)");

    CLI::App* quality = app.add_subcommand(
        "exercise-quality", "realized game value of the lattice rules");
    add_market_opts(quality, o);
    add_lattice_opts(quality, o);
    add_payoff_opts(quality, o);
    add_mc_opts(quality, o);
    add_io_opts(quality, o, true);

    CLI::App* diag = app.add_subcommand(
        "embed-diagnostics", "embedding time and sign statistics");
    add_market_opts(diag, o);
    diag->add_option("--n", o.n, "lattice steps");
    add_mc_opts(diag, o);
    add_io_opts(diag, o, true);

    CLI::App* walk = app.add_subcommand(
        "walkgame", "smooth Dynkin game on the random walk lattice");
    walk->add_option("--pair", o.pair, "bump | bump_vs_const")
        ->check(CLI::IsMember({"bump", "bump_vs_const"}));
    walk->add_option("--A", o.A, "bump amplitude");
    walk->add_option("--lambda", o.lambda, "bump time decay");
    walk->add_option("--w", o.w, "bump width");
    walk->add_option("--x0", o.x0, "bump center");
    walk->add_option("--c", o.c, "upper payoff offset");
    walk->add_option("--B", o.B, "constant upper payoff");
    walk->add_option("--n", o.n, "walk steps");
    walk->add_option("--T", o.T, "horizon");
    walk->add_option("--rho", o.rho, "sqrt(Var Theta) for the bound");
    walk->add_flag("--audit", o.audit, "audit the declared norms");
    add_io_opts(walk, o);

    CLI::App* oracle = app.add_subcommand(
        "oracle", "Monte Carlo exit-time moments of a two-point step law");
    oracle->add_option("--a", o.law_a, "upper exit level");
    oracle->add_option("--b", o.law_b, "lower exit level");
    oracle->add_option("--samples", o.samples, "sample count");
    oracle->add_option("--grid-dt", o.grid_dt, "fine grid step");
    oracle->add_option("--seed", o.seed, "RNG seed");
    oracle->add_option("--threads", o.threads, "worker threads");
    add_io_opts(oracle, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (price->parsed()) return cmd_price(price, o);
        if (conv->parsed()) return cmd_convergence(conv, o);
        if (hedge->parsed()) return cmd_hedge_backtest(hedge, o);
        if (quality->parsed()) return cmd_exercise_quality(quality, o);
        if (diag->parsed()) return cmd_embed_diagnostics(diag, o);
        if (walk->parsed()) return cmd_walkgame(walk, o);
        if (oracle->parsed()) return cmd_oracle(oracle, o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
