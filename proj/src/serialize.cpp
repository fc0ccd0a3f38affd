#include "gopt/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gopt {

namespace {

using nlohmann::json;

const char* kSolutionTag = "gopt.solution";
const char* kHedgeTag = "gopt.hedge";
constexpr int kVersion = 1;

json market_to_json(const MarketParams& p) {
    return json{{"z", p.z}, {"r", p.r}, {"kappa", p.kappa}, {"T", p.T}};
}

MarketParams market_from_json(const json& j) {
    MarketParams p{};
    p.z = j.at("z").get<double>();
    p.r = j.at("r").get<double>();
    p.kappa = j.at("kappa").get<double>();
    p.T = j.at("T").get<double>();
    return p;
}

std::string scheme_name(LatticeScheme s) {
    return s == LatticeScheme::Martingale ? "martingale" : "symmetric";
}

LatticeScheme scheme_from_name(const std::string& s) {
    if (s == "martingale") return LatticeScheme::Martingale;
    if (s == "symmetric") return LatticeScheme::Symmetric;
    throw std::runtime_error("unknown lattice scheme: " + s);
}

json spec_to_json(const PayoffSpec& s) {
    return json{{"name", s.name},
                {"K", s.K},
                {"m_floor", s.m_floor},
                {"integrand_a", s.integrand_a},
                {"penalty", s.penalty},
                {"delta0", s.delta0},
                {"delta", s.delta},
                {"penalty_rate_a", s.penalty_rate_a}};
}

PayoffSpec spec_from_json(const json& j) {
    PayoffSpec s;
    s.name = j.at("name").get<std::string>();
    s.K = j.at("K").get<double>();
    s.m_floor = j.at("m_floor").get<double>();
    s.integrand_a = j.at("integrand_a").get<double>();
    s.penalty = j.at("penalty").get<std::string>();
    s.delta0 = j.at("delta0").get<double>();
    s.delta = j.at("delta").get<double>();
    s.penalty_rate_a = j.at("penalty_rate_a").get<double>();
    return s;
}

json rule_to_json(const StoppingRule& rule) {
    json j;
    j["n"] = rule.n();
    if (rule.is_prefix_backed()) {
        j["kind"] = "prefixes";
        std::vector<std::uint64_t> codes(rule.prefixes().begin(),
                                         rule.prefixes().end());
        std::sort(codes.begin(), codes.end());
        j["codes"] = codes;
    } else {
        const auto& sets = rule.states();
        j["kind"] = "states";
        j["reducer_id"] = sets.reducer->id();
        json levels = json::array();
        for (int k = 0; k < static_cast<int>(sets.levels.size()); ++k) {
            json lv = json::array();
            for (int idx : sets.levels[static_cast<std::size_t>(k)]) {
                auto lab = sets.reducer->label_of(k, idx);
                lv.push_back(json::array({lab[0], lab[1], lab[2]}));
            }
            levels.push_back(std::move(lv));
        }
        j["levels"] = std::move(levels);
    }
    return j;
}

StoppingRule prefix_rule_from_json(const json& j) {
    int n = j.at("n").get<int>();
    std::unordered_set<std::uint64_t> stops;
    for (const auto& c : j.at("codes")) {
        std::uint64_t code = c.get<std::uint64_t>();
        if (code < kEmptyPrefix)
            throw std::runtime_error("stop set holds an invalid prefix code");
        int depth = 0;
        for (std::uint64_t v = code; v > 1; v >>= 1) ++depth;
        if (depth > n)
            throw std::runtime_error("stop set holds a prefix beyond level n");
        stops.insert(code);
    }
    StoppingRule rule = StoppingRule::from_prefixes(n, std::move(stops));
    if (!rule.is_minimal())
        throw std::runtime_error(
            "stop set rejected: an entry is a proper ancestor of another");
    return rule;
}

StoppingRule state_rule_from_json(const json& j,
                                  std::shared_ptr<const ReducerBase> reducer) {
    int n = j.at("n").get<int>();
    if (j.at("reducer_id").get<std::string>() != reducer->id())
        throw std::runtime_error("stored rule belongs to a different reducer");
    StoppingRule::StateSets sets;
    sets.reducer = std::move(reducer);
    const auto& levels = j.at("levels");
    sets.levels.resize(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        for (const auto& lab : levels[k]) {
            std::array<int, 3> label{lab.at(0).get<int>(), lab.at(1).get<int>(),
                                     lab.at(2).get<int>()};
            sets.levels[k].push_back(
                sets.reducer->index_of(static_cast<int>(k), label));
        }
    }
    return StoppingRule::from_states(n, std::move(sets));
}

json solution_to_json_obj(const GameSolution& sol) {
    json j;
    j["format"] = kSolutionTag;
    j["version"] = kVersion;
    j["market"] = market_to_json(sol.params);
    j["scheme"] = scheme_name(sol.dist.scheme);
    j["n"] = sol.n;
    j["engine"] = sol.engine == EngineKind::FullTree ? "fulltree" : "memoized";
    j["payoff_label"] = sol.payoff_label;
    bool state_backed = !sol.writer_rule.is_prefix_backed() ||
                        !sol.holder_rule.is_prefix_backed();
    if (sol.payoff && sol.payoff->spec) {
        j["payoff_spec"] = spec_to_json(*sol.payoff->spec);
    } else if (state_backed) {
        throw std::runtime_error(
            "state-backed rules persist only for catalogue payoffs "
            "(the reducer must be reconstructible from the spec)");
    }
    j["price"] = sol.price;
    j["F0"] = sol.F0;
    j["Delta0"] = sol.Delta0;
    j["scale"] = sol.scale;
    j["writer_rule"] = rule_to_json(sol.writer_rule);
    j["holder_rule"] = rule_to_json(sol.holder_rule);
    return j;
}

GameSolution solution_from_json_obj(const json& j) {
    if (j.at("format").get<std::string>() != kSolutionTag)
        throw std::runtime_error("not a solution file");
    if (j.at("version").get<int>() != kVersion)
        throw std::runtime_error("unsupported solution version");

    GameSolution sol;
    sol.params = market_from_json(j.at("market"));
    validate(sol.params);
    sol.n = j.at("n").get<int>();
    sol.dist = crr_step_params(sol.params, sol.n,
                               scheme_from_name(j.at("scheme").get<std::string>()));
    sol.engine = j.at("engine").get<std::string>() == "memoized"
                     ? EngineKind::MemoizedState
                     : EngineKind::FullTree;
    sol.payoff_label = j.at("payoff_label").get<std::string>();
    sol.price = j.at("price").get<double>();
    sol.F0 = j.at("F0").get<double>();
    sol.Delta0 = j.at("Delta0").get<double>();
    sol.scale = j.at("scale").get<double>();

    if (j.contains("payoff_spec")) {
        PayoffFunctional payoff = make_payoff(spec_from_json(j.at("payoff_spec")));
        sol.payoff = std::make_shared<PayoffFunctional>(std::move(payoff));
        if (sol.payoff->has_reducer())
            sol.reducer = sol.payoff->make_reducer(sol.params, sol.dist);
    }

    auto load_rule = [&](const json& rj) {
        std::string kind = rj.at("kind").get<std::string>();
        if (kind == "prefixes") return prefix_rule_from_json(rj);
        if (kind != "states") throw std::runtime_error("unknown rule kind");
        if (!sol.reducer)
            throw std::runtime_error(
                "state-backed rule needs a payoff spec with a reducer");
        return state_rule_from_json(rj, sol.reducer);
    };
    sol.writer_rule = load_rule(j.at("writer_rule"));
    sol.holder_rule = load_rule(j.at("holder_rule"));
    return sol;
}

json hedge_to_json_obj(const HedgeStrategy& h) {
    if (!h.is_explicit)
        throw std::runtime_error(
            "hedge persistence requires the explicit per-prefix backing");
    if (!h.cancel_rule.is_prefix_backed())
        throw std::runtime_error(
            "hedge persistence requires a prefix-backed cancel rule");
    json j;
    j["format"] = kHedgeTag;
    j["version"] = kVersion;
    j["n"] = h.n;
    j["initial_capital"] = h.initial_capital;
    j["cancel_rule"] = rule_to_json(h.cancel_rule);
    json levels = json::array();
    for (const auto& lv : h.levels) {
        json row = json::array();
        for (const auto& node : lv)
            row.push_back(json::array({node.gamma, node.beta}));
        levels.push_back(std::move(row));
    }
    j["levels"] = std::move(levels);
    return j;
}

HedgeStrategy hedge_from_json_obj(const json& j) {
    if (j.at("format").get<std::string>() != kHedgeTag)
        throw std::runtime_error("not a hedge file");
    if (j.at("version").get<int>() != kVersion)
        throw std::runtime_error("unsupported hedge version");

    HedgeStrategy h;
    h.n = j.at("n").get<int>();
    if (h.n < 1) throw std::runtime_error("hedge has invalid step count");
    h.initial_capital = j.at("initial_capital").get<double>();
    h.cancel_rule = prefix_rule_from_json(j.at("cancel_rule"));
    if (h.cancel_rule.n() != h.n)
        throw std::runtime_error("cancel rule length mismatch");

    const auto& levels = j.at("levels");
    if (static_cast<int>(levels.size()) != h.n)
        throw std::runtime_error("hedge level count mismatch");
    h.levels.resize(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (levels[k].size() != (1ull << k))
            throw std::runtime_error("hedge level width mismatch");
        h.levels[k].reserve(levels[k].size());
        for (const auto& node : levels[k])
            h.levels[k].push_back(HedgeStrategy::Node{
                node.at(0).get<double>(), node.at(1).get<double>()});
    }
    h.is_explicit = true;
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace

std::string solution_to_json(const GameSolution& solution) {
    return solution_to_json_obj(solution).dump(2);
}

GameSolution solution_from_json(const std::string& text) {
    return solution_from_json_obj(json::parse(text));
}

std::string hedge_to_json(const HedgeStrategy& strategy) {
    return hedge_to_json_obj(strategy).dump(2);
}

HedgeStrategy hedge_from_json(const std::string& text) {
    return hedge_from_json_obj(json::parse(text));
}

void save_solution(const GameSolution& solution, const std::string& path) {
    write_file(path, solution_to_json(solution));
}

GameSolution load_solution(const std::string& path) {
    return solution_from_json(read_file(path));
}

void save_hedge(const HedgeStrategy& strategy, const std::string& path) {
    write_file(path, hedge_to_json(strategy));
}

HedgeStrategy load_hedge(const std::string& path) {
    return hedge_from_json(read_file(path));
}

void rebind_solution(GameSolution& solution, const PayoffFunctional& payoff) {
    if (solution.payoff_label != payoff.label)
        throw std::runtime_error("payoff label does not match the solution");

    bool state_backed = !solution.writer_rule.is_prefix_backed() ||
                        !solution.holder_rule.is_prefix_backed();
    if (state_backed) {
        if (!payoff.has_reducer())
            throw std::runtime_error(
                "solution carries state-backed rules but the payoff has no reducer");
        auto reducer = payoff.make_reducer(solution.params, solution.dist);
        auto swap_backing = [&](StoppingRule& rule) {
            if (rule.is_prefix_backed()) return;
            if (rule.states().reducer->id() != reducer->id())
                throw std::runtime_error("payoff reducer id does not match the rules");
            StoppingRule::StateSets sets = rule.states();
            sets.reducer = reducer;
            rule = StoppingRule::from_states(rule.n(), std::move(sets));
        };
        swap_backing(solution.writer_rule);
        swap_backing(solution.holder_rule);
        solution.reducer = reducer;
    }
    solution.payoff = std::make_shared<PayoffFunctional>(payoff);
}

}  // namespace gopt
