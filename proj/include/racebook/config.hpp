#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "racebook/agents.hpp"
#include "racebook/batch.hpp"
#include "racebook/race.hpp"
#include "racebook/session.hpp"

namespace racebook {

inline constexpr std::string_view version = "0.1.0";

struct ExchangeOptions {
    double commission_rate = 0.05;
    double opening_period = 60.0;
    std::size_t grid_depth = 3;
    bool operator==(const ExchangeOptions&) const = default;
};

struct BatchOptions {
    std::uint64_t replications = 1000;
    std::size_t workers = 1;
    std::uint64_t master_seed = 1;
    std::vector<std::size_t> bench_competitors{5, 10, 20, 40};
    std::size_t bench_reps = 5;
    std::size_t bench_warmups = 3;
    bool operator==(const BatchOptions&) const = default;
};

struct OutputOptions {
    bool race_ticks = true;    // race_tick events in the session log
    bool grid = true;          // grid snapshot events in the session log
    bool sentiment = false;
    bool finish_times = false; // batch: per-run finish ticks beside the PMF
    bool operator==(const OutputOptions&) const = default;
};

struct ExperimentConfig {
    RaceConfig race;
    std::vector<AgentParams> agents;
    ExchangeOptions exchange;
    BatchOptions batch;
    OutputOptions outputs;
    bool operator==(const ExperimentConfig&) const = default;
};

// Five runners over 2000 m with contrasting pace profiles; finishes well
// inside 360 ticks at dt = 1.
inline RaceConfig default_race() {
    RaceConfig r;
    auto add = [&r](double lo, double hi, double early, double late, double theta) {
        CompetitorSpec c;
        c.id = static_cast<int>(r.competitors.size() + 1);
        c.step_dist = UniformSteps{lo, hi};
        c.resp = {early, late, 0.5};
        c.theta = theta;
        r.competitors.push_back(c);
    };
    add(7.0, 11.0, 1.25, 0.8, 1.0);
    add(7.0, 10.0, 1.0, 1.0, 1.0);
    add(6.0, 11.0, 1.0, 1.0, 1.0);
    add(6.5, 10.5, 0.95, 1.05, 1.0);
    add(6.0, 10.0, 0.85, 1.3, 1.0);
    return r;
}

inline std::vector<AgentParams> default_agents() {
    std::vector<AgentParams> a;
    auto add = [&a](Strategy s, int count) {
        AgentParams p;
        p.strategy = s;
        p.count = count;
        a.push_back(p);
    };
    add(Strategy::rp, 3);
    add(Strategy::rb, 2);
    add(Strategy::linex, 1);
    add(Strategy::lw, 1);
    add(Strategy::ud, 1);
    add(Strategy::btf, 1);
    add(Strategy::zi, 3);
    a[0].dry_runs = 20;
    return a;
}

inline ExperimentConfig default_experiment() {
    ExperimentConfig e;
    e.race = default_race();
    e.agents = default_agents();
    return e;
}

inline SessionConfig session_config(const ExperimentConfig& e, std::uint64_t session_index = 0) {
    SessionConfig s;
    s.race = e.race;
    s.agents = e.agents;
    s.commission_rate = e.exchange.commission_rate;
    s.opening_period = e.exchange.opening_period;
    s.grid_depth = e.exchange.grid_depth;
    s.sentiment_logging = e.outputs.sentiment;
    s.log_race_ticks = e.outputs.race_ticks;
    s.log_grid = e.outputs.grid;
    s.seed = derive_seed(e.batch.master_seed, "session", {session_index});
    return s;
}

inline BatchConfig batch_config(const ExperimentConfig& e) {
    return {e.race, e.batch.replications, e.batch.workers, e.batch.master_seed};
}

inline void validate(const ExperimentConfig& e) {
    validate(e.race);
    for (std::size_t i = 0; i < e.agents.size(); ++i) validate(e.agents[i], "agents[" + std::to_string(i) + "]");
    const auto& x = e.exchange;
    if (!(x.commission_rate >= 0.0 && x.commission_rate <= 1.0))
        throw InvalidConfig("exchange.commission_rate: must be in [0, 1]");
    if (!(x.opening_period >= 0.0)) throw InvalidConfig("exchange.opening_period: must be >= 0");
    if (x.grid_depth < 1) throw InvalidConfig("exchange.grid_depth: must be >= 1");
    const auto& b = e.batch;
    if (b.replications < 1) throw InvalidConfig("batch.replications: must be >= 1");
    if (b.workers < 1) throw InvalidConfig("batch.workers: must be >= 1");
    if (b.bench_reps < 1) throw InvalidConfig("batch.bench_reps: must be >= 1");
    for (auto n : b.bench_competitors)
        if (n < 1) throw InvalidConfig("batch.bench_competitors: entries must be >= 1");
}

namespace detail {

using json = nlohmann::json;

inline void allow_keys(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (auto allowed : keys) known = known || k == allowed;
        if (!known) throw InvalidConfig(where + "." + k + ": unknown key");
    }
}

template <class T>
void read(const json& j, std::string_view key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        if constexpr (std::is_unsigned_v<T> && std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_unsigned()) throw InvalidConfig("");
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_integer()) throw InvalidConfig("");
        }
        out = it->template get<T>();
    } catch (const std::exception&) {
        throw InvalidConfig(where + "." + std::string(key) + ": wrong type");
    }
}

inline StepDistribution step_dist_from(const json& j, const std::string& where) {
    std::string family = "uniform";
    read(j, "family", family, where);
    if (family == "uniform") {
        allow_keys(j, {"family", "lo", "hi"}, where);
        UniformSteps u;
        read(j, "lo", u.lo, where);
        read(j, "hi", u.hi, where);
        return u;
    }
    if (family == "lognormal") {
        allow_keys(j, {"family", "mu", "sigma", "scale"}, where);
        LognormalSteps l;
        read(j, "mu", l.mu, where);
        read(j, "sigma", l.sigma, where);
        read(j, "scale", l.scale, where);
        return l;
    }
    throw InvalidConfig(where + ".family: must be uniform or lognormal");
}

inline json to_json(const StepDistribution& d) {
    if (const auto* u = std::get_if<UniformSteps>(&d)) return {{"family", "uniform"}, {"lo", u->lo}, {"hi", u->hi}};
    const auto& l = std::get<LognormalSteps>(d);
    return {{"family", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}, {"scale", l.scale}};
}

inline std::string_view close_name(CloseRule r) {
    switch (r) {
        case CloseRule::on_first_finish: return "on_first_finish";
        case CloseRule::on_kth_finish: return "on_kth_finish";
        case CloseRule::on_last_finish: break;
    }
    return "on_last_finish";
}

inline RaceConfig race_from(const json& j) {
    const std::string where = "race";
    allow_keys(j, {"track_length", "dt", "race_factor", "betting_close", "tick_limit", "competitors"}, where);
    RaceConfig r;
    read(j, "track_length", r.track_length, where);
    read(j, "dt", r.dt, where);
    read(j, "race_factor", r.race_factor, where);
    read(j, "tick_limit", r.tick_limit, where);
    if (auto bc = j.find("betting_close"); bc != j.end()) {
        allow_keys(*bc, {"rule", "k"}, where + ".betting_close");
        std::string rule = "on_last_finish";
        read(*bc, "rule", rule, where + ".betting_close");
        if (rule == "on_first_finish") r.betting_close.rule = CloseRule::on_first_finish;
        else if (rule == "on_kth_finish") r.betting_close.rule = CloseRule::on_kth_finish;
        else if (rule == "on_last_finish") r.betting_close.rule = CloseRule::on_last_finish;
        else throw InvalidConfig(where + ".betting_close.rule: unknown rule '" + rule + "'");
        read(*bc, "k", r.betting_close.k, where + ".betting_close");
    }
    auto cs = j.find("competitors");
    if (cs == j.end() || !cs->is_array()) throw InvalidConfig(where + ".competitors: required array");
    for (std::size_t i = 0; i < cs->size(); ++i) {
        const auto& cj = (*cs)[i];
        const std::string cw = where + ".competitors[" + std::to_string(i) + "]";
        allow_keys(cj, {"id", "step_dist", "pref", "pref_sensitivity", "resp", "theta"}, cw);
        CompetitorSpec c;
        c.id = static_cast<int>(i + 1);
        read(cj, "id", c.id, cw);
        if (auto sd = cj.find("step_dist"); sd != cj.end()) c.step_dist = step_dist_from(*sd, cw + ".step_dist");
        read(cj, "pref", c.pref, cw);
        read(cj, "pref_sensitivity", c.pref_sensitivity, cw);
        read(cj, "theta", c.theta, cw);
        if (auto rj = cj.find("resp"); rj != cj.end()) {
            allow_keys(*rj, {"early_mult", "late_mult", "breakpoint"}, cw + ".resp");
            read(*rj, "early_mult", c.resp.early_mult, cw + ".resp");
            read(*rj, "late_mult", c.resp.late_mult, cw + ".resp");
            read(*rj, "breakpoint", c.resp.breakpoint, cw + ".resp");
        }
        r.competitors.push_back(c);
    }
    return r;
}

inline json to_json(const RaceConfig& r) {
    json comps = json::array();
    for (const auto& c : r.competitors)
        comps.push_back({{"id", c.id},
                         {"step_dist", to_json(c.step_dist)},
                         {"pref", c.pref},
                         {"pref_sensitivity", c.pref_sensitivity},
                         {"resp", {{"early_mult", c.resp.early_mult}, {"late_mult", c.resp.late_mult},
                                   {"breakpoint", c.resp.breakpoint}}},
                         {"theta", c.theta}});
    return {{"track_length", r.track_length},
            {"dt", r.dt},
            {"race_factor", r.race_factor},
            {"betting_close", {{"rule", close_name(r.betting_close.rule)}, {"k", r.betting_close.k}}},
            {"tick_limit", r.tick_limit},
            {"competitors", std::move(comps)}};
}

inline AgentParams agent_from(const json& j, const std::string& where) {
    allow_keys(j, {"strategy", "count", "dry_runs", "reevaluate_every", "wake_jitter", "window", "gap_threshold",
                   "gamma", "stake_multiples", "base_stake", "max_stake", "lay_edge", "zi_odds_lo", "zi_odds_hi",
                   "balance"},
               where);
    AgentParams p;
    std::string strategy = "zi";
    read(j, "strategy", strategy, where);
    auto s = strategy_from_string(strategy);
    if (!s) throw InvalidConfig(where + ".strategy: unknown strategy '" + strategy + "'");
    p.strategy = *s;
    read(j, "count", p.count, where);
    read(j, "dry_runs", p.dry_runs, where);
    read(j, "reevaluate_every", p.reevaluate_every, where);
    read(j, "wake_jitter", p.wake_jitter, where);
    read(j, "window", p.window, where);
    read(j, "gap_threshold", p.gap_threshold, where);
    read(j, "gamma", p.gamma, where);
    read(j, "stake_multiples", p.stake_multiples, where);
    read(j, "base_stake", p.base_stake, where);
    read(j, "max_stake", p.max_stake, where);
    read(j, "lay_edge", p.lay_edge, where);
    read(j, "zi_odds_lo", p.zi_odds_lo, where);
    read(j, "zi_odds_hi", p.zi_odds_hi, where);
    read(j, "balance", p.balance, where);
    return p;
}

inline json to_json(const AgentParams& p) {
    return {{"strategy", to_string(p.strategy)}, {"count", p.count},
            {"dry_runs", p.dry_runs},            {"reevaluate_every", p.reevaluate_every},
            {"wake_jitter", p.wake_jitter},      {"window", p.window},
            {"gap_threshold", p.gap_threshold},  {"gamma", p.gamma},
            {"stake_multiples", p.stake_multiples}, {"base_stake", p.base_stake},
            {"max_stake", p.max_stake},          {"lay_edge", p.lay_edge},
            {"zi_odds_lo", p.zi_odds_lo},        {"zi_odds_hi", p.zi_odds_hi},
            {"balance", p.balance}};
}

}  // namespace detail

// Validated experiment from a JSON document; absent keys take defaults,
// unknown keys are errors. Without a "race" section the default race is used.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::read;
    detail::allow_keys(j, {"race", "agents", "exchange", "batch", "outputs"}, "config");
    ExperimentConfig e = default_experiment();
    if (auto r = j.find("race"); r != j.end()) e.race = detail::race_from(*r);
    if (auto a = j.find("agents"); a != j.end()) {
        if (!a->is_array()) throw InvalidConfig("agents: expected an array");
        e.agents.clear();
        for (std::size_t i = 0; i < a->size(); ++i)
            e.agents.push_back(detail::agent_from((*a)[i], "agents[" + std::to_string(i) + "]"));
    }
    if (auto x = j.find("exchange"); x != j.end()) {
        detail::allow_keys(*x, {"commission_rate", "opening_period", "grid_depth"}, "exchange");
        read(*x, "commission_rate", e.exchange.commission_rate, "exchange");
        read(*x, "opening_period", e.exchange.opening_period, "exchange");
        read(*x, "grid_depth", e.exchange.grid_depth, "exchange");
    }
    if (auto b = j.find("batch"); b != j.end()) {
        detail::allow_keys(*b, {"replications", "workers", "master_seed", "bench_competitors", "bench_reps",
                                "bench_warmups"},
                           "batch");
        read(*b, "replications", e.batch.replications, "batch");
        read(*b, "workers", e.batch.workers, "batch");
        read(*b, "master_seed", e.batch.master_seed, "batch");
        read(*b, "bench_competitors", e.batch.bench_competitors, "batch");
        read(*b, "bench_reps", e.batch.bench_reps, "batch");
        read(*b, "bench_warmups", e.batch.bench_warmups, "batch");
    }
    if (auto o = j.find("outputs"); o != j.end()) {
        detail::allow_keys(*o, {"race_ticks", "grid", "sentiment", "finish_times"}, "outputs");
        read(*o, "race_ticks", e.outputs.race_ticks, "outputs");
        read(*o, "grid", e.outputs.grid, "outputs");
        read(*o, "sentiment", e.outputs.sentiment, "outputs");
        read(*o, "finish_times", e.outputs.finish_times, "outputs");
    }
    validate(e);
    return e;
}

// Every field, defaults included; config_from_json(config_to_json(e)) == e.
inline nlohmann::json config_to_json(const ExperimentConfig& e) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : e.agents) agents.push_back(detail::to_json(a));
    return {{"race", detail::to_json(e.race)},
            {"agents", std::move(agents)},
            {"exchange",
             {{"commission_rate", e.exchange.commission_rate},
              {"opening_period", e.exchange.opening_period},
              {"grid_depth", e.exchange.grid_depth}}},
            {"batch",
             {{"replications", e.batch.replications},
              {"workers", e.batch.workers},
              {"master_seed", e.batch.master_seed},
              {"bench_competitors", e.batch.bench_competitors},
              {"bench_reps", e.batch.bench_reps},
              {"bench_warmups", e.batch.bench_warmups}}},
            {"outputs",
             {{"race_ticks", e.outputs.race_ticks},
              {"grid", e.outputs.grid},
              {"sentiment", e.outputs.sentiment},
              {"finish_times", e.outputs.finish_times}}}};
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidConfig("config: malformed JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

// Stable digest of the fully-defaulted configuration.
inline std::uint64_t config_digest(const ExperimentConfig& e) { return fnv1a64(config_to_json(e).dump()); }

}  // namespace racebook
