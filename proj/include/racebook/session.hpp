#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "racebook/agents.hpp"
#include "racebook/exchange.hpp"
#include "racebook/parallel.hpp"
#include "racebook/race.hpp"
#include "racebook/rng.hpp"

namespace racebook {

struct SessionConfig {
    RaceConfig race;
    std::vector<AgentParams> agents;  // entries with count > 1 expand to that many agents
    double commission_rate = 0.05;
    double opening_period = 60.0;     // seconds of pre-race betting
    std::size_t grid_depth = 3;
    bool sentiment_logging = false;
    bool log_race_ticks = true;
    bool log_grid = true;
    std::uint64_t seed = 0;
    bool operator==(const SessionConfig&) const = default;
};

inline void validate(const SessionConfig& cfg) {
    validate(cfg.race);
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) validate(cfg.agents[i], "agents[" + std::to_string(i) + "]");
    if (!(cfg.commission_rate >= 0.0 && cfg.commission_rate <= 1.0))
        throw InvalidConfig("exchange.commission_rate: must be in [0, 1]");
    if (!(cfg.opening_period >= 0.0)) throw InvalidConfig("exchange.opening_period: must be >= 0");
    if (cfg.grid_depth < 1) throw InvalidConfig("exchange.grid_depth: must be >= 1");
}

// One agent per AgentParams, bettor ids 1..B in expansion order.
inline std::vector<AgentParams> expand_agents(std::span<const AgentParams> entries) {
    std::vector<AgentParams> out;
    for (const auto& e : entries)
        for (int i = 0; i < e.count; ++i) {
            out.push_back(e);
            out.back().count = 1;
        }
    return out;
}

struct SessionEvent {
    std::uint64_t seq = 0;
    double time = 0.0;  // race clock, seconds; negative before the start
    std::string kind;
    nlohmann::ordered_json data;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j{{"seq", seq}, {"time", time}, {"kind", kind}};
        for (const auto& [k, v] : data.items()) j[k] = v;
        return j;
    }
    std::string to_line() const { return to_json().dump(); }

    static SessionEvent from_json(const nlohmann::ordered_json& j) {
        SessionEvent e{j.at("seq").get<std::uint64_t>(), j.at("time").get<double>(), j.at("kind").get<std::string>(),
                       nlohmann::ordered_json::object()};
        for (const auto& [k, v] : j.items())
            if (k != "seq" && k != "time" && k != "kind") e.data[k] = v;
        return e;
    }
    bool operator==(const SessionEvent&) const = default;
};

struct SentimentRecord {
    double time = 0.0;
    BettorId bettor = 0;
    int competitor_id = 0;
    double decimal_odds = 0.0;
    bool operator==(const SentimentRecord&) const = default;
};

struct Wake {
    double time = 0.0;
    std::size_t agent = 0;
    bool operator==(const Wake&) const = default;
};

// Fixed wake phase per agent, drawn from its own stream.
inline std::vector<double> wake_jitters(std::span<const AgentParams> agents, std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        Rng rng(derive_seed(seed, "jitter", {i}));
        out.push_back(rng.uniform01() * agents[i].wake_jitter);
    }
    return out;
}

// Agent i wakes at jitter_i + k * period_i for every k with k * period_i <=
// horizon. Ordered by time, then agent index.
inline std::vector<Wake> wake_schedule(std::span<const AgentParams> agents, std::uint64_t seed, double horizon) {
    const auto jitter = wake_jitters(agents, seed);
    std::vector<Wake> out;
    for (std::size_t i = 0; i < agents.size(); ++i)
        for (std::uint64_t k = 0; static_cast<double>(k) * agents[i].reevaluate_every <= horizon; ++k)
            out.push_back({jitter[i] + static_cast<double>(k) * agents[i].reevaluate_every, i});
    std::sort(out.begin(), out.end(), [](const Wake& a, const Wake& b) {
        return a.time != b.time ? a.time < b.time : a.agent < b.agent;
    });
    return out;
}

struct SessionResult {
    std::vector<SessionEvent> events;
    std::vector<SentimentRecord> sentiment;
    std::vector<Wake> wakes;  // wakes actually processed, session clock
    SettlementReport settlement;
    Trajectory trajectory;
    MarketBook book{0};
    std::uint64_t rejected_actions = 0;
};

namespace detail {

inline nlohmann::ordered_json levels_json(const std::vector<PriceLevel>& levels) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& l : levels) arr.push_back({l.odds.decimal(), l.stake.minor()});
    return arr;
}

class SessionRunner {
public:
    SessionRunner(const SessionConfig& cfg, std::size_t workers)
        : cfg_(cfg), workers_(workers), book_(cfg.race.size()) {
        validate(cfg_);
        agents_params_ = expand_agents(cfg_.agents);
        for (std::size_t i = 0; i < agents_params_.size(); ++i)
            agents_.emplace_back(static_cast<BettorId>(i + 1), agents_params_[i], derive_seed(cfg_.seed, "agent", {i}));
        next_wake_ = wake_jitters(agents_params_, cfg_.seed);
    }

    SessionResult run() {
        const RaceConfig& race = cfg_.race;
        Rng race_rng(derive_seed(cfg_.seed, "race"));
        state_ = start_race(race, race_rng);
        history_.push_back(state_.positions);

        for (const auto& a : agents_) {
            book_.open_account(a.id(), Money::units(a.params().balance));
            log(-cfg_.opening_period, "open_account", {{"bettor", a.id()}, {"balance", Money::units(a.params().balance).minor()}});
        }

        // Pre-race window: everyone observes the start line.
        const auto pre_steps = static_cast<std::uint64_t>(std::ceil(cfg_.opening_period / race.dt - 1e-9));
        for (std::uint64_t m = 0; m < pre_steps; ++m) {
            const double clock = static_cast<double>(m) * race.dt;
            wake_epoch(clock, clock - cfg_.opening_period);
        }
        log_grid(0.0);
        wake_epoch(cfg_.opening_period, 0.0);

        bool open = true;
        while (!state_.finished()) {
            advance_race(state_, race, race_rng);
            history_.push_back(state_.positions);
            const double t = static_cast<double>(state_.tick) * race.dt;
            if (cfg_.log_race_ticks) log(t, "race_tick", {{"tick", state_.tick}, {"positions", state_.positions}});
            if (!open) continue;
            if (betting_closed(state_, race)) {
                close(t);
                open = false;
                continue;
            }
            log_grid(t);
            wake_epoch(cfg_.opening_period + t, t);
        }
        const double end = static_cast<double>(state_.tick) * race.dt;
        if (open) close(end);

        SessionResult res;
        const auto order = finish_order(state_);
        res.settlement = book_.settle(order.front(), cfg_.commission_rate);
        nlohmann::ordered_json lines = nlohmann::ordered_json::array();
        for (const auto& l : res.settlement.lines)
            lines.push_back({{"bettor", l.bettor}, {"gross", l.gross.minor()}, {"commission", l.commission.minor()},
                             {"net", l.net.minor()}});
        log(end, "settle", {{"winner", race.competitors[order.front()].id},
                            {"commission", res.settlement.total_commission.minor()},
                            {"lines", std::move(lines)}});

        res.trajectory.positions = std::move(history_);
        res.trajectory.finish_order = order;
        for (const auto& ft : state_.finish_tick) res.trajectory.finish_ticks.push_back(*ft);
        res.events = std::move(events_);
        res.sentiment = std::move(sentiment_);
        res.wakes = std::move(wakes_);
        res.book = std::move(book_);
        res.rejected_actions = rejected_;
        return res;
    }

private:
    void log(double time, std::string kind, nlohmann::ordered_json data) {
        events_.push_back({events_.size(), time, std::move(kind), std::move(data)});
    }

    void log_grid(double t) {
        if (!cfg_.log_grid) return;
        const auto grid = book_.market_grid(cfg_.grid_depth);
        auto rows = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < grid.size(); ++c)
            rows.push_back({{"competitor", cfg_.race.competitors[c].id},
                            {"backs", levels_json(grid[c].backs)},
                            {"lays", levels_json(grid[c].lays)}});
        log(t, "grid", {{"tick", state_.tick}, {"rows", std::move(rows)}});
    }

    void close(double t) {
        log(t, "close", {{"tick", state_.tick}});
        for (const auto& e : book_.close_betting())
            log(t, "expire", {{"bet_id", e.bet_id}, {"bettor", e.bettor}, {"amount", e.unmatched.minor()},
                              {"refunded", e.refunded.minor()}});
    }

    // Agents due at `clock` all observe the same snapshot; their decisions may
    // run concurrently and are applied in (wake time, agent index) order.
    void wake_epoch(double clock, double t) {
        std::vector<Wake> due;
        for (std::size_t i = 0; i < agents_.size(); ++i)
            if (next_wake_[i] <= clock + 1e-9) due.push_back({next_wake_[i], i});
        if (due.empty()) return;
        std::sort(due.begin(), due.end(), [](const Wake& a, const Wake& b) {
            return a.time != b.time ? a.time < b.time : a.agent < b.agent;
        });
        for (const auto& w : due) {
            wakes_.push_back(w);
            const double period = agents_params_[w.agent].reevaluate_every;
            while (next_wake_[w.agent] <= clock + 1e-9) next_wake_[w.agent] += period;
        }

        const MarketGrid grid = book_.market_grid(cfg_.grid_depth);
        std::vector<Observation> obs(due.size());
        for (std::size_t k = 0; k < due.size(); ++k) {
            const Agent& a = agents_[due[k].agent];
            Observation& o = obs[k];
            o.time = t;
            o.race = &cfg_.race;
            o.state = &state_;
            o.history = history_;
            o.grid = grid;
            o.balance = book_.account(a.id()).balance;
            for (BetId id : book_.open_bets(a.id())) {
                const Bet& b = book_.bet(id);
                o.own_bets.push_back({b.id, b.competitor, b.side, b.odds, b.unmatched, b.arrival_time});
            }
        }
        std::vector<std::vector<OrderAction>> actions(due.size());
        parallel_for(due.size(), workers_, [&](std::size_t k) { actions[k] = agents_[due[k].agent].decide(obs[k]); });

        for (std::size_t k = 0; k < due.size(); ++k) {
            const Agent& a = agents_[due[k].agent];
            if (cfg_.sentiment_logging && a.logs_sentiment() && a.last_prediction()) {
                const auto& prob = a.last_prediction()->prob;
                auto odds = nlohmann::ordered_json::array();
                for (std::size_t c = 0; c < prob.size(); ++c) {
                    sentiment_.push_back({t, a.id(), cfg_.race.competitors[c].id, 1.0 / prob[c]});
                    odds.push_back(1.0 / prob[c]);
                }
                log(t, "sentiment", {{"bettor", a.id()}, {"odds", std::move(odds)}});
            }
            for (const auto& act : actions[k]) apply(a.id(), act, t);
        }
    }

    void apply(BettorId bettor, const OrderAction& act, double t) {
        if (const auto* c = std::get_if<CancelOrder>(&act)) {
            const auto r = book_.cancel_bet(c->bet_id, bettor);
            if (r.status == CancelStatus::cancelled) {
                log(t, "cancel", {{"bet_id", c->bet_id}, {"bettor", bettor}, {"amount", r.cancelled.minor()},
                                  {"released", r.released.minor()}});
            } else if (r.status != CancelStatus::nothing_unmatched) {
                ++rejected_;
                log(t, "reject", {{"bettor", bettor}, {"action", "cancel"}, {"bet_id", c->bet_id},
                                  {"reason", std::string(to_string(r.status))}});
            }
            return;
        }
        const auto& p = std::get<PlaceOrder>(act);
        const Money stake = Money::units(p.stake);
        const auto r = book_.submit_bet(bettor, p.competitor, p.side, p.odds, stake, t);
        if (!r.accepted()) {
            ++rejected_;
            log(t, "reject", {{"bettor", bettor}, {"action", "place"}, {"competitor", p.competitor},
                              {"side", std::string(to_string(p.side))}, {"odds", p.odds.decimal()},
                              {"stake", stake.minor()}, {"reason", std::string(to_string(r.reject))}});
            return;
        }
        log(t, "submit", {{"bet_id", r.bet_id}, {"bettor", bettor}, {"competitor", p.competitor},
                          {"side", std::string(to_string(p.side))}, {"odds", p.odds.decimal()},
                          {"stake", stake.minor()}});
        for (const auto& m : r.matches)
            log(t, "match", {{"back_bet", m.back_bet}, {"lay_bet", m.lay_bet}, {"competitor", m.competitor},
                             {"odds", m.odds.decimal()}, {"amount", m.amount.minor()}});
    }

    const SessionConfig& cfg_;
    std::size_t workers_;
    MarketBook book_;
    RaceState state_;
    std::vector<std::vector<double>> history_;
    std::vector<AgentParams> agents_params_;
    std::vector<Agent> agents_;
    std::vector<double> next_wake_;
    std::vector<SessionEvent> events_;
    std::vector<SentimentRecord> sentiment_;
    std::vector<Wake> wakes_;
    std::uint64_t rejected_ = 0;
};

}  // namespace detail

// One race, one market, B agents. Deterministic in cfg (including cfg.seed)
// for any worker count.
inline SessionResult run_session(const SessionConfig& cfg, std::size_t workers = 1) {
    return detail::SessionRunner(cfg, workers).run();
}

// Rebuilds a market by re-applying the account, submit, cancel, close and
// settle events of a session log.
inline MarketBook replay_book(std::span<const SessionEvent> events, const RaceConfig& race,
                              double commission_rate) {
    MarketBook book(race.size());
    for (const auto& e : events) {
        const auto& d = e.data;
        if (e.kind == "open_account") {
            book.open_account(d.at("bettor").get<BettorId>(), Money(d.at("balance").get<std::int64_t>()));
        } else if (e.kind == "submit") {
            const auto odds = odds_from_hundredths(static_cast<int>(std::llround(d.at("odds").get<double>() * 100.0)));
            const Side side = d.at("side").get<std::string>() == "back" ? Side::back : Side::lay;
            book.submit_bet(d.at("bettor").get<BettorId>(), d.at("competitor").get<std::size_t>(), side,
                            odds.value_or(Odds(-1)), Money(d.at("stake").get<std::int64_t>()), e.time);
        } else if (e.kind == "cancel") {
            book.cancel_bet(d.at("bet_id").get<BetId>(), d.at("bettor").get<BettorId>());
        } else if (e.kind == "close") {
            book.close_betting();
        } else if (e.kind == "settle") {
            const int winner_id = d.at("winner").get<int>();
            const auto it = std::find_if(race.competitors.begin(), race.competitors.end(),
                                         [&](const CompetitorSpec& c) { return c.id == winner_id; });
            book.settle(static_cast<std::size_t>(it - race.competitors.begin()), commission_rate);
        }
    }
    return book;
}

}  // namespace racebook
