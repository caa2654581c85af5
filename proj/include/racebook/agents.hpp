#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "racebook/exchange.hpp"
#include "racebook/odds.hpp"
#include "racebook/race.hpp"
#include "racebook/rng.hpp"

namespace racebook {

enum class Strategy { rp, linex, lw, ud, btf, rb, zi };

constexpr std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::rp: return "rp";
        case Strategy::linex: return "linex";
        case Strategy::lw: return "lw";
        case Strategy::ud: return "ud";
        case Strategy::btf: return "btf";
        case Strategy::rb: return "rb";
        case Strategy::zi: return "zi";
    }
    return "?";
}

inline std::optional<Strategy> strategy_from_string(std::string_view s) noexcept {
    for (auto v : {Strategy::rp, Strategy::linex, Strategy::lw, Strategy::ud, Strategy::btf, Strategy::rb,
                   Strategy::zi})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

// Stakes and balances are in whole currency units here; the exchange works
// in minor units.
struct AgentParams {
    Strategy strategy = Strategy::zi;
    int count = 1;                   // identical agents this entry expands to
    int dry_runs = 10;               // RP: d; RB: dry-runs behind its base prediction
    double reevaluate_every = 10.0;  // seconds between wakes; also the stale-bet age
    double wake_jitter = 10.0;       // per-agent phase drawn from [0, wake_jitter)
    double window = 5.0;             // LinEx: N, seconds of step history
    double gap_threshold = 10.0;     // UD: D
    double gamma = 0.61;             // RB: probability-weighting exponent
    std::vector<int> stake_multiples;  // RB: clustered stakes; empty means 1,2,5,10,20,50,...
    int base_stake = 10;
    int max_stake = 20;
    double lay_edge = 1.25;          // lay when market odds * lay_edge <= fair odds
    double zi_odds_lo = 1.5;
    double zi_odds_hi = 20.0;
    int balance = 1000;
    bool operator==(const AgentParams&) const = default;
};

inline void validate(const AgentParams& p, const std::string& where) {
    if (p.count < 0) throw InvalidConfig(where + ".count: must be >= 0");
    if (p.dry_runs < 0) throw InvalidConfig(where + ".dry_runs: must be >= 0");
    if (!(p.reevaluate_every > 0.0)) throw InvalidConfig(where + ".reevaluate_every: must be > 0");
    if (!(p.wake_jitter >= 0.0)) throw InvalidConfig(where + ".wake_jitter: must be >= 0");
    if (!(p.window >= 1.0)) throw InvalidConfig(where + ".window: must be >= 1");
    if (!(p.gap_threshold > 0.0)) throw InvalidConfig(where + ".gap_threshold: must be > 0");
    if (!(p.gamma > 0.0 && p.gamma <= 1.0)) throw InvalidConfig(where + ".gamma: must be in (0, 1]");
    if (p.base_stake < 1) throw InvalidConfig(where + ".base_stake: must be >= 1");
    if (p.max_stake < 1) throw InvalidConfig(where + ".max_stake: must be >= 1");
    if (!(p.lay_edge >= 1.0)) throw InvalidConfig(where + ".lay_edge: must be >= 1");
    if (!(p.zi_odds_lo > 1.0 && p.zi_odds_lo <= p.zi_odds_hi))
        throw InvalidConfig(where + ".zi_odds_lo: must satisfy 1 < zi_odds_lo <= zi_odds_hi");
    if (p.balance < 0) throw InvalidConfig(where + ".balance: must be >= 0");
    for (int m : p.stake_multiples)
        if (m < 1) throw InvalidConfig(where + ".stake_multiples: entries must be >= 1");
}

// Per-competitor win probabilities, summing to 1.
struct Prediction {
    std::vector<double> prob;
    bool operator==(const Prediction&) const = default;
};

inline Prediction uniform_prediction(std::size_t n) { return {std::vector<double>(n, 1.0 / static_cast<double>(n))}; }

// Mass split equally over the indices whose score equals the best score.
inline Prediction split_best(std::span<const double> score, bool lowest_wins) {
    const auto best = lowest_wins ? *std::min_element(score.begin(), score.end())
                                  : *std::max_element(score.begin(), score.end());
    Prediction p{std::vector<double>(score.size(), 0.0)};
    const auto ties = static_cast<double>(std::count(score.begin(), score.end(), best));
    for (std::size_t i = 0; i < score.size(); ++i)
        if (score[i] == best) p.prob[i] = 1.0 / ties;
    return p;
}

inline Prediction point_prediction(std::size_t n, std::size_t winner) {
    Prediction p{std::vector<double>(n, 0.0)};
    p.prob[winner] = 1.0;
    return p;
}

// Rational predictor: d dry-runs from the current state, Laplace-smoothed.
inline Prediction rp_predict(const RaceState& state, const RaceConfig& cfg, int dry_runs, Rng& rng) {
    const std::size_t n = cfg.size();
    std::vector<std::uint64_t> wins(n, 0);
    for (int i = 0; i < dry_runs; ++i) ++wins[simulate_winner_from(state, cfg, rng())];
    Prediction p{std::vector<double>(n)};
    const double denom = static_cast<double>(dry_runs) + static_cast<double>(n);
    for (std::size_t c = 0; c < n; ++c) p.prob[c] = (static_cast<double>(wins[c]) + 1.0) / denom;
    return p;
}

// Ticks each competitor needs at its mean speed over the last `window_ticks`
// steps. history[k] holds positions after tick k (history[0] is the start).
inline std::vector<double> linex_remaining(std::span<const std::vector<double>> history, double track_length,
                                           std::size_t window_ticks) {
    const auto& now = history.back();
    const std::size_t steps = std::min(window_ticks, history.size() - 1);
    std::vector<double> out(now.size());
    for (std::size_t c = 0; c < now.size(); ++c) {
        const double left = track_length - now[c];
        if (left <= 0.0) { out[c] = 0.0; continue; }
        const double speed =
            steps == 0 ? 0.0 : (now[c] - history[history.size() - 1 - steps][c]) / static_cast<double>(steps);
        out[c] = speed > 0.0 ? left / speed : std::numeric_limits<double>::infinity();
    }
    return out;
}

inline Prediction linex_predict(std::span<const std::vector<double>> history, double track_length,
                                std::size_t window_ticks) {
    if (history.size() < 2) return uniform_prediction(history.back().size());
    const auto t = linex_remaining(history, track_length, window_ticks);
    return split_best(t, true);
}

inline Prediction lw_predict(std::span<const double> positions) { return split_best(positions, false); }

// Competitor indices ordered by position, leader first, index breaking ties.
inline std::vector<std::size_t> standings(std::span<const double> positions) {
    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return positions[a] > positions[b]; });
    return order;
}

inline Prediction ud_predict(std::span<const double> positions, double gap_threshold) {
    if (positions.size() < 2) return point_prediction(positions.size(), 0);
    const auto order = standings(positions);
    const double gap = positions[order[0]] - positions[order[1]];
    return point_prediction(positions.size(), gap < gap_threshold ? order[1] : order[0]);
}

// Favourite: lowest best-displayed back odds. Competitors with no backs are
// ignored; an empty market gives the uniform prediction.
inline Prediction btf_predict(const MarketGrid& grid) {
    std::vector<double> best(grid.size(), std::numeric_limits<double>::infinity());
    bool any = false;
    for (std::size_t c = 0; c < grid.size(); ++c)
        if (!grid[c].backs.empty()) {
            best[c] = grid[c].backs.front().odds.hundredths();
            any = true;
        }
    if (!any) return uniform_prediction(grid.size());
    return split_best(best, true);
}

// Inverse-S probability weighting: w(p) = p^g / (p^g + (1-p)^g)^(1/g).
// For g < 1 small probabilities are overweighted and large ones underweighted.
inline double rb_weight(double p, double gamma) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double a = std::pow(p, gamma);
    const double b = std::pow(1.0 - p, gamma);
    return a / std::pow(a + b, 1.0 / gamma);
}

inline Prediction rb_distort(const Prediction& base, double gamma) {
    Prediction p{std::vector<double>(base.prob.size())};
    double sum = 0.0;
    for (std::size_t i = 0; i < p.prob.size(); ++i) sum += p.prob[i] = rb_weight(base.prob[i], gamma);
    if (sum <= 0.0) return uniform_prediction(p.prob.size());
    for (auto& x : p.prob) x /= sum;
    return p;
}

// 1, 2, 5, 10, 20, 50, ... up to max_stake.
inline std::vector<int> clustered_stakes(int max_stake) {
    std::vector<int> out;
    for (long long decade = 1; decade <= max_stake; decade *= 10)
        for (int m : {1, 2, 5})
            if (decade * m <= max_stake) out.push_back(static_cast<int>(decade * m));
    return out;
}

// Nearest allowed stake to `raw`; ties go to the smaller value.
inline int rb_stake(int raw, std::span<const int> allowed) {
    int best = allowed.front();
    for (int v : allowed) {
        const int d = std::abs(v - raw), bd = std::abs(best - raw);
        if (d < bd || (d == bd && v < best)) best = v;
    }
    return best;
}

struct PlaceOrder {
    std::size_t competitor = 0;
    Side side = Side::back;
    Odds odds;
    int stake = 0;  // whole units
    bool operator==(const PlaceOrder&) const = default;
};

struct CancelOrder {
    BetId bet_id = 0;
    bool operator==(const CancelOrder&) const = default;
};

using OrderAction = std::variant<PlaceOrder, CancelOrder>;

struct OpenBet {
    BetId id = 0;
    std::size_t competitor = 0;
    Side side = Side::back;
    Odds odds;
    Money unmatched;
    double arrival_time = 0.0;
};

// What one agent sees when it wakes. The referenced race data must outlive
// the observation.
struct Observation {
    double time = 0.0;
    const RaceConfig* race = nullptr;
    const RaceState* state = nullptr;
    std::span<const std::vector<double>> history;  // public positions per tick, current last
    MarketGrid grid;
    std::vector<OpenBet> own_bets;
    Money balance;
};

// Largest whole-unit stake not above `wanted` whose reservation fits `free_funds`.
inline int affordable_stake(Side side, Odds odds, int wanted, Money free_funds) {
    if (wanted < 1) return 0;
    const std::int64_t unit = reservation(side, Money::units(1), odds).minor();
    const auto fit = static_cast<int>(std::min<std::int64_t>(wanted, free_funds.minor() / std::max<std::int64_t>(unit, 1)));
    for (int s = fit; s >= 1; --s)
        if (reservation(side, Money::units(s), odds) <= free_funds) return s;
    return 0;
}

inline std::vector<OrderAction> zi_decide(const Observation& obs, const AgentParams& p, Rng& rng) {
    const std::size_t n = obs.grid.size();
    const std::size_t c = rng.index(n);
    const Side side = rng.coin() ? Side::back : Side::lay;
    const int lo = quantize_odds(p.zi_odds_lo).tick(), hi = quantize_odds(p.zi_odds_hi).tick();
    const Odds odds(static_cast<int>(rng.uniform_int(lo, hi)));
    const int wanted = static_cast<int>(rng.uniform_int(1, p.max_stake));
    const int stake = affordable_stake(side, odds, wanted, obs.balance);
    if (stake == 0) return {};
    return {PlaceOrder{c, side, odds, stake}};
}

inline Odds fair_odds(double prob) {
    if (!(prob > 0.0)) return Odds::max();
    return quantize_odds(std::max(1.0 / prob, 1.01));
}

// Value-betting policy shared by every predicting strategy: back the
// predicted winner at its fair odds (hitting a resting lay when one is at
// least that generous), and lay the competitor whose resting back odds are
// furthest below our fair odds when that gap exceeds lay_edge.
inline std::vector<OrderAction> value_orders(const Prediction& pred, const Observation& obs, int stake_units,
                                             double lay_edge, Money free_funds) {
    std::vector<OrderAction> out;
    const std::size_t n = pred.prob.size();
    const std::size_t pick =
        static_cast<std::size_t>(std::max_element(pred.prob.begin(), pred.prob.end()) - pred.prob.begin());
    Odds back_at = fair_odds(pred.prob[pick]);
    for (const auto& lvl : obs.grid[pick].lays)
        if (lvl.odds >= back_at) back_at = lvl.odds;
    if (int s = affordable_stake(Side::back, back_at, stake_units, free_funds); s > 0) {
        out.push_back(PlaceOrder{pick, Side::back, back_at, s});
        free_funds -= reservation(Side::back, Money::units(s), back_at);
    }

    std::optional<std::size_t> lay_on;
    Odds lay_at;
    double best_ratio = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        if (c == pick || obs.grid[c].backs.empty()) continue;
        const Odds lowest = obs.grid[c].backs.back().odds;
        const double fair = pred.prob[c] > 0.0 ? 1.0 / pred.prob[c] : std::numeric_limits<double>::infinity();
        const double ratio = fair / lowest.decimal();
        if (ratio >= lay_edge && ratio > best_ratio) {
            best_ratio = ratio;
            lay_on = c;
            lay_at = lowest;
        }
    }
    if (lay_on)
        if (int s = affordable_stake(Side::lay, lay_at, stake_units, free_funds); s > 0)
            out.push_back(PlaceOrder{*lay_on, Side::lay, lay_at, s});
    return out;
}

class Agent {
public:
    Agent(BettorId id, AgentParams params, std::uint64_t seed)
        : id_(id), params_(std::move(params)), rng_(seed) {
        if (params_.stake_multiples.empty()) params_.stake_multiples = clustered_stakes(params_.max_stake);
        std::erase_if(params_.stake_multiples, [this](int m) { return m > params_.max_stake; });
        if (params_.stake_multiples.empty()) params_.stake_multiples = {1};
        std::sort(params_.stake_multiples.begin(), params_.stake_multiples.end());
    }

    BettorId id() const noexcept { return id_; }
    const AgentParams& params() const noexcept { return params_; }
    // Last prediction made by a predicting strategy (empty for ZI or before the first wake).
    const std::optional<Prediction>& last_prediction() const noexcept { return last_; }

    Prediction predict(const Observation& obs) {
        const std::size_t n = obs.grid.size();
        const auto& positions = obs.state->positions;
        switch (params_.strategy) {
            case Strategy::rp: return rp_predict(*obs.state, *obs.race, params_.dry_runs, rng_);
            case Strategy::rb: return rb_distort(rp_predict(*obs.state, *obs.race, params_.dry_runs, rng_), params_.gamma);
            case Strategy::linex: {
                const auto ticks = static_cast<std::size_t>(std::max(1.0, std::round(params_.window / obs.race->dt)));
                return linex_predict(obs.history, obs.race->track_length, ticks);
            }
            case Strategy::lw: return lw_predict(positions);
            case Strategy::ud: return ud_predict(positions, params_.gap_threshold);
            case Strategy::btf: return btf_predict(obs.grid);
            case Strategy::zi: break;
        }
        return point_prediction(n, rng_.index(n));
    }

    std::vector<OrderAction> decide(const Observation& obs) {
        std::vector<OrderAction> out;
        for (const auto& b : obs.own_bets)
            if (obs.time - b.arrival_time >= params_.reevaluate_every) out.push_back(CancelOrder{b.id});
        if (obs.balance <= Money(0)) return out;

        std::vector<OrderAction> orders;
        if (params_.strategy == Strategy::zi) {
            orders = zi_decide(obs, params_, rng_);
        } else {
            last_ = predict(obs);
            int stake = std::min(params_.base_stake, params_.max_stake);
            if (params_.strategy == Strategy::rb)
                stake = rb_stake(static_cast<int>(rng_.uniform_int(1, params_.max_stake)), params_.stake_multiples);
            orders = value_orders(*last_, obs, stake, params_.lay_edge, obs.balance);
        }
        out.insert(out.end(), orders.begin(), orders.end());
        return out;
    }

    // Sentiment is recorded for the probabilistic strategies only; the
    // point predictors would report infinite odds for every non-pick.
    bool logs_sentiment() const noexcept {
        return params_.strategy == Strategy::rp || params_.strategy == Strategy::rb;
    }

private:
    BettorId id_;
    AgentParams params_;
    Rng rng_;
    std::optional<Prediction> last_;
};

}  // namespace racebook
