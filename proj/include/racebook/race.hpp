#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "racebook/rng.hpp"

namespace racebook {

// Thrown for configuration values that violate a documented constraint. The
// message starts with the offending key.
class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A race exceeded its tick limit; almost always a step distribution that is
// far too small for the track length.
class RaceDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UniformSteps {
    double lo = 10.0;
    double hi = 20.0;
    bool operator==(const UniformSteps&) const = default;
};

// scale * exp(mu + sigma * N(0,1))
struct LognormalSteps {
    double mu = 0.0;
    double sigma = 0.25;
    double scale = 15.0;
    bool operator==(const LognormalSteps&) const = default;
};

using StepDistribution = std::variant<UniformSteps, LognormalSteps>;

// Two-level pace multiplier: early_mult before breakpoint * track_length,
// late_mult from there to the line.
struct Responsiveness {
    double early_mult = 1.0;
    double late_mult = 1.0;
    double breakpoint = 0.5;
    bool operator==(const Responsiveness&) const = default;
};

struct CompetitorSpec {
    int id = 1;
    StepDistribution step_dist = UniformSteps{};
    double pref = 0.0;
    double pref_sensitivity = 0.0;
    Responsiveness resp;
    double theta = 0.0;  // blocking threshold distance
    bool operator==(const CompetitorSpec&) const = default;
};

enum class CloseRule { on_first_finish, on_kth_finish, on_last_finish };

struct BettingClose {
    CloseRule rule = CloseRule::on_last_finish;
    std::size_t k = 1;  // used by on_kth_finish
    bool operator==(const BettingClose&) const = default;
};

struct RaceConfig {
    double track_length = 2000.0;
    double dt = 1.0;
    double race_factor = 0.0;
    BettingClose betting_close;
    std::uint64_t tick_limit = 1'000'000;
    std::vector<CompetitorSpec> competitors;

    std::size_t size() const noexcept { return competitors.size(); }
    bool operator==(const RaceConfig&) const = default;
};

inline void validate(const StepDistribution& dist, const std::string& where) {
    if (const auto* u = std::get_if<UniformSteps>(&dist)) {
        if (!(u->lo > 0.0) || !(u->lo <= u->hi) || !std::isfinite(u->hi))
            throw InvalidConfig(where + ": uniform requires 0 < lo <= hi");
    } else {
        const auto& ln = std::get<LognormalSteps>(dist);
        if (!(ln.scale > 0.0) || !(ln.sigma >= 0.0) || !std::isfinite(ln.mu))
            throw InvalidConfig(where + ": lognormal requires scale > 0 and sigma >= 0");
    }
}

inline void validate(const RaceConfig& cfg) {
    if (cfg.competitors.empty()) throw InvalidConfig("race.competitors: at least one competitor required");
    if (!(cfg.track_length > 0.0)) throw InvalidConfig("race.track_length: must be > 0");
    if (!(cfg.dt > 0.0)) throw InvalidConfig("race.dt: must be > 0");
    if (cfg.tick_limit == 0) throw InvalidConfig("race.tick_limit: must be >= 1");
    if (cfg.betting_close.rule == CloseRule::on_kth_finish &&
        (cfg.betting_close.k < 1 || cfg.betting_close.k > cfg.size()))
        throw InvalidConfig("race.betting_close.k: must be in [1, number of competitors]");
    std::vector<int> ids;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        const auto& c = cfg.competitors[i];
        const std::string where = "race.competitors[" + std::to_string(i) + "]";
        validate(c.step_dist, where + ".step_dist");
        if (!(c.pref_sensitivity >= 0.0)) throw InvalidConfig(where + ".pref_sensitivity: must be >= 0");
        if (!(c.theta >= 0.0)) throw InvalidConfig(where + ".theta: must be >= 0");
        if (!(c.resp.early_mult > 0.0) || !(c.resp.late_mult > 0.0))
            throw InvalidConfig(where + ".resp: multipliers must be > 0");
        if (!(c.resp.breakpoint >= 0.0 && c.resp.breakpoint <= 1.0))
            throw InvalidConfig(where + ".resp.breakpoint: must be in [0, 1]");
        ids.push_back(c.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw InvalidConfig("race.competitors: ids must be unique");
}

inline constexpr double min_preference_factor = 0.01;

inline double preference_factor(double race_factor, double pref, double sensitivity) noexcept {
    return std::clamp(1.0 - sensitivity * std::abs(race_factor - pref), min_preference_factor, 1.0);
}

inline double responsiveness(double position, const Responsiveness& r, double track_length) noexcept {
    return position < r.breakpoint * track_length ? r.early_mult : r.late_mult;
}

inline double draw_step(const StepDistribution& dist, Rng& rng) noexcept {
    if (const auto* u = std::get_if<UniformSteps>(&dist)) return rng.uniform(u->lo, u->hi);
    const auto& ln = std::get<LognormalSteps>(dist);
    return ln.scale * std::exp(ln.mu + ln.sigma * rng.normal());
}

struct RaceState {
    std::uint64_t tick = 0;
    std::vector<double> positions;
    std::vector<double> prev_steps;
    std::vector<std::optional<std::uint64_t>> finish_tick;
    std::size_t finished_count = 0;
    std::uint64_t blocked_steps = 0;  // instrumentation: times the blocked branch was taken

    std::size_t size() const noexcept { return positions.size(); }
    bool finished() const noexcept { return finished_count == positions.size(); }
    bool is_finished(std::size_t c) const noexcept { return finish_tick[c].has_value(); }
};

// Nearest unfinished competitor strictly ahead of c (equal position is not
// "ahead"); among equal positions the lowest index wins.
inline std::optional<std::size_t> front_competitor(std::size_t c, const RaceState& s) noexcept {
    std::optional<std::size_t> best;
    const double here = s.positions[c];
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == c || s.is_finished(i) || !(s.positions[i] > here)) continue;
        if (!best || s.positions[i] < s.positions[*best]) best = i;
    }
    return best;
}

struct StepResult {
    double step;
    bool blocked;
};

// One step for competitor c from the start-of-tick state. A step-size draw is
// consumed on both branches so that the random stream stays aligned whether
// or not blocking binds.
inline StepResult step_competitor(std::size_t c, const RaceState& s, const RaceConfig& cfg, Rng& rng) {
    const auto& spec = cfg.competitors[c];
    const double r = responsiveness(s.positions[c], spec.resp, cfg.track_length);
    const double draw = draw_step(spec.step_dist, rng);
    if (spec.theta > 0.0) {
        if (auto front = front_competitor(c, s)) {
            const double gap = s.positions[*front] - s.positions[c];
            if (gap <= spec.theta) return {r * std::min(s.prev_steps[c], s.prev_steps[*front]), true};
        }
    }
    return {r * preference_factor(cfg.race_factor, spec.pref, spec.pref_sensitivity) * draw, false};
}

// Everyone at the start line; prev_steps seeded with one unblocked step each.
inline RaceState start_race(const RaceConfig& cfg, Rng& rng) {
    RaceState s;
    const std::size_t n = cfg.size();
    s.positions.assign(n, 0.0);
    s.prev_steps.resize(n);
    s.finish_tick.assign(n, std::nullopt);
    for (std::size_t c = 0; c < n; ++c) {
        const auto& spec = cfg.competitors[c];
        s.prev_steps[c] = responsiveness(0.0, spec.resp, cfg.track_length) *
                          preference_factor(cfg.race_factor, spec.pref, spec.pref_sensitivity) *
                          draw_step(spec.step_dist, rng);
    }
    return s;
}

// Simultaneous update: every unfinished competitor steps from the
// start-of-tick positions, then all moves are applied.
inline void advance_race(RaceState& s, const RaceConfig& cfg, Rng& rng) {
    if (s.finished()) throw std::logic_error("advance_race: race already finished");
    if (s.tick >= cfg.tick_limit)
        throw RaceDiverged("race exceeded tick limit of " + std::to_string(cfg.tick_limit));
    const std::size_t n = s.size();
    // Scratch buffer kept per thread: this is the innermost loop of every batch.
    thread_local std::vector<double> steps;
    steps.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        if (s.is_finished(c)) continue;
        const auto r = step_competitor(c, s, cfg, rng);
        steps[c] = r.step;
        s.blocked_steps += r.blocked ? 1 : 0;
    }
    ++s.tick;
    for (std::size_t c = 0; c < n; ++c) {
        if (s.is_finished(c)) continue;
        s.positions[c] += steps[c];
        s.prev_steps[c] = steps[c];
        if (s.positions[c] >= cfg.track_length) {
            s.finish_tick[c] = s.tick;
            ++s.finished_count;
        }
    }
}

// Ranking among finished competitors: earlier tick, then larger overshoot,
// then lower index. Unfinished competitors are omitted.
inline std::vector<std::size_t> finish_order(const RaceState& s) {
    std::vector<std::size_t> order;
    order.reserve(s.finished_count);
    for (std::size_t c = 0; c < s.size(); ++c)
        if (s.is_finished(c)) order.push_back(c);
    std::sort(order.begin(), order.end(), [&s](std::size_t a, std::size_t b) {
        if (*s.finish_tick[a] != *s.finish_tick[b]) return *s.finish_tick[a] < *s.finish_tick[b];
        if (s.positions[a] != s.positions[b]) return s.positions[a] > s.positions[b];
        return a < b;
    });
    return order;
}

inline std::size_t close_threshold(const RaceConfig& cfg) noexcept {
    switch (cfg.betting_close.rule) {
        case CloseRule::on_first_finish: return 1;
        case CloseRule::on_kth_finish: return cfg.betting_close.k;
        case CloseRule::on_last_finish: break;
    }
    return cfg.size();
}

inline bool betting_closed(const RaceState& s, const RaceConfig& cfg) noexcept {
    return s.finished_count >= close_threshold(cfg);
}

struct RaceOutcome {
    std::vector<std::size_t> finish_order;          // competitor indices, winner first
    std::vector<std::uint64_t> finish_ticks;        // per competitor index
    bool operator==(const RaceOutcome&) const = default;
};

struct Trajectory {
    std::vector<std::vector<double>> positions;     // positions[tick][competitor], tick 0 included
    std::vector<std::size_t> finish_order;
    std::vector<std::uint64_t> finish_ticks;
    bool operator==(const Trajectory&) const = default;
};

namespace detail {
inline RaceOutcome outcome_of(const RaceState& s) {
    RaceOutcome out{finish_order(s), {}};
    out.finish_ticks.reserve(s.size());
    for (const auto& t : s.finish_tick) out.finish_ticks.push_back(*t);
    return out;
}
}  // namespace detail

inline RaceOutcome race_outcome(const RaceConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    auto s = start_race(cfg, rng);
    while (!s.finished()) advance_race(s, cfg, rng);
    return detail::outcome_of(s);
}

inline Trajectory run_race(const RaceConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    auto s = start_race(cfg, rng);
    Trajectory traj;
    traj.positions.push_back(s.positions);
    while (!s.finished()) {
        advance_race(s, cfg, rng);
        traj.positions.push_back(s.positions);
    }
    auto out = detail::outcome_of(s);
    traj.finish_order = std::move(out.finish_order);
    traj.finish_ticks = std::move(out.finish_ticks);
    return traj;
}

// Dry-run: forward-simulate a copy of `state` to completion.
inline std::vector<std::size_t> simulate_from(const RaceState& state, const RaceConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    RaceState s = state;
    while (!s.finished()) advance_race(s, cfg, rng);
    return finish_order(s);
}

// Same process as simulate_from, stopped once the winner is known. Returns
// the state's own leader if someone has already finished.
inline std::size_t simulate_winner_from(const RaceState& state, const RaceConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    RaceState s = state;
    while (s.finished_count == 0) advance_race(s, cfg, rng);
    return finish_order(s).front();
}

}  // namespace racebook
