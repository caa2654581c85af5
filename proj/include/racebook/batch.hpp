#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "racebook/parallel.hpp"
#include "racebook/race.hpp"
#include "racebook/rng.hpp"
#include "racebook/session.hpp"
#include "racebook/stats.hpp"

namespace racebook {

struct BatchConfig {
    RaceConfig race;
    std::uint64_t replications = 1000;
    std::size_t workers = 1;
    std::uint64_t master_seed = 0;
};

// Seed of run i; depends only on (master, i), never on scheduling.
inline std::uint64_t run_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return derive_seed(master, "run", {index});
}

class BatchError : public std::runtime_error {
public:
    BatchError(std::size_t index, const std::string& what)
        : std::runtime_error("run " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t run_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

namespace detail {
template <class Fn>
void indexed_runs(std::size_t count, std::size_t workers, Fn&& fn) {
    parallel_for(count, workers, [&](std::size_t i) {
        try {
            fn(i);
        } catch (const BatchError&) {
            throw;
        } catch (const std::exception& e) {
            throw BatchError(i, e.what());
        }
    });
}
}  // namespace detail

// R independent races; result[i] is run i whatever the worker count.
inline std::vector<RaceOutcome> run_batch(const BatchConfig& cfg) {
    validate(cfg.race);
    if (cfg.replications < 1) throw InvalidConfig("batch.replications: must be >= 1");
    if (cfg.workers < 1) throw InvalidConfig("batch.workers: must be >= 1");
    std::vector<RaceOutcome> out(cfg.replications);
    detail::indexed_runs(out.size(), cfg.workers,
                         [&](std::size_t i) { out[i] = race_outcome(cfg.race, run_seed(cfg.master_seed, i)); });
    return out;
}

struct SessionSummary {
    std::size_t winner = 0;
    std::size_t bets = 0;
    std::size_t matches = 0;
    Money matched_volume;
    Money commission;
    Money net_sum;          // sum of per-bettor net deltas
    std::size_t events = 0;
    bool operator==(const SessionSummary&) const = default;
};

inline SessionSummary session_summary(const SessionResult& r) {
    SessionSummary s;
    s.winner = r.trajectory.finish_order.front();
    s.bets = r.book.bets().size();
    s.matches = r.book.matches().size();
    for (const auto& m : r.book.matches()) s.matched_volume += m.amount;
    s.commission = r.settlement.total_commission;
    for (const auto& l : r.settlement.lines) s.net_sum += l.net;
    s.events = r.events.size();
    return s;
}

// Session i runs with seed derive_seed(master, "session", i).
inline std::vector<SessionSummary> run_session_batch(const SessionConfig& base, std::uint64_t replications,
                                                     std::size_t workers, std::uint64_t master_seed) {
    std::vector<SessionSummary> out(replications);
    detail::indexed_runs(out.size(), workers, [&](std::size_t i) {
        SessionConfig cfg = base;
        cfg.seed = derive_seed(master_seed, "session", {i});
        out[i] = session_summary(run_session(cfg));
    });
    return out;
}

enum class OutcomeSpace { finish_order, winner };

inline std::string_view to_string(OutcomeSpace s) noexcept {
    return s == OutcomeSpace::finish_order ? "finish_order" : "winner";
}

// Empirical PMF over finish orders (keys like "3-1-2", competitor ids) or,
// for more than six competitors, over winners (keys like "3").
struct OutcomePMF {
    OutcomeSpace space = OutcomeSpace::finish_order;
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;

    double frequency(const std::string& key) const {
        auto it = counts.find(key);
        return it == counts.end() || total == 0 ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
    }
    bool operator==(const OutcomePMF&) const = default;
};

inline constexpr std::size_t max_full_pmf_competitors = 6;  // 6! = 720 outcomes

inline std::string outcome_key(std::span<const std::size_t> order, std::span<const int> ids) {
    std::string key;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k) key += '-';
        key += std::to_string(ids[order[k]]);
    }
    return key;
}

inline OutcomePMF estimate_pmf(std::span<const RaceOutcome> outcomes, std::span<const int> ids) {
    if (outcomes.empty()) throw std::invalid_argument("estimate_pmf: no outcomes");
    OutcomePMF pmf;
    pmf.space = ids.size() <= max_full_pmf_competitors ? OutcomeSpace::finish_order : OutcomeSpace::winner;
    for (const auto& o : outcomes) {
        const auto order = pmf.space == OutcomeSpace::finish_order ? std::span<const std::size_t>(o.finish_order)
                                                                   : std::span<const std::size_t>(o.finish_order).first(1);
        ++pmf.counts[outcome_key(order, ids)];
        ++pmf.total;
    }
    return pmf;
}

inline std::vector<int> competitor_ids(const RaceConfig& cfg) {
    std::vector<int> ids;
    for (const auto& c : cfg.competitors) ids.push_back(c.id);
    return ids;
}

// Chi-square homogeneity over the union of observed outcomes.
inline TestResult compare_pmf(const OutcomePMF& a, const OutcomePMF& b) {
    if (a.space != b.space) throw std::invalid_argument("compare_pmf: outcome spaces differ");
    const auto parts = [](const std::string& k) { return std::count(k.begin(), k.end(), '-'); };
    if (!a.counts.empty() && !b.counts.empty() && parts(a.counts.begin()->first) != parts(b.counts.begin()->first))
        throw std::invalid_argument("compare_pmf: competitor counts differ");
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> joined;
    for (const auto& [k, v] : a.counts) joined[k].first = v;
    for (const auto& [k, v] : b.counts) joined[k].second = v;
    std::vector<std::uint64_t> ca, cb;
    for (const auto& [k, v] : joined) {
        ca.push_back(v.first);
        cb.push_back(v.second);
    }
    return chi_square_homogeneity(ca, cb);
}

// Per-competitor finish ticks of a batch, for Kruskal-Wallis comparison.
inline std::vector<double> finish_times(std::span<const RaceOutcome> outcomes, std::size_t competitor) {
    std::vector<double> out;
    out.reserve(outcomes.size());
    for (const auto& o : outcomes) out.push_back(static_cast<double>(o.finish_ticks.at(competitor)));
    return out;
}

struct BenchPoint {
    std::size_t competitors = 0;
    double mean_s = 0.0;  // wall-clock seconds per race
    double sd_s = 0.0;
    double cv = 0.0;
    std::size_t reps = 0;
};

struct BenchOptions {
    std::size_t reps = 5;     // timed run_batch calls per point
    std::size_t warmups = 3;  // untimed run_batch calls per point
};

// `n` competitors cycling through the base specs, ids 1..n.
inline RaceConfig with_competitors(const RaceConfig& base, std::size_t n) {
    RaceConfig cfg = base;
    cfg.competitors.clear();
    for (std::size_t i = 0; i < n; ++i) {
        cfg.competitors.push_back(base.competitors[i % base.competitors.size()]);
        cfg.competitors.back().id = static_cast<int>(i + 1);
    }
    if (cfg.betting_close.rule == CloseRule::on_kth_finish) cfg.betting_close.k = std::min(cfg.betting_close.k, n);
    return cfg;
}

inline std::vector<BenchPoint> bench(std::span<const BatchConfig> grid, BenchOptions opt = {}) {
    if (grid.empty()) throw std::invalid_argument("bench: empty grid");
    if (opt.reps < 1) throw std::invalid_argument("bench: reps must be >= 1");
    std::vector<BenchPoint> out;
    for (const auto& point : grid) {
        for (std::size_t w = 0; w < opt.warmups; ++w) (void)run_batch(point);
        std::vector<double> per_race;
        for (std::size_t r = 0; r < opt.reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto outcomes = run_batch(point);
            const auto t1 = std::chrono::steady_clock::now();
            per_race.push_back(std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(outcomes.size()));
        }
        const auto s = summarize(per_race);
        out.push_back({point.race.size(), s.mean, s.sd, s.mean > 0.0 ? s.sd / s.mean : 0.0, opt.reps});
    }
    return out;
}

}  // namespace racebook
