// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "exchange_oracle.hpp"
#include "racebook/batch.hpp"
#include "racebook/cli.hpp"
#include "racebook/config.hpp"
#include "racebook/io.hpp"
#include "racebook/session.hpp"

using namespace racebook;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CompetitorSpec runner(int id, double lo, double hi, double theta = 0.0) {
    CompetitorSpec c;
    c.id = id;
    c.step_dist = UniformSteps{lo, hi};
    c.theta = theta;
    return c;
}

// 1. Random valid configs always terminate with strictly increasing positions.
Verdict termination_and_positivity() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng gen(derive_seed(1, "acceptance-configs"));
    std::size_t violations = 0, diverged = 0;
    std::uint64_t ticks = 0;
    const int configs = 10000;
    for (int k = 0; k < configs; ++k) {
        RaceConfig cfg;
        cfg.race_factor = gen.uniform01();
        const auto n = static_cast<std::size_t>(gen.uniform_int(1, 20));
        for (std::size_t c = 0; c < n; ++c) {
            CompetitorSpec s;
            s.id = static_cast<int>(c + 1);
            if (gen.coin()) {
                const double lo = gen.uniform(2.0, 15.0);
                s.step_dist = UniformSteps{lo, lo + gen.uniform(0.0, 15.0)};
            } else {
                s.step_dist = LognormalSteps{gen.uniform(-0.5, 0.5), gen.uniform(0.0, 0.5), gen.uniform(5.0, 20.0)};
            }
            s.pref = gen.uniform01();
            s.pref_sensitivity = gen.uniform(0.0, 0.5);
            s.resp = {gen.uniform(0.5, 1.5), gen.uniform(0.5, 1.5), gen.uniform01()};
            s.theta = gen.uniform(0.0, 5.0);
            cfg.competitors.push_back(s);
        }
        validate(cfg);
        Rng rng(derive_seed(1, "acceptance-race", {static_cast<std::uint64_t>(k)}));
        auto s = start_race(cfg, rng);
        try {
            while (!s.finished()) {
                const auto before = s.positions;
                const auto was_finished = s.finish_tick;
                advance_race(s, cfg, rng);
                for (std::size_t c = 0; c < n; ++c)
                    if (!was_finished[c] && !(s.positions[c] > before[c])) ++violations;
            }
        } catch (const RaceDiverged&) {
            ++diverged;
        }
        ticks += s.tick;
    }
    const double secs = seconds_since(t0);
    return {violations == 0 && diverged == 0 && secs < 60.0,
            fmt("%d configs, %zu violations, %zu diverged, %llu ticks, %.1f s", configs, violations, diverged,
                static_cast<unsigned long long>(ticks), secs)};
}

// 2. Four identical runners share the wins.
Verdict symmetry_pmf() {
    RaceConfig cfg;
    for (int i = 1; i <= 4; ++i) cfg.competitors.push_back(runner(i, 10, 20, 1.0));
    const std::uint64_t R = 10000;
    const auto out = run_batch({cfg, R, hardware_workers(), 2});
    std::vector<double> wins(4, 0);
    for (const auto& o : out) ++wins[o.finish_order[0]];
    const double sigma = std::sqrt(0.25 * 0.75 / R);
    bool ok = true;
    std::string freq;
    for (double w : wins) {
        const double f = w / R;
        ok = ok && std::abs(f - 0.25) <= 3 * sigma;
        freq += fmt("%.4f ", f);
    }
    return {ok, "win frequencies " + freq + fmt("(3 sigma = %.4f)", 3 * sigma)};
}

// 3. Matching engine agrees with the list-scan oracle.
Verdict matching_oracle() {
    int agree = 0;
    std::size_t matches = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        MarketBook book(4);
        oracle::ListMarket ref{4, {}, {}, {}, {}};
        agree += oracle::run_random_stream(derive_seed(3, "acceptance-stream", {s}), 1000, book, ref);
        matches += ref.matches.size();
    }
    return {agree == 100, fmt("%d/100 streams of 1000 ops identical, %zu matches compared", agree, matches)};
}

// 4. Settled sessions are zero-sum after commission; the book never crosses.
Verdict ledger_identity() {
    Rng gen(derive_seed(4, "acceptance-sessions"));
    int identity_ok = 0, cross_ok = 0, replay_ok = 0;
    const int sessions = 1000;
    std::size_t total_matches = 0;
    for (int k = 0; k < sessions; ++k) {
        auto cfg = session_config(default_experiment(), static_cast<std::uint64_t>(k));
        cfg.seed = derive_seed(4, "acceptance-session", {static_cast<std::uint64_t>(k)});
        cfg.log_race_ticks = false;
        cfg.log_grid = false;
        for (auto& a : cfg.agents) a.count = static_cast<int>(gen.uniform_int(0, 3));
        cfg.race.betting_close.rule = gen.coin() ? CloseRule::on_first_finish : CloseRule::on_last_finish;
        const auto r = run_session(cfg);
        total_matches += r.book.matches().size();

        Money opening, closing;
        for (const auto& p : expand_agents(cfg.agents)) opening += Money::units(p.balance);
        for (const auto& [id, a] : r.book.accounts()) closing += a.balance + a.reserved;
        Money nets;
        for (const auto& l : r.settlement.lines) nets += l.net;
        identity_ok += (closing - opening) + r.settlement.total_commission == Money(0) &&
                       nets + r.settlement.total_commission == Money(0);

        // Re-apply the log one event at a time, checking the book after each.
        MarketBook book(cfg.race.size());
        bool crossed = false;
        for (const auto& e : r.events) {
            if (e.kind == "open_account" || e.kind == "submit" || e.kind == "cancel") {
                const auto& d = e.data;
                if (e.kind == "open_account") {
                    book.open_account(d.at("bettor").get<BettorId>(), Money(d.at("balance").get<std::int64_t>()));
                } else if (e.kind == "submit") {
                    const auto odds = odds_from_hundredths(static_cast<int>(std::llround(d.at("odds").get<double>() * 100)));
                    book.submit_bet(d.at("bettor").get<BettorId>(), d.at("competitor").get<std::size_t>(),
                                    d.at("side") == "back" ? Side::back : Side::lay, *odds,
                                    Money(d.at("stake").get<std::int64_t>()), e.time);
                } else {
                    book.cancel_bet(d.at("bet_id").get<BetId>(), d.at("bettor").get<BettorId>());
                }
                crossed = crossed || !oracle::no_cross(book);
            }
        }
        cross_ok += !crossed;
        const auto replayed = replay_book(r.events, cfg.race, cfg.commission_rate);
        replay_ok += replayed.accounts() == r.book.accounts() && replayed.bets() == r.book.bets();
    }
    return {identity_ok == sessions && cross_ok == sessions && replay_ok == sessions,
            fmt("%d sessions: identity %d, no-cross %d, replay %d, %zu matches", sessions, identity_ok, cross_ok,
                replay_ok, total_matches)};
}

// 5. The two worked decimal-odds examples, through settlement.
Verdict decimal_odds() {
    auto payout = [](double decimal, std::int64_t stake_units) {
        MarketBook book(2);
        book.open_account(1, Money::units(100));
        book.open_account(2, Money::units(100));
        const Odds o = quantize_odds(decimal);
        book.submit_bet(1, 0, Side::back, o, Money::units(stake_units));
        book.submit_bet(2, 0, Side::lay, o, Money::units(stake_units));
        book.close_betting();
        book.settle(0, 0.0);
        // Total returned to the backer: stake back plus winnings.
        return std::pair{o.hundredths(), (book.account(1).balance - Money::units(100 - stake_units)).minor()};
    };
    const auto [h11, ret11] = payout(11.0, 1);
    const auto [h12, ret12] = payout(1.2, 5);
    const bool ok = h11 == 1100 && ret11 == 1100 && h12 == 120 && ret12 == 600;
    return {ok, fmt("stake 1 @ %.2f returns %.2f; stake 5 @ %.2f returns %.2f", h11 / 100.0, ret11 / 100.0,
                    h12 / 100.0, ret12 / 100.0)};
}

// 6. Event logs are byte-identical across repeats and worker counts.
Verdict determinism() {
    auto cfg = session_config(default_experiment());
    cfg.seed = 6;
    cfg.sentiment_logging = true;
    std::vector<std::uint64_t> digests;
    for (std::size_t p : {1, 2, 8})
        for (int rep = 0; rep < 5; ++rep) {
            const auto r = run_session(cfg, p);
            std::ostringstream s;
            write_events_jsonl(s, r.events);
            digests.push_back(fnv1a64(s.str()));
        }
    const bool same = std::all_of(digests.begin(), digests.end(), [&](auto d) { return d == digests[0]; });
    return {same, fmt("15 runs (P = 1, 2, 8 x 5), digest %s", hex64(digests[0]).c_str())};
}

// 7. CLI data products, and the direction of RP sentiment as a lead opens.
Verdict data_products() {
    const auto dir = fs::temp_directory_path() / "racebook_acceptance";
    fs::remove_all(dir);
    std::ostringstream out, err;
    const int rc1 = cli_dispatch({"race", "--seed", "7", "--out", (dir / "race").string()}, out, err);
    const int rc2 = cli_dispatch({"session", "--sentiment", "--seed", "7", "--out", (dir / "session").string()}, out, err);
    if (rc1 != 0 || rc2 != 0) return {false, "CLI failed: " + err.str()};

    const auto e = default_experiment();
    std::ifstream tin(dir / "race" / "trajectory.csv"), fin(dir / "race" / "finish.csv"),
        sin(dir / "session" / "sentiment.csv"), sfin(dir / "session" / "finish.csv");
    const auto traj = read_trajectory_csv(tin);
    const auto fin_rows = read_finish_csv(fin);
    const auto sent = read_sentiment_csv(sin);
    const auto sfin_rows = read_finish_csv(sfin);
    std::uint64_t last = 0, slast = 0;
    for (const auto& r : fin_rows) last = std::max(last, r.finish_tick);
    for (const auto& r : sfin_rows) slast = std::max(slast, r.finish_tick);
    const bool shape = e.race.size() == 5 && e.race.track_length == 2000.0 && e.race.dt == 1.0 &&
                       fin_rows.size() == 5 && traj.size() == (last + 1) * 5 && !sent.empty() && last < 360 &&
                       slast < 360;

    // Two identical runners 1000 m out; the leader's margin grows by 10 m a step.
    RaceConfig two;
    two.competitors = {runner(1, 10, 20), runner(2, 10, 20)};
    std::vector<double> leader_odds, trailer_odds, sd;
    const int d = 1000;
    for (int gap = 0; gap <= 100; gap += 10) {
        RaceState s;
        s.tick = 67;
        s.positions = {1000.0 + gap, 1000.0};
        s.prev_steps = {15.0, 15.0};
        s.finish_tick.assign(2, std::nullopt);
        Rng rng(derive_seed(7, "acceptance-sentiment", {static_cast<std::uint64_t>(gap)}));
        const auto p = rp_predict(s, two, d, rng);
        leader_odds.push_back(1.0 / p.prob[0]);
        trailer_odds.push_back(1.0 / p.prob[1]);
        // Sampling sd of the leader's odds (delta method on the smoothed frequency).
        sd.push_back(std::sqrt(p.prob[0] * (1 - p.prob[0]) / d) / (p.prob[0] * p.prob[0]));
    }
    bool monotone = leader_odds.back() < leader_odds.front() && trailer_odds.back() > trailer_odds.front();
    for (std::size_t k = 1; k < leader_odds.size(); ++k)
        monotone = monotone && leader_odds[k] <= leader_odds[k - 1] + 2 * std::hypot(sd[k], sd[k - 1]);
    return {shape && monotone,
            fmt("race %llu ticks, session %llu ticks, %zu sentiment rows; leader odds %.3f -> %.3f, trailer %.2f -> %.2f",
                static_cast<unsigned long long>(last), static_cast<unsigned long long>(slast), sent.size(),
                leader_odds.front(), leader_odds.back(), trailer_odds.front(), trailer_odds.back())};
}

// 8. More dry-runs never predict worse (mean log-loss, in play).
Verdict rp_monotonicity() {
    const auto race = default_race();
    const int races = 1000;
    const std::vector<int> ds{0, 5, 50};
    std::vector<std::vector<double>> loss(ds.size());
    for (int k = 0; k < races; ++k) {
        const auto seed = derive_seed(8, "acceptance-logloss", {static_cast<std::uint64_t>(k)});
        Rng rng(seed);
        auto s = start_race(race, rng);
        for (int t = 0; t < 60; ++t) advance_race(s, race, rng);
        const RaceState snapshot = s;
        while (!s.finished()) advance_race(s, race, rng);
        const auto winner = finish_order(s).front();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            Rng prng(derive_seed(seed, "rp", {static_cast<std::uint64_t>(ds[i])}));
            loss[i].push_back(-std::log(rp_predict(snapshot, race, ds[i], prng).prob[winner]));
        }
    }
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < ds.size(); ++i) detail += fmt("d=%d %.4f  ", ds[i], summarize(loss[i]).mean);
    for (std::size_t i = 1; i < ds.size(); ++i) {
        std::vector<double> diff(races);
        for (int k = 0; k < races; ++k) diff[k] = loss[i][k] - loss[i - 1][k];
        const auto s = summarize(diff);
        ok = ok && s.mean <= 2 * s.sd / std::sqrt(static_cast<double>(races));
    }
    return {ok, "mean log-loss at tick 60: " + detail};
}

// 9. Parallel speedup, timing stability, and cost growth with field size.
Verdict scaling() {
    const std::size_t cores = hardware_workers();
    const BatchConfig serial{default_race(), 10000, 1, 9};
    BatchConfig parallel = serial;
    parallel.workers = cores;
    (void)run_batch(serial);
    auto time_batch = [](const BatchConfig& b) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)run_batch(b);
        return seconds_since(t0);
    };
    const double t1 = time_batch(serial), tp = time_batch(parallel);
    const double speedup = t1 / tp;

    std::vector<BatchConfig> grid;
    for (std::size_t n : {5, 10, 20, 40}) grid.push_back({with_competitors(default_race(), n), 2000, 1, 9});
    const auto pts = bench(grid, {5, 3});
    bool nondecreasing = true, cv_ok = true;
    std::string detail;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        detail += fmt("n=%zu %.2fus cv=%.3f  ", pts[i].competitors, pts[i].mean_s * 1e6, pts[i].cv);
        cv_ok = cv_ok && pts[i].cv < 0.25;
        if (i) nondecreasing = nondecreasing && pts[i].mean_s >= pts[i - 1].mean_s;
    }
    const bool ok = speedup >= 0.5 * static_cast<double>(cores) && cv_ok && nondecreasing;
    return {ok, fmt("cores=%zu speedup=%.2f (need >= %.2f); ", cores, speedup, 0.5 * static_cast<double>(cores)) + detail};
}

// 10. compare_pmf holds its size under the null and has power against a swap.
Verdict comparison_harness() {
    RaceConfig same;
    for (int i = 1; i <= 3; ++i) same.competitors.push_back(runner(i, 10, 20));
    RaceConfig swapped = same;
    swapped.competitors[2].step_dist = UniformSteps{1, 25};
    const auto ids = competitor_ids(same);
    const std::size_t workers = hardware_workers();
    int null_rejects = 0, alt_rejects = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto a = estimate_pmf(run_batch({same, 10000, workers, derive_seed(10, "a", {k})}), ids);
        const auto b = estimate_pmf(run_batch({same, 10000, workers, derive_seed(10, "b", {k})}), ids);
        const auto c = estimate_pmf(run_batch({swapped, 10000, workers, derive_seed(10, "c", {k})}), ids);
        null_rejects += compare_pmf(a, b).p_value < 0.01;
        alt_rejects += compare_pmf(a, c).p_value < 0.01;
    }
    return {null_rejects <= 5 && alt_rejects >= 95,
            fmt("same config rejected %d/100, swapped config rejected %d/100", null_rejects, alt_rejects)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"termination and positivity", termination_and_positivity},
        {"symmetric runners PMF", symmetry_pmf},
        {"matching oracle equivalence", matching_oracle},
        {"ledger identity and no-cross", ledger_identity},
        {"decimal odds arithmetic", decimal_odds},
        {"determinism across workers", determinism},
        {"trajectory and sentiment data", data_products},
        {"RP dry-run monotonicity", rp_monotonicity},
        {"scaling and bench stability", scaling},
        {"PMF comparison harness", comparison_harness},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
