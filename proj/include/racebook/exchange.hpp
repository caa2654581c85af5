#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racebook/odds.hpp"

namespace racebook {

// Integer minor units (cents).
class Money {
public:
    constexpr Money() = default;
    explicit constexpr Money(std::int64_t minor) noexcept : minor_(minor) {}
    static constexpr Money units(std::int64_t whole) noexcept { return Money(whole * 100); }

    constexpr std::int64_t minor() const noexcept { return minor_; }

    constexpr Money& operator+=(Money o) noexcept { minor_ += o.minor_; return *this; }
    constexpr Money& operator-=(Money o) noexcept { minor_ -= o.minor_; return *this; }
    friend constexpr Money operator+(Money a, Money b) noexcept { return a += b; }
    friend constexpr Money operator-(Money a, Money b) noexcept { return a -= b; }
    constexpr Money operator-() const noexcept { return Money(-minor_); }
    constexpr auto operator<=>(const Money&) const = default;

private:
    std::int64_t minor_ = 0;
};

using BetId = std::uint64_t;
using BettorId = std::uint32_t;

enum class Side { back, lay };

constexpr std::string_view to_string(Side s) noexcept { return s == Side::back ? "back" : "lay"; }

// Win amount on a matched stake: stake * (odds - 1), fractional minor units
// truncated. Truncation keeps the sum over partial matches within the
// layer's (rounded up) reservation.
constexpr Money winnings(Money stake, Odds odds) {
    return Money(stake.minor() * (odds.hundredths() - 100) / 100);
}

// Funds held at acceptance: the stake for a back, the liability (rounded up)
// for a lay. Always >= the amount settlement can take.
constexpr Money reservation(Side side, Money stake, Odds odds) {
    if (side == Side::back) return stake;
    return Money((stake.minor() * (odds.hundredths() - 100) + 99) / 100);
}

struct Bet {
    BetId id = 0;
    BettorId bettor = 0;
    std::size_t competitor = 0;
    Side side = Side::back;
    Odds odds;
    Money stake;          // backer-stake units for both sides
    std::uint64_t arrival_seq = 0;
    double arrival_time = 0.0;
    Money unmatched;
    Money matched;
    Money held;           // reservation still held against this bet
    bool operator==(const Bet&) const = default;
};

struct MatchRecord {
    BetId back_bet = 0;
    BetId lay_bet = 0;
    std::size_t competitor = 0;
    Odds odds;
    Money amount;  // backer-stake units
    double time = 0.0;
    bool operator==(const MatchRecord&) const = default;
};

struct Account {
    BettorId bettor = 0;
    Money balance;   // free funds
    Money reserved;  // held against open or matched bets
    bool operator==(const Account&) const = default;
};

enum class Reject {
    none,
    market_closed,
    unknown_bettor,
    unknown_competitor,
    invalid_odds,
    invalid_stake,
    insufficient_funds,
};

constexpr std::string_view to_string(Reject r) noexcept {
    switch (r) {
        case Reject::none: return "none";
        case Reject::market_closed: return "market_closed";
        case Reject::unknown_bettor: return "unknown_bettor";
        case Reject::unknown_competitor: return "unknown_competitor";
        case Reject::invalid_odds: return "invalid_odds";
        case Reject::invalid_stake: return "invalid_stake";
        case Reject::insufficient_funds: return "insufficient_funds";
    }
    return "?";
}

struct SubmitResult {
    Reject reject = Reject::none;
    BetId bet_id = 0;
    std::vector<MatchRecord> matches;
    bool accepted() const noexcept { return reject == Reject::none; }
};

enum class CancelStatus { cancelled, nothing_unmatched, unknown_bet, not_owner, market_closed };

constexpr std::string_view to_string(CancelStatus s) noexcept {
    switch (s) {
        case CancelStatus::cancelled: return "cancelled";
        case CancelStatus::nothing_unmatched: return "nothing_unmatched";
        case CancelStatus::unknown_bet: return "unknown_bet";
        case CancelStatus::not_owner: return "not_owner";
        case CancelStatus::market_closed: return "market_closed";
    }
    return "?";
}

struct CancelResult {
    CancelStatus status = CancelStatus::unknown_bet;
    Money cancelled;
    Money released;
};

struct Expiry {
    BetId bet_id = 0;
    BettorId bettor = 0;
    Money unmatched;
    Money refunded;  // reservation released
};

struct PriceLevel {
    Odds odds;
    Money stake;
    bool operator==(const PriceLevel&) const = default;
};

// One competitor's row of the market grid. backs: highest odds first;
// lays: lowest odds first.
struct GridRow {
    std::vector<PriceLevel> backs;
    std::vector<PriceLevel> lays;
    bool operator==(const GridRow&) const = default;
};

using MarketGrid = std::vector<GridRow>;

struct LadderRow {
    Odds odds;
    Money back;  // unmatched back stake at these odds
    Money lay;   // unmatched lay stake at these odds
    bool operator==(const LadderRow&) const = default;
};

struct SettlementLine {
    BettorId bettor = 0;
    Money gross;
    Money commission;
    Money net;
    bool operator==(const SettlementLine&) const = default;
};

struct SettlementReport {
    std::size_t winner = 0;
    std::vector<SettlementLine> lines;  // one per account, ascending bettor id
    Money total_commission;
};

enum class MarketState { open, closed, settled };

class ExchangeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Win market for one race. Bets match only at identical odds, oldest first.
// Single owner: callers serialize all mutations.
class MarketBook {
public:
    explicit MarketBook(std::size_t competitors) : levels_(competitors) {}

    std::size_t competitors() const noexcept { return levels_.size(); }
    MarketState state() const noexcept { return state_; }

    void open_account(BettorId bettor, Money balance) {
        if (balance < Money(0)) throw ExchangeError("open_account: negative balance");
        if (!accounts_.emplace(bettor, Account{bettor, balance, Money(0)}).second)
            throw ExchangeError("open_account: duplicate bettor " + std::to_string(bettor));
    }

    bool has_account(BettorId bettor) const { return accounts_.contains(bettor); }
    const Account& account(BettorId bettor) const { return accounts_.at(bettor); }
    const std::map<BettorId, Account>& accounts() const noexcept { return accounts_; }

    SubmitResult submit_bet(BettorId bettor, std::size_t competitor, Side side, Odds odds, Money stake,
                            double time = 0.0) {
        SubmitResult res;
        if (state_ != MarketState::open) return reject(res, Reject::market_closed);
        auto acct = accounts_.find(bettor);
        if (acct == accounts_.end()) return reject(res, Reject::unknown_bettor);
        if (competitor >= levels_.size()) return reject(res, Reject::unknown_competitor);
        if (!odds.valid()) return reject(res, Reject::invalid_odds);
        if (stake <= Money(0)) return reject(res, Reject::invalid_stake);
        const Money hold = reservation(side, stake, odds);
        if (acct->second.balance < hold) return reject(res, Reject::insufficient_funds);

        acct->second.balance -= hold;
        acct->second.reserved += hold;

        Bet bet{next_id(), bettor, competitor, side, odds, stake, next_seq_++, time, stake, Money(0), hold};
        res.bet_id = bet.id;
        bets_.push_back(bet);
        by_bettor_[bettor].push_back(bet.id);

        auto& row = levels_[competitor];
        auto& opposite = side == Side::back ? row.lays : row.backs;
        Bet& incoming = bets_.back();
        if (auto it = opposite.find(odds.tick()); it != opposite.end()) {
            Level& level = it->second;
            while (incoming.unmatched > Money(0) && !level.queue.empty()) {
                Bet& resting = bets_[level.queue.front() - 1];
                const Money amount = std::min(incoming.unmatched, resting.unmatched);
                incoming.unmatched -= amount;
                incoming.matched += amount;
                resting.unmatched -= amount;
                resting.matched += amount;
                level.total -= amount;
                MatchRecord m{side == Side::back ? incoming.id : resting.id,
                              side == Side::back ? resting.id : incoming.id,
                              competitor, odds, amount, time};
                matches_.push_back(m);
                res.matches.push_back(m);
                if (resting.unmatched == Money(0)) level.queue.pop_front();
            }
            if (level.queue.empty()) opposite.erase(it);
        }
        if (incoming.unmatched > Money(0)) {
            auto& same = side == Side::back ? row.backs : row.lays;
            Level& level = same[odds.tick()];
            level.queue.push_back(incoming.id);
            level.total += incoming.unmatched;
        }
        return res;
    }

    CancelResult cancel_bet(BetId id, BettorId bettor) {
        if (id == 0 || id > bets_.size()) return {CancelStatus::unknown_bet, {}, {}};
        Bet& bet = bets_[id - 1];
        if (bet.bettor != bettor) return {CancelStatus::not_owner, {}, {}};
        if (state_ != MarketState::open) return {CancelStatus::market_closed, {}, {}};
        if (bet.unmatched == Money(0)) return {CancelStatus::nothing_unmatched, {}, {}};
        const Money amount = bet.unmatched;
        remove_from_level(bet);
        const Money released = release_unmatched(bet);
        return {CancelStatus::cancelled, amount, released};
    }

    // Expire every unmatched portion and stop accepting bets.
    std::vector<Expiry> close_betting() {
        if (state_ != MarketState::open) throw ExchangeError("close_betting: market not open");
        std::vector<Expiry> out;
        for (Bet& bet : bets_) {
            if (bet.unmatched == Money(0)) continue;
            const Money amount = bet.unmatched;
            const Money released = release_unmatched(bet);
            out.push_back({bet.id, bet.bettor, amount, released});
        }
        for (auto& row : levels_) {
            row.backs.clear();
            row.lays.clear();
        }
        state_ = MarketState::closed;
        return out;
    }

    // Pay out matched bets. Commission is taken from each bettor's positive
    // net winnings on the market, rounded half up.
    SettlementReport settle(std::size_t winner, double commission_rate) {
        if (state_ == MarketState::open) throw ExchangeError("settle: betting not closed");
        if (state_ == MarketState::settled) throw ExchangeError("settle: already settled");
        if (winner >= levels_.size()) throw ExchangeError("settle: unknown winner " + std::to_string(winner));
        if (!(commission_rate >= 0.0 && commission_rate <= 1.0))
            throw ExchangeError("settle: commission rate must be in [0, 1]");
        const std::int64_t ppm = std::llround(commission_rate * 1e6);

        std::map<BettorId, Money> gross;
        for (const auto& m : matches_) {
            const BettorId backer = bets_[m.back_bet - 1].bettor;
            const BettorId layer = bets_[m.lay_bet - 1].bettor;
            const Money swing = m.competitor == winner ? winnings(m.amount, m.odds) : m.amount;
            if (m.competitor == winner) {
                gross[backer] += swing;
                gross[layer] -= swing;
            } else {
                gross[layer] += swing;
                gross[backer] -= swing;
            }
        }
        std::map<BettorId, Money> held;
        for (Bet& bet : bets_) {
            held[bet.bettor] += bet.held;
            bet.held = Money(0);
        }

        SettlementReport report;
        report.winner = winner;
        for (auto& [id, acct] : accounts_) {
            const Money g = gross[id];
            const Money c = g > Money(0) ? Money((g.minor() * ppm + 500'000) / 1'000'000) : Money(0);
            const Money net = g - c;
            const Money h = held[id];
            acct.reserved -= h;
            acct.balance += h + net;
            report.lines.push_back({id, g, c, net});
            report.total_commission += c;
        }
        commission_ += report.total_commission;
        state_ = MarketState::settled;
        return report;
    }

    MarketGrid market_grid(std::size_t depth) const {
        MarketGrid grid(levels_.size());
        for (std::size_t c = 0; c < levels_.size(); ++c) {
            const auto& row = levels_[c];
            for (auto it = row.backs.rbegin(); it != row.backs.rend() && grid[c].backs.size() < depth; ++it)
                grid[c].backs.push_back({Odds(it->first), it->second.total});
            for (auto it = row.lays.begin(); it != row.lays.end() && grid[c].lays.size() < depth; ++it)
                grid[c].lays.push_back({Odds(it->first), it->second.total});
        }
        return grid;
    }

    std::vector<LadderRow> ladder(std::size_t competitor) const {
        const auto& row = levels_.at(competitor);
        std::map<int, LadderRow> merged;
        for (const auto& [tick, level] : row.backs) merged[tick] = {Odds(tick), level.total, Money(0)};
        for (const auto& [tick, level] : row.lays) {
            auto& r = merged[tick];
            r.odds = Odds(tick);
            r.lay = level.total;
        }
        std::vector<LadderRow> out;
        out.reserve(merged.size());
        for (auto& [tick, r] : merged) out.push_back(r);
        return out;
    }

    const Bet& bet(BetId id) const { return bets_.at(id - 1); }
    const std::vector<Bet>& bets() const noexcept { return bets_; }
    const std::vector<MatchRecord>& matches() const noexcept { return matches_; }
    Money commission() const noexcept { return commission_; }

    // Bets of `bettor` with an unmatched portion, oldest first.
    std::vector<BetId> open_bets(BettorId bettor) const {
        std::vector<BetId> out;
        if (auto it = by_bettor_.find(bettor); it != by_bettor_.end())
            for (BetId id : it->second)
                if (bets_[id - 1].unmatched > Money(0)) out.push_back(id);
        return out;
    }

    // FIFO queue of resting bet ids at one price level; empty if none.
    std::vector<BetId> queue(std::size_t competitor, Side side, Odds odds) const {
        const auto& book = side == Side::back ? levels_.at(competitor).backs : levels_.at(competitor).lays;
        auto it = book.find(odds.tick());
        if (it == book.end()) return {};
        return {it->second.queue.begin(), it->second.queue.end()};
    }

private:
    struct Level {
        Money total;
        std::deque<BetId> queue;
    };
    struct Row {
        std::map<int, Level> backs;  // keyed by odds tick
        std::map<int, Level> lays;
    };

    static SubmitResult& reject(SubmitResult& r, Reject why) {
        r.reject = why;
        return r;
    }

    BetId next_id() const noexcept { return bets_.size() + 1; }

    void remove_from_level(const Bet& bet) {
        auto& book = bet.side == Side::back ? levels_[bet.competitor].backs : levels_[bet.competitor].lays;
        auto it = book.find(bet.odds.tick());
        if (it == book.end()) return;
        auto& q = it->second.queue;
        q.erase(std::find(q.begin(), q.end(), bet.id));
        it->second.total -= bet.unmatched;
        if (q.empty()) book.erase(it);
    }

    // Drops the unmatched portion and releases the part of the reservation
    // that no longer backs a matched amount.
    Money release_unmatched(Bet& bet) {
        bet.unmatched = Money(0);
        const Money keep = reservation(bet.side, bet.matched, bet.odds);
        const Money released = bet.held - keep;
        bet.held = keep;
        auto& acct = accounts_.at(bet.bettor);
        acct.balance += released;
        acct.reserved -= released;
        return released;
    }

    std::vector<Row> levels_;
    std::vector<Bet> bets_;  // bets_[id - 1]
    std::vector<MatchRecord> matches_;
    std::map<BettorId, Account> accounts_;
    std::unordered_map<BettorId, std::vector<BetId>> by_bettor_;
    std::uint64_t next_seq_ = 1;
    Money commission_;
    MarketState state_ = MarketState::open;
};

}  // namespace racebook
