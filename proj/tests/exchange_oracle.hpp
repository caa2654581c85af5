#pragma once

// Brute-force reference market: every bet lives in one arrival-ordered list
// and matching scans that list from the front. Slow and obvious.

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "racebook/exchange.hpp"
#include "racebook/rng.hpp"

namespace oracle {

using racebook::BetId;
using racebook::BettorId;
using racebook::Money;
using racebook::Odds;
using racebook::Side;

struct OBet {
    BetId id;
    BettorId bettor;
    std::size_t competitor;
    Side side;
    int hundredths;
    std::int64_t stake, unmatched, matched, held;
};

struct OMatch {
    BetId back, lay;
    std::size_t competitor;
    int hundredths;
    std::int64_t amount;
    bool operator==(const OMatch&) const = default;
};

struct ListMarket {
    std::size_t competitors;
    std::vector<OBet> bets;
    std::vector<OMatch> matches;
    std::map<BettorId, std::int64_t> free, reserved;

    static std::int64_t hold_for(Side side, std::int64_t stake, int h) {
        if (side == Side::back) return stake;
        const std::int64_t num = stake * (h - 100);
        return num / 100 + (num % 100 != 0 ? 1 : 0);
    }

    // Returns the new bet id, or 0 when rejected.
    BetId submit(BettorId who, std::size_t comp, Side side, int h, std::int64_t stake) {
        if (!free.contains(who) || comp >= competitors || stake <= 0) return 0;
        const std::int64_t need = hold_for(side, stake, h);
        if (free[who] < need) return 0;
        free[who] -= need;
        reserved[who] += need;
        const BetId id = bets.size() + 1;
        bets.push_back({id, who, comp, side, h, stake, stake, 0, need});
        OBet& in = bets.back();
        for (auto& other : bets) {
            if (in.unmatched == 0) break;
            if (other.id == in.id || other.side == side || other.competitor != comp || other.hundredths != h ||
                other.unmatched == 0)
                continue;
            const std::int64_t a = std::min(in.unmatched, other.unmatched);
            in.unmatched -= a;
            in.matched += a;
            other.unmatched -= a;
            other.matched += a;
            matches.push_back({side == Side::back ? in.id : other.id, side == Side::back ? other.id : in.id, comp, h, a});
        }
        return id;
    }

    std::int64_t cancel(BetId id, BettorId who) {
        if (id == 0 || id > bets.size()) return -1;
        OBet& b = bets[id - 1];
        if (b.bettor != who) return -1;
        const std::int64_t amount = b.unmatched;
        b.unmatched = 0;
        const std::int64_t keep = hold_for(b.side, b.matched, b.hundredths);
        free[who] += b.held - keep;
        reserved[who] -= b.held - keep;
        b.held = keep;
        return amount;
    }

    // (competitor, side, hundredths) -> unmatched total
    std::map<std::tuple<std::size_t, int, int>, std::int64_t> levels() const {
        std::map<std::tuple<std::size_t, int, int>, std::int64_t> out;
        for (const auto& b : bets)
            if (b.unmatched > 0) out[{b.competitor, static_cast<int>(b.side), b.hundredths}] += b.unmatched;
        return out;
    }
};

inline std::map<std::tuple<std::size_t, int, int>, std::int64_t> book_levels(const racebook::MarketBook& book) {
    std::map<std::tuple<std::size_t, int, int>, std::int64_t> out;
    for (std::size_t c = 0; c < book.competitors(); ++c)
        for (const auto& row : book.ladder(c)) {
            if (row.back > Money(0)) out[{c, static_cast<int>(Side::back), row.odds.hundredths()}] = row.back.minor();
            if (row.lay > Money(0)) out[{c, static_cast<int>(Side::lay), row.odds.hundredths()}] = row.lay.minor();
        }
    return out;
}

// True when the book, the match ledger and every account agree exactly.
inline bool same_state(const racebook::MarketBook& book, const ListMarket& ref) {
    if (book.bets().size() != ref.bets.size() || book.matches().size() != ref.matches.size()) return false;
    for (std::size_t i = 0; i < ref.bets.size(); ++i) {
        const auto& a = book.bets()[i];
        const auto& b = ref.bets[i];
        if (a.id != b.id || a.bettor != b.bettor || a.competitor != b.competitor || a.side != b.side ||
            a.odds.hundredths() != b.hundredths || a.stake.minor() != b.stake || a.unmatched.minor() != b.unmatched ||
            a.matched.minor() != b.matched || a.held.minor() != b.held)
            return false;
    }
    for (std::size_t i = 0; i < ref.matches.size(); ++i) {
        const auto& m = book.matches()[i];
        if (!(OMatch{m.back_bet, m.lay_bet, m.competitor, m.odds.hundredths(), m.amount.minor()} == ref.matches[i]))
            return false;
    }
    for (const auto& [id, acct] : book.accounts())
        if (acct.balance.minor() != ref.free.at(id) || acct.reserved.minor() != ref.reserved.at(id)) return false;
    return book_levels(book) == ref.levels();
}

// Neither side has unmatched stake at the same (competitor, odds).
inline bool no_cross(const racebook::MarketBook& book) {
    for (std::size_t c = 0; c < book.competitors(); ++c)
        for (const auto& row : book.ladder(c))
            if (row.back > Money(0) && row.lay > Money(0)) return false;
    return true;
}

// Drives `book` and `ref` through `ops` random submit/cancel operations with
// a few odds values and competitors so that queues actually form. Returns
// false at the first divergence.
inline bool run_random_stream(std::uint64_t seed, int ops, racebook::MarketBook& book, ListMarket& ref) {
    racebook::Rng rng(seed);
    const int odds_pool[] = {150, 200, 300, 420, 1100};
    const BettorId bettors = 6;
    for (BettorId b = 1; b <= bettors; ++b) {
        const std::int64_t bal = b == bettors ? 2'000 : 5'000'000;  // one bettor runs short of funds
        book.open_account(b, Money(bal));
        ref.free[b] = bal;
        ref.reserved[b] = 0;
    }
    std::vector<std::pair<BetId, BettorId>> placed;
    for (int k = 0; k < ops; ++k) {
        if (!placed.empty() && rng.uniform01() < 0.25) {
            const auto [id, owner] = placed[rng.index(placed.size())];
            const BettorId who = rng.uniform01() < 0.9 ? owner : static_cast<BettorId>(1 + rng.index(bettors));
            const auto r = book.cancel_bet(id, who);
            const auto expect = ref.cancel(id, who);
            const std::int64_t got = r.status == racebook::CancelStatus::cancelled ? r.cancelled.minor()
                                     : r.status == racebook::CancelStatus::nothing_unmatched ? 0
                                                                                             : -1;
            if (got != expect) return false;
        } else {
            const auto who = static_cast<BettorId>(1 + rng.index(bettors));
            const std::size_t comp = rng.index(book.competitors());
            const Side side = rng.coin() ? Side::back : Side::lay;
            const int h = odds_pool[rng.index(5)];
            const std::int64_t stake = 100 * rng.uniform_int(1, 50) + (rng.coin() ? rng.uniform_int(0, 99) : 0);
            const auto r = book.submit_bet(who, comp, side, *racebook::odds_from_hundredths(h), Money(stake));
            const BetId expect = ref.submit(who, comp, side, h, stake);
            if ((r.accepted() ? r.bet_id : 0) != expect) return false;
            if (r.accepted()) placed.push_back({r.bet_id, who});
        }
        if (!no_cross(book)) return false;
    }
    return same_state(book, ref);
}

}  // namespace oracle
