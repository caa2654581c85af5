#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace racebook {

namespace detail {

struct LadderBand {
    int upto;  // inclusive upper bound, hundredths
    int step;  // hundredths
};

// Decimal odds ladder in hundredths: 1.01 to 1000.
inline constexpr std::array<LadderBand, 10> ladder_bands{{
    {200, 1}, {300, 2}, {400, 5}, {600, 10}, {1000, 20},
    {2000, 50}, {3000, 100}, {5000, 200}, {10000, 500}, {100000, 1000},
}};

constexpr std::size_t ladder_size() {
    std::size_t n = 0;
    int v = 100;
    for (auto b : ladder_bands)
        for (; v + b.step <= b.upto; v += b.step) ++n;
    return n;
}

constexpr auto build_ladder() {
    std::array<int, ladder_size()> out{};
    std::size_t i = 0;
    int v = 100;
    for (auto b : ladder_bands)
        for (; v + b.step <= b.upto;) out[i++] = (v += b.step);
    return out;
}

}  // namespace detail

inline constexpr auto odds_ladder = detail::build_ladder();
static_assert(odds_ladder.size() == 350);
static_assert(odds_ladder.front() == 101 && odds_ladder.back() == 100000);

// Decimal odds as a position on the tick ladder.
class Odds {
public:
    constexpr Odds() = default;
    explicit constexpr Odds(int tick) noexcept : tick_(tick) {}

    constexpr int tick() const noexcept { return tick_; }
    constexpr bool valid() const noexcept { return tick_ >= 0 && tick_ < static_cast<int>(odds_ladder.size()); }
    // Total returned per unit stake, in hundredths (1100 == 11.0).
    constexpr int hundredths() const { return odds_ladder.at(static_cast<std::size_t>(tick_)); }
    constexpr double decimal() const { return hundredths() / 100.0; }

    static constexpr Odds min() noexcept { return Odds(0); }
    static constexpr Odds max() noexcept { return Odds(static_cast<int>(odds_ladder.size()) - 1); }

    constexpr auto operator<=>(const Odds&) const = default;

private:
    int tick_ = 0;
};

// Exact ladder lookup; nullopt when h is not a tick.
constexpr std::optional<Odds> odds_from_hundredths(int h) noexcept {
    std::size_t lo = 0, hi = odds_ladder.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (odds_ladder[mid] < h) lo = mid + 1; else hi = mid;
    }
    if (lo < odds_ladder.size() && odds_ladder[lo] == h) return Odds(static_cast<int>(lo));
    return std::nullopt;
}

// Nearest tick, ties rounding up, clamped to [1.01, 1000].
inline Odds quantize_odds(double raw) {
    if (!(raw > 1.0)) throw std::invalid_argument("odds must be > 1.0, got " + std::to_string(raw));
    const double x = raw * 100.0;
    if (x <= odds_ladder.front()) return Odds::min();
    if (x >= odds_ladder.back()) return Odds::max();
    std::size_t hi = 0;
    while (odds_ladder[hi] < x) ++hi;
    const double d_up = odds_ladder[hi] - x;
    const double d_down = x - odds_ladder[hi - 1];
    // 1e-7 hundredths absorbs binary representation error (2.01 * 100 is 200.99999...).
    return Odds(static_cast<int>(d_up <= d_down + 1e-7 ? hi : hi - 1));
}

}  // namespace racebook
