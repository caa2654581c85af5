#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "racebook/batch.hpp"
#include "racebook/config.hpp"
#include "racebook/exchange.hpp"
#include "racebook/race.hpp"
#include "racebook/rng.hpp"
#include "racebook/session.hpp"

namespace racebook {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_field(const std::string& s) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad field '" + s + "'");
    return v;
}

// Rows of a CSV with the given exact header.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in, std::string_view header) {
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw FormatError("expected header '" + std::string(header) + "'");
    const std::size_t cols = split_csv(header).size();
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split_csv(line);
        if (row.size() != cols) throw FormatError("wrong column count in '" + line + "'");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline constexpr std::string_view trajectory_header = "tick,competitor_id,position";
inline constexpr std::string_view finish_header = "competitor_id,finish_tick,finish_rank";
inline constexpr std::string_view settlement_header = "bettor_id,gross,commission,net";
inline constexpr std::string_view sentiment_header = "time,bettor_id,competitor_id,decimal_odds";
inline constexpr std::string_view pmf_header = "outcome,count,frequency";
inline constexpr std::string_view bench_header = "n_competitors,mean_s,sd_s,cv,reps";
inline constexpr std::string_view finish_times_header = "run,competitor_id,finish_tick";

inline void write_trajectory_csv(std::ostream& out, const Trajectory& t, std::span<const int> ids) {
    out << trajectory_header << '\n';
    for (std::size_t k = 0; k < t.positions.size(); ++k)
        for (std::size_t c = 0; c < t.positions[k].size(); ++c)
            out << k << ',' << ids[c] << ',' << fmt_double(t.positions[k][c]) << '\n';
}

struct TrajectoryRow {
    std::uint64_t tick;
    int competitor_id;
    double position;
    bool operator==(const TrajectoryRow&) const = default;
};

inline std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
    std::vector<TrajectoryRow> out;
    for (const auto& r : detail::read_csv(in, trajectory_header))
        out.push_back({detail::parse_field<std::uint64_t>(r[0]), detail::parse_field<int>(r[1]),
                       detail::parse_field<double>(r[2])});
    return out;
}

struct FinishRow {
    int competitor_id;
    std::uint64_t finish_tick;
    std::size_t finish_rank;  // 1 = winner
    bool operator==(const FinishRow&) const = default;
};

inline std::vector<FinishRow> finish_rows(const Trajectory& t, std::span<const int> ids) {
    std::vector<FinishRow> rows;
    for (std::size_t rank = 0; rank < t.finish_order.size(); ++rank) {
        const auto c = t.finish_order[rank];
        rows.push_back({ids[c], t.finish_ticks[c], rank + 1});
    }
    return rows;
}

// One row per competitor in finishing order.
inline void write_finish_csv(std::ostream& out, const Trajectory& t, std::span<const int> ids) {
    out << finish_header << '\n';
    for (const auto& r : finish_rows(t, ids)) out << r.competitor_id << ',' << r.finish_tick << ',' << r.finish_rank << '\n';
}

inline std::vector<FinishRow> read_finish_csv(std::istream& in) {
    std::vector<FinishRow> out;
    for (const auto& r : detail::read_csv(in, finish_header))
        out.push_back({detail::parse_field<int>(r[0]), detail::parse_field<std::uint64_t>(r[1]),
                       detail::parse_field<std::size_t>(r[2])});
    return out;
}

// Amounts in minor units.
inline void write_settlement_csv(std::ostream& out, const SettlementReport& rep) {
    out << settlement_header << '\n';
    for (const auto& l : rep.lines)
        out << l.bettor << ',' << l.gross.minor() << ',' << l.commission.minor() << ',' << l.net.minor() << '\n';
}

inline std::vector<SettlementLine> read_settlement_csv(std::istream& in) {
    std::vector<SettlementLine> out;
    for (const auto& r : detail::read_csv(in, settlement_header))
        out.push_back({detail::parse_field<BettorId>(r[0]), Money(detail::parse_field<std::int64_t>(r[1])),
                       Money(detail::parse_field<std::int64_t>(r[2])), Money(detail::parse_field<std::int64_t>(r[3]))});
    return out;
}

inline void write_sentiment_csv(std::ostream& out, std::span<const SentimentRecord> recs) {
    out << sentiment_header << '\n';
    for (const auto& s : recs)
        out << fmt_double(s.time) << ',' << s.bettor << ',' << s.competitor_id << ',' << fmt_double(s.decimal_odds) << '\n';
}

inline std::vector<SentimentRecord> read_sentiment_csv(std::istream& in) {
    std::vector<SentimentRecord> out;
    for (const auto& r : detail::read_csv(in, sentiment_header))
        out.push_back({detail::parse_field<double>(r[0]), detail::parse_field<BettorId>(r[1]),
                       detail::parse_field<int>(r[2]), detail::parse_field<double>(r[3])});
    return out;
}

inline void write_events_jsonl(std::ostream& out, std::span<const SessionEvent> events) {
    for (const auto& e : events) out << e.to_line() << '\n';
}

inline std::vector<SessionEvent> read_events_jsonl(std::istream& in) {
    std::vector<SessionEvent> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(SessionEvent::from_json(nlohmann::ordered_json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("bad event line: ") + e.what());
        }
    }
    return out;
}

inline void write_pmf_csv(std::ostream& out, const OutcomePMF& pmf) {
    out << pmf_header << '\n';
    for (const auto& [k, v] : pmf.counts) out << k << ',' << v << ',' << fmt_double(pmf.frequency(k)) << '\n';
}

// The outcome space is inferred from the keys: hyphenated keys are finish
// orders, bare ids are winners.
inline OutcomePMF read_pmf_csv(std::istream& in) {
    OutcomePMF pmf;
    pmf.space = OutcomeSpace::winner;
    for (const auto& r : detail::read_csv(in, pmf_header)) {
        const auto n = detail::parse_field<std::uint64_t>(r[1]);
        pmf.counts[r[0]] = n;
        pmf.total += n;
        if (r[0].find('-') != std::string::npos) pmf.space = OutcomeSpace::finish_order;
    }
    if (pmf.total == 0) throw FormatError("empty PMF");
    return pmf;
}

inline void write_finish_times_csv(std::ostream& out, std::span<const RaceOutcome> outcomes, std::span<const int> ids) {
    out << finish_times_header << '\n';
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        for (std::size_t c = 0; c < outcomes[i].finish_ticks.size(); ++c)
            out << i << ',' << ids[c] << ',' << outcomes[i].finish_ticks[c] << '\n';
}

// competitor_id -> finish ticks, in run order.
inline std::map<int, std::vector<double>> read_finish_times_csv(std::istream& in) {
    std::map<int, std::vector<double>> out;
    for (const auto& r : detail::read_csv(in, finish_times_header))
        out[detail::parse_field<int>(r[1])].push_back(static_cast<double>(detail::parse_field<std::uint64_t>(r[2])));
    return out;
}

inline void write_bench_csv(std::ostream& out, std::span<const BenchPoint> points) {
    out << bench_header << '\n';
    for (const auto& p : points)
        out << p.competitors << ',' << fmt_double(p.mean_s) << ',' << fmt_double(p.sd_s) << ',' << fmt_double(p.cv) << ','
            << p.reps << '\n';
}

inline std::vector<BenchPoint> read_bench_csv(std::istream& in) {
    std::vector<BenchPoint> out;
    for (const auto& r : detail::read_csv(in, bench_header))
        out.push_back({detail::parse_field<std::size_t>(r[0]), detail::parse_field<double>(r[1]),
                       detail::parse_field<double>(r[2]), detail::parse_field<double>(r[3]),
                       detail::parse_field<std::size_t>(r[4])});
    return out;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

inline nlohmann::ordered_json output_metadata(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    return {{"config_digest", hex64(config_digest(cfg))},
            {"master_seed", master_seed},
            {"version", version},
            {"rng_algorithm", rng_algorithm}};
}

// Writes `path` via `fill` and `path`.meta.json beside it.
template <class Fill>
void write_output(const std::filesystem::path& path, const nlohmann::ordered_json& meta, Fill&& fill) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        fill(out);
    }
    std::ofstream m(path.string() + ".meta.json", std::ios::binary);
    m << meta.dump(2) << '\n';
}

}  // namespace racebook
