#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "racebook/config.hpp"
#include "racebook/io.hpp"

using namespace racebook;

namespace {

template <class Write, class Read>
auto round_trip(Write&& w, Read&& r) {
    std::stringstream ss;
    w(ss);
    return r(ss);
}

}  // namespace

TEST(FormatDouble, ShortestLosslessText) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5, 0.0}) {
        const auto s = fmt_double(v);
        EXPECT_EQ(std::stod(s), v) << s;
    }
    EXPECT_EQ(fmt_double(2000.0), "2000");
}

TEST(Io, TrajectoryRoundTrip) {
    const auto cfg = default_race();
    const auto ids = competitor_ids(cfg);
    const auto t = run_race(cfg, 5);
    const auto rows = round_trip([&](std::ostream& o) { write_trajectory_csv(o, t, ids); }, read_trajectory_csv);
    ASSERT_EQ(rows.size(), t.positions.size() * ids.size());
    for (const auto& r : rows) {
        const auto c = static_cast<std::size_t>(r.competitor_id - 1);
        EXPECT_EQ(r.position, t.positions[r.tick][c]);
    }
}

TEST(Io, FinishRoundTrip) {
    const auto cfg = default_race();
    const auto ids = competitor_ids(cfg);
    const auto t = run_race(cfg, 5);
    const auto rows = round_trip([&](std::ostream& o) { write_finish_csv(o, t, ids); }, read_finish_csv);
    EXPECT_EQ(rows, finish_rows(t, ids));
    EXPECT_EQ(rows.front().finish_rank, 1u);
}

TEST(Io, SettlementRoundTrip) {
    SettlementReport rep;
    rep.lines = {{1, Money(3000), Money(150), Money(2850)}, {2, Money(-3000), Money(0), Money(-3000)}};
    const auto rows = round_trip([&](std::ostream& o) { write_settlement_csv(o, rep); }, read_settlement_csv);
    EXPECT_EQ(rows, rep.lines);
}

TEST(Io, SentimentRoundTrip) {
    const std::vector<SentimentRecord> recs{{-60.0, 1, 3, 1.0 / 0.37}, {12.0, 2, 1, 25.0}};
    const auto rows = round_trip([&](std::ostream& o) { write_sentiment_csv(o, recs); }, read_sentiment_csv);
    EXPECT_EQ(rows, recs);
}

TEST(Io, EventLogRoundTrip) {
    auto cfg = session_config(default_experiment());
    cfg.seed = 4;
    const auto r = run_session(cfg);
    const auto back = round_trip([&](std::ostream& o) { write_events_jsonl(o, r.events); }, read_events_jsonl);
    ASSERT_EQ(back.size(), r.events.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].to_line(), r.events[i].to_line());
}

TEST(Io, PmfRoundTrip) {
    const auto race = default_race();
    const auto out = run_batch({race, 300, 1, 2});
    const auto pmf = estimate_pmf(out, competitor_ids(race));
    EXPECT_EQ(round_trip([&](std::ostream& o) { write_pmf_csv(o, pmf); }, read_pmf_csv), pmf);

    OutcomePMF w{OutcomeSpace::winner, {{"1", 3}, {"2", 4}}, 7};
    EXPECT_EQ(round_trip([&](std::ostream& o) { write_pmf_csv(o, w); }, read_pmf_csv), w);
}

TEST(Io, FinishTimesRoundTrip) {
    const auto race = default_race();
    const auto out = run_batch({race, 10, 1, 2});
    const auto ids = competitor_ids(race);
    const auto back =
        round_trip([&](std::ostream& o) { write_finish_times_csv(o, out, ids); }, read_finish_times_csv);
    ASSERT_EQ(back.size(), ids.size());
    for (std::size_t c = 0; c < ids.size(); ++c) EXPECT_EQ(back.at(ids[c]), finish_times(out, c));
}

TEST(Io, BenchRoundTrip) {
    const std::vector<BenchPoint> pts{{5, 1.25e-5, 3e-7, 0.024, 5}, {10, 2.5e-5, 1e-7, 0.004, 5}};
    const auto back = round_trip([&](std::ostream& o) { write_bench_csv(o, pts); }, read_bench_csv);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].mean_s, pts[1].mean_s);
    EXPECT_EQ(back[0].cv, pts[0].cv);
}

TEST(Io, ReadersRejectMalformedInput) {
    std::stringstream wrong_header("a,b,c\n1,2,3\n");
    EXPECT_THROW(read_finish_csv(wrong_header), FormatError);
    std::stringstream bad_field("competitor_id,finish_tick,finish_rank\n1,x,1\n");
    EXPECT_THROW(read_finish_csv(bad_field), FormatError);
    std::stringstream short_row("competitor_id,finish_tick,finish_rank\n1,2\n");
    EXPECT_THROW(read_finish_csv(short_row), FormatError);
    std::stringstream bad_json("{\"seq\": 0,\n");
    EXPECT_THROW(read_events_jsonl(bad_json), FormatError);
    std::stringstream empty_pmf("outcome,count,frequency\n");
    EXPECT_THROW(read_pmf_csv(empty_pmf), FormatError);
}

TEST(Io, MetadataBesideOutput) {
    const auto dir = std::filesystem::temp_directory_path() / "racebook_io_test";
    std::filesystem::remove_all(dir);
    const auto e = default_experiment();
    write_output(dir / "x.csv", output_metadata(e, 42), [](std::ostream& o) { o << "a\n"; });
    std::ifstream meta(dir / "x.csv.meta.json");
    const auto j = nlohmann::json::parse(meta);
    EXPECT_EQ(j.at("master_seed"), 42);
    EXPECT_EQ(j.at("version"), std::string(version));
    EXPECT_EQ(j.at("rng_algorithm"), std::string(rng_algorithm));
    EXPECT_EQ(j.at("config_digest"), hex64(config_digest(e)));
}
