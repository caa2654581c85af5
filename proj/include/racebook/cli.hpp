#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "racebook/batch.hpp"
#include "racebook/config.hpp"
#include "racebook/io.hpp"
#include "racebook/session.hpp"
#include "racebook/stats.hpp"

namespace racebook {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_runtime = 2 };

namespace detail {

inline void error_line(std::ostream& err, std::string_view kind, std::string_view message) {
    err << nlohmann::ordered_json{{"error", kind}, {"message", message}}.dump() << '\n';
}

struct GlobalFlags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<std::size_t> workers;
};

inline ExperimentConfig load_experiment(const GlobalFlags& g) {
    ExperimentConfig e = g.config ? parse_config(*g.config) : default_experiment();
    if (g.seed) e.batch.master_seed = *g.seed;
    if (g.workers) e.batch.workers = *g.workers;
    validate(e);
    return e;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return in;
}

inline nlohmann::ordered_json result_json(const TestResult& r) {
    return {{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}};
}

}  // namespace detail

// Runs one command line. Returns 0 on success, 1 on a usage or configuration
// error, 2 on a runtime failure; errors go to `err` as a single JSON line.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Horse-race betting exchange simulator", "racebook"};
    app.require_subcommand(1);
    detail::GlobalFlags g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--seed", g.seed, "Master seed, overrides batch.master_seed");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--workers", g.workers, "Worker threads, overrides batch.workers")->check(CLI::PositiveNumber);

    auto* race = app.add_subcommand("race", "Simulate one race; write trajectory and finish CSVs");
    bool sentiment = false;
    auto* session = app.add_subcommand("session", "Run one in-play betting session; write all logs");
    session->add_flag("--sentiment", sentiment, "Also write the per-bettor odds series");
    std::optional<std::uint64_t> replications;
    bool finish_times_flag = false;
    auto* batch = app.add_subcommand("batch", "Run R races; write the outcome PMF");
    batch->add_option("--replications", replications, "Overrides batch.replications")->check(CLI::PositiveNumber);
    batch->add_flag("--finish-times", finish_times_flag, "Also write per-run finish ticks");
    std::vector<std::string> compare_files;
    bool kruskal = false;
    auto* compare = app.add_subcommand("compare", "Compare two PMF files (or two finish-time files with --kw)");
    compare->add_option("files", compare_files, "Two input files")->required()->expected(2);
    compare->add_flag("--kw", kruskal, "Kruskal-Wallis on finish times per competitor");
    auto* bench_cmd = app.add_subcommand("bench", "Time race-only batches over a grid of field sizes");
    bench_cmd->add_option("--replications", replications, "Races per timed batch")->check(CLI::PositiveNumber);
    auto* defaults = app.add_subcommand("defaults", "Print the fully-defaulted config");
    for (auto* s : app.get_subcommands({})) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        detail::error_line(err, "usage", e.what());
        return exit_usage;
    }

    try {
        if (defaults->parsed()) {
            out << config_to_json(default_experiment()).dump(2) << '\n';
            return exit_ok;
        }
        if (compare->parsed()) {
            nlohmann::ordered_json res;
            if (kruskal) {
                auto a_in = detail::open_input(compare_files[0]);
                auto b_in = detail::open_input(compare_files[1]);
                const auto a = read_finish_times_csv(a_in);
                const auto b = read_finish_times_csv(b_in);
                if (a.size() != b.size()) throw std::invalid_argument("compare: competitor sets differ");
                res = nlohmann::ordered_json::array();
                for (const auto& [id, times] : a) {
                    const auto it = b.find(id);
                    if (it == b.end()) throw std::invalid_argument("compare: competitor sets differ");
                    const std::vector<std::vector<double>> groups{times, it->second};
                    auto row = detail::result_json(kruskal_wallis(groups));
                    row["competitor_id"] = id;
                    res.push_back(std::move(row));
                }
            } else {
                auto a_in = detail::open_input(compare_files[0]);
                auto b_in = detail::open_input(compare_files[1]);
                res = detail::result_json(compare_pmf(read_pmf_csv(a_in), read_pmf_csv(b_in)));
            }
            out << res.dump() << '\n';
            return exit_ok;
        }

        ExperimentConfig e = detail::load_experiment(g);
        if (replications) e.batch.replications = *replications;
        const auto meta = output_metadata(e, e.batch.master_seed);
        const std::filesystem::path dir(g.out);
        const auto ids = competitor_ids(e.race);

        if (race->parsed()) {
            const auto t = run_race(e.race, run_seed(e.batch.master_seed, 0));
            write_output(dir / "trajectory.csv", meta, [&](std::ostream& o) { write_trajectory_csv(o, t, ids); });
            write_output(dir / "finish.csv", meta, [&](std::ostream& o) { write_finish_csv(o, t, ids); });
            out << nlohmann::ordered_json{{"ticks", t.positions.size() - 1},
                                          {"winner", ids[t.finish_order.front()]}}.dump()
                << '\n';
        } else if (session->parsed()) {
            if (sentiment) e.outputs.sentiment = true;
            const auto meta_s = output_metadata(e, e.batch.master_seed);
            const auto r = run_session(session_config(e), e.batch.workers);
            write_output(dir / "events.jsonl", meta_s, [&](std::ostream& o) { write_events_jsonl(o, r.events); });
            write_output(dir / "trajectory.csv", meta_s,
                         [&](std::ostream& o) { write_trajectory_csv(o, r.trajectory, ids); });
            write_output(dir / "finish.csv", meta_s, [&](std::ostream& o) { write_finish_csv(o, r.trajectory, ids); });
            write_output(dir / "settlement.csv", meta_s, [&](std::ostream& o) { write_settlement_csv(o, r.settlement); });
            if (e.outputs.sentiment)
                write_output(dir / "sentiment.csv", meta_s, [&](std::ostream& o) { write_sentiment_csv(o, r.sentiment); });
            const auto s = session_summary(r);
            out << nlohmann::ordered_json{{"winner", ids[s.winner]},
                                          {"bets", s.bets},
                                          {"matches", s.matches},
                                          {"matched_volume", s.matched_volume.minor()},
                                          {"commission", s.commission.minor()},
                                          {"events", s.events}}.dump()
                << '\n';
        } else if (batch->parsed()) {
            const auto outcomes = run_batch(batch_config(e));
            const auto pmf = estimate_pmf(outcomes, ids);
            write_output(dir / "pmf.csv", meta, [&](std::ostream& o) { write_pmf_csv(o, pmf); });
            if (finish_times_flag || e.outputs.finish_times)
                write_output(dir / "finish_times.csv", meta,
                             [&](std::ostream& o) { write_finish_times_csv(o, outcomes, ids); });
            out << nlohmann::ordered_json{{"replications", pmf.total},
                                          {"outcomes", pmf.counts.size()},
                                          {"space", to_string(pmf.space)}}.dump()
                << '\n';
        } else if (bench_cmd->parsed()) {
            std::vector<BatchConfig> grid;
            for (auto n : e.batch.bench_competitors) {
                auto b = batch_config(e);
                b.race = with_competitors(e.race, n);
                grid.push_back(std::move(b));
            }
            const auto points = bench(grid, {e.batch.bench_reps, e.batch.bench_warmups});
            write_output(dir / "bench.csv", meta, [&](std::ostream& o) { write_bench_csv(o, points); });
            write_bench_csv(out, points);
        }
        return exit_ok;
    } catch (const InvalidConfig& ex) {
        detail::error_line(err, "config", ex.what());
        return exit_usage;
    } catch (const std::invalid_argument& ex) {
        detail::error_line(err, "usage", ex.what());
        return exit_usage;
    } catch (const std::exception& ex) {
        detail::error_line(err, "runtime", ex.what());
        return exit_runtime;
    }
}

inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"racebook"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace racebook
