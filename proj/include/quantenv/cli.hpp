#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "quantenv/backtest.hpp"
#include "quantenv/baselines.hpp"
#include "quantenv/config.hpp"
#include "quantenv/corpus.hpp"
#include "quantenv/indicators.hpp"
#include "quantenv/service.hpp"

namespace quantenv::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::string corpus = ".";
    std::string config;
    std::string out;
};

struct BacktestOptions {
    std::vector<std::string> symbols;
    std::string start;
    std::string end;
    std::string strategy;
    std::string decisions;
    std::string agent;
    bool average = false;
    bool svg = false;
    bool no_timestamp = false;
};

struct ScoreOptions {
    std::string trajectory;
    std::string prices;
};

struct ServeOptions {
    std::string listen = "127.0.0.1:8080";
    std::string trajectories;
};

struct IndicatorOptions {
    std::string symbol;
    std::string indicator;
    std::vector<int> params;
    std::string date;
    long look_back = 14;
    bool csv = false;
};

inline Settings load_settings_or_default(const GlobalOptions& g) {
    return g.config.empty() ? Settings{} : load_settings(g.config);
}

inline Date parse_date_arg(const std::string& s, const char* what) {
    auto d = Date::parse(s);
    if (!d) throw Error(Errc::InvalidArgument, std::string(what) + " must be YYYY-MM-DD, got '" + s + "'");
    return *d;
}

/// Writes to `<out>/<name>` atomically, or to `stdout` when no output directory was given.
inline void emit(const GlobalOptions& g, const std::string& name, const std::string& content, std::ostream& stdout_) {
    if (g.out.empty()) {
        stdout_ << content;
        return;
    }
    fs::create_directories(g.out);
    write_file_atomic(fs::path(g.out) / name, content);
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// ingest

inline int cmd_ingest(const GlobalOptions& g, std::ostream& out) {
    const auto corpus = Corpus::load(g.corpus);
    nlohmann::json summary;
    summary["corpus"] = g.corpus;
    summary["symbols"] = nlohmann::json::object();
    for (const auto& sym : corpus.symbols()) {
        const auto& s = corpus.series(sym);
        summary["symbols"][sym] = {{"bars", s.size()}, {"first", s.front().date.iso()}, {"last", s.back().date.iso()}};
    }
    summary["documents"] = nlohmann::json::object();
    for (auto c : kAllCategories) summary["documents"][std::string(to_string(c))] = corpus.document_count(c);
    emit(g, "ingest.json", summary.dump(2) + "\n", out);
    return 0;
}

// ---------------------------------------------------------------------------
// backtest

/// Bars of `series` dated within [start, end]; the range must lie inside the series.
inline BarSeries backtest_window(const BarSeries& series, Date start, Date end) {
    if (end < start) throw Error(Errc::InvalidArgument, "end precedes start");
    if (start < series.front().date || end > series.back().date)
        throw Error(Errc::DateOutOfRange, fmt::format("{}..{} is outside {} coverage {}..{}", start.iso(), end.iso(),
                                                      series.symbol(), series.front().date.iso(),
                                                      series.back().date.iso()));
    const auto first = series.count_through(start.minus_days(1));
    const auto last = series.count_through(end);
    return series.slice(first, last);
}

/// CSV `date,action`. Returns the actions keyed by date.
inline std::map<Date, Action> parse_decisions(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::EmptyFile, "decisions file is empty");
    if (detail::trim(line) != "date,action") throw RowError(Errc::MalformedRow, 0, "expected header 'date,action'");
    std::map<Date, Action> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto f = detail::split(line, ',');
        if (f.size() != 2) throw RowError(Errc::MalformedRow, row, "expected 2 fields");
        auto d = Date::parse(f[0]);
        if (!d) throw RowError(Errc::MalformedRow, row, "bad date '" + std::string(f[0]) + "'");
        auto a = parse_action(f[1]);
        if (!a) throw RowError(Errc::MalformedRow, row, "action must be BUY, SELL or HOLD");
        if (!out.emplace(*d, *a).second) throw RowError(Errc::MalformedRow, row, "duplicate date " + d->iso());
    }
    if (out.empty()) throw Error(Errc::EmptyFile, "decisions file has no rows");
    return out;
}

inline std::string signals_csv(const BarSeries& bars, const std::vector<Action>& signals) {
    std::string out = "date,action\n";
    for (std::size_t i = 0; i < signals.size(); ++i) out += bars[i].date.iso() + "," + std::string(to_string(signals[i])) + "\n";
    return out;
}

/// Splits `http://host:port/prefix` into a client base and a path prefix.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_at == std::string::npos) return {url, ""};
    auto prefix = url.substr(path_at);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_at), prefix};
}

/// One service-hosted episode per decision day. The agent receives
/// `{"service", "episode_id", "symbol", "date"}` at `<agent>/episode` and drives the episode over HTTP.
/// A day the agent leaves undecided counts as HOLD.
inline std::vector<Action> agent_signals(const std::shared_ptr<const Corpus>& corpus, const Settings& settings,
                                         const BarSeries& window, const std::string& agent_url,
                                         const std::optional<fs::path>& trajectory_dir) {
    EpisodeService service(corpus, settings, trajectory_dir);
    httplib::Server server;
    bind_routes(server, service);
    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) throw Error(Errc::Io, "cannot bind a local port for the episode service");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string service_url = fmt::format("http://127.0.0.1:{}", port);

    std::vector<Action> signals;
    std::optional<Error> failure;
    try {
        const auto [base, prefix] = split_url(agent_url);
        httplib::Client client(base);
        client.set_read_timeout(std::chrono::minutes(10));
        for (const auto& bar : window.bars()) {
            const auto opened = service.open(nlohmann::json{{"symbol", window.symbol()}, {"date", bar.date.iso()}}.dump());
            if (opened.status != 201) throw Error(Errc::Io, "cannot open episode: " + opened.body);
            const auto id = nlohmann::json::parse(opened.body)["episode_id"].get<std::string>();
            const nlohmann::json req = {
                {"service", service_url}, {"episode_id", id}, {"symbol", window.symbol()}, {"date", bar.date.iso()}};
            auto res = client.Post(prefix + "/episode", req.dump(), "application/json");
            if (!res)
                throw Error(Errc::AgentUnreachable,
                            fmt::format("{}: {}", agent_url, httplib::to_string(res.error())));
            signals.push_back(service.final_action(id).value_or(Action::Hold));
        }
    } catch (const Error& e) {
        failure = e;
    }
    server.stop();
    thread.join();
    if (failure) throw *failure;
    return signals;
}

inline nlohmann::json report_json(const BacktestReport& r, const std::string& source, const Settings& s,
                                  bool timestamp) {
    auto j = to_json(r);
    j["strategy"] = source;
    j["config"] = {{"lambda", s.backtest.lambda},
                   {"kappa", s.backtest.kappa},
                   {"initial_cash", s.backtest.initial_cash},
                   {"price_basis", to_string(s.price_basis)}};
    if (timestamp) j["generated_at"] = utc_timestamp();
    return j;
}

inline int cmd_backtest(const GlobalOptions& g, const BacktestOptions& o, std::ostream& out) {
    const int sources = !o.strategy.empty() + !o.decisions.empty() + !o.agent.empty();
    if (sources != 1) throw Error(Errc::InvalidArgument, "give exactly one of --strategy, --decisions, --agent");
    if (o.symbols.empty()) throw Error(Errc::InvalidArgument, "--symbol is required");
    if (!o.decisions.empty() && o.symbols.size() != 1)
        throw Error(Errc::InvalidArgument, "--decisions replays a single symbol");
    std::optional<StrategyKind> strategy;
    if (!o.strategy.empty()) {
        auto tag = parse_strategy(o.strategy);
        if (!tag) throw Error(Errc::InvalidArgument, "unknown strategy '" + o.strategy + "'");
        strategy = StrategyKind{*tag};
    }

    const auto settings = load_settings_or_default(g);
    const auto corpus = std::make_shared<const Corpus>(Corpus::load(g.corpus));
    std::optional<std::map<Date, Action>> decisions;
    if (!o.decisions.empty()) {
        std::ifstream in(o.decisions);
        if (!in) throw Error(Errc::Io, "cannot open " + o.decisions);
        decisions = parse_decisions(in);
    }

    // Resolve every window before simulating anything.
    struct Job {
        std::string symbol;
        BarSeries history;  // everything through the window end
        BarSeries window;
    };
    std::vector<Job> jobs;
    for (const auto& sym : o.symbols) {
        const auto& series = corpus->series(sym);
        Date start = series.front().date;
        Date end = series.back().date;
        if (decisions) {
            start = decisions->begin()->first;
            const auto after = series.count_through(decisions->rbegin()->first);
            end = after < series.size() ? series[after].date : decisions->rbegin()->first;
        }
        if (!o.start.empty()) start = parse_date_arg(o.start, "--start");
        if (!o.end.empty()) end = parse_date_arg(o.end, "--end");
        auto window = backtest_window(series, start, end);
        if (window.size() < 2)
            throw Error(Errc::DegenerateSeries, fmt::format("{} has fewer than two trading days in range", sym));
        jobs.push_back({sym, series.through(end), std::move(window)});
    }

    std::optional<fs::path> traj_dir;
    if (!o.agent.empty() && !g.out.empty()) traj_dir = fs::path(g.out) / "trajectories";

    auto run_one = [&](const Job& job) -> std::pair<BacktestReport, std::vector<Action>> {
        std::vector<Action> signals;
        const auto n = job.window.size();
        if (strategy) {
            const auto full = strategy_signals(with_basis(job.history, settings.price_basis), *strategy);
            signals.assign(full.end() - static_cast<std::ptrdiff_t>(n), full.end());
        } else if (decisions) {
            for (std::size_t i = 0; i < n; ++i) {
                auto it = decisions->find(job.window[i].date);
                if (it != decisions->end()) signals.push_back(it->second);
                else if (i + 1 < n)
                    throw Error(Errc::LengthMismatch, "no decision for " + job.window[i].date.iso());
            }
            for (const auto& [d, _] : *decisions)
                if (!job.window.find(d))
                    throw Error(Errc::DateOutOfRange, d.iso() + " is not a trading day in the backtest window");
        } else {
            signals = agent_signals(corpus, settings, job.window, o.agent, traj_dir);
        }
        return {run_backtest(signals, job.window, settings.backtest, settings.price_basis), signals};
    };

    std::vector<std::pair<BacktestReport, std::vector<Action>>> results;
    if (o.agent.empty() && jobs.size() > 1) {
        std::vector<std::future<std::pair<BacktestReport, std::vector<Action>>>> futures;
        for (const auto& job : jobs) futures.push_back(std::async(std::launch::async, run_one, std::cref(job)));
        for (auto& f : futures) results.push_back(f.get());
    } else {
        for (const auto& job : jobs) results.push_back(run_one(job));
    }

    const std::string source = strategy ? o.strategy : decisions ? "decisions:" + fs::path(o.decisions).filename().string()
                                                                 : "agent:" + o.agent;
    nlohmann::json combined = nlohmann::json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& [report, signals] = results[i];
        auto j = report_json(report, source, settings, !o.no_timestamp);
        if (g.out.empty()) {
            combined.push_back(j);
        } else {
            emit(g, "backtest_" + report.symbol + ".json", j.dump(2) + "\n", out);
            emit(g, "signals_" + report.symbol + ".csv", signals_csv(jobs[i].window, signals), out);
            if (o.svg) emit(g, "equity_" + report.symbol + ".svg", equity_svg(report), out);
        }
    }
    if (o.average) {
        Metrics avg;
        std::vector<std::string> names;
        for (const auto& [report, _] : results) {
            avg.arr += report.metrics.arr;
            avg.sr += report.metrics.sr;
            avg.mdd += report.metrics.mdd;
            names.push_back(report.symbol);
        }
        const double n = static_cast<double>(results.size());
        nlohmann::json a = {{"symbols", names},
                            {"strategy", source},
                            {"metrics", {{"arr", avg.arr / n}, {"sr", avg.sr / n}, {"mdd", avg.mdd / n}}}};
        if (g.out.empty()) combined.push_back({{"average", a}});
        else emit(g, "backtest_average.json", a.dump(2) + "\n", out);
    }
    if (g.out.empty()) out << (combined.size() == 1 ? combined[0] : combined).dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// score

inline int cmd_score(const GlobalOptions& g, const ScoreOptions& o, std::ostream& out) {
    const auto settings = load_settings_or_default(g);
    std::ifstream tin(o.trajectory);
    if (!tin) throw Error(Errc::Io, "cannot open trajectory " + o.trajectory);
    const auto traj = parse_trajectory(tin);
    const auto prices = ingest_bars(o.prices, traj.symbol);
    const auto b = score_trajectory(traj, prices, settings.reward, settings.price_basis);
    const auto parts = tool_score_parts(traj, settings.reward);
    nlohmann::json j = to_json(b);
    j["tool_parts"] = {{"band", parts.band}, {"pattern", parts.pattern}, {"malformed", parts.malformed}};
    j["symbol"] = traj.symbol;
    j["date"] = traj.date.iso();
    j["config"] = to_json(settings.reward);
    emit(g, "score.json", j.dump(2) + "\n", out);
    return 0;
}

// ---------------------------------------------------------------------------
// serve

inline int cmd_serve(const GlobalOptions& g, const ServeOptions& o, std::ostream& out) {
    const auto colon = o.listen.rfind(':');
    if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "--listen must be HOST:PORT");
    const auto host = o.listen.substr(0, colon);
    const auto port = detail::parse_number<int>(o.listen.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535) throw Error(Errc::InvalidArgument, "bad port in --listen");

    const auto settings = load_settings_or_default(g);
    auto corpus = std::make_shared<const Corpus>(Corpus::load(g.corpus));
    std::optional<fs::path> dir;
    if (!o.trajectories.empty()) dir = o.trajectories;
    else if (!g.out.empty()) dir = fs::path(g.out) / "trajectories";
    EpisodeService service(corpus, settings, dir);
    httplib::Server server;
    bind_routes(server, service);
    out << fmt::format("listening on {}:{}\n", host, *port) << std::flush;
    if (!server.listen(host, *port)) throw Error(Errc::Io, "cannot listen on " + o.listen);
    return 0;
}

// ---------------------------------------------------------------------------
// indicators

inline int cmd_indicators(const GlobalOptions& g, const IndicatorOptions& o, std::ostream& out) {
    const auto settings = load_settings_or_default(g);
    const auto corpus = Corpus::load(g.corpus);
    const auto tag = parse_indicator_tag(o.indicator);
    if (!tag) throw Error(Errc::InvalidArgument, "unknown indicator '" + o.indicator + "'");
    auto kind = IndicatorKind::defaults(*tag);
    if (!o.params.empty()) kind.params = o.params;
    const auto& series = corpus.series(o.symbol);
    const Date curr = o.date.empty() ? series.back().date : parse_date_arg(o.date, "--date");
    if (curr < series.front().date) throw Error(Errc::DateBeforeSeries, curr.iso() + " precedes the series");
    const auto ind = compute_indicator(with_basis(series.through(curr), settings.price_basis), kind);
    if (o.csv) {
        IndicatorSeries windowed{ind.kind, {}};
        const Date from = curr.minus_days(o.look_back);
        for (const auto& p : ind.points)
            if (p.date >= from) windowed.points.push_back(p);
        emit(g, fmt::format("{}_{}.csv", o.symbol, to_string(*tag)), indicator_csv(windowed), out);
    } else {
        emit(g, fmt::format("{}_{}.txt", o.symbol, to_string(*tag)), render_indicator_text(ind, curr, o.look_back), out);
    }
    return 0;
}

// ---------------------------------------------------------------------------

/// Parses argv and dispatches. Exit codes: 0 success, 1 input error, 2 domain precondition failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Deterministic trading-decision environment and backtester"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--corpus", g.corpus, "Corpus directory (bars/ and documents/)");
    app.add_option("--config", g.config, "Settings file (key = value)");
    app.add_option("--out", g.out, "Output directory; stdout when omitted");

    auto* ingest = app.add_subcommand("ingest", "Validate the corpus and summarize its contents");

    BacktestOptions bt;
    auto* backtest = app.add_subcommand("backtest", "Simulate a strategy, a decision file or an agent");
    backtest->add_option("--symbol", bt.symbols, "Ticker (repeatable)")->required()->delimiter(',');
    backtest->add_option("--start", bt.start, "First trading day (YYYY-MM-DD)");
    backtest->add_option("--end", bt.end, "Last trading day (YYYY-MM-DD)");
    auto* strat = backtest->add_option("--strategy", bt.strategy, "buy-and-hold | macd | zmr");
    auto* dec = backtest->add_option("--decisions", bt.decisions, "CSV of date,action to replay");
    auto* agent = backtest->add_option("--agent", bt.agent, "Agent endpoint URL");
    strat->excludes(dec)->excludes(agent);
    dec->excludes(agent);
    backtest->add_flag("--average", bt.average, "Also write the cross-symbol mean of the metrics");
    backtest->add_flag("--svg", bt.svg, "Write an equity-curve SVG per symbol");
    backtest->add_flag("--no-timestamp", bt.no_timestamp, "Omit the generation timestamp");

    ScoreOptions sc;
    auto* score = app.add_subcommand("score", "Score a trajectory file against a price file");
    score->add_option("--trajectory", sc.trajectory, "Trajectory JSON-lines file")->required();
    score->add_option("--prices", sc.prices, "Bars CSV for the trajectory's symbol")->required();

    ServeOptions sv;
    auto* serve = app.add_subcommand("serve", "Run the episode service over HTTP");
    serve->add_option("--listen", sv.listen, "HOST:PORT");
    serve->add_option("--trajectories", sv.trajectories, "Directory for persisted trajectories");

    IndicatorOptions io;
    auto* indicators = app.add_subcommand("indicators", "Dump one indicator for a symbol and window");
    indicators->add_option("--symbol", io.symbol)->required();
    indicators->add_option("--indicator", io.indicator, "SMA, EMA, VWMA, RSI, STOCH, CCI, BBANDS, ATR, OBV, CMF, MACD")
        ->required();
    indicators->add_option("--params", io.params, "Comma-separated periods")->delimiter(',');
    indicators->add_option("--date", io.date, "Current date (default: last bar)");
    indicators->add_option("--look-back", io.look_back, "Calendar days shown");
    indicators->add_flag("--csv", io.csv, "Golden-file CSV instead of tool text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (*ingest) return cmd_ingest(g, out);
        if (*backtest) return cmd_backtest(g, bt, out);
        if (*score) return cmd_score(g, sc, out);
        if (*serve) return cmd_serve(g, sv, out);
        if (*indicators) return cmd_indicators(g, io, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_domain_error(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace quantenv::cli
