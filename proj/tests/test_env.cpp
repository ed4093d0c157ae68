#include <gtest/gtest.h>

#include "support.hpp"

using namespace quantenv;
using namespace testing_support;
using nlohmann::json;

namespace {

Episode msft(int max_calls = 8) { return Episode(fixture_corpus(), {"MSFT", D("2025-05-16"), max_calls}); }

json args(const char* symbol, const char* date, int lb) {
    return {{"symbol", symbol}, {"curr_date", date}, {"look_back_days", lb}};
}

}  // namespace

TEST(OpenEpisode, Fresh) {
    auto ep = msft();
    EXPECT_FALSE(ep.terminated());
    EXPECT_TRUE(ep.query_history().empty());
    EXPECT_TRUE(ep.query_results().empty());
    EXPECT_TRUE(ep.reasoning_log().empty());
    EXPECT_EQ(ep.calls_used(), 0);
}

TEST(OpenEpisode, RejectsBadConfig) {
    try {
        Episode(fixture_corpus(), {"MSFT", D("2025-05-17"), 8});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotATradingDay);
    }
    try {
        Episode(fixture_corpus(), {"ZZZZ", D("2025-05-16"), 8});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownSymbol);
    }
    EXPECT_THROW(Episode(fixture_corpus(), {"MSFT", D("2025-05-16"), 0}), Error);
}

TEST(ExecuteQuery, MarketDataMatchesWorkedExampleTable) {
    auto ep = msft();
    const auto text = ep.execute_query("get_market_data", args("MSFT", "2025-05-16", 14));
    const std::string expected =
        "          Date    Open    High     Low   Close  Adj Close    Volume\n"
        "0   2025-05-02  431.74  439.44  429.99  435.28     434.48  30757400\n"
        "1   2025-05-05  432.87  439.50  432.11  436.17     435.37  20136100\n"
        "2   2025-05-06  432.20  437.73  431.17  433.31     432.52  15104200\n"
        "3   2025-05-07  433.84  438.12  431.11  433.35     432.56  23295300\n"
        "4   2025-05-08  437.93  443.67  435.66  438.17     437.37  23491300\n"
        "5   2025-05-09  440.00  440.74  435.88  438.73     437.93  15324200\n"
        "6   2025-05-12  445.94  449.37  439.78  449.26     448.44  22821900\n"
        "7   2025-05-13  447.78  450.67  445.36  449.14     448.32  23618800\n"
        "8   2025-05-14  448.14  453.90  448.14  452.94     452.11  19902800\n"
        "9   2025-05-15  450.77  456.19  450.43  453.13     453.13  21992300\n"
        "10  2025-05-16  452.05  454.36  448.73  454.27     454.27  23849800\n";
    EXPECT_EQ(text, expected);
    EXPECT_EQ(ep.query_history().size(), 1u);
    EXPECT_EQ(ep.query_results().back(), text);
}

TEST(ExecuteQuery, IndicatorOverAdjustedClosesReadsOverbought) {
    Episode ep(fixture_corpus(), {"MSFT", D("2025-05-16"), 8, PriceBasis::AdjClose});
    const auto text = ep.execute_query(
        "get_stock_indicators", {{"symbol", "MSFT"}, {"indicator", "RSI"}, {"curr_date", "2025-05-16"}, {"look_back_days", 14}});
    EXPECT_EQ(text.rfind("## RSI values from 2025-05-02 to 2025-05-16:\n\n", 0), 0u);
    EXPECT_NE(text.find("-> 76.99\n\n"), std::string::npos) << text;
    EXPECT_EQ(std::count(text.begin(), text.end(), '>'), 10);
}

TEST(ExecuteQuery, MissingIndicatorIsMalformedAndEpisodeContinues) {
    auto ep = msft();
    EXPECT_THROW(ep.execute_query("get_stock_indicators", args("MSFT", "2025-05-16", 14)), MalformedArgumentsError);
    EXPECT_EQ(ep.trajectory().malformed_calls(), 1);
    EXPECT_FALSE(ep.terminated());
    EXPECT_TRUE(ep.query_history().empty());
    EXPECT_NO_THROW(ep.execute_query("get_market_data", args("MSFT", "2025-05-16", 3)));
    EXPECT_EQ(ep.query_history().size(), 1u);
}

TEST(ExecuteQuery, SignatureViolations) {
    auto ep = msft(20);
    const std::vector<std::pair<std::string, json>> bad = {
        {"get_weather", args("MSFT", "2025-05-16", 1)},
        {"get_market_data", json::array()},
        {"get_market_data", {{"curr_date", "2025-05-16"}}},
        {"get_market_data", args("MSFT", "2025-05-17", 1)},
        {"get_market_data", args("MSFT", "16-05-2025", 1)},
        {"get_market_data", args("MSFT", "2025-05-16", -1)},
        {"get_market_data", {{"symbol", "MSFT"}, {"look_back_days", "14"}}},
        {"get_market_data", {{"symbol", "MSFT"}, {"look_back_days", 1.5}}},
        {"get_market_data", {{"symbol", "MSFT"}, {"extra", 1}}},
        {"get_market_data", {{"symbol", "NOPE"}}},
        {"get_stock_indicators", {{"symbol", "MSFT"}, {"indicator", "RSI14"}}},
        {"get_stock_indicators", {{"symbol", "MSFT"}, {"indicator", 14}}},
        {"get_news_data", {{"symbol", 3}}},
    };
    for (const auto& [name, a] : bad) {
        SCOPED_TRACE(name + " " + a.dump());
        EXPECT_THROW(ep.execute_query(name, a), MalformedArgumentsError);
    }
    EXPECT_EQ(ep.trajectory().malformed_calls(), int(bad.size()));
    for (const auto& s : ep.trajectory().steps) EXPECT_EQ(s.response.rfind("Error: MalformedArguments: ", 0), 0u);
}

TEST(ExecuteQuery, BudgetExhaustedOnNinthCall) {
    auto ep = msft();
    for (int i = 0; i < 8; ++i) ep.execute_query("get_market_data", args("MSFT", "2025-05-16", i));
    try {
        ep.execute_query("get_market_data", args("MSFT", "2025-05-16", 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ToolBudgetExhausted);
    }
    EXPECT_EQ(ep.query_history().size(), 8u);
    EXPECT_NO_THROW(ep.submit_decision(Action::Hold));
}

TEST(ExecuteQuery, MalformedCallsSpendBudget) {
    auto ep = msft(2);
    EXPECT_THROW(ep.execute_query("nope", json::object()), MalformedArgumentsError);
    ep.execute_query("get_market_data", {{"symbol", "MSFT"}});
    EXPECT_THROW(ep.execute_query("get_market_data", {{"symbol", "MSFT"}}), Error);
}

TEST(ExecuteQuery, NewsDefaultWindowAndLabels) {
    auto ep = msft();
    const auto text = ep.execute_query("get_news_data", {{"symbol", "MSFT"}, {"curr_date", "2025-05-16"}});
    EXPECT_EQ(text.rfind("## MSFT News, from 2025-05-14 to 2025-05-16:\nInterpret the sentiment score x:", 0), 0u);
    EXPECT_NE(text.find("2025-05-14 [Sentiment score = 0.27, Somewhat-Bullish] Software stocks"), std::string::npos);
    EXPECT_NE(text.find("[Sentiment score = -0.22, Somewhat-Bearish]"), std::string::npos);
    EXPECT_NE(text.find("[Sentiment score = 0.01, Neutral]"), std::string::npos);
    EXPECT_EQ(text.find("2025-05-13"), std::string::npos);
    EXPECT_EQ(text.find("2025-05-17"), std::string::npos);
    EXPECT_EQ(text.find("Quiet session"), std::string::npos);
}

TEST(ExecuteQuery, InsiderWorkedExampleShape) {
    auto ep = msft();
    const auto text =
        ep.execute_query("get_insider_transactions", {{"symbol", "MSFT"}, {"curr_date", "2025-05-16"}, {"look_back_days", 7}});
    const std::string expected =
        "## MSFT insider transactions from 2025-05-09 to 2025-05-16:\n"
        "### Transaction Date: 2025-05-15, ROE, JANE (EVP, Human Resources)\n"
        "Type: Common Stock\n"
        "Shares: 77.894 (Disposal)\n\n"
        "### Transaction Date: 2025-05-15, ROE, JANE (EVP, Human Resources)\n"
        "Type: Common Stock\n"
        "Shares: 13242.774 (Disposal)\n\n";
    EXPECT_EQ(text, expected);
}

TEST(ExecuteQuery, EveryToolAnswers) {
    auto ep = msft(20);
    for (auto t : kAllTools) {
        json a = {{"symbol", "MSFT"}};
        if (t == Tool::StockIndicators) a["indicator"] = "MACD";
        if (t == Tool::Macro) a = json::object();
        const auto text = ep.execute_query(std::string(to_string(t)), a);
        EXPECT_FALSE(text.empty()) << to_string(t);
        for (const auto& d : dates_in(text)) EXPECT_LE(d, D("2025-05-16")) << text;
    }
    EXPECT_EQ(ep.trajectory().malformed_calls(), 0);
}

TEST(ExecuteQuery, EarlierDateAndShortHistory) {
    Episode ep(fixture_corpus(), {"FLAT", D("2025-03-14"), 8});
    const auto text = ep.execute_query("get_stock_indicators", {{"symbol", "FLAT"}, {"indicator", "MACD"}});
    EXPECT_NE(text.find("Insufficient history: MACD(12,26,9) needs 34 bars, 7 available through 2025-03-14."),
              std::string::npos)
        << text;
    const auto before = ep.execute_query("get_market_data", {{"symbol", "MSFT"}, {"curr_date", "2025-01-10"}});
    EXPECT_EQ(before.rfind("No market data for MSFT", 0), 0u);
}

TEST(Reasoning, AppendOrderAndTermination) {
    auto ep = msft();
    ep.append_reasoning("initial plan");
    EXPECT_EQ(ep.reasoning_log().size(), 1u);
    ep.append_reasoning("second thought");
    EXPECT_EQ(ep.reasoning_log(), (std::vector<std::string>{"initial plan", "second thought"}));
    ep.submit_decision(Action::Hold);
    try {
        ep.append_reasoning("late");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EpisodeTerminated);
    }
}

TEST(SubmitDecision, HoldAfterFiveQueries) {
    auto ep = msft();
    ep.execute_query("get_market_data", args("MSFT", "2025-05-16", 14));
    for (const char* ind : {"RSI", "BBANDS", "MACD"})
        ep.execute_query("get_stock_indicators", {{"symbol", "MSFT"}, {"indicator", ind}, {"curr_date", "2025-05-16"}, {"look_back_days", 14}});
    ep.execute_query("get_news_data", {{"symbol", "MSFT"}, {"curr_date", "2025-05-16"}});
    const auto& t = ep.submit_decision(Action::Hold);
    ASSERT_EQ(t.steps.size(), 6u);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(t.steps[i].type, Step::Type::Query);
    EXPECT_EQ(t.steps.back().type, Step::Type::Decision);
    EXPECT_EQ(t.decision(), Action::Hold);
    EXPECT_EQ(t.successful_calls(), 5);
    EXPECT_TRUE(ep.terminated());
    EXPECT_EQ(ep.final_action(), Action::Hold);
}

TEST(SubmitDecision, ZeroQueriesAndDoubleSubmit) {
    auto ep = msft();
    const auto& t = ep.submit_decision(Action::Buy);
    EXPECT_EQ(t.steps.size(), 1u);
    try {
        ep.submit_decision(Action::Sell);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EpisodeTerminated);
    }
    try {
        ep.execute_query("get_market_data", {{"symbol", "MSFT"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EpisodeTerminated);
    }
    EXPECT_EQ(ep.trajectory().steps.size(), 1u);
}

TEST(Trajectory, TurnsFollowReasoningSegments) {
    auto ep = msft();
    ep.execute_query("get_market_data", {{"symbol", "MSFT"}});
    ep.append_reasoning("a");
    ep.execute_query("get_market_data", {{"symbol", "MSFT"}});
    ep.execute_query("get_news_data", {{"symbol", "MSFT"}});
    EXPECT_THROW(ep.execute_query("bad", json::object()), MalformedArgumentsError);
    ep.append_reasoning("b");
    ep.submit_decision(Action::Sell);
    EXPECT_EQ(ep.trajectory().tool_calls_per_turn(), (std::vector<int>{1, 2, 0}));
}

TEST(Trajectory, JsonlRoundTripAndMetadata) {
    auto ep = msft();
    ep.append_reasoning("look at prices");
    ep.execute_query("get_market_data", args("MSFT", "2025-05-16", 14));
    EXPECT_THROW(ep.execute_query("get_stock_indicators", {{"symbol", "MSFT"}}), MalformedArgumentsError);
    ep.append_reasoning("then decide");
    ep.submit_decision(Action::Hold);
    const auto text = trajectory_jsonl(ep.trajectory());

    std::vector<json> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(json::parse(l));
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[0]["type"], "reasoning");
    EXPECT_EQ(lines[1]["type"], "query");
    EXPECT_EQ(lines[1]["tool"], "get_market_data");
    EXPECT_EQ(lines[2]["malformed"], true);
    EXPECT_EQ(lines[4]["action"], "HOLD");
    EXPECT_EQ(lines[5]["symbol"], "MSFT");
    EXPECT_EQ(lines[5]["date"], "2025-05-16");
    EXPECT_EQ(lines[5]["malformed_calls"], 1);
    EXPECT_EQ(lines[5]["assistant_turns"], 2);
    EXPECT_EQ(lines[5]["tool_calls_per_turn"], json::array({1, 0}));

    EXPECT_EQ(parse_trajectory(text), ep.trajectory());
}

TEST(Trajectory, ParseRejectsInconsistentFiles) {
    auto ep = msft();
    ep.execute_query("get_market_data", {{"symbol", "MSFT"}});
    ep.submit_decision(Action::Buy);
    const auto good = trajectory_jsonl(ep.trajectory());
    auto lines = std::vector<std::string>{};
    std::istringstream in(good);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 3u);

    auto meta = json::parse(lines[2]);
    meta["malformed_calls"] = 3;
    EXPECT_THROW(parse_trajectory(lines[0] + "\n" + lines[1] + "\n" + meta.dump() + "\n"), RowError);
    EXPECT_THROW(parse_trajectory(lines[0] + "\n" + lines[2] + "\n"), RowError);          // no decision
    EXPECT_THROW(parse_trajectory(lines[1] + "\n" + lines[0] + "\n" + lines[2] + "\n"), RowError);  // order
    EXPECT_THROW(parse_trajectory(lines[0] + "\n{oops\n" + lines[2] + "\n"), RowError);
    EXPECT_THROW(parse_trajectory(std::string("")), Error);
}

TEST(Determinism, ReplayReproducesResponses) {
    auto ep = msft();
    ep.append_reasoning("start");
    ep.execute_query("get_market_data", args("MSFT", "2025-05-16", 14));
    ep.execute_query("get_stock_indicators", {{"symbol", "MSFT"}, {"indicator", "BBANDS"}});
    EXPECT_THROW(ep.execute_query("get_cashflow", json::object()), MalformedArgumentsError);
    ep.execute_query("get_macro_indicators", json::object());
    ep.submit_decision(Action::Hold);
    const auto recorded = parse_trajectory(trajectory_jsonl(ep.trajectory()));
    const auto replay = replay_queries(fixture_corpus(), recorded);
    std::vector<std::string> original;
    for (const auto& s : recorded.steps)
        if (s.type == Step::Type::Query) original.push_back(s.response);
    EXPECT_EQ(replay, original);

    Episode again(fixture_corpus(), {"MSFT", D("2025-05-16"), 8});
    again.append_reasoning("start");
    again.execute_query("get_market_data", args("MSFT", "2025-05-16", 14));
    again.execute_query("get_stock_indicators", {{"symbol", "MSFT"}, {"indicator", "BBANDS"}});
    EXPECT_THROW(again.execute_query("get_cashflow", json::object()), MalformedArgumentsError);
    again.execute_query("get_macro_indicators", json::object());
    again.submit_decision(Action::Hold);
    EXPECT_EQ(trajectory_jsonl(again.trajectory()), trajectory_jsonl(ep.trajectory()));
}

TEST(EnvProperty, LeakageAndMonotoneHistory) {
    std::mt19937_64 rng(77);
    const auto corpus = fixture_corpus();
    const auto& bars = corpus->series("MSFT");
    const char* indicators[] = {"SMA", "EMA", "VWMA", "RSI", "STOCH", "CCI", "BBANDS", "ATR", "OBV", "CMF", "MACD"};
    for (int trial = 0; trial < 200; ++trial) {
        const Date curr = bars[rng() % bars.size()].date;
        Episode ep(corpus, {"MSFT", curr, 8});
        for (int q = 0; q < 8; ++q) {
            const auto tool = kAllTools[rng() % kAllTools.size()];
            json a = {{"symbol", "MSFT"}, {"look_back_days", int(rng() % 60)}};
            if (rng() % 3 == 0) a["curr_date"] = curr.minus_days(long(rng() % 10)).iso();
            if (tool == Tool::StockIndicators) a["indicator"] = indicators[rng() % 11];
            const auto before = ep.query_history().size();
            const auto text = ep.execute_query(std::string(to_string(tool)), a);
            ASSERT_EQ(ep.query_history().size(), before + 1);
            for (const auto& d : dates_in(text)) ASSERT_LE(d, curr) << text;
        }
    }
}
