#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace quantenv;
using namespace testing_support;

TEST(BuyAndHold, Signals) {
    for (std::size_t n : {1u, 10u}) {
        const auto s = buy_and_hold_signals(constant_series(n));
        EXPECT_EQ(s, std::vector<Action>(n, Action::Buy));
    }
    try {
        (void)buy_and_hold_signals(BarSeries("E", {}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptySeries);
    }
}

TEST(BuyAndHold, FiveDayWindowByHand) {
    const auto bars = series_from_closes({100, 101, 99, 104, 106});
    const auto sig = buy_and_hold_signals(bars);
    const auto rep = run_backtest(std::span(sig).first(4), bars, BacktestConfig{});
    // Day 1 at 101: floor(9000 / 101) = 89 shares, cash 10000 - 1.001 * 8989 = 1002.011.
    // Day 2 at 99: floor(0.9 * 1002.011 / 99) = 9 more, cash 1002.011 - 1.001 * 891 = 110.12.
    // Days 3 and 4: floor(0.9 * 110.12 / p) = 0, nothing happens.
    const std::vector<double> expect = {10000, 1002.011 + 89 * 101, 110.12 + 98 * 99, 110.12 + 98 * 104,
                                        110.12 + 98 * 106};
    for (std::size_t t = 0; t < expect.size(); ++t) EXPECT_NEAR(rep.values[t], expect[t], 1e-9);
    ASSERT_EQ(rep.trades.size(), 2u);
    EXPECT_EQ(rep.trades[0].shares, 89);
    EXPECT_EQ(rep.trades[1].shares, 9);
}

TEST(Macd, ConstantPricesNeverTrade) {
    const auto s = macd_signals(constant_series(120));
    EXPECT_EQ(s, std::vector<Action>(120, Action::Hold));
}

TEST(Macd, MatchesHistogramSignChanges) {
    std::vector<double> closes;
    for (int i = 0; i < 200; ++i) closes.push_back(100 + 10 * std::sin(i / 8.0) + 0.01 * i);
    const auto bars = series_from_closes(closes);
    const auto sig = macd_signals(bars);
    std::vector<oracle::Ohlcv> o;
    for (double c : closes) o.push_back({c, c, c, 1e6});
    const auto ref = oracle::macd(o, 12, 26, 9);
    int buys = 0, sells = 0;
    for (std::size_t t = 0; t < closes.size(); ++t) {
        Action want = Action::Hold;
        if (t > 0 && ref[t] && ref[t - 1]) {
            const double a = (*ref[t - 1])[2], b = (*ref[t])[2];
            if (a <= 0 && b > 0) want = Action::Buy;
            if (a >= 0 && b < 0) want = Action::Sell;
        }
        EXPECT_EQ(sig[t], want) << t;
        buys += want == Action::Buy;
        sells += want == Action::Sell;
    }
    EXPECT_GE(buys, 3);
    EXPECT_GE(sells, 3);
}

TEST(Macd, ShortHistory) {
    try {
        (void)macd_signals(constant_series(20));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientHistory);
    }
}

TEST(Zmr, ConstantPricesNeverTrade) {
    EXPECT_EQ(zmr_signals(constant_series(60)), std::vector<Action>(60, Action::Hold));
}

TEST(Zmr, DipThenRevert) {
    std::vector<double> closes(20, 100.0);
    for (int i = 0; i < 20; ++i) closes[i] += (i % 2 ? 0.5 : -0.5);
    closes.push_back(95);
    closes.push_back(97);
    closes.push_back(101);
    closes.push_back(101);
    const auto sig = zmr_signals(series_from_closes(closes));

    // brute force: rescan every window, track position
    std::vector<Action> want(closes.size(), Action::Hold);
    bool in = false;
    for (std::size_t t = 19; t < closes.size(); ++t) {
        const double m = std::accumulate(closes.begin() + long(t) - 19, closes.begin() + long(t) + 1, 0.0) / 20;
        double ss = 0;
        for (std::size_t j = t - 19; j <= t; ++j) ss += (closes[j] - m) * (closes[j] - m);
        const double z = (closes[t] - m) / std::sqrt(ss / 20);
        if (!in && z <= -1) {
            want[t] = Action::Buy;
            in = true;
        } else if (in && z >= 0) {
            want[t] = Action::Sell;
            in = false;
        }
    }
    EXPECT_EQ(sig, want);
    EXPECT_EQ(std::count(sig.begin(), sig.end(), Action::Buy), 1);
    EXPECT_EQ(std::count(sig.begin(), sig.end(), Action::Sell), 1);
    EXPECT_EQ(sig[20], Action::Buy);
}

TEST(Zmr, ShortHistory) {
    try {
        (void)zmr_signals(constant_series(10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientHistory);
    }
}

TEST(BaselineProperty, TradesAlternate) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto bars = random_series(rng, 40 + rng() % 100);
        for (const auto& sig : {zmr_signals(bars), macd_signals(bars)}) {
            ASSERT_EQ(sig.size(), bars.size());
            Action last = Action::Hold;
            for (auto a : sig) {
                if (a == Action::Hold) continue;
                ASSERT_NE(a, last);
                last = a;
            }
        }
    }
}

TEST(Strategy, ParseAndDispatch) {
    EXPECT_EQ(parse_strategy("buy-and-hold"), StrategyTag::BuyAndHold);
    EXPECT_EQ(parse_strategy("macd"), StrategyTag::MacdCrossover);
    EXPECT_EQ(parse_strategy("zmr"), StrategyTag::Zmr);
    EXPECT_FALSE(parse_strategy("momentum"));
    const auto bars = constant_series(60);
    EXPECT_EQ(strategy_signals(bars, {StrategyTag::BuyAndHold}), buy_and_hold_signals(bars));
    StrategyKind bad{StrategyTag::Zmr};
    bad.zmr_entry = 0;
    EXPECT_THROW((void)strategy_signals(bars, bad), Error);
}
