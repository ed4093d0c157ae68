#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quantenv/action.hpp"
#include "quantenv/indicators.hpp"

namespace quantenv {

enum class StrategyTag { BuyAndHold, MacdCrossover, Zmr };

inline constexpr std::string_view to_string(StrategyTag t) {
    switch (t) {
        case StrategyTag::BuyAndHold: return "buy-and-hold";
        case StrategyTag::MacdCrossover: return "macd";
        case StrategyTag::Zmr: return "zmr";
    }
    return "";
}

inline std::optional<StrategyTag> parse_strategy(std::string_view s) {
    for (auto t : {StrategyTag::BuyAndHold, StrategyTag::MacdCrossover, StrategyTag::Zmr})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

struct StrategyKind {
    StrategyTag tag = StrategyTag::BuyAndHold;
    int macd_fast = 12;
    int macd_slow = 26;
    int macd_signal = 9;
    int zmr_lookback = 20;
    double zmr_entry = 1.0;

    void validate() const {
        if (macd_fast < 1 || macd_slow < 1 || macd_signal < 1 || zmr_lookback < 1)
            throw Error(Errc::InvalidConfig, "strategy periods must be >= 1");
        if (!(zmr_entry > 0.0)) throw Error(Errc::InvalidConfig, "zmr entry threshold must be > 0");
    }
};

inline std::vector<Action> buy_and_hold_signals(const BarSeries& prices) {
    if (prices.empty()) throw Error(Errc::EmptySeries, "no bars");
    return std::vector<Action>(prices.size(), Action::Buy);
}

/// BUY when the MACD line moves from ≤ signal to > signal, SELL on the reverse; warm-up days HOLD.
inline std::vector<Action> macd_signals(const BarSeries& prices, int fast = 12, int slow = 26, int signal = 9) {
    if (prices.empty()) throw Error(Errc::EmptySeries, "no bars");
    const auto ind = compute_indicator(prices, IndicatorKind{IndicatorTag::MACD, {fast, slow, signal}});
    std::vector<Action> out(prices.size(), Action::Hold);
    const std::size_t offset = prices.size() - ind.points.size();
    for (std::size_t i = 1; i < ind.points.size(); ++i) {
        const double prev = ind.points[i - 1].values[2];
        const double cur = ind.points[i].values[2];
        if (prev <= 0.0 && cur > 0.0) out[offset + i] = Action::Buy;
        else if (prev >= 0.0 && cur < 0.0) out[offset + i] = Action::Sell;
    }
    return out;
}

/// Long-only z-score mean reversion: enter flat positions at Z ≤ −entry, exit at the first Z ≥ 0.
inline std::vector<Action> zmr_signals(const BarSeries& prices, int lookback = 20, double entry = 1.0) {
    if (prices.empty()) throw Error(Errc::EmptySeries, "no bars");
    const auto n = static_cast<std::size_t>(lookback);
    if (prices.size() < n) throw InsufficientHistoryError("ZMR(" + std::to_string(lookback) + ")", n, prices.size());
    std::vector<Action> out(prices.size(), Action::Hold);
    bool in_position = false;
    for (std::size_t t = n - 1; t < prices.size(); ++t) {
        double mean = 0.0;
        for (std::size_t j = t + 1 - n; j <= t; ++j) mean += prices[j].close;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t j = t + 1 - n; j <= t; ++j) ss += (prices[j].close - mean) * (prices[j].close - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd == 0.0) continue;
        const double z = (prices[t].close - mean) / sd;
        if (!in_position && z <= -entry) {
            out[t] = Action::Buy;
            in_position = true;
        } else if (in_position && z >= 0.0) {
            out[t] = Action::Sell;
            in_position = false;
        }
    }
    return out;
}

inline std::vector<Action> strategy_signals(const BarSeries& prices, const StrategyKind& k) {
    k.validate();
    switch (k.tag) {
        case StrategyTag::BuyAndHold: return buy_and_hold_signals(prices);
        case StrategyTag::MacdCrossover: return macd_signals(prices, k.macd_fast, k.macd_slow, k.macd_signal);
        case StrategyTag::Zmr: return zmr_signals(prices, k.zmr_lookback, k.zmr_entry);
    }
    return {};
}

}  // namespace quantenv
