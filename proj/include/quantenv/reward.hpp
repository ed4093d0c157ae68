#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quantenv/env.hpp"

namespace quantenv {

enum class TokenCount { Whitespace, CharsDiv4 };

struct RewardConfig {
    int H = 7;
    double eta = 0.8;
    double theta = 0.015;
    double alpha = 5.0;
    int min_token = 200;
    int max_token = 600;
    int min_tool = 4;
    int max_tool = 8;
    double c_fmt = 0.5;
    double c_band = 0.5;
    double c_pat = 0.5;
    double c_mal = 0.25;
    double c_mal_cap = 1.0;
    TokenCount token_count = TokenCount::Whitespace;

    void validate() const {
        auto bad = [](const std::string& why) { throw Error(Errc::InvalidConfig, why); };
        if (H < 1) bad("H must be >= 1");
        if (!(eta > 0.0 && eta < 1.0)) bad("eta must lie in (0, 1)");
        if (!(theta > 0.0)) bad("theta must be > 0");
        if (!(alpha > 0.0)) bad("alpha must be > 0");
        if (min_token < 0 || !(min_token < max_token)) bad("need 0 <= min_token < max_token");
        if (min_tool < 0 || min_tool > max_tool) bad("need 0 <= min_tool <= max_tool");
        for (double c : {c_fmt, c_band, c_pat, c_mal, c_mal_cap})
            if (!(c >= 0.0) || !std::isfinite(c)) bad("penalty constants must be finite and >= 0");
    }
};

enum class Regime { HighlyBullish, HighlyBearish, Sideways };

inline constexpr std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::HighlyBullish: return "HighlyBullish";
        case Regime::HighlyBearish: return "HighlyBearish";
        case Regime::Sideways: return "Sideways";
    }
    return "";
}

/// ω_h = η^h / Σ_{i=1..H} η^i for h = 1..H.
inline std::vector<double> horizon_weights(int H, double eta) {
    std::vector<double> w(static_cast<std::size_t>(H));
    double p = 1.0, sum = 0.0;
    for (int h = 0; h < H; ++h) {
        p *= eta;
        w[static_cast<std::size_t>(h)] = p;
        sum += p;
    }
    for (auto& x : w) x /= sum;
    return w;
}

/// r_t = Σ ω_h (p_{t+h+1} / p_{t+1} − 1). Indices are trading days.
inline double forward_return(std::span<const double> prices, std::size_t t, const RewardConfig& cfg) {
    const auto needed = static_cast<std::size_t>(cfg.H) + 1;
    const std::size_t available = t < prices.size() ? prices.size() - 1 - t : 0;
    if (available < needed) throw InsufficientFutureError(needed, available);
    const auto w = horizon_weights(cfg.H, cfg.eta);
    const double base = prices[t + 1];
    if (!(base > 0.0)) throw Error(Errc::NonPositivePrice, "execution price must be > 0");
    double r = 0.0;
    for (std::size_t h = 1; h <= w.size(); ++h) r += w[h - 1] * (prices[t + h + 1] / base - 1.0);
    return r;
}

inline Regime classify_regime(double r, double theta) {
    if (!(theta > 0.0)) throw Error(Errc::InvalidArgument, "theta must be > 0");
    if (r > theta) return Regime::HighlyBullish;
    if (r < -theta) return Regime::HighlyBearish;
    return Regime::Sideways;
}

inline constexpr double outcome_score(Regime regime, Action action) {
    switch (regime) {
        case Regime::HighlyBullish:
            return action == Action::Buy ? 1.0 : action == Action::Sell ? -1.0 : -0.75;
        case Regime::HighlyBearish:
            return action == Action::Sell ? 1.0 : action == Action::Buy ? -1.0 : -0.75;
        case Regime::Sideways:
            return action == Action::Hold ? 1.0 : -0.5;
    }
    return 0.0;
}

inline std::size_t count_tokens(std::string_view text, TokenCount mode) {
    if (mode == TokenCount::CharsDiv4) {
        std::size_t chars = 0;
        for (unsigned char c : text) chars += (c & 0xC0) != 0x80;
        return (chars + 3) / 4;
    }
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

inline std::size_t reasoning_tokens(const Trajectory& t, TokenCount mode) {
    std::string all;
    for (const auto& s : t.reasoning_log()) {
        if (!all.empty()) all += '\n';
        all += s;
    }
    return count_tokens(all, mode);
}

inline double format_score(const Trajectory& t, const RewardConfig& cfg) {
    const auto L = reasoning_tokens(t, cfg.token_count);
    const bool in_band = L >= static_cast<std::size_t>(cfg.min_token) && L <= static_cast<std::size_t>(cfg.max_token);
    return in_band ? 0.0 : -cfg.c_fmt;
}

/// All successful calls issued in one assistant turn, with at least two of them.
inline bool collect_then_conclude(const Trajectory& t) {
    const auto turns = t.tool_calls_per_turn();
    const int active = static_cast<int>(std::count_if(turns.begin(), turns.end(), [](int n) { return n > 0; }));
    return t.successful_calls() >= 2 && active == 1;
}

struct ToolScoreParts {
    double band = 0.0;
    double pattern = 0.0;
    double malformed = 0.0;
    [[nodiscard]] double total() const { return band + pattern + malformed; }
};

inline ToolScoreParts tool_score_parts(const Trajectory& t, const RewardConfig& cfg) {
    ToolScoreParts p;
    const int n = t.successful_calls();
    if (n < cfg.min_tool || n > cfg.max_tool) p.band = -cfg.c_band;
    if (collect_then_conclude(t)) p.pattern = -cfg.c_pat;
    p.malformed = -std::min(cfg.c_mal * t.malformed_calls(), cfg.c_mal_cap);
    return p;
}

inline double tool_score(const Trajectory& t, const RewardConfig& cfg) { return tool_score_parts(t, cfg).total(); }

struct RewardBreakdown {
    double r_t = 0.0;
    Regime regime = Regime::Sideways;
    Action action = Action::Hold;
    double outcome = 0.0;
    double format = 0.0;
    double tool = 0.0;
    double total = 0.0;
    std::size_t reasoning_tokens = 0;
    int tool_calls = 0;
    int malformed_calls = 0;
};

inline RewardBreakdown score_trajectory(const Trajectory& t, std::span<const double> prices, std::size_t date_index,
                                        const RewardConfig& cfg) {
    cfg.validate();
    const auto action = t.decision();
    if (!action) throw Error(Errc::InvalidArgument, "trajectory has no terminal decision");
    RewardBreakdown b;
    b.r_t = forward_return(prices, date_index, cfg);
    b.regime = classify_regime(b.r_t, cfg.theta);
    b.action = *action;
    b.outcome = outcome_score(b.regime, b.action);
    b.format = format_score(t, cfg);
    b.tool = tool_score(t, cfg);
    b.total = cfg.alpha * b.outcome + b.format + b.tool;
    b.reasoning_tokens = reasoning_tokens(t, cfg.token_count);
    b.tool_calls = t.successful_calls();
    b.malformed_calls = t.malformed_calls();
    return b;
}

/// Locates the trajectory date in `series` and scores against the chosen price column.
inline RewardBreakdown score_trajectory(const Trajectory& t, const BarSeries& series, const RewardConfig& cfg,
                                        PriceBasis basis = PriceBasis::Close) {
    const auto idx = series.find(t.date);
    if (!idx) throw Error(Errc::DateOutOfRange, t.date.iso() + " is not a trading day in the price series");
    const auto prices = series.prices(basis);
    return score_trajectory(t, prices, *idx, cfg);
}

inline nlohmann::json to_json(const RewardConfig& c) {
    return {{"H", c.H},
            {"eta", c.eta},
            {"theta", c.theta},
            {"alpha", c.alpha},
            {"min_token", c.min_token},
            {"max_token", c.max_token},
            {"min_tool", c.min_tool},
            {"max_tool", c.max_tool},
            {"c_fmt", c.c_fmt},
            {"c_band", c.c_band},
            {"c_pat", c.c_pat},
            {"c_mal", c.c_mal},
            {"c_mal_cap", c.c_mal_cap},
            {"token_count", c.token_count == TokenCount::Whitespace ? "whitespace" : "chars_div4"}};
}

inline nlohmann::json to_json(const RewardBreakdown& b) {
    return {{"r_t", b.r_t},
            {"regime", to_string(b.regime)},
            {"action", to_string(b.action)},
            {"outcome", b.outcome},
            {"format", b.format},
            {"tool", b.tool},
            {"total", b.total},
            {"reasoning_tokens", b.reasoning_tokens},
            {"tool_calls", b.tool_calls},
            {"malformed_calls", b.malformed_calls}};
}

}  // namespace quantenv
