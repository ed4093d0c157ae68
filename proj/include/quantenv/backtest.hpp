#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "quantenv/action.hpp"
#include "quantenv/bars.hpp"

namespace quantenv {

struct BacktestConfig {
    double lambda = 0.001;
    double kappa = 0.9;
    double initial_cash = 10000.0;

    void validate() const {
        auto bad = [](const std::string& why) { throw Error(Errc::InvalidConfig, why); };
        if (!(lambda >= 0.0 && lambda < 1.0)) bad("lambda must lie in [0, 1)");
        if (!(kappa > 0.0 && kappa <= 1.0)) bad("kappa must lie in (0, 1]");
        if (kappa * (1.0 + lambda) > 1.0) bad("kappa * (1 + lambda) must not exceed 1");
        if (!(initial_cash > 0.0) || !std::isfinite(initial_cash)) bad("initial_cash must be > 0");
    }
};

struct PortfolioState {
    long long h = 0;
    double c = 0.0;

    [[nodiscard]] double value(double price) const { return c + static_cast<double>(h) * price; }
    bool operator==(const PortfolioState&) const = default;
};

/// Shares and fee of one executed trade.
struct Fill {
    long long shares = 0;
    double fee = 0.0;
};

inline PortfolioState step_portfolio(const PortfolioState& s, Action action, double p_next, const BacktestConfig& cfg,
                                     Fill* fill = nullptr) {
    if (!(p_next > 0.0) || !std::isfinite(p_next)) throw Error(Errc::NonPositivePrice, fmt::format("price {}", p_next));
    PortfolioState out = s;
    Fill f;
    switch (action) {
        case Action::Buy: {
            const auto dh = static_cast<long long>(std::floor(cfg.kappa * s.c / p_next));
            if (dh > 0) {
                const double notional = static_cast<double>(dh) * p_next;
                out.h = s.h + dh;
                out.c = s.c - (1.0 + cfg.lambda) * notional;
                f = {dh, cfg.lambda * notional};
            }
            break;
        }
        case Action::Sell:
            if (s.h > 0) {
                const double notional = static_cast<double>(s.h) * p_next;
                out.h = 0;
                out.c = s.c + (1.0 - cfg.lambda) * notional;
                f = {s.h, cfg.lambda * notional};
            }
            break;
        case Action::Hold:
            break;
    }
    if (fill) *fill = f;
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

inline void require_values(std::span<const double> v, std::size_t min_t) {
    if (v.size() < min_t + 1)
        throw Error(Errc::DegenerateSeries, fmt::format("need at least {} values, got {}", min_t + 1, v.size()));
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x)) throw Error(Errc::DegenerateSeries, "values must be finite and > 0");
}

/// (V_T / V_0)^(252/T) − 1.
inline double arr(std::span<const double> v) {
    require_values(v, 1);
    const double T = static_cast<double>(v.size() - 1);
    return std::pow(v.back() / v.front(), 252.0 / T) - 1.0;
}

/// Mean over sample standard deviation of daily returns, not annualized.
/// Zero when the deviation vanishes (including round-off scale relative to the mean).
inline double sharpe(std::span<const double> v) {
    require_values(v, 2);
    const std::size_t T = v.size() - 1;
    std::vector<double> r(T);
    for (std::size_t t = 1; t <= T; ++t) r[t - 1] = (v[t] - v[t - 1]) / v[t - 1];
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= static_cast<double>(T);
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(T - 1));
    if (sd == 0.0 || sd <= 1e-12 * std::abs(mean)) return 0.0;
    return mean / sd;
}

/// max over t ≥ 1 of (max_{1≤s≤t} V_s − V_t) / max_{1≤s≤t} V_s.
inline double mdd(std::span<const double> v) {
    require_values(v, 1);
    double peak = v[1];
    double worst = 0.0;
    for (std::size_t t = 1; t < v.size(); ++t) {
        peak = std::max(peak, v[t]);
        worst = std::max(worst, (peak - v[t]) / peak);
    }
    return worst;
}

struct Metrics {
    double arr = 0.0;
    double sr = 0.0;
    double mdd = 0.0;
    bool operator==(const Metrics&) const = default;
};

inline Metrics compute_metrics(std::span<const double> values) {
    Metrics m;
    m.arr = arr(values);
    m.sr = values.size() >= 3 ? sharpe(values) : 0.0;
    m.mdd = mdd(values);
    return m;
}

// ---------------------------------------------------------------------------
// Simulation

struct Trade {
    Date date;  // execution day
    Action action = Action::Hold;
    long long shares = 0;
    double price = 0.0;
    double fee = 0.0;
};

struct BacktestReport {
    std::string symbol;
    Date start;
    Date end;
    std::size_t T = 0;
    std::vector<Date> dates;  // dates[t] is the valuation day of values[t]
    std::vector<double> values;
    std::vector<Trade> trades;
    Metrics metrics;
    std::optional<Action> unexecuted;  // decision on the final day, which has no execution price
};

/// `bars[0..m]` is the window. Decision t (0 ≤ t < m) executes at close t+1; V_t is valued at close t with
/// V_0 all cash. Passing m+1 signals leaves the last one unexecuted and reports it.
inline BacktestReport run_backtest(std::span<const Action> signals, const BarSeries& bars, const BacktestConfig& cfg,
                                   PriceBasis basis = PriceBasis::Close) {
    cfg.validate();
    if (bars.size() < 2)
        throw Error(Errc::DegenerateSeries, "a backtest needs at least two trading days (one decision, one execution)");
    const std::size_t m = bars.size() - 1;
    if (signals.size() > bars.size())
        throw Error(Errc::MissingExecutionDay,
                    fmt::format("{} signals but only {} execution days in the window", signals.size(), m));
    if (signals.size() < m)
        throw Error(Errc::LengthMismatch, fmt::format("{} signals for {} decision days", signals.size(), m));

    const auto prices = bars.prices(basis);
    BacktestReport rep;
    rep.symbol = bars.symbol();
    rep.start = bars.front().date;
    rep.end = bars.back().date;
    rep.T = m;
    rep.dates.reserve(m + 1);
    rep.values.reserve(m + 1);

    PortfolioState s{0, cfg.initial_cash};
    rep.dates.push_back(bars[0].date);
    rep.values.push_back(s.c);
    for (std::size_t t = 0; t < m; ++t) {
        const double p = prices[t + 1];
        Fill fill;
        s = step_portfolio(s, signals[t], p, cfg, &fill);
        if (fill.shares > 0) rep.trades.push_back({bars[t + 1].date, signals[t], fill.shares, p, fill.fee});
        rep.dates.push_back(bars[t + 1].date);
        rep.values.push_back(s.value(p));
    }
    if (signals.size() == bars.size()) rep.unexecuted = signals.back();
    rep.metrics = compute_metrics(rep.values);
    return rep;
}

inline nlohmann::json to_json(const BacktestReport& r) {
    nlohmann::json trades = nlohmann::json::array();
    for (const auto& t : r.trades)
        trades.push_back({{"date", t.date.iso()},
                          {"action", to_string(t.action)},
                          {"shares", t.shares},
                          {"price", t.price},
                          {"fee", t.fee}});
    std::vector<std::string> dates;
    for (const auto& d : r.dates) dates.push_back(d.iso());
    nlohmann::json j = {{"symbol", r.symbol},
                        {"start", r.start.iso()},
                        {"end", r.end.iso()},
                        {"T", r.T},
                        {"dates", dates},
                        {"values", r.values},
                        {"trades", trades},
                        {"metrics", {{"arr", r.metrics.arr}, {"sr", r.metrics.sr}, {"mdd", r.metrics.mdd}}}};
    if (r.unexecuted) j["unexecuted_final_decision"] = to_string(*r.unexecuted);
    return j;
}

/// Static equity-curve chart.
inline std::string equity_svg(const BacktestReport& r, int width = 640, int height = 320) {
    const double pad = 40.0;
    const auto [lo_it, hi_it] = std::minmax_element(r.values.begin(), r.values.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi - lo < 1e-9 * std::max(1.0, std::abs(hi))) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double w = width - 2 * pad, h = height - 2 * pad;
    const double n = static_cast<double>(std::max<std::size_t>(r.values.size() - 1, 1));
    std::string pts;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        const double x = pad + w * static_cast<double>(i) / n;
        const double y = pad + h * (1.0 - (r.values[i] - lo) / (hi - lo));
        pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", x, y);
    }
    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{3} {4} to {5}  "
        "ARR {6:.2f}%  SR {7:.4f}  MDD {8:.2f}%</text>\n"
        "<line x1=\"{2}\" y1=\"{9}\" x2=\"{10}\" y2=\"{9}\" stroke=\"#999\"/>\n"
        "<line x1=\"{2}\" y1=\"{2}\" x2=\"{2}\" y2=\"{9}\" stroke=\"#999\"/>\n"
        "<text x=\"4\" y=\"{2}\" font-family=\"monospace\" font-size=\"10\">{11:.0f}</text>\n"
        "<text x=\"4\" y=\"{9}\" font-family=\"monospace\" font-size=\"10\">{12:.0f}</text>\n"
        "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"{13}\"/>\n"
        "</svg>\n",
        width, height, pad, r.symbol, r.start.iso(), r.end.iso(), 100.0 * r.metrics.arr, r.metrics.sr,
        100.0 * r.metrics.mdd, pad + h, pad + w, hi, lo, pts);
    return svg;
}

}  // namespace quantenv
