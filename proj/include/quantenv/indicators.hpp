#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "quantenv/bars.hpp"

namespace quantenv {

enum class IndicatorTag { SMA, EMA, VWMA, RSI, STOCH, CCI, BBANDS, ATR, OBV, CMF, MACD };

inline constexpr std::array kAllIndicatorTags = {
    IndicatorTag::SMA,  IndicatorTag::EMA,    IndicatorTag::VWMA, IndicatorTag::RSI,
    IndicatorTag::STOCH, IndicatorTag::CCI,   IndicatorTag::BBANDS, IndicatorTag::ATR,
    IndicatorTag::OBV,  IndicatorTag::CMF,    IndicatorTag::MACD,
};

inline constexpr std::string_view to_string(IndicatorTag t) {
    switch (t) {
        case IndicatorTag::SMA: return "SMA";
        case IndicatorTag::EMA: return "EMA";
        case IndicatorTag::VWMA: return "VWMA";
        case IndicatorTag::RSI: return "RSI";
        case IndicatorTag::STOCH: return "STOCH";
        case IndicatorTag::CCI: return "CCI";
        case IndicatorTag::BBANDS: return "BBANDS";
        case IndicatorTag::ATR: return "ATR";
        case IndicatorTag::OBV: return "OBV";
        case IndicatorTag::CMF: return "CMF";
        case IndicatorTag::MACD: return "MACD";
    }
    return "";
}

/// Case-insensitive match on the bare kind name.
inline std::optional<IndicatorTag> parse_indicator_tag(std::string_view s) {
    std::string upper(s);
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (auto t : kAllIndicatorTags)
        if (to_string(t) == upper) return t;
    return std::nullopt;
}

/// Number of values per point: BBANDS (middle, upper, lower), MACD (line, signal,
/// histogram), STOCH (%K, %D), everything else a single value.
inline constexpr std::size_t arity(IndicatorTag t) {
    switch (t) {
        case IndicatorTag::BBANDS:
        case IndicatorTag::MACD: return 3;
        case IndicatorTag::STOCH: return 2;
        default: return 1;
    }
}

struct IndicatorKind {
    IndicatorTag tag = IndicatorTag::SMA;
    std::vector<int> params;

    static IndicatorKind defaults(IndicatorTag t) {
        switch (t) {
            case IndicatorTag::SMA: return {t, {20}};
            case IndicatorTag::EMA: return {t, {10}};
            case IndicatorTag::VWMA: return {t, {20}};
            case IndicatorTag::RSI: return {t, {14}};
            case IndicatorTag::STOCH: return {t, {14, 3, 3}};
            case IndicatorTag::CCI: return {t, {21}};
            case IndicatorTag::BBANDS: return {t, {20, 2}};
            case IndicatorTag::ATR: return {t, {14}};
            case IndicatorTag::OBV: return {t, {}};
            case IndicatorTag::CMF: return {t, {20}};
            case IndicatorTag::MACD: return {t, {12, 26, 9}};
        }
        return {t, {}};
    }

    [[nodiscard]] std::string name() const {
        std::string out(to_string(tag));
        if (!params.empty()) {
            out += '(';
            for (std::size_t i = 0; i < params.size(); ++i) out += (i ? "," : "") + std::to_string(params[i]);
            out += ')';
        }
        return out;
    }

    void validate() const {
        const auto expected = defaults(tag).params.size();
        if (params.size() != expected)
            throw Error(Errc::InvalidArgument, std::string(to_string(tag)) + " takes " +
                                                   std::to_string(expected) + " parameter(s)");
        for (int p : params)
            if (p < 1) throw Error(Errc::InvalidArgument, name() + ": parameters must be >= 1");
    }

    bool operator==(const IndicatorKind&) const = default;
};

/// Minimum series length for at least one defined point.
inline std::size_t min_history(const IndicatorKind& k) {
    const auto& p = k.params;
    switch (k.tag) {
        case IndicatorTag::SMA:
        case IndicatorTag::EMA:
        case IndicatorTag::VWMA:
        case IndicatorTag::CCI:
        case IndicatorTag::BBANDS:
        case IndicatorTag::CMF: return static_cast<std::size_t>(p[0]);
        case IndicatorTag::RSI:
        case IndicatorTag::ATR: return static_cast<std::size_t>(p[0]) + 1;
        case IndicatorTag::STOCH: return static_cast<std::size_t>(p[0] + p[1] + p[2] - 2);
        case IndicatorTag::OBV: return 1;
        case IndicatorTag::MACD: return static_cast<std::size_t>(std::max(p[0], p[1]) + p[2] - 1);
    }
    return 1;
}

struct IndicatorPoint {
    Date date;
    std::array<double, 3> values{};
};

/// Defined points only, aligned to the tail of the input dates.
struct IndicatorSeries {
    IndicatorKind kind;
    std::vector<IndicatorPoint> points;
};

namespace kernels {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Trailing mean over n values; defined from index `start + n - 1` where x is defined from `start`.
inline std::vector<double> sma(std::span<const double> x, std::size_t n, std::size_t start = 0) {
    std::vector<double> out(x.size(), kNaN);
    for (std::size_t i = start + n - 1; i < x.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = i + 1 - n; j <= i; ++j) s += x[j];
        out[i] = s / static_cast<double>(n);
    }
    return out;
}

/// SMA-seeded EMA with k = 2/(n+1). The update e += k(x - e) keeps a constant input fixed exactly.
inline std::vector<double> ema(std::span<const double> x, std::size_t n, std::size_t start = 0) {
    std::vector<double> out(x.size(), kNaN);
    const std::size_t seed = start + n - 1;
    if (seed >= x.size()) return out;
    double e = 0.0;
    for (std::size_t j = start; j <= seed; ++j) e += x[j];
    e /= static_cast<double>(n);
    out[seed] = e;
    const double k = 2.0 / (static_cast<double>(n) + 1.0);
    for (std::size_t i = seed + 1; i < x.size(); ++i) {
        e += k * (x[i] - e);
        out[i] = e;
    }
    return out;
}

/// Wilder smoothing of `x` defined from `start`: seed is the mean of the first n values.
inline std::vector<double> wilder(std::span<const double> x, std::size_t n, std::size_t start) {
    std::vector<double> out(x.size(), kNaN);
    const std::size_t seed = start + n - 1;
    if (seed >= x.size()) return out;
    double a = 0.0;
    for (std::size_t j = start; j <= seed; ++j) a += x[j];
    a /= static_cast<double>(n);
    out[seed] = a;
    const double nn = static_cast<double>(n);
    for (std::size_t i = seed + 1; i < x.size(); ++i) {
        a = (a * (nn - 1.0) + x[i]) / nn;
        out[i] = a;
    }
    return out;
}

}  // namespace kernels

inline IndicatorSeries compute_indicator(const BarSeries& series, const IndicatorKind& kind) {
    kind.validate();
    const std::size_t len = series.size();
    const std::size_t needed = min_history(kind);
    if (len < needed) throw InsufficientHistoryError(kind.name(), needed, len);

    std::vector<double> close(len), high(len), low(len), vol(len);
    for (std::size_t i = 0; i < len; ++i) {
        close[i] = series[i].close;
        high[i] = series[i].high;
        low[i] = series[i].low;
        vol[i] = static_cast<double>(series[i].volume);
    }
    const auto& p = kind.params;
    const auto n0 = p.empty() ? std::size_t{1} : static_cast<std::size_t>(p[0]);

    std::array<std::vector<double>, 3> cols;
    switch (kind.tag) {
        case IndicatorTag::SMA:
            cols[0] = kernels::sma(close, n0);
            break;
        case IndicatorTag::EMA:
            cols[0] = kernels::ema(close, n0);
            break;
        case IndicatorTag::VWMA: {
            cols[0].assign(len, kernels::kNaN);
            for (std::size_t i = n0 - 1; i < len; ++i) {
                double pv = 0.0, v = 0.0, c = 0.0;
                for (std::size_t j = i + 1 - n0; j <= i; ++j) {
                    pv += close[j] * vol[j];
                    v += vol[j];
                    c += close[j];
                }
                cols[0][i] = v > 0.0 ? pv / v : c / static_cast<double>(n0);
            }
            break;
        }
        case IndicatorTag::RSI: {
            std::vector<double> gain(len, 0.0), loss(len, 0.0);
            for (std::size_t i = 1; i < len; ++i) {
                const double d = close[i] - close[i - 1];
                gain[i] = d > 0.0 ? d : 0.0;
                loss[i] = d < 0.0 ? -d : 0.0;
            }
            const auto g = kernels::wilder(gain, n0, 1);
            const auto l = kernels::wilder(loss, n0, 1);
            cols[0].assign(len, kernels::kNaN);
            for (std::size_t i = n0; i < len; ++i) {
                if (l[i] == 0.0 && g[i] == 0.0) cols[0][i] = 50.0;
                else if (l[i] == 0.0) cols[0][i] = 100.0;
                else if (g[i] == 0.0) cols[0][i] = 0.0;
                else cols[0][i] = 100.0 - 100.0 / (1.0 + g[i] / l[i]);
            }
            break;
        }
        case IndicatorTag::STOCH: {
            const auto k = static_cast<std::size_t>(p[1]);
            const auto d = static_cast<std::size_t>(p[2]);
            std::vector<double> raw(len, kernels::kNaN);
            for (std::size_t i = n0 - 1; i < len; ++i) {
                double hi = high[i], lo = low[i];
                for (std::size_t j = i + 1 - n0; j <= i; ++j) {
                    hi = std::max(hi, high[j]);
                    lo = std::min(lo, low[j]);
                }
                raw[i] = hi == lo ? 50.0 : 100.0 * (close[i] - lo) / (hi - lo);
            }
            cols[0] = kernels::sma(raw, k, n0 - 1);
            cols[1] = kernels::sma(cols[0], d, n0 + k - 2);
            break;
        }
        case IndicatorTag::CCI: {
            std::vector<double> tp(len);
            for (std::size_t i = 0; i < len; ++i) tp[i] = (high[i] + low[i] + close[i]) / 3.0;
            const auto mean = kernels::sma(tp, n0);
            cols[0].assign(len, kernels::kNaN);
            for (std::size_t i = n0 - 1; i < len; ++i) {
                double mad = 0.0;
                for (std::size_t j = i + 1 - n0; j <= i; ++j) mad += std::abs(tp[j] - mean[i]);
                mad /= static_cast<double>(n0);
                cols[0][i] = mad == 0.0 ? 0.0 : (tp[i] - mean[i]) / (0.015 * mad);
            }
            break;
        }
        case IndicatorTag::BBANDS: {
            const double m = p[1];
            cols[0] = kernels::sma(close, n0);
            cols[1].assign(len, kernels::kNaN);
            cols[2].assign(len, kernels::kNaN);
            for (std::size_t i = n0 - 1; i < len; ++i) {
                double ss = 0.0;
                for (std::size_t j = i + 1 - n0; j <= i; ++j) ss += (close[j] - cols[0][i]) * (close[j] - cols[0][i]);
                const double sd = std::sqrt(ss / static_cast<double>(n0));
                cols[1][i] = cols[0][i] + m * sd;
                cols[2][i] = cols[0][i] - m * sd;
            }
            break;
        }
        case IndicatorTag::ATR: {
            std::vector<double> tr(len, 0.0);
            for (std::size_t i = 1; i < len; ++i)
                tr[i] = std::max({high[i] - low[i], std::abs(high[i] - close[i - 1]), std::abs(low[i] - close[i - 1])});
            cols[0] = kernels::wilder(tr, n0, 1);
            break;
        }
        case IndicatorTag::OBV: {
            cols[0].assign(len, 0.0);
            for (std::size_t i = 1; i < len; ++i) {
                double step = 0.0;
                if (close[i] > close[i - 1]) step = vol[i];
                else if (close[i] < close[i - 1]) step = -vol[i];
                cols[0][i] = cols[0][i - 1] + step;
            }
            break;
        }
        case IndicatorTag::CMF: {
            cols[0].assign(len, kernels::kNaN);
            for (std::size_t i = n0 - 1; i < len; ++i) {
                double flow = 0.0, v = 0.0;
                for (std::size_t j = i + 1 - n0; j <= i; ++j) {
                    const double range = high[j] - low[j];
                    const double mfm = range == 0.0 ? 0.0 : ((close[j] - low[j]) - (high[j] - close[j])) / range;
                    flow += mfm * vol[j];
                    v += vol[j];
                }
                cols[0][i] = v > 0.0 ? flow / v : 0.0;
            }
            break;
        }
        case IndicatorTag::MACD: {
            const auto fast = kernels::ema(close, static_cast<std::size_t>(p[0]));
            const auto slow = kernels::ema(close, static_cast<std::size_t>(p[1]));
            const auto line_start = static_cast<std::size_t>(std::max(p[0], p[1])) - 1;
            cols[0].assign(len, kernels::kNaN);
            for (std::size_t i = line_start; i < len; ++i) cols[0][i] = fast[i] - slow[i];
            cols[1] = kernels::ema(cols[0], static_cast<std::size_t>(p[2]), line_start);
            cols[2].assign(len, kernels::kNaN);
            for (std::size_t i = 0; i < len; ++i) cols[2][i] = cols[0][i] - cols[1][i];
            break;
        }
    }

    IndicatorSeries out{kind, {}};
    const std::size_t first = needed - 1;
    const std::size_t width = arity(kind.tag);
    out.points.reserve(len - first);
    for (std::size_t i = first; i < len; ++i) {
        IndicatorPoint pt{series[i].date, {}};
        for (std::size_t c = 0; c < width; ++c) pt.values[c] = cols[c][i];
        out.points.push_back(pt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tool text

inline std::string_view usage_note(IndicatorTag t) {
    switch (t) {
        case IndicatorTag::SMA:
            return "SMA: Simple moving average of closing prices over the period. Usage: Gauge trend "
                   "direction and dynamic support/resistance; compare price with the average to judge trend strength.";
        case IndicatorTag::EMA:
            return "EMA: Exponential moving average that weights recent closes more heavily. Usage: Track "
                   "short-term trend shifts earlier than the SMA; price crossing the EMA marks momentum changes.";
        case IndicatorTag::VWMA:
            return "VWMA: Moving average of closes weighted by traded volume. Usage: Confirm trends with volume; "
                   "price holding above the VWMA on rising volume supports the move.";
        case IndicatorTag::RSI:
            return "RSI: Measures momentum to flag overbought/oversold conditions. Usage: Apply 70/30 thresholds "
                   "and watch for divergence to signal reversals.";
        case IndicatorTag::STOCH:
            return "STOCH: Stochastic oscillator placing the close within the recent high-low range (%K) with a "
                   "smoothed signal line (%D). Usage: Readings above 80 or below 20 flag stretched conditions; "
                   "%K/%D crossovers mark turns.";
        case IndicatorTag::CCI:
            return "CCI: Commodity Channel Index measuring how far the typical price sits from its average. "
                   "Usage: Values beyond +100/-100 point to strong trends or stretched conditions.";
        case IndicatorTag::BBANDS:
            return "Bollinger Bands: Consist of a Middle Band (typically a 20-period SMA) and Upper/Lower Bands set "
                   "at \xC2\xB1" "2 standard deviations from the middle. Usage: The middle band serves as a dynamic "
                   "benchmark for price, the upper band highlights potential overbought or breakout zones, and the "
                   "lower band signals possible oversold conditions.";
        case IndicatorTag::ATR:
            return "ATR: Average True Range measuring daily price volatility. Usage: Scale stops and position size "
                   "to current volatility; a rising ATR signals expanding ranges.";
        case IndicatorTag::OBV:
            return "OBV: On-Balance Volume accumulates volume by the direction of each close. Usage: Rising OBV "
                   "confirms buying pressure; divergence from price can precede reversals.";
        case IndicatorTag::CMF:
            return "CMF: Chaikin Money Flow, volume-weighted accumulation over the period, bounded in [-1, 1]. "
                   "Usage: Positive values indicate buying pressure, negative values selling pressure.";
        case IndicatorTag::MACD:
            return "MACD: Momentum indicator composed of the MACD line (difference between two EMAs), the Signal "
                   "line (EMA of the MACD line), and the Histogram (gap between MACD and Signal). Usage: Identify "
                   "trend changes through MACD\xE2\x80\x93Signal crossovers, gauge momentum strength via Histogram "
                   "size, and watch for divergence between MACD and price as early reversal signals.";
    }
    return "";
}

/// Two decimals, without a negative sign on values that round to zero.
inline std::string format_2dp(double v) {
    auto s = fmt::format("{:.2f}", v);
    if (s == "-0.00") s = "0.00";
    return s;
}

inline std::string format_point(IndicatorTag t, const IndicatorPoint& p) {
    const auto& v = p.values;
    switch (t) {
        case IndicatorTag::BBANDS:
            return fmt::format("(Middle={},Upper={},Lower={})", format_2dp(v[0]), format_2dp(v[1]), format_2dp(v[2]));
        case IndicatorTag::MACD:
            return fmt::format("(MACD={},Signal={},Histogram={})", format_2dp(v[0]), format_2dp(v[1]), format_2dp(v[2]));
        case IndicatorTag::STOCH:
            return fmt::format("(K={},D={})", format_2dp(v[0]), format_2dp(v[1]));
        default:
            return format_2dp(v[0]);
    }
}

/// Header, arrow-joined values inside [curr_date - look_back_days, curr_date], then the usage note.
inline std::string render_indicator_text(const IndicatorSeries& ind, Date curr_date, long look_back_days) {
    const Date from = curr_date.minus_days(look_back_days);
    std::string out = fmt::format("## {} values from {} to {}:\n\n", to_string(ind.kind.tag), from.iso(),
                                  curr_date.iso());
    std::string joined;
    for (const auto& p : ind.points) {
        if (p.date < from || p.date > curr_date) continue;
        if (!joined.empty()) joined += "-> ";
        joined += format_point(ind.kind.tag, p);
    }
    out += joined.empty() ? std::string("No values in this window.") : joined;
    out += "\n\n";
    out += usage_note(ind.kind.tag);
    out += '\n';
    return out;
}

/// Golden-file CSV: `date,value[,value2,value3]` at full precision.
inline std::string indicator_csv(const IndicatorSeries& ind) {
    static constexpr std::array<std::string_view, 3> names = {"value", "value2", "value3"};
    const auto width = arity(ind.kind.tag);
    std::string out = "date";
    for (std::size_t c = 0; c < width; ++c) out += fmt::format(",{}", names[c]);
    out += '\n';
    for (const auto& p : ind.points) {
        out += p.date.iso();
        for (std::size_t c = 0; c < width; ++c) out += fmt::format(",{:.17g}", p.values[c]);
        out += '\n';
    }
    return out;
}

}  // namespace quantenv
