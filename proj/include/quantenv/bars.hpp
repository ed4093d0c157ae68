#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quantenv/date.hpp"
#include "quantenv/error.hpp"

namespace quantenv {

/// One trading day of OHLCV for one symbol.
struct Bar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double adj_close = 0.0;
    std::int64_t volume = 0;

    bool operator==(const Bar&) const = default;
};

/// Which price column drives a computation. Close unless configured otherwise.
enum class PriceBasis { Close, AdjClose };

inline std::optional<PriceBasis> parse_price_basis(std::string_view s) {
    if (s == "close") return PriceBasis::Close;
    if (s == "adj_close") return PriceBasis::AdjClose;
    return std::nullopt;
}

inline std::string_view to_string(PriceBasis b) {
    return b == PriceBasis::Close ? "close" : "adj_close";
}

/// Returns the reason a bar breaks an invariant, or nullopt when it is valid.
inline std::optional<std::string> bar_violation(const Bar& b) {
    for (double p : {b.open, b.high, b.low, b.close, b.adj_close}) {
        if (!std::isfinite(p) || p <= 0.0) return "prices must be finite and strictly positive";
    }
    if (b.low > b.high) return "low above high";
    if (b.open < b.low || b.open > b.high) return "open outside [low, high]";
    if (b.close < b.low || b.close > b.high) return "close outside [low, high]";
    if (b.volume < 0) return "negative volume";
    return std::nullopt;
}

/// Bars for one symbol with strictly increasing dates. Non-trading days are simply absent.
class BarSeries {
public:
    BarSeries() = default;

    BarSeries(std::string symbol, std::vector<Bar> bars)
        : symbol_(std::move(symbol)), bars_(std::move(bars)) {
        for (std::size_t i = 0; i < bars_.size(); ++i) {
            if (auto why = bar_violation(bars_[i])) throw RowError(Errc::MalformedRow, i + 1, *why);
            if (i > 0 && bars_[i].date <= bars_[i - 1].date)
                throw RowError(Errc::NonMonotonicDates, i + 1, "dates must strictly increase");
        }
    }

    [[nodiscard]] const std::string& symbol() const noexcept { return symbol_; }
    [[nodiscard]] std::span<const Bar> bars() const noexcept { return bars_; }
    [[nodiscard]] std::size_t size() const noexcept { return bars_.size(); }
    [[nodiscard]] bool empty() const noexcept { return bars_.empty(); }
    [[nodiscard]] const Bar& operator[](std::size_t i) const { return bars_[i]; }
    [[nodiscard]] const Bar& front() const { return bars_.front(); }
    [[nodiscard]] const Bar& back() const { return bars_.back(); }

    /// Index of the bar dated exactly `d`.
    [[nodiscard]] std::optional<std::size_t> find(Date d) const {
        auto it = std::lower_bound(bars_.begin(), bars_.end(), d,
                                   [](const Bar& b, Date x) { return b.date < x; });
        if (it == bars_.end() || it->date != d) return std::nullopt;
        return static_cast<std::size_t>(it - bars_.begin());
    }

    /// Number of bars dated on or before `d`.
    [[nodiscard]] std::size_t count_through(Date d) const {
        auto it = std::upper_bound(bars_.begin(), bars_.end(), d,
                                   [](Date x, const Bar& b) { return x < b.date; });
        return static_cast<std::size_t>(it - bars_.begin());
    }

    /// Bars with index in [first, last).
    [[nodiscard]] BarSeries slice(std::size_t first, std::size_t last) const {
        BarSeries out;
        out.symbol_ = symbol_;
        out.bars_.assign(bars_.begin() + static_cast<std::ptrdiff_t>(first),
                         bars_.begin() + static_cast<std::ptrdiff_t>(last));
        return out;
    }

    /// Every bar dated on or before `d`. The only view indicator tools ever see.
    [[nodiscard]] BarSeries through(Date d) const { return slice(0, count_through(d)); }

    [[nodiscard]] std::vector<double> prices(PriceBasis basis = PriceBasis::Close) const {
        std::vector<double> out;
        out.reserve(bars_.size());
        for (const auto& b : bars_) out.push_back(basis == PriceBasis::Close ? b.close : b.adj_close);
        return out;
    }

    bool operator==(const BarSeries&) const = default;

private:
    std::string symbol_;
    std::vector<Bar> bars_;
};

/// OHLC rescaled by adj_close / close so ranges stay consistent with adjusted closes.
inline BarSeries adjusted(const BarSeries& series) {
    std::vector<Bar> out(series.bars().begin(), series.bars().end());
    for (auto& b : out) {
        const double f = b.adj_close / b.close;
        b.open *= f;
        b.high *= f;
        b.low *= f;
        b.close = b.adj_close;
    }
    return BarSeries(series.symbol(), std::move(out));
}

inline BarSeries with_basis(const BarSeries& series, PriceBasis basis) {
    return basis == PriceBasis::Close ? series : adjusted(series);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

}  // namespace detail

inline constexpr std::string_view kBarsHeader = "date,open,high,low,close,adj_close,volume";

/// Parses the bars CSV. Rows are numbered from 1 (first data row) in errors.
inline BarSeries parse_bars(std::istream& in, const std::string& symbol) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::EmptyFile, "no header and no data rows");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    {
        const auto cols = detail::split(line, ',');
        std::string joined;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) joined += ',';
            joined += cols[i];
        }
        if (joined != kBarsHeader)
            throw RowError(Errc::MalformedRow, 0, "expected header '" + std::string(kBarsHeader) + "'");
    }

    std::vector<Bar> bars;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto f = detail::split(line, ',');
        if (f.size() != 7) throw RowError(Errc::MalformedRow, row, "expected 7 fields, got " + std::to_string(f.size()));
        Bar b;
        auto d = Date::parse(f[0]);
        if (!d) throw RowError(Errc::MalformedRow, row, "bad date '" + std::string(f[0]) + "'");
        b.date = *d;
        double* targets[5] = {&b.open, &b.high, &b.low, &b.close, &b.adj_close};
        for (int k = 0; k < 5; ++k) {
            auto v = detail::parse_number<double>(f[1 + k]);
            if (!v) throw RowError(Errc::MalformedRow, row, "bad price '" + std::string(f[1 + k]) + "'");
            *targets[k] = *v;
        }
        auto vol = detail::parse_number<std::int64_t>(f[6]);
        if (!vol) throw RowError(Errc::MalformedRow, row, "bad volume '" + std::string(f[6]) + "'");
        b.volume = *vol;
        if (auto why = bar_violation(b)) throw RowError(Errc::MalformedRow, row, *why);
        if (!bars.empty() && b.date <= bars.back().date)
            throw RowError(Errc::NonMonotonicDates, row,
                           b.date.iso() + " does not follow " + bars.back().date.iso());
        bars.push_back(b);
    }
    if (bars.empty()) throw Error(Errc::EmptyFile, "no data rows");
    return BarSeries(symbol, std::move(bars));
}

inline BarSeries ingest_bars(const std::filesystem::path& path, const std::string& symbol) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return parse_bars(in, symbol);
}

/// Bars dated within [curr_date - look_back_days, curr_date], both ends inclusive.
inline BarSeries window(const BarSeries& series, Date curr_date, long look_back_days) {
    if (look_back_days < 0) throw Error(Errc::InvalidArgument, "look_back_days must be >= 0");
    if (series.empty() || curr_date < series.front().date)
        throw Error(Errc::DateBeforeSeries, curr_date.iso() + " precedes the first bar of " + series.symbol());
    const Date from = curr_date.minus_days(look_back_days);
    const auto first = series.count_through(from.minus_days(1));
    const auto last = series.count_through(curr_date);
    return series.slice(first, last);
}

}  // namespace quantenv
