#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "quantenv/corpus.hpp"
#include "quantenv/indicators.hpp"

namespace quantenv {

enum class Tool {
    MarketData,
    StockIndicators,
    News,
    Reddit,
    Macro,
    BalanceSheet,
    Cashflow,
    IncomeStatements,
    InsiderTransactions,
    Dividends,
    EarningsEstimate,
};

inline constexpr std::array kAllTools = {
    Tool::MarketData,   Tool::StockIndicators,  Tool::News,
    Tool::Reddit,       Tool::Macro,            Tool::BalanceSheet,
    Tool::Cashflow,     Tool::IncomeStatements, Tool::InsiderTransactions,
    Tool::Dividends,    Tool::EarningsEstimate,
};

inline constexpr std::string_view to_string(Tool t) {
    switch (t) {
        case Tool::MarketData: return "get_market_data";
        case Tool::StockIndicators: return "get_stock_indicators";
        case Tool::News: return "get_news_data";
        case Tool::Reddit: return "get_reddit_data";
        case Tool::Macro: return "get_macro_indicators";
        case Tool::BalanceSheet: return "get_balance_sheet";
        case Tool::Cashflow: return "get_cashflow";
        case Tool::IncomeStatements: return "get_income_statements";
        case Tool::InsiderTransactions: return "get_insider_transactions";
        case Tool::Dividends: return "get_dividends";
        case Tool::EarningsEstimate: return "get_earnings_estimate";
    }
    return "";
}

inline std::optional<Tool> parse_tool(std::string_view s) {
    for (auto t : kAllTools)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

/// Window used when a call omits look_back_days.
inline constexpr long default_look_back(Tool t) {
    switch (t) {
        case Tool::MarketData:
        case Tool::StockIndicators: return 14;
        case Tool::News:
        case Tool::Reddit: return 2;
        case Tool::Macro: return 30;
        case Tool::InsiderTransactions: return 7;
        case Tool::EarningsEstimate: return 90;
        case Tool::BalanceSheet:
        case Tool::Cashflow:
        case Tool::IncomeStatements:
        case Tool::Dividends: return 365;
    }
    return 14;
}

inline constexpr std::optional<Category> document_category(Tool t) {
    switch (t) {
        case Tool::News: return Category::News;
        case Tool::Reddit: return Category::Reddit;
        case Tool::Macro: return Category::Macro;
        case Tool::BalanceSheet: return Category::BalanceSheet;
        case Tool::Cashflow: return Category::Cashflow;
        case Tool::IncomeStatements: return Category::IncomeStatement;
        case Tool::InsiderTransactions: return Category::InsiderTransaction;
        case Tool::Dividends: return Category::Dividend;
        case Tool::EarningsEstimate: return Category::EarningsEstimate;
        default: return std::nullopt;
    }
}

/// A tool call whose arguments passed schema validation.
struct ToolCall {
    Tool tool{};
    std::string symbol;
    Date curr_date;
    long look_back_days = 0;
    std::optional<IndicatorKind> indicator;
};

/// Signature violation. The message is shown to the agent verbatim.
class MalformedArgumentsError : public Error {
public:
    MalformedArgumentsError(std::string tool, const std::string& reason)
        : Error(Errc::MalformedArguments, tool + ": " + reason), tool_(std::move(tool)), reason_(reason) {}

    [[nodiscard]] const std::string& tool() const noexcept { return tool_; }
    [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

private:
    std::string tool_;
    std::string reason_;
};

/// Validates `arguments` against the tool signature. `episode_date` bounds curr_date
/// and fills it in when omitted.
inline ToolCall parse_tool_call(std::string_view name, const nlohmann::json& arguments, Date episode_date) {
    const std::string tname(name);
    auto tool = parse_tool(name);
    if (!tool) throw MalformedArgumentsError(tname, "unknown tool");
    auto fail = [&](const std::string& why) { throw MalformedArgumentsError(tname, why); };
    if (!arguments.is_object()) fail("arguments must be a JSON object");

    for (const auto& [key, _] : arguments.items()) {
        const bool known = key == "symbol" || key == "curr_date" || key == "look_back_days" ||
                           (key == "indicator" && *tool == Tool::StockIndicators);
        if (!known) fail("unexpected argument '" + key + "'");
    }

    ToolCall call;
    call.tool = *tool;
    if (arguments.contains("symbol")) {
        if (!arguments["symbol"].is_string() || arguments["symbol"].get<std::string>().empty())
            fail("'symbol' must be a non-empty string");
        call.symbol = arguments["symbol"].get<std::string>();
    } else if (*tool != Tool::Macro) {
        fail("missing required argument 'symbol'");
    }

    call.curr_date = episode_date;
    if (arguments.contains("curr_date")) {
        const auto& v = arguments["curr_date"];
        std::optional<Date> d;
        if (v.is_string()) d = Date::parse(v.get<std::string>());
        if (!d) fail("'curr_date' must be an ISO date (YYYY-MM-DD)");
        if (*d > episode_date) fail("'curr_date' " + d->iso() + " is after the current date " + episode_date.iso());
        call.curr_date = *d;
    }

    call.look_back_days = default_look_back(*tool);
    if (arguments.contains("look_back_days")) {
        const auto& v = arguments["look_back_days"];
        if (v.is_number_integer()) {
            if (v.get<long long>() < 0) fail("'look_back_days' must be >= 0");
            call.look_back_days = static_cast<long>(v.get<long long>());
        } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() && v.get<double>() >= 0 &&
                   v.get<double>() < 1e6) {
            call.look_back_days = static_cast<long>(v.get<double>());
        } else {
            fail("'look_back_days' must be an integer >= 0");
        }
        if (call.look_back_days > 100000) fail("'look_back_days' is too large");
    }

    if (*tool == Tool::StockIndicators) {
        if (!arguments.contains("indicator")) fail("missing required argument 'indicator'");
        if (!arguments["indicator"].is_string()) fail("'indicator' must be a string");
        auto tag = parse_indicator_tag(arguments["indicator"].get<std::string>());
        if (!tag) {
            std::string names;
            for (auto t : kAllIndicatorTags) names += (names.empty() ? "" : ", ") + std::string(to_string(t));
            fail("unknown indicator '" + arguments["indicator"].get<std::string>() + "' (expected one of " + names + ")");
        }
        call.indicator = IndicatorKind::defaults(*tag);
    }
    return call;
}

namespace detail {

inline std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return fmt::format("{}", v.get<double>());
    return v.dump();
}

inline std::string pad_left(std::string_view s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + std::string(s);
}
inline std::string pad_right(std::string_view s, std::size_t w) {
    return std::string(s) + std::string(w > s.size() ? w - s.size() : 0, ' ');
}

}  // namespace detail

/// Positional-index table: index column left-aligned, data columns right-aligned, two-space gaps.
inline std::string render_bar_table(const BarSeries& bars) {
    const std::vector<std::string> headers = {"Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"};
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> index;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& b = bars[i];
        index.push_back(std::to_string(i));
        cells.push_back({b.date.iso(), fmt::format("{:.2f}", b.open), fmt::format("{:.2f}", b.high),
                         fmt::format("{:.2f}", b.low), fmt::format("{:.2f}", b.close),
                         fmt::format("{:.2f}", b.adj_close), std::to_string(b.volume)});
    }
    std::size_t iw = 0;
    for (const auto& s : index) iw = std::max(iw, s.size());
    std::vector<std::size_t> w(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        w[c] = headers[c].size();
        for (const auto& row : cells) w[c] = std::max(w[c], row[c].size());
    }
    std::string out = std::string(iw, ' ');
    for (std::size_t c = 0; c < headers.size(); ++c) out += "  " + detail::pad_left(headers[c], w[c]);
    out += '\n';
    for (std::size_t r = 0; r < cells.size(); ++r) {
        out += detail::pad_right(index[r], iw);
        for (std::size_t c = 0; c < headers.size(); ++c) out += "  " + detail::pad_left(cells[r][c], w[c]);
        out += '\n';
    }
    return out;
}

/// Alpha Vantage sentiment buckets, applied to the unrounded score.
inline std::string_view sentiment_label(double x) {
    if (x <= -0.35) return "Bearish";
    if (x <= -0.15) return "Somewhat-Bearish";
    if (x < 0.15) return "Neutral";
    if (x < 0.35) return "Somewhat-Bullish";
    return "Bullish";
}

inline std::string render_documents(Tool tool, const std::string& symbol, Date from, Date to,
                                    const std::vector<Document>& docs) {
    std::string out;
    const auto a = from.iso();
    const auto b = to.iso();
    switch (tool) {
        case Tool::News:
            out = fmt::format("## {} News, from {} to {}:\n", symbol, a, b);
            out += "Interpret the sentiment score x: values near 0 are Neutral, larger positive values indicate "
                   "increasingly Bullish, and larger negative values indicate increasingly Bearish.\n";
            for (const auto& d : docs) {
                const double s = d.payload["sentiment"].get<double>();
                out += fmt::format("{} [Sentiment score = {}, {}] {}\n", d.date.iso(), format_2dp(s),
                                   sentiment_label(s), d.payload["headline"].get<std::string>());
                const auto summary = d.payload["summary"].get<std::string>();
                if (!summary.empty()) out += "    " + summary + "\n";
            }
            break;
        case Tool::Reddit:
            out = fmt::format("## {} Reddit posts, from {} to {}:\n", symbol, a, b);
            for (const auto& d : docs)
                out += fmt::format("{} {}\n    {}\n", d.date.iso(), d.payload["title"].get<std::string>(),
                                   d.payload["summary"].get<std::string>());
            break;
        case Tool::Macro:
            out = fmt::format("## Macro indicators from {} to {}:\n", a, b);
            for (const auto& d : docs)
                out += fmt::format("{} {} = {}\n", d.date.iso(), d.payload["indicator"].get<std::string>(),
                                   detail::scalar_text(d.payload["value"]));
            break;
        case Tool::BalanceSheet:
        case Tool::Cashflow:
        case Tool::IncomeStatements: {
            const std::string_view title = tool == Tool::BalanceSheet ? "balance sheet"
                                           : tool == Tool::Cashflow   ? "cash flow statement"
                                                                      : "income statement";
            out = fmt::format("## {} {} from {} to {}:\n", symbol, title, a, b);
            for (const auto& d : docs) {
                out += fmt::format("### Period: {} (reported {})\n", d.payload["period"].get<std::string>(), d.date.iso());
                for (const auto& [k, v] : d.payload["fields"].items())
                    out += fmt::format("{}: {}\n", k, detail::scalar_text(v));
                out += '\n';
            }
            break;
        }
        case Tool::InsiderTransactions:
            out = fmt::format("## {} insider transactions from {} to {}:\n", symbol, a, b);
            for (const auto& d : docs) {
                auto dir = d.payload["direction"].get<std::string>();
                dir[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(dir[0])));
                out += fmt::format("### Transaction Date: {}, {} ({})\nType: Common Stock\nShares: {} ({})\n\n",
                                   d.date.iso(), d.payload["name"].get<std::string>(),
                                   d.payload["role"].get<std::string>(), d.payload["shares"].get<double>(), dir);
            }
            break;
        case Tool::Dividends:
            out = fmt::format("## {} dividends from {} to {}:\n", symbol, a, b);
            for (const auto& d : docs)
                out += fmt::format("{} Amount: {}\n", d.date.iso(), detail::scalar_text(d.payload["amount"]));
            break;
        case Tool::EarningsEstimate:
            out = fmt::format("## {} earnings estimates from {} to {}:\n", symbol, a, b);
            for (const auto& d : docs)
                out += fmt::format("### Estimate Date: {}, Horizon: {}\nEPS estimate: {}\nRevenue estimate: {}\n"
                                   "Analysts: {}\n\n",
                                   d.date.iso(), d.payload["horizon"].get<std::string>(),
                                   detail::scalar_text(d.payload["eps_estimate"]),
                                   detail::scalar_text(d.payload["revenue_estimate"]),
                                   d.payload["num_analysts"].get<long long>());
            break;
        default:
            break;
    }
    if (docs.empty()) out += "No records in this window.\n";
    return out;
}

/// Executes a validated call against the corpus. Never reads anything dated after call.curr_date.
inline std::string run_tool(const Corpus& corpus, const ToolCall& call, PriceBasis basis = PriceBasis::Close) {
    const Date from = call.curr_date.minus_days(call.look_back_days);
    const std::string tname(to_string(call.tool));

    if (call.tool == Tool::MarketData || call.tool == Tool::StockIndicators) {
        if (!corpus.has_symbol(call.symbol)) throw MalformedArgumentsError(tname, "unknown symbol '" + call.symbol + "'");
        const auto& series = corpus.series(call.symbol);
        const auto visible = series.through(call.curr_date);

        if (call.tool == Tool::MarketData) {
            const auto rows = visible.slice(visible.count_through(from.minus_days(1)), visible.size());
            if (rows.empty())
                return fmt::format("No market data for {} between {} and {}.\n", call.symbol, from.iso(),
                                   call.curr_date.iso());
            return render_bar_table(rows);
        }

        const auto& kind = *call.indicator;
        try {
            return render_indicator_text(compute_indicator(with_basis(visible, basis), kind), call.curr_date,
                                         call.look_back_days);
        } catch (const InsufficientHistoryError& e) {
            return fmt::format("## {} values from {} to {}:\n\nInsufficient history: {} needs {} bars, {} available "
                               "through {}.\n\n{}\n",
                               to_string(kind.tag), from.iso(), call.curr_date.iso(), kind.name(), e.needed(),
                               e.got(), call.curr_date.iso(), usage_note(kind.tag));
        }
    }

    const auto category = *document_category(call.tool);
    const auto docs = corpus.query_documents(category, call.symbol, call.curr_date, call.look_back_days);
    return render_documents(call.tool, call.symbol, from, call.curr_date, docs);
}

}  // namespace quantenv
