#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "quantenv/bars.hpp"

namespace quantenv {

enum class Category {
    News,
    Reddit,
    Macro,
    BalanceSheet,
    Cashflow,
    IncomeStatement,
    InsiderTransaction,
    Dividend,
    EarningsEstimate,
};

inline constexpr std::array kAllCategories = {
    Category::News,         Category::Reddit,          Category::Macro,
    Category::BalanceSheet, Category::Cashflow,        Category::IncomeStatement,
    Category::InsiderTransaction, Category::Dividend,  Category::EarningsEstimate,
};

inline constexpr std::string_view to_string(Category c) {
    switch (c) {
        case Category::News: return "news";
        case Category::Reddit: return "reddit";
        case Category::Macro: return "macro";
        case Category::BalanceSheet: return "balance_sheet";
        case Category::Cashflow: return "cashflow";
        case Category::IncomeStatement: return "income_statement";
        case Category::InsiderTransaction: return "insider_transaction";
        case Category::Dividend: return "dividend";
        case Category::EarningsEstimate: return "earnings_estimate";
    }
    return "";
}

inline std::optional<Category> parse_category(std::string_view s) {
    for (auto c : kAllCategories)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

/// Macro series are not tied to a ticker and live under this symbol.
inline constexpr std::string_view kGlobalSymbol = "GLOBAL";

struct Document {
    Date date;
    Category category{};
    std::string symbol;
    nlohmann::json payload;  // every key of the record except date and symbol

    bool operator==(const Document&) const = default;
};

namespace detail {

inline std::optional<std::string> check_payload(Category c, const nlohmann::json& p) {
    auto need_string = [&](const char* k) -> std::optional<std::string> {
        if (!p.contains(k) || !p[k].is_string()) return std::string("'") + k + "' must be a string";
        return std::nullopt;
    };
    auto need_number = [&](const char* k) -> std::optional<std::string> {
        if (!p.contains(k) || !p[k].is_number() || !std::isfinite(p[k].get<double>()))
            return std::string("'") + k + "' must be a finite number";
        return std::nullopt;
    };
    auto first = [](std::initializer_list<std::optional<std::string>> checks) -> std::optional<std::string> {
        for (const auto& c : checks)
            if (c) return c;
        return std::nullopt;
    };

    switch (c) {
        case Category::News:
            return first({need_string("headline"), need_string("summary"), need_number("sentiment")});
        case Category::Reddit:
            return first({need_string("title"), need_string("summary")});
        case Category::Macro:
            return first({need_string("indicator"), need_number("value")});
        case Category::BalanceSheet:
        case Category::Cashflow:
        case Category::IncomeStatement: {
            if (auto e = need_string("period")) return e;
            if (!p.contains("fields") || !p["fields"].is_object()) return "'fields' must be an object";
            for (const auto& [k, v] : p["fields"].items())
                if (v.is_object() || v.is_array()) return "'fields." + k + "' must be a scalar";
            return std::nullopt;
        }
        case Category::InsiderTransaction: {
            if (auto e = first({need_string("name"), need_string("role"), need_number("shares"),
                                need_string("direction")}))
                return e;
            const auto dir = p["direction"].get<std::string>();
            if (dir != "acquisition" && dir != "disposal")
                return "'direction' must be acquisition or disposal";
            if (p["shares"].get<double>() < 0) return "'shares' must be non-negative";
            return std::nullopt;
        }
        case Category::Dividend:
            return need_number("amount");
        case Category::EarningsEstimate: {
            if (auto e = first({need_string("horizon"), need_number("eps_estimate"),
                                need_number("revenue_estimate")}))
                return e;
            if (!p.contains("num_analysts") || !p["num_analysts"].is_number_integer() ||
                p["num_analysts"].get<long long>() < 0)
                return "'num_analysts' must be a non-negative integer";
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Parses one category's JSON-lines file. Rows count non-blank lines from 1.
inline std::vector<Document> parse_documents(std::istream& in, Category category) {
    std::vector<Document> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw RowError(Errc::MalformedRow, row, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw RowError(Errc::MalformedRow, row, "record must be a JSON object");
        if (!j.contains("date") || !j["date"].is_string())
            throw RowError(Errc::MalformedRow, row, "'date' must be a string");
        auto d = Date::parse(j["date"].get<std::string>());
        if (!d) throw RowError(Errc::MalformedRow, row, "bad date");
        if (!j.contains("symbol") || !j["symbol"].is_string())
            throw RowError(Errc::MalformedRow, row, "'symbol' must be a string");
        auto symbol = j["symbol"].get<std::string>();
        if (category == Category::Macro && symbol != kGlobalSymbol)
            throw RowError(Errc::MalformedRow, row, "macro records must use symbol GLOBAL");
        j.erase("date");
        j.erase("symbol");
        if (auto why = detail::check_payload(category, j)) throw RowError(Errc::MalformedRow, row, *why);
        out.push_back(Document{*d, category, std::move(symbol), std::move(j)});
    }
    return out;
}

/// Read-only market data and documents. Build once, then share freely across threads.
class Corpus {
public:
    Corpus() = default;

    void add_series(BarSeries series) {
        auto key = series.symbol();
        series_.insert_or_assign(std::move(key), std::move(series));
    }

    void add_documents(std::vector<Document> docs) {
        for (auto& d : docs) {
            const auto key = d.category == Category::Macro ? std::string(kGlobalSymbol) : d.symbol;
            documents_[static_cast<std::size_t>(d.category)][key].push_back(std::move(d));
        }
        for (auto& by_symbol : documents_)
            for (auto& [_, list] : by_symbol)
                std::stable_sort(list.begin(), list.end(),
                                 [](const Document& a, const Document& b) { return a.date < b.date; });
    }

    /// Loads `<dir>/bars/<SYMBOL>.csv` and `<dir>/documents/<category>.jsonl`.
    static Corpus load(const std::filesystem::path& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir)) throw Error(Errc::Io, "corpus directory not found: " + dir.string());
        Corpus corpus;
        const auto bars_dir = dir / "bars";
        if (fs::is_directory(bars_dir)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(bars_dir))
                if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                try {
                    corpus.add_series(ingest_bars(f, f.stem().string()));
                } catch (const RowError& e) {
                    throw RowError(e.code(), e.row(), f.filename().string() + ": " + e.what());
                }
            }
        }
        const auto docs_dir = dir / "documents";
        for (auto c : kAllCategories) {
            const auto path = docs_dir / (std::string(to_string(c)) + ".jsonl");
            if (!fs::exists(path)) continue;
            std::ifstream in(path);
            if (!in) throw Error(Errc::Io, "cannot open " + path.string());
            try {
                corpus.add_documents(parse_documents(in, c));
            } catch (const RowError& e) {
                throw RowError(e.code(), e.row(), path.filename().string() + ": " + e.what());
            }
        }
        return corpus;
    }

    [[nodiscard]] bool has_symbol(const std::string& symbol) const { return series_.count(symbol) != 0; }

    [[nodiscard]] const BarSeries& series(const std::string& symbol) const {
        auto it = series_.find(symbol);
        if (it == series_.end()) throw Error(Errc::UnknownSymbol, symbol);
        return it->second;
    }

    [[nodiscard]] std::vector<std::string> symbols() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : series_) out.push_back(k);
        return out;
    }

    [[nodiscard]] std::size_t document_count(Category c) const {
        std::size_t n = 0;
        for (const auto& [_, list] : documents_[static_cast<std::size_t>(c)]) n += list.size();
        return n;
    }

    /// Documents dated within [curr_date - look_back_days, curr_date], ascending.
    /// Nothing dated after curr_date is ever returned. Macro ignores `symbol`.
    [[nodiscard]] std::vector<Document> query_documents(Category category, const std::string& symbol,
                                                        Date curr_date, long look_back_days) const {
        if (look_back_days < 0) throw Error(Errc::InvalidArgument, "look_back_days must be >= 0");
        const auto& by_symbol = documents_[static_cast<std::size_t>(category)];
        const auto key = category == Category::Macro ? std::string(kGlobalSymbol) : symbol;
        auto it = by_symbol.find(key);
        if (it == by_symbol.end()) return {};
        const Date from = curr_date.minus_days(look_back_days);
        std::vector<Document> out;
        for (const auto& d : it->second)
            if (d.date >= from && d.date <= curr_date) out.push_back(d);
        return out;
    }

    [[nodiscard]] std::vector<Document> query_documents(std::string_view category, const std::string& symbol,
                                                        Date curr_date, long look_back_days) const {
        auto c = parse_category(category);
        if (!c) throw Error(Errc::UnknownCategory, std::string(category));
        return query_documents(*c, symbol, curr_date, look_back_days);
    }

private:
    std::map<std::string, BarSeries> series_;
    std::array<std::map<std::string, std::vector<Document>>, kAllCategories.size()> documents_;
};

}  // namespace quantenv
