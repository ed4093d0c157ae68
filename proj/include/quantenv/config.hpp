#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "quantenv/backtest.hpp"
#include "quantenv/reward.hpp"

namespace quantenv {

/// Everything an operator can set from a config file. Defaults mirror the training hyperparameters.
struct Settings {
    RewardConfig reward;
    BacktestConfig backtest;
    PriceBasis price_basis = PriceBasis::Close;
    int max_tool_calls = 8;
    int session_idle_minutes = 30;

    void validate() const {
        reward.validate();
        backtest.validate();
        if (max_tool_calls < 1) throw Error(Errc::InvalidConfig, "max_tool_calls must be >= 1");
        if (session_idle_minutes < 1) throw Error(Errc::InvalidConfig, "session_idle_minutes must be >= 1");
    }
};

/// Flat `key = value` lines. `[section]` headers and `#` comments are accepted and ignored;
/// keys are global. Quotes around values are optional.
inline Settings parse_settings(std::istream& in) {
    Settings s;
    std::string line;
    std::size_t row = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++row;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '[') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw RowError(Errc::InvalidConfig, row, "expected key = value");
        const std::string key(detail::trim(text.substr(0, eq)));
        auto value = detail::trim(text.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (seen.count(key)) throw RowError(Errc::InvalidConfig, row, "duplicate key '" + key + "'");
        seen[key] = row;

        auto num = [&]() {
            auto v = detail::parse_number<double>(value);
            if (!v) throw RowError(Errc::InvalidConfig, row, key + ": expected a number");
            return *v;
        };
        auto integer = [&]() {
            auto v = detail::parse_number<int>(value);
            if (!v) throw RowError(Errc::InvalidConfig, row, key + ": expected an integer");
            return *v;
        };

        if (key == "H") s.reward.H = integer();
        else if (key == "eta") s.reward.eta = num();
        else if (key == "theta") s.reward.theta = num();
        else if (key == "alpha") s.reward.alpha = num();
        else if (key == "min_token") s.reward.min_token = integer();
        else if (key == "max_token") s.reward.max_token = integer();
        else if (key == "min_tool") s.reward.min_tool = integer();
        else if (key == "max_tool") s.reward.max_tool = integer();
        else if (key == "c_fmt") s.reward.c_fmt = num();
        else if (key == "c_band") s.reward.c_band = num();
        else if (key == "c_pat") s.reward.c_pat = num();
        else if (key == "c_mal") s.reward.c_mal = num();
        else if (key == "c_mal_cap") s.reward.c_mal_cap = num();
        else if (key == "token_count") {
            if (value == "whitespace") s.reward.token_count = TokenCount::Whitespace;
            else if (value == "chars_div4") s.reward.token_count = TokenCount::CharsDiv4;
            else throw RowError(Errc::InvalidConfig, row, "token_count: expected whitespace or chars_div4");
        } else if (key == "lambda") s.backtest.lambda = num();
        else if (key == "kappa") s.backtest.kappa = num();
        else if (key == "initial_cash") s.backtest.initial_cash = num();
        else if (key == "price_basis") {
            auto b = parse_price_basis(value);
            if (!b) throw RowError(Errc::InvalidConfig, row, "price_basis: expected close or adj_close");
            s.price_basis = *b;
        } else if (key == "max_tool_calls") s.max_tool_calls = integer();
        else if (key == "session_idle_minutes") s.session_idle_minutes = integer();
        else throw RowError(Errc::InvalidConfig, row, "unknown key '" + key + "'");
    }
    s.validate();
    return s;
}

inline Settings parse_settings(const std::string& text) {
    std::istringstream in(text);
    return parse_settings(in);
}

inline Settings load_settings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open config " + path.string());
    return parse_settings(in);
}

}  // namespace quantenv
