#pragma once

#include <optional>
#include <string_view>

namespace quantenv {

enum class Action { Buy, Sell, Hold };

inline constexpr std::string_view to_string(Action a) {
    switch (a) {
        case Action::Buy: return "BUY";
        case Action::Sell: return "SELL";
        case Action::Hold: return "HOLD";
    }
    return "";
}

/// Case-sensitive: only "BUY", "SELL", "HOLD".
inline std::optional<Action> parse_action(std::string_view s) {
    if (s == "BUY") return Action::Buy;
    if (s == "SELL") return Action::Sell;
    if (s == "HOLD") return Action::Hold;
    return std::nullopt;
}

}  // namespace quantenv
