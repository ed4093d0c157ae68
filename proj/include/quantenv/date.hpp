#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace quantenv {

/// Calendar date with day resolution. Ordering and arithmetic are in calendar days.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

    static constexpr Date from_ymd(int y, unsigned m, unsigned d) {
        return Date{std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} /
                                          std::chrono::day{d}}};
    }

    /// Strict `YYYY-MM-DD`; rejects anything else, including impossible days.
    static std::optional<Date> parse(std::string_view text) {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
        int fields[3] = {0, 0, 0};
        const std::size_t starts[3] = {0, 5, 8};
        const std::size_t lens[3] = {4, 2, 2};
        for (int f = 0; f < 3; ++f) {
            for (std::size_t i = 0; i < lens[f]; ++i) {
                const char c = text[starts[f] + i];
                if (c < '0' || c > '9') return std::nullopt;
                fields[f] = fields[f] * 10 + (c - '0');
            }
        }
        const std::chrono::year_month_day ymd{std::chrono::year{fields[0]},
                                              std::chrono::month{static_cast<unsigned>(fields[1])},
                                              std::chrono::day{static_cast<unsigned>(fields[2])}};
        if (!ymd.ok()) return std::nullopt;
        return Date{std::chrono::sys_days{ymd}};
    }

    [[nodiscard]] std::string iso() const {
        const std::chrono::year_month_day ymd{days_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    [[nodiscard]] constexpr std::chrono::sys_days sys_days() const { return days_; }

    [[nodiscard]] constexpr bool is_weekend() const {
        const std::chrono::weekday wd{days_};
        return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
    }

    [[nodiscard]] constexpr Date minus_days(long n) const {
        return Date{days_ - std::chrono::days{n}};
    }
    [[nodiscard]] constexpr Date plus_days(long n) const {
        return Date{days_ + std::chrono::days{n}};
    }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace quantenv
