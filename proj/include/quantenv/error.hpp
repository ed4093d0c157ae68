#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace quantenv {

enum class Errc {
    Io,
    MalformedRow,
    NonMonotonicDates,
    EmptyFile,
    UnknownCategory,
    InvalidArgument,
    InvalidConfig,
    UnknownSymbol,
    NotATradingDay,
    DateBeforeSeries,
    DateOutOfRange,
    InsufficientHistory,
    InsufficientFuture,
    EmptySeries,
    EpisodeTerminated,
    ToolBudgetExhausted,
    MalformedArguments,
    NonPositivePrice,
    LengthMismatch,
    MissingExecutionDay,
    DegenerateSeries,
    AgentUnreachable,
};

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::Io: return "Io";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::NonMonotonicDates: return "NonMonotonicDates";
        case Errc::EmptyFile: return "EmptyFile";
        case Errc::UnknownCategory: return "UnknownCategory";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::UnknownSymbol: return "UnknownSymbol";
        case Errc::NotATradingDay: return "NotATradingDay";
        case Errc::DateBeforeSeries: return "DateBeforeSeries";
        case Errc::DateOutOfRange: return "DateOutOfRange";
        case Errc::InsufficientHistory: return "InsufficientHistory";
        case Errc::InsufficientFuture: return "InsufficientFuture";
        case Errc::EmptySeries: return "EmptySeries";
        case Errc::EpisodeTerminated: return "EpisodeTerminated";
        case Errc::ToolBudgetExhausted: return "ToolBudgetExhausted";
        case Errc::MalformedArguments: return "MalformedArguments";
        case Errc::NonPositivePrice: return "NonPositivePrice";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::MissingExecutionDay: return "MissingExecutionDay";
        case Errc::DegenerateSeries: return "DegenerateSeries";
        case Errc::AgentUnreachable: return "AgentUnreachable";
    }
    return "Unknown";
}

/// Input errors are the caller's data or flags; domain errors are
/// preconditions of the simulation itself (CLI exit codes 1 and 2).
constexpr bool is_domain_error(Errc code) noexcept {
    switch (code) {
        case Errc::NotATradingDay:
        case Errc::DateBeforeSeries:
        case Errc::DateOutOfRange:
        case Errc::InsufficientHistory:
        case Errc::InsufficientFuture:
        case Errc::EmptySeries:
        case Errc::NonPositivePrice:
        case Errc::LengthMismatch:
        case Errc::MissingExecutionDay:
        case Errc::DegenerateSeries:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Row-indexed ingestion failure. `row` counts data rows from 1; 0 is the header.
class RowError : public Error {
public:
    RowError(Errc code, std::size_t row, const std::string& reason)
        : Error(code, "row " + std::to_string(row) + ": " + reason), row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class InsufficientHistoryError : public Error {
public:
    InsufficientHistoryError(std::string kind, std::size_t needed, std::size_t got)
        : Error(Errc::InsufficientHistory,
                kind + " needs " + std::to_string(needed) + " bars, got " + std::to_string(got)),
          kind_(std::move(kind)), needed_(needed), got_(got) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t needed() const noexcept { return needed_; }
    [[nodiscard]] std::size_t got() const noexcept { return got_; }

private:
    std::string kind_;
    std::size_t needed_;
    std::size_t got_;
};

class InsufficientFutureError : public Error {
public:
    InsufficientFutureError(std::size_t needed, std::size_t available)
        : Error(Errc::InsufficientFuture,
                "needs " + std::to_string(needed) + " trading days after the decision date, have " +
                    std::to_string(available)),
          needed_(needed), available_(available) {}

    [[nodiscard]] std::size_t needed() const noexcept { return needed_; }
    [[nodiscard]] std::size_t available() const noexcept { return available_; }

private:
    std::size_t needed_;
    std::size_t available_;
};

}  // namespace quantenv
