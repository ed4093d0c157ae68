#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "quantenv/action.hpp"
#include "quantenv/tools.hpp"

namespace quantenv {

struct EpisodeConfig {
    std::string symbol;
    Date curr_date;
    int max_tool_calls = 8;
    PriceBasis price_basis = PriceBasis::Close;
};

struct Step {
    enum class Type { Reasoning, Query, Decision };

    Type type = Type::Reasoning;
    std::string text;            // reasoning
    std::string tool;            // query
    nlohmann::json arguments;    // query
    std::string response;        // query
    bool malformed = false;      // query
    Action action = Action::Hold;  // decision
    std::string state_digest;    // query and decision: digest of the state the action was taken in

    bool operator==(const Step&) const = default;
};

inline std::string_view to_string(Step::Type t) {
    switch (t) {
        case Step::Type::Reasoning: return "reasoning";
        case Step::Type::Query: return "query";
        case Step::Type::Decision: return "decision";
    }
    return "";
}

/// (reasoning | query)* decision, in the order the agent produced them.
struct Trajectory {
    std::string symbol;
    Date date;
    int max_tool_calls = 8;
    std::vector<Step> steps;

    [[nodiscard]] int successful_calls() const {
        int n = 0;
        for (const auto& s : steps) n += s.type == Step::Type::Query && !s.malformed;
        return n;
    }
    [[nodiscard]] int malformed_calls() const {
        int n = 0;
        for (const auto& s : steps) n += s.type == Step::Type::Query && s.malformed;
        return n;
    }

    /// Successful calls per assistant turn. A reasoning segment opens a turn;
    /// calls before any reasoning fall in an implicit first turn.
    [[nodiscard]] std::vector<int> tool_calls_per_turn() const {
        std::vector<int> turns;
        for (const auto& s : steps) {
            if (s.type == Step::Type::Reasoning) turns.push_back(0);
            else if (s.type == Step::Type::Query && !s.malformed) {
                if (turns.empty()) turns.push_back(0);
                ++turns.back();
            }
        }
        if (turns.empty()) turns.push_back(0);
        return turns;
    }

    [[nodiscard]] std::vector<std::string> reasoning_log() const {
        std::vector<std::string> out;
        for (const auto& s : steps)
            if (s.type == Step::Type::Reasoning) out.push_back(s.text);
        return out;
    }

    [[nodiscard]] std::optional<Action> decision() const {
        if (steps.empty() || steps.back().type != Step::Type::Decision) return std::nullopt;
        return steps.back().action;
    }

    bool operator==(const Trajectory&) const = default;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline nlohmann::json step_json(const Step& s, std::size_t index) {
    nlohmann::json j;
    j["step"] = index;
    j["type"] = to_string(s.type);
    switch (s.type) {
        case Step::Type::Reasoning:
            j["text"] = s.text;
            break;
        case Step::Type::Query:
            j["tool"] = s.tool;
            j["arguments"] = s.arguments;
            j["response"] = s.response;
            if (s.malformed) j["malformed"] = true;
            j["state_digest"] = s.state_digest;
            break;
        case Step::Type::Decision:
            j["action"] = to_string(s.action);
            j["state_digest"] = s.state_digest;
            break;
    }
    return j;
}

}  // namespace detail

/// One decision episode. Confined to a single session; not thread-safe.
class Episode {
public:
    Episode(std::shared_ptr<const Corpus> corpus, EpisodeConfig config)
        : corpus_(std::move(corpus)), config_(std::move(config)) {
        if (!corpus_) throw Error(Errc::InvalidArgument, "null corpus");
        if (config_.max_tool_calls < 1) throw Error(Errc::InvalidArgument, "max_tool_calls must be >= 1");
        const auto& series = corpus_->series(config_.symbol);
        if (!series.find(config_.curr_date))
            throw Error(Errc::NotATradingDay, config_.curr_date.iso() + " is not a trading day for " + config_.symbol);
        trajectory_.symbol = config_.symbol;
        trajectory_.date = config_.curr_date;
        trajectory_.max_tool_calls = config_.max_tool_calls;
        digest_ = detail::fnv1a(config_.symbol + "|" + config_.curr_date.iso());
    }

    [[nodiscard]] const EpisodeConfig& config() const noexcept { return config_; }
    [[nodiscard]] bool terminated() const noexcept { return final_action_.has_value(); }
    [[nodiscard]] std::optional<Action> final_action() const noexcept { return final_action_; }
    [[nodiscard]] const std::vector<nlohmann::json>& query_history() const noexcept { return query_history_; }
    [[nodiscard]] const std::vector<std::string>& query_results() const noexcept { return query_results_; }
    [[nodiscard]] const Trajectory& trajectory() const noexcept { return trajectory_; }
    [[nodiscard]] std::vector<std::string> reasoning_log() const { return trajectory_.reasoning_log(); }
    [[nodiscard]] int calls_used() const noexcept { return calls_used_; }
    [[nodiscard]] std::string state_digest() const { return fmt::format("{:016x}", digest_); }

    /// Runs one tool call. Signature violations are recorded, counted and rethrown; the episode stays open.
    std::string execute_query(const std::string& name, const nlohmann::json& arguments) {
        require_open();
        if (calls_used_ >= config_.max_tool_calls)
            throw Error(Errc::ToolBudgetExhausted,
                        fmt::format("at most {} tool calls per episode", config_.max_tool_calls));
        ++calls_used_;
        Step step;
        step.type = Step::Type::Query;
        step.tool = name;
        step.arguments = arguments;
        step.state_digest = state_digest();
        try {
            const auto call = parse_tool_call(name, arguments, config_.curr_date);
            step.response = run_tool(*corpus_, call, config_.price_basis);
        } catch (const MalformedArgumentsError& e) {
            step.malformed = true;
            step.response = std::string("Error: ") + e.what();
            record(std::move(step));
            throw;
        }
        query_history_.push_back(nlohmann::json{{"name", name}, {"arguments", arguments}});
        query_results_.push_back(step.response);
        auto response = step.response;
        record(std::move(step));
        return response;
    }

    void append_reasoning(std::string text) {
        require_open();
        Step step;
        step.type = Step::Type::Reasoning;
        step.text = std::move(text);
        record(std::move(step));
    }

    const Trajectory& submit_decision(Action action) {
        require_open();
        Step step;
        step.type = Step::Type::Decision;
        step.action = action;
        step.state_digest = state_digest();
        record(std::move(step));
        final_action_ = action;
        return trajectory_;
    }

private:
    void require_open() const {
        if (terminated()) throw Error(Errc::EpisodeTerminated, "a decision was already submitted");
    }

    void record(Step step) {
        digest_ = detail::fnv1a(detail::step_json(step, trajectory_.steps.size()).dump(), digest_);
        trajectory_.steps.push_back(std::move(step));
    }

    std::shared_ptr<const Corpus> corpus_;
    EpisodeConfig config_;
    Trajectory trajectory_;
    std::vector<nlohmann::json> query_history_;
    std::vector<std::string> query_results_;
    std::optional<Action> final_action_;
    int calls_used_ = 0;
    std::uint64_t digest_ = 0;
};

// ---------------------------------------------------------------------------
// JSON-lines persistence

inline std::string trajectory_jsonl(const Trajectory& t) {
    std::string out;
    for (std::size_t i = 0; i < t.steps.size(); ++i) out += detail::step_json(t.steps[i], i).dump() + "\n";
    nlohmann::json meta;
    meta["symbol"] = t.symbol;
    meta["date"] = t.date.iso();
    meta["malformed_calls"] = t.malformed_calls();
    meta["assistant_turns"] = t.tool_calls_per_turn().size();
    meta["tool_calls_per_turn"] = t.tool_calls_per_turn();
    meta["max_tool_calls"] = t.max_tool_calls;
    out += meta.dump() + "\n";
    return out;
}

/// Parses a trajectory file. Rows count non-blank lines from 1. The trailing metadata
/// must agree with what the steps imply.
inline Trajectory parse_trajectory(std::istream& in) {
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw RowError(Errc::MalformedRow, row, std::string("invalid JSON: ") + e.what());
        }
        if (!records.back().is_object()) throw RowError(Errc::MalformedRow, row, "record must be a JSON object");
    }
    if (records.empty()) throw Error(Errc::EmptyFile, "empty trajectory file");

    auto str = [](const nlohmann::json& j, const char* k, std::size_t r) {
        if (!j.contains(k) || !j[k].is_string()) throw RowError(Errc::MalformedRow, r, std::string("'") + k + "' must be a string");
        return j[k].get<std::string>();
    };

    Trajectory t;
    const std::size_t meta_row = records.size();
    const auto& meta = records.back();
    if (meta.contains("type")) throw RowError(Errc::MalformedRow, meta_row, "missing trailing metadata record");
    t.symbol = str(meta, "symbol", meta_row);
    auto d = Date::parse(str(meta, "date", meta_row));
    if (!d) throw RowError(Errc::MalformedRow, meta_row, "bad date");
    t.date = *d;
    if (meta.contains("max_tool_calls")) {
        if (!meta["max_tool_calls"].is_number_integer())
            throw RowError(Errc::MalformedRow, meta_row, "'max_tool_calls' must be an integer");
        t.max_tool_calls = meta["max_tool_calls"].get<int>();
    }

    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
        const auto& j = records[i];
        const std::size_t r = i + 1;
        if (!j.contains("step") || !j["step"].is_number_integer() || j["step"].get<long long>() != static_cast<long long>(i))
            throw RowError(Errc::MalformedRow, r, "'step' must equal " + std::to_string(i));
        const auto type = str(j, "type", r);
        Step s;
        if (type == "reasoning") {
            s.type = Step::Type::Reasoning;
            s.text = str(j, "text", r);
        } else if (type == "query") {
            s.type = Step::Type::Query;
            s.tool = str(j, "tool", r);
            s.arguments = j.contains("arguments") ? j["arguments"] : nlohmann::json::object();
            s.response = str(j, "response", r);
            s.malformed = j.value("malformed", false);
            s.state_digest = j.value("state_digest", std::string{});
        } else if (type == "decision") {
            s.type = Step::Type::Decision;
            auto a = parse_action(str(j, "action", r));
            if (!a) throw RowError(Errc::MalformedRow, r, "'action' must be BUY, SELL or HOLD");
            s.action = *a;
            s.state_digest = j.value("state_digest", std::string{});
            if (i + 2 != records.size()) throw RowError(Errc::MalformedRow, r, "decision must be the last step");
        } else {
            throw RowError(Errc::MalformedRow, r, "unknown step type '" + type + "'");
        }
        t.steps.push_back(std::move(s));
    }
    if (!t.decision()) throw RowError(Errc::MalformedRow, meta_row, "trajectory has no terminal decision");

    auto check = [&](const char* key, const nlohmann::json& expected) {
        if (meta.contains(key) && meta[key] != expected)
            throw RowError(Errc::MalformedRow, meta_row,
                           fmt::format("'{}' is {} but the steps imply {}", key, meta[key].dump(), expected.dump()));
    };
    check("malformed_calls", t.malformed_calls());
    check("assistant_turns", t.tool_calls_per_turn().size());
    check("tool_calls_per_turn", t.tool_calls_per_turn());
    return t;
}

inline Trajectory parse_trajectory(const std::string& text) {
    std::istringstream in(text);
    return parse_trajectory(in);
}

/// Re-executes every recorded query in a fresh episode; returns the responses in order.
inline std::vector<std::string> replay_queries(std::shared_ptr<const Corpus> corpus, const Trajectory& t,
                                               PriceBasis basis = PriceBasis::Close) {
    Episode ep(std::move(corpus), EpisodeConfig{t.symbol, t.date, t.max_tool_calls, basis});
    std::vector<std::string> out;
    for (const auto& s : t.steps) {
        if (s.type == Step::Type::Reasoning) {
            ep.append_reasoning(s.text);
        } else if (s.type == Step::Type::Query) {
            try {
                out.push_back(ep.execute_query(s.tool, s.arguments));
            } catch (const MalformedArgumentsError&) {
                out.push_back(ep.trajectory().steps.back().response);
            }
        }
    }
    return out;
}

}  // namespace quantenv
