#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wardcast/calendar.hpp"
#include "wardcast/models.hpp"
#include "wardcast/panel.hpp"

namespace wardcast::context {

enum class PromptMode { UnivariateY, ContextTriple };

struct LabeledValue {
    std::string label;
    double value = 0.0;
};

struct RecentLine {
    WeekStamp week;
    std::vector<LabeledValue> values;  // labels absent from the line are omitted
};

/**
 * Everything that varies between prompts: geography, the prediction week,
 * and the recent-data block. Rendering is byte-deterministic, so equal specs
 * produce equal prompt text.
 */
struct PromptSpec {
    std::string geography;
    WeekStamp prediction_date;
    std::vector<RecentLine> recent_block;
    PromptMode mode = PromptMode::UnivariateY;
    std::size_t window_length = 8;
};

// Shortest representation that round-trips through double parsing.
std::string format_number(double value);

// Renders the prompt template. Throws std::invalid_argument when
// recent_block does not hold exactly window_length lines.
std::string build_prompt(const PromptSpec& spec);

// Convenience builders used by the forecasting pipelines.
PromptSpec make_univariate_spec(std::string geography, const models::History& h,
                                WeekStamp prediction_date);
PromptSpec make_context_spec(std::string geography, const models::History& h,
                             const models::ExogWindow& w, WeekStamp prediction_date);

struct ParsedY {
    std::optional<double> value;  // clipped to >= 0
    std::string raw_text;
    bool retried = false;
};

struct ParsedContext {
    std::optional<double> x_b;
    std::optional<double> x_v;
    std::optional<double> s_t;
    bool complete = false;  // all three labels parsed
    bool retried = false;
};

/**
 * Finds the first line of the form "<label>: <number>" (case-insensitive
 * label, optional surrounding whitespace) and returns the number. The number
 * grammar accepts sign, decimals, scientific notation, and comma thousands
 * separators. Lines with trailing non-whitespace after the number do not
 * match.
 */
std::optional<double> parse_labeled_number(std::string_view raw, std::string_view label);

ParsedY parse_y(std::string_view raw);
ParsedContext parse_context(std::string_view raw);

// Appended to the prompt on the single parse-failure retry.
std::string strict_format_suffix();

struct BackendReply {
    std::optional<std::string> text;  // nullopt = transport failure
    std::string error;
};

/**
 * Pluggable text-completion backend. `run` distinguishes repeated
 * evaluations of the same prompt so cached replies stay per-run.
 * Implementations must be safe for concurrent complete() calls.
 */
class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual BackendReply complete(const std::string& prompt, int run) = 0;
    virtual std::string name() const = 0;
};

struct QueryResult {
    std::string raw;  // last response text; empty when both attempts failed transport
    bool retried = false;
    bool transport_failed = false;
    std::string error;
};

/**
 * Issues at most two backend calls. A transport failure is retried once with
 * the same prompt after `backoff`; a response failing `valid` is retried
 * once with the strict-format suffix appended. The second response is
 * returned as-is — deciding that it is still unusable is the caller's job.
 */
QueryResult query_with_retry(TextBackend& backend, const std::string& prompt, int run,
                             const std::function<bool(const std::string&)>& valid,
                             std::chrono::milliseconds backoff = std::chrono::milliseconds{0});

// Replies with the labels of the last recent-data line, values unchanged.
class PersistenceBackend final : public TextBackend {
public:
    BackendReply complete(const std::string& prompt, int run) override;
    std::string name() const override { return "persistence"; }
};

/**
 * Replies with the true next-week values read from the panel, so downstream
 * consumers can be tested against ground truth. Prompts addressing a week or
 * county outside the panel produce an empty reply, which parses as missing.
 */
class OracleBackend final : public TextBackend {
public:
    explicit OracleBackend(std::shared_ptr<const Panel> panel) : panel_(std::move(panel)) {}
    BackendReply complete(const std::string& prompt, int run) override;
    std::string name() const override { return "oracle"; }

private:
    std::shared_ptr<const Panel> panel_;
};

// Replays a fixed list of replies in order; once exhausted every call is a
// transport failure. Records the prompts it saw for assertions.
class ScriptedBackend final : public TextBackend {
public:
    explicit ScriptedBackend(std::vector<BackendReply> replies);
    BackendReply complete(const std::string& prompt, int run) override;
    std::string name() const override { return "scripted"; }

    std::size_t calls() const;
    std::vector<std::string> prompts_seen() const;

    static BackendReply text(std::string body);
    static BackendReply failure(std::string error);

private:
    mutable std::mutex mutex_;
    std::deque<BackendReply> replies_;
    std::vector<std::string> prompts_;
};

struct BackendConfig {
    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string model_name = "gpt-5-2025-08-07";
    std::string api_key_env_var = "OPENAI_API_KEY";
    std::chrono::milliseconds timeout{30000};
    int max_concurrency = 4;
};

/**
 * Chat-style HTTP backend: POSTs {model, messages:[{role:"user",content}]}
 * and extracts the first choice's message content. At most max_concurrency
 * requests are in flight at once. One call maps to one request; retry policy
 * lives in query_with_retry.
 */
class HttpBackend final : public TextBackend {
public:
    explicit HttpBackend(BackendConfig config);
    ~HttpBackend() override;
    BackendReply complete(const std::string& prompt, int run) override;
    std::string name() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace wardcast::context
