#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "wardcast/context.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace wardcast::context {

namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_lines(std::string_view raw) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= raw.size()) {
        const std::size_t nl = raw.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(raw.substr(start));
            break;
        }
        lines.push_back(raw.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

bool equals_ci(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

std::optional<double> parse_number_token(std::string_view token) {
    std::string cleaned;
    cleaned.reserve(token.size());
    for (char c : token) {
        if (c != ',') cleaned.push_back(c);
    }
    if (cleaned.empty()) return std::nullopt;
    // from_chars never accepts an explicit plus sign, so strip exactly one.
    if (cleaned.front() == '+' && cleaned.size() > 1 && cleaned[1] != '+' && cleaned[1] != '-') {
        cleaned.erase(cleaned.begin());
    }
    double value = 0.0;
    const char* first = cleaned.data();
    const char* last = cleaned.data() + cleaned.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_number: conversion failed");
    }
    return std::string(buf, ptr);
}

std::string build_prompt(const PromptSpec& spec) {
    if (spec.recent_block.size() != spec.window_length) {
        throw std::invalid_argument("build_prompt: recent_block must hold exactly " +
                                    std::to_string(spec.window_length) + " lines");
    }

    std::string out = "Given the last " + std::to_string(spec.window_length) +
                      " weekly observations for region " + spec.geography + ":\n\n";
    for (const RecentLine& line : spec.recent_block) {
        out += format_week(line.week) + ":";
        bool first = true;
        for (const LabeledValue& lv : line.values) {
            out += first ? " " : ", ";
            out += lv.label + "=" + format_number(lv.value);
            first = false;
        }
        out += '\n';
    }
    out += '\n';

    const std::string date = format_week(spec.prediction_date);
    if (spec.mode == PromptMode::UnivariateY) {
        out += "Predict next week's value (week ending " + date +
               ") for the numeric series y.\n\nReturn exactly one line:\ny: <number>";
    } else {
        out += "Predict next week's values (week ending " + date +
               ") for three numeric series: X_B, X_V, s_t\n\n"
               "Return exactly three lines:\nX_B: <number>\nX_V: <number>\ns_t: <number>";
    }
    return out;
}

PromptSpec make_univariate_spec(std::string geography, const models::History& h,
                                WeekStamp prediction_date) {
    PromptSpec spec;
    spec.geography = std::move(geography);
    spec.prediction_date = prediction_date;
    spec.mode = PromptMode::UnivariateY;
    spec.window_length = h.size();
    spec.recent_block.reserve(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        spec.recent_block.push_back({h.weeks[i], {{"y", h.y[i]}}});
    }
    return spec;
}

PromptSpec make_context_spec(std::string geography, const models::History& h,
                             const models::ExogWindow& w, WeekStamp prediction_date) {
    if (w.size() != h.size()) {
        throw std::invalid_argument("make_context_spec: window shape mismatch");
    }
    PromptSpec spec;
    spec.geography = std::move(geography);
    spec.prediction_date = prediction_date;
    spec.mode = PromptMode::ContextTriple;
    spec.window_length = h.size();
    spec.recent_block.reserve(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        RecentLine line{h.weeks[i], {{"y", h.y[i]}}};
        if (w.x_b[i]) line.values.push_back({"X_B", *w.x_b[i]});
        if (w.x_v[i]) line.values.push_back({"X_V", *w.x_v[i]});
        if (w.s_t[i]) line.values.push_back({"s_t", *w.s_t[i]});
        spec.recent_block.push_back(std::move(line));
    }
    return spec;
}

std::optional<double> parse_labeled_number(std::string_view raw, std::string_view label) {
    for (std::string_view line : split_lines(raw)) {
        line = trim_view(line);
        if (line.size() <= label.size()) continue;
        if (!equals_ci(line.substr(0, label.size()), label)) continue;

        std::string_view rest = line.substr(label.size());
        const std::string_view after_label = rest;
        rest = trim_view(rest);
        // The label must stand alone: the next character is ':' possibly
        // after whitespace, never another identifier character.
        if (rest.empty() || rest.front() != ':') continue;
        if (after_label.front() != ':' &&
            std::isspace(static_cast<unsigned char>(after_label.front())) == 0) {
            continue;
        }
        rest.remove_prefix(1);
        rest = trim_view(rest);
        if (rest.empty()) continue;
        if (rest.find_first_of(" \t") != std::string_view::npos) continue;
        if (auto value = parse_number_token(rest)) return value;
    }
    return std::nullopt;
}

ParsedY parse_y(std::string_view raw) {
    ParsedY out;
    out.raw_text = std::string(raw);
    if (auto value = parse_labeled_number(raw, "y")) {
        out.value = std::max(0.0, *value);
    }
    return out;
}

ParsedContext parse_context(std::string_view raw) {
    ParsedContext out;
    auto grab = [&raw](std::string_view label) -> std::optional<double> {
        auto value = parse_labeled_number(raw, label);
        if (!value) return std::nullopt;
        return std::max(0.0, *value);
    };
    out.x_b = grab("X_B");
    out.x_v = grab("X_V");
    out.s_t = grab("s_t");
    out.complete = out.x_b.has_value() && out.x_v.has_value() && out.s_t.has_value();
    return out;
}

std::string strict_format_suffix() {
    return "\n\nYour previous reply could not be parsed. Respond only with the requested "
           "lines, each exactly in the form 'label: number', with no extra text.";
}

QueryResult query_with_retry(TextBackend& backend, const std::string& prompt, int run,
                             const std::function<bool(const std::string&)>& valid,
                             std::chrono::milliseconds backoff) {
    QueryResult result;

    BackendReply first = backend.complete(prompt, run);
    if (!first.text) {
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        BackendReply second = backend.complete(prompt, run);
        result.retried = true;
        if (!second.text) {
            result.transport_failed = true;
            result.error = second.error.empty() ? first.error : second.error;
            return result;
        }
        result.raw = *second.text;
        return result;
    }

    if (valid(*first.text)) {
        result.raw = *first.text;
        return result;
    }

    BackendReply second = backend.complete(prompt + strict_format_suffix(), run);
    result.retried = true;
    if (!second.text) {
        result.raw = *first.text;  // caller will record the value as missing
        result.error = second.error;
        return result;
    }
    result.raw = *second.text;
    return result;
}

BackendReply PersistenceBackend::complete(const std::string& prompt, int /*run*/) {
    std::string_view last_line;
    for (std::string_view line : split_lines(prompt)) {
        const std::string_view t = trim_view(line);
        if (t.size() >= 11 && t[10] == ':' && parse_date(t.substr(0, 10))) {
            last_line = t;
        }
    }
    if (last_line.empty()) {
        return {std::string{}, {}};
    }

    std::string out;
    std::string_view rest = trim_view(last_line.substr(11));
    while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string_view pair =
            trim_view(comma == std::string_view::npos ? rest : rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const std::size_t eq = pair.find('=');
        if (eq == std::string_view::npos) continue;
        const std::string_view label = trim_view(pair.substr(0, eq));
        const std::string_view value = trim_view(pair.substr(eq + 1));
        if (label.empty() || value.empty()) continue;
        out.append(label);
        out.append(": ");
        out.append(value);
        out.push_back('\n');
    }
    return {std::move(out), {}};
}

BackendReply OracleBackend::complete(const std::string& prompt, int /*run*/) {
    const auto lines = split_lines(prompt);
    if (lines.empty()) return {std::string{}, {}};

    std::string geography;
    {
        const std::string_view first = lines.front();
        constexpr std::string_view marker = "for region ";
        const std::size_t pos = first.find(marker);
        if (pos != std::string_view::npos) {
            std::string_view tail = first.substr(pos + marker.size());
            if (!tail.empty() && tail.back() == ':') tail.remove_suffix(1);
            geography = std::string(trim_view(tail));
        }
    }

    std::optional<WeekStamp> week;
    {
        constexpr std::string_view marker = "(week ending ";
        const std::size_t pos = prompt.find(marker);
        if (pos != std::string::npos && pos + marker.size() + 10 <= prompt.size()) {
            week = parse_week(std::string_view(prompt).substr(pos + marker.size(), 10));
        }
    }
    if (geography.empty() || !week) {
        return {std::string{}, {}};
    }

    const PanelRow* row = panel_->find_row(geography, *week);
    if (row == nullptr) {
        for (const CountyId& county : panel_->counties) {
            if (county_name_equal(county.name, geography)) {
                row = panel_->find_row(county.name, *week);
                break;
            }
        }
    }
    if (row == nullptr) {
        return {std::string{}, {}};
    }

    std::string out;
    if (prompt.find("for three numeric series") != std::string::npos) {
        if (row->x_b) out += "X_B: " + format_number(*row->x_b) + "\n";
        if (row->x_v) out += "X_V: " + format_number(*row->x_v) + "\n";
        if (row->s_t) out += "s_t: " + format_number(*row->s_t) + "\n";
    } else if (row->y) {
        out = "y: " + format_number(*row->y) + "\n";
    }
    return {std::move(out), {}};
}

ScriptedBackend::ScriptedBackend(std::vector<BackendReply> replies)
    : replies_(replies.begin(), replies.end()) {}

BackendReply ScriptedBackend::complete(const std::string& prompt, int /*run*/) {
    const std::lock_guard<std::mutex> lock(mutex_);
    prompts_.push_back(prompt);
    if (replies_.empty()) {
        return {std::nullopt, "scripted transcript exhausted"};
    }
    BackendReply reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
}

std::size_t ScriptedBackend::calls() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return prompts_.size();
}

std::vector<std::string> ScriptedBackend::prompts_seen() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return prompts_;
}

BackendReply ScriptedBackend::text(std::string body) { return {std::move(body), {}}; }

BackendReply ScriptedBackend::failure(std::string error) {
    return {std::nullopt, std::move(error)};
}

struct HttpBackend::Impl {
    BackendConfig config;
    std::string base;
    std::string path;
    std::counting_semaphore<> slots;

    explicit Impl(BackendConfig cfg)
        : config(std::move(cfg)),
          slots(std::max(1, config.max_concurrency)) {
        const std::string& url = config.endpoint_url;
        const std::size_t scheme = url.find("://");
        const std::size_t path_start =
            scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
        if (path_start == std::string::npos) {
            base = url;
            path = "/";
        } else {
            base = url.substr(0, path_start);
            path = url.substr(path_start);
        }
    }
};

HttpBackend::HttpBackend(BackendConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.timeout.count() <= 0) {
        throw std::invalid_argument("HttpBackend: timeout must be positive");
    }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::name() const { return "http:" + impl_->config.model_name; }

BackendReply HttpBackend::complete(const std::string& prompt, int /*run*/) {
    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<>* slots;
        ~Release() { slots->release(); }
    } release{&impl_->slots};

    httplib::Client client(impl_->base);
    client.set_connection_timeout(impl_->config.timeout);
    client.set_read_timeout(impl_->config.timeout);
    client.set_write_timeout(impl_->config.timeout);

    httplib::Headers headers;
    if (!impl_->config.api_key_env_var.empty()) {
        const char* key = std::getenv(impl_->config.api_key_env_var.c_str());
        if (key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    nlohmann::json body;
    body["model"] = impl_->config.model_name;
    body["messages"] = nlohmann::json::array(
        {nlohmann::json{{"role", "user"}, {"content", prompt}}});

    const auto res = client.Post(impl_->path, headers, body.dump(), "application/json");
    if (!res) {
        return {std::nullopt, "transport: " + httplib::to_string(res.error())};
    }
    if (res->status != 200) {
        return {std::nullopt, "http status " + std::to_string(res->status)};
    }

    try {
        const nlohmann::json reply = nlohmann::json::parse(res->body);
        return {reply.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
    } catch (const std::exception& e) {
        return {std::nullopt, std::string("malformed response: ") + e.what()};
    }
}

}  // namespace wardcast::context
