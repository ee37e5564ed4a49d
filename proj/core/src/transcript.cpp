#include "wardcast/transcript.hpp"

#include <stdexcept>

#include <json.hpp>

#include "wardcast/manifest.hpp"
#include "wardcast/sha256.hpp"

namespace wardcast::context {

TranscriptCache::TranscriptCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (in) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                const nlohmann::json j = nlohmann::json::parse(line);
                Key key{j.at("model").get<std::string>(),
                        j.at("prompt_sha256").get<std::string>(), j.at("run").get<int>()};
                entries_[std::move(key)] = j.at("response").get<std::string>();
            } catch (const std::exception& e) {
                warnings_.push_back(path_ + ":" + std::to_string(lineno) +
                                    ": skipped malformed transcript line (" + e.what() + ")");
            }
        }
    }
}

std::optional<std::string> TranscriptCache::lookup(const std::string& model,
                                                   const std::string& prompt_sha256,
                                                   int run) const {
    const std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(Key{model, prompt_sha256, run});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void TranscriptCache::append(const std::string& model, const std::string& prompt_sha256, int run,
                             const std::string& response) {
    const std::lock_guard<std::mutex> lock(mutex_);
    if (!out_.is_open()) {
        out_.open(path_, std::ios::app);
        if (!out_) {
            throw std::runtime_error("TranscriptCache: cannot open " + path_ + " for append");
        }
    }
    nlohmann::json j;
    j["model"] = model;
    j["prompt_sha256"] = prompt_sha256;
    j["run"] = run;
    j["response"] = response;
    j["timestamp"] = config::utc_timestamp_now();
    out_ << j.dump() << '\n';
    out_.flush();
    entries_[Key{model, prompt_sha256, run}] = response;
}

std::size_t TranscriptCache::size() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

std::vector<std::string> TranscriptCache::warnings() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return warnings_;
}

CachingBackend::CachingBackend(std::shared_ptr<TextBackend> inner,
                               std::shared_ptr<TranscriptCache> cache, std::string model_name)
    : inner_(std::move(inner)), cache_(std::move(cache)), model_name_(std::move(model_name)) {
    if (!inner_ || !cache_) {
        throw std::invalid_argument("CachingBackend: inner backend and cache are required");
    }
}

BackendReply CachingBackend::complete(const std::string& prompt, int run) {
    const std::string digest = sha256_hex(prompt);
    if (auto cached = cache_->lookup(model_name_, digest, run)) {
        const std::lock_guard<std::mutex> lock(stats_mutex_);
        ++hits_;
        return {std::move(*cached), {}};
    }

    BackendReply reply = inner_->complete(prompt, run);
    {
        const std::lock_guard<std::mutex> lock(stats_mutex_);
        ++misses_;
    }
    if (reply.text) {
        cache_->append(model_name_, digest, run, *reply.text);
    }
    return reply;
}

std::string CachingBackend::name() const { return inner_->name(); }

std::size_t CachingBackend::hits() const {
    const std::lock_guard<std::mutex> lock(stats_mutex_);
    return hits_;
}

std::size_t CachingBackend::misses() const {
    const std::lock_guard<std::mutex> lock(stats_mutex_);
    return misses_;
}

}  // namespace wardcast::context
