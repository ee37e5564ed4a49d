#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "wardcast/context.hpp"

namespace wardcast::context {

/**
 * Append-only JSONL store of backend replies keyed by
 * (model, prompt sha256, run). Appends are serialized; reads are safe from
 * any thread. Re-opening a transcript replays its entries, the most recent
 * record per key winning, so evaluations rerun without new backend calls.
 */
class TranscriptCache {
public:
    // Loads existing entries from `path` if present; the file is created on
    // first append. Malformed lines are skipped and reported in warnings().
    explicit TranscriptCache(std::string path);

    std::optional<std::string> lookup(const std::string& model, const std::string& prompt_sha256,
                                      int run) const;
    void append(const std::string& model, const std::string& prompt_sha256, int run,
                const std::string& response);

    std::size_t size() const;
    std::vector<std::string> warnings() const;
    const std::string& path() const { return path_; }

private:
    using Key = std::tuple<std::string, std::string, int>;

    mutable std::mutex mutex_;
    std::string path_;
    std::map<Key, std::string> entries_;
    std::vector<std::string> warnings_;
    std::ofstream out_;
};

/**
 * Wraps a backend with transcript caching: hits answer from the cache,
 * misses call through and append the reply. Transport failures are never
 * cached, so transient errors stay retryable.
 */
class CachingBackend final : public TextBackend {
public:
    CachingBackend(std::shared_ptr<TextBackend> inner, std::shared_ptr<TranscriptCache> cache,
                   std::string model_name);

    BackendReply complete(const std::string& prompt, int run) override;
    std::string name() const override;

    std::size_t hits() const;
    std::size_t misses() const;

private:
    std::shared_ptr<TextBackend> inner_;
    std::shared_ptr<TranscriptCache> cache_;
    std::string model_name_;
    mutable std::mutex stats_mutex_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace wardcast::context
