#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "crowdvote/backend.hpp"

namespace crowdvote {

/// Response cache backed by an append-only JSONL file, one entry per line:
///   {"backend_id", "prompt_hash", "question_id", "params_digest", "response", "timestamp"}
/// Later lines win when a key repeats. All methods are thread-safe; a store()
/// is visible to every subsequent lookup().
class ResponseCache {
public:
    /// Cache without persistence.
    ResponseCache() = default;

    /// Loads `path` if it exists; new entries are appended to it.
    /// Throws CacheIO on unreadable or corrupt files.
    explicit ResponseCache(std::filesystem::path path);

    ResponseCache(const ResponseCache&) = delete;
    ResponseCache& operator=(const ResponseCache&) = delete;

    std::optional<std::string> lookup(const CacheKey& key) const;
    void store(const CacheKey& key, const std::string& response);

    std::size_t size() const;
    /// Entry count per backend_id.
    std::map<std::string, std::size_t> entries_by_backend() const;

    /// Drops every entry and truncates the backing file.
    void clear();

    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

private:
    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> path_;
    std::map<CacheKey, std::string> entries_;
};

}  // namespace crowdvote
