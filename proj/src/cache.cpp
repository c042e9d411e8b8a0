#include "crowdvote/cache.hpp"

#include <fmt/format.h>

#include "crowdvote/error.hpp"
#include "crowdvote/util.hpp"

namespace crowdvote {

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::error_code ec;
    if (!std::filesystem::exists(*path_, ec)) {
        return;
    }
    std::ifstream in(*path_, std::ios::binary);
    if (!in) {
        throw CacheIO("cannot read cache file '" + path_->string() + "'");
    }
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        try {
            const auto entry = nlohmann::json::parse(line);
            CacheKey key{entry.at("backend_id").get<std::string>(), entry.at("prompt_hash").get<std::string>(),
                         entry.at("question_id").get<std::string>(), entry.at("params_digest").get<std::string>()};
            entries_[std::move(key)] = entry.at("response").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw CacheIO(fmt::format("{}:{}: corrupt cache entry: {}", path_->string(), line_number, e.what()));
        }
    }
}

std::optional<std::string> ResponseCache::lookup(const CacheKey& key) const {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
        return it->second;
    }
    return std::nullopt;
}

void ResponseCache::store(const CacheKey& key, const std::string& response) {
    std::lock_guard lock(mutex_);
    if (path_) {
        const nlohmann::json entry{{"backend_id", key.backend_id},   {"prompt_hash", key.prompt_hash},
                                   {"question_id", key.question_id}, {"params_digest", key.params_digest},
                                   {"response", response},           {"timestamp", utc_timestamp()}};
        if (path_->has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(path_->parent_path(), ec);
        }
        std::ofstream out(*path_, std::ios::binary | std::ios::app);
        out << entry.dump() << '\n';
        out.flush();
        if (!out) {
            throw CacheIO("cannot append to cache file '" + path_->string() + "'");
        }
    }
    entries_[key] = response;
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::map<std::string, std::size_t> ResponseCache::entries_by_backend() const {
    std::lock_guard lock(mutex_);
    std::map<std::string, std::size_t> counts;
    for (const auto& [key, value] : entries_) ++counts[key.backend_id];
    return counts;
}

void ResponseCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
    if (path_) {
        std::ofstream out(*path_, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CacheIO("cannot truncate cache file '" + path_->string() + "'");
        }
    }
}

}  // namespace crowdvote
