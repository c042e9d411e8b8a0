#include "crowdvote/util.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "crowdvote/error.hpp"

namespace crowdvote {

// Error constructors live here; they have no better home.

namespace {

std::string join_lines(const std::string& head, const std::vector<std::string>& items) {
    std::string out = head;
    for (const auto& item : items) {
        out += "\n  - " + item;
    }
    return out;
}

}  // namespace

InvalidPersona::InvalidPersona(std::vector<std::string> violations)
    : ValidationFailure(join_lines("invalid persona spec:", violations)),
      violations_(std::move(violations)) {}

Timeout::Timeout(const std::string& backend_id, int attempts)
    : BackendError(fmt::format("backend '{}' timed out after {} attempt(s)", backend_id, attempts)) {}

RemoteError::RemoteError(const std::string& backend_id, int status, const std::string& detail)
    : BackendError(fmt::format("backend '{}' returned status {}: {}", backend_id, status, detail)),
      status_(status) {}

MissingFixture::MissingFixture(const std::string& backend_id, const std::string& question_id)
    : BackendError(fmt::format("fixture backend '{}' has no recorded answer for question '{}'",
                               backend_id, question_id)),
      question_id_(question_id) {}

ParseError::ParseError(const std::string& source, std::size_t line, std::size_t column,
                       const std::string& detail)
    : ValidationFailure(fmt::format("{}:{}:{}: {}", source, line, column, detail)),
      line_(line),
      column_(column) {}

ValidationError::ValidationError(std::vector<std::string> violations)
    : ValidationFailure(join_lines("validation failed:", violations)),
      violations_(std::move(violations)) {}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationFailure("cannot open file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw RuntimeFailure("cannot write file '" + path.string() + "'");
    }
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) {
        threads.emplace_back(worker);
    }
    for (auto& thread : threads) {
        thread.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound) {
    if (bound <= 1) {
        return 0;
    }
    const std::uint64_t range = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t draw = rng();
    while (draw >= limit) {
        draw = rng();
    }
    return static_cast<std::size_t>(draw % range);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

std::string trim(std::string_view text) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    return std::string(text.substr(begin, end - begin));
}

}  // namespace crowdvote
