#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace crowdvote {

/// Whole-file read; throws ValidationFailure when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes (truncating) `content`; throws RuntimeFailure on I/O errors.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Runs fn(0) .. fn(count - 1) on up to `jobs` threads. The first exception
/// thrown by any task is rethrown after all workers have stopped.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Uniform integer in [0, bound) by rejection sampling. Unlike
/// std::uniform_int_distribution the output sequence is identical across
/// standard library implementations.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound);

/// Fisher-Yates shuffle built on uniform_index (portable, unlike std::shuffle).
template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng, i);
        std::swap(items[i - 1], items[j]);
    }
}

/// Current UTC time as ISO-8601 with second precision.
std::string utc_timestamp();

std::string trim(std::string_view text);

}  // namespace crowdvote
