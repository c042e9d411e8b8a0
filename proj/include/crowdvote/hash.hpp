#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace crowdvote {

/// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::string_view data);

/// Stable 64-bit sub-seed derived from a root seed and any number of string
/// components. Components are length-prefixed so ("ab","c") != ("a","bc").
/// Adding new questions or judges never changes existing sub-seeds.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::string_view> parts);

}  // namespace crowdvote
