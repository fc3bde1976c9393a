#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace edgecache::cli {

/// Shortest decimal that parses back to the same double.
std::string shortest(double v);

/// printf("%.17g").
std::string g17(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string join_csv(std::span<const std::string> fields);

}  // namespace edgecache::cli
