#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mcms::utf8 {

/// True when `s` is well-formed UTF-8 (no overlongs, surrogates or values above U+10FFFF).
bool is_valid(std::string_view s);

/// Decodes `s`; returns nullopt on malformed input.
std::optional<std::u32string> decode(std::string_view s);

std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

/// Number of scalar values. Malformed input counts bytes as one each.
std::size_t length(std::string_view s);

bool is_scalar(char32_t cp);

} // namespace mcms::utf8
