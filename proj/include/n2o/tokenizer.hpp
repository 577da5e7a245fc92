#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace n2o {

/// Splits UTF-8 text into runs of alphanumeric code points. A period with a
/// digit on both sides is kept inside the token ("3.6"). Surface casing is
/// preserved; word-vector lookup in cased tables needs it.
std::vector<std::string> tokenize_surface(std::string_view text);

/// tokenize_surface followed by Unicode lowercasing of every token.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercases one UTF-8 string code point by code point.
std::string to_lower(std::string_view text);

/// True when `text` is well-formed UTF-8 (no overlongs, no surrogates).
bool is_valid_utf8(std::string_view text);

}  // namespace n2o
