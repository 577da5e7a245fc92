#include "n2o/tokenizer.hpp"

#include <clocale>
#include <cstdint>
#include <cwctype>
#include <locale.h>
#include <wctype.h>

namespace n2o {
namespace {

constexpr char32_t kInvalid = 0xFFFD;

// Decodes one code point at `pos` and advances it. Malformed sequences
// decode to U+FFFD and consume a single byte.
char32_t decode(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kInvalid;
  }
  pos += len;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Character classes come from glibc's C.UTF-8 tables, independent of the
// process locale. Without that locale, non-ASCII code points count as
// letters and are never case-mapped.
locale_t utf8_locale() {
  static const locale_t loc = [] {
    locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
    if (l == static_cast<locale_t>(0)) {
      l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(0));
    }
    return l;
  }();
  return loc;
}

bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_alnum(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || is_ascii_digit(cp);
  }
  if (cp == kInvalid) {
    return false;
  }
  const locale_t loc = utf8_locale();
  if (loc == static_cast<locale_t>(0)) {
    return true;
  }
  return iswalnum_l(static_cast<wint_t>(cp), loc) != 0;
}

char32_t lower(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp;
  }
  const locale_t loc = utf8_locale();
  if (loc == static_cast<locale_t>(0)) {
    return cp;
  }
  return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
}

}  // namespace

std::vector<std::string> tokenize_surface(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    cps.push_back(decode(text, pos));
  }

  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_alnum(cp)) {
      encode(cp, current);
      continue;
    }
    const bool digit_period = cp == U'.' && i > 0 && i + 1 < cps.size() &&
                              is_ascii_digit(cps[i - 1]) && is_ascii_digit(cps[i + 1]);
    if (digit_period) {
      current.push_back('.');
      continue;
    }
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    encode(lower(decode(text, pos)), out);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto tokens = tokenize_surface(text);
  for (auto& t : tokens) {
    t = to_lower(t);
  }
  return tokens;
}

bool is_valid_utf8(std::string_view text) {
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t before = pos;
    const char32_t cp = decode(text, pos);
    if (cp == kInvalid) {
      // U+FFFD itself is legal when it was actually encoded (3 bytes).
      if (pos - before != 3) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace n2o
