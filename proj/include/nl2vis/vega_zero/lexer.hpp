#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vis/error.hpp"

namespace nl2vis::vega_zero {

using TokenSeq = std::vector<std::string>;

// Section markers of a source sequence plus the template slot placeholders.
inline constexpr std::array<std::string_view, 10> kSectionMarkers = {
    "<N>", "</N>", "<C>", "</C>", "<D>", "</D>", "<COL>", "</COL>", "<VAL>", "</VAL>"};

inline constexpr std::array<std::string_view, 10> kSlotMarkers = {
    "[T]", "[X]", "[AggFunction]", "[Y]", "[Z]", "[F]", "[G]", "[B]", "[S]", "[K]"};

inline bool is_section_marker(std::string_view tok) {
  return std::find(kSectionMarkers.begin(), kSectionMarkers.end(), tok) != kSectionMarkers.end();
}

inline bool is_slot_marker(std::string_view tok) {
  return std::find(kSlotMarkers.begin(), kSlotMarkers.end(), tok) != kSlotMarkers.end();
}

inline bool is_special_marker(std::string_view tok) {
  return is_section_marker(tok) || is_slot_marker(tok);
}

inline bool is_quote(char c) { return c == '"' || c == '\''; }

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Splits vega-zero (or source-sequence) text into tokens.
///
/// Tokens are whitespace-delimited. A token that starts with a quote runs to
/// the matching quote, so `"new york"` and `'%a%'` stay single tokens and keep
/// their case. Special markers keep their case; every other token is
/// lowercased. Operators glued to identifiers (`a!=`) are not split.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    if (is_quote(text[i])) {
      const char quote = text[i];
      const std::size_t close = text.find(quote, i + 1);
      if (close == std::string_view::npos) throw LexError("unterminated quote", start);
      i = close + 1;
      while (i < n && !is_space(text[i])) ++i;
      tokens.emplace_back(text.substr(start, i - start));
      continue;
    }
    while (i < n && !is_space(text[i])) ++i;
    const std::string_view word = text.substr(start, i - start);
    if (is_special_marker(word)) {
      tokens.emplace_back(word);
    } else {
      tokens.push_back(to_lower(word));
    }
  }
  return tokens;
}

inline std::string join(const TokenSeq& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

/// True when `tok` re-lexes to exactly itself.
inline bool is_lexically_stable(std::string_view tok) {
  try {
    const TokenSeq t = tokenize(tok);
    return t.size() == 1 && t.front() == tok;
  } catch (const LexError&) {
    return false;
  }
}

}  // namespace nl2vis::vega_zero
