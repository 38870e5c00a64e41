#pragma once

#include <string>
#include <string_view>

#include "nl2vis/vega_zero/lexer.hpp"

namespace nl2vis::eval {

namespace detail {

// Rule (a): a `like` pattern with a leading % but no trailing % gains one.
inline std::string close_like_wildcards(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 4);
  std::size_t i = 0;
  bool after_like = false;
  while (i < text.size()) {
    if (vega_zero::is_space(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t end = i;
    const char quote = vega_zero::is_quote(text[i]) ? text[i] : '\0';
    if (quote) {
      const std::size_t close = text.find(quote, i + 1);
      end = close == std::string_view::npos ? text.size() : close + 1;
    }
    while (end < text.size() && !vega_zero::is_space(text[end])) ++end;
    std::string word(text.substr(i, end - i));

    if (after_like) {
      const bool closed = quote && word.size() >= 2 && word.back() == quote;
      const std::size_t body_begin = quote ? 1 : 0;
      const std::size_t body_end = closed ? word.size() - 1 : word.size();
      const std::string_view body =
          std::string_view(word).substr(body_begin, body_end - body_begin);
      if (body.size() >= 2 && body.front() == '%' && body.back() != '%')
        word.insert(body_end, "%");
    }
    after_like = vega_zero::to_lower(word) == "like";
    out += word;
    i = end;
  }
  return out;
}

// Rule (b): every `!=` outside quotes is preceded by a space.
inline std::string space_before_not_equal(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 4);
  char quote = '\0';
  bool token_start = true;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      if (c == quote) quote = '\0';
    } else if (vega_zero::is_quote(c) && token_start) {
      quote = c;
    } else if (c == '!' && i + 1 < text.size() && text[i + 1] == '=' && !out.empty() &&
               !vega_zero::is_space(out.back())) {
      out += ' ';
    }
    out += c;
    token_start = vega_zero::is_space(c);
  }
  return out;
}

}  // namespace detail

/// Repairs the two systematic generation slips: an unclosed leading `%` in a
/// `like` pattern and a missing space before `!=`. Idempotent; leaves all
/// other text untouched.
inline std::string correct_systematic_errors(std::string_view text) {
  return detail::space_before_not_equal(detail::close_like_wildcards(text));
}

}  // namespace nl2vis::eval
