#include "sage/tokenizer.hpp"

#include <cctype>

namespace sage {

namespace {

inline bool is_space_byte(unsigned char c) {
  return std::isspace(c) != 0;
}

// ASCII punctuation splits into its own token; everything else (letters,
// digits, bytes >= 0x80) glues together.
inline bool is_punct_byte(unsigned char c) {
  return c < 0x80 && std::ispunct(c) != 0;
}

}  // namespace

std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    if (is_punct_byte(c)) {
      tokens.emplace_back(1, text[i]);
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n) {
      const unsigned char d = static_cast<unsigned char>(text[j]);
      if (is_space_byte(d) || is_punct_byte(d)) break;
      ++j;
    }
    tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
    } else if (is_punct_byte(c)) {
      ++count;
      ++i;
    } else {
      ++count;
      while (i < n) {
        const unsigned char d = static_cast<unsigned char>(text[i]);
        if (is_space_byte(d) || is_punct_byte(d)) break;
        ++i;
      }
    }
  }
  return count;
}

const Tokenizer& default_tokenizer() {
  static const Tokenizer tok = [](std::string_view text) {
    return tokenize_text(text);
  };
  return tok;
}

}  // namespace sage
