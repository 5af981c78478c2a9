#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sage {

/// Splits on whitespace, then splits ASCII punctuation off as single-char
/// tokens: "Hello, world!" -> ["Hello", ",", "world", "!"]. Bytes >= 0x80
/// are treated as word characters so UTF-8 sequences stay intact.
std::vector<std::string> tokenize_text(std::string_view text);

/// Token count under tokenize_text, without materializing the tokens.
std::size_t count_tokens(std::string_view text);

/// Anything that turns text into tokens can stand in for the default
/// tokenizer wherever chunk sizes are measured.
using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

const Tokenizer& default_tokenizer();

}  // namespace sage
