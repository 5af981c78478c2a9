#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace sage {

/// One retrievable unit of corpus text: a run of consecutive sentences from
/// a single paragraph. The span fields locate it in the source document.
struct Chunk {
  std::int64_t id = 0;
  std::string doc_id;
  std::string text;
  std::size_t token_count = 0;
  /// Position in the source document: paragraph index, then the half-open
  /// sentence range [sentence_begin, sentence_end) within that paragraph.
  std::size_t paragraph = 0;
  std::size_t sentence_begin = 0;
  std::size_t sentence_end = 0;
};

}  // namespace sage
