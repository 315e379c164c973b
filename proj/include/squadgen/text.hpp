#pragma once

// UTF-8 text utilities shared across the pipeline. Answer offsets are
// counted in Unicode scalar values (codepoints), never bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace squadgen::text {

// Whitespace set used for word splitting: ASCII whitespace plus the
// common Unicode space codepoints seen in scraped NDS text.
inline bool is_space_cp(uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes the codepoint starting at byte offset `i`, advancing `i` past it.
// Invalid sequences are consumed one byte at a time and returned as the
// raw byte value so no input can wedge the decoder.
inline uint32_t decode_cp(std::string_view s, size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  size_t len = 1;
  uint32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1Fu;
  }
  if (len == 1 || i + len > s.size()) {
    ++i;
    return b0;
  }
  for (size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (b & 0x3Fu);
  }
  i += len;
  return cp;
}

inline size_t cp_length(std::string_view s) {
  size_t i = 0, n = 0;
  while (i < s.size()) {
    decode_cp(s, i);
    ++n;
  }
  return n;
}

// Byte offset of the codepoint at index `cp_index`, or npos past the end.
inline size_t byte_offset_of_cp(std::string_view s, size_t cp_index) {
  size_t i = 0, n = 0;
  while (i < s.size()) {
    if (n == cp_index) return i;
    decode_cp(s, i);
    ++n;
  }
  return n == cp_index ? i : std::string_view::npos;
}

// Substring addressed in codepoints.
inline std::string_view substr_cp(std::string_view s, size_t cp_start,
                                  size_t cp_count) {
  const size_t b0 = byte_offset_of_cp(s, cp_start);
  if (b0 == std::string_view::npos) return {};
  size_t i = b0, n = 0;
  while (i < s.size() && n < cp_count) {
    decode_cp(s, i);
    ++n;
  }
  return s.substr(b0, i - b0);
}

// Codepoint offset of the first occurrence of `needle` in `haystack`.
// UTF-8 is self-synchronizing, so a byte-level find lands on a codepoint
// boundary for well-formed input.
inline std::optional<size_t> find_cp(std::string_view haystack,
                                     std::string_view needle) {
  const size_t pos = haystack.find(needle);
  if (pos == std::string_view::npos) return std::nullopt;
  return cp_length(haystack.substr(0, pos));
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  size_t i = 0;
  std::string cur;
  size_t word_start = 0;
  bool in_word = false;
  while (i < s.size()) {
    const size_t start = i;
    const uint32_t cp = decode_cp(s, i);
    if (is_space_cp(cp)) {
      if (in_word) {
        words.emplace_back(s.substr(word_start, start - word_start));
        in_word = false;
      }
    } else if (!in_word) {
      word_start = start;
      in_word = true;
    }
  }
  if (in_word) words.emplace_back(s.substr(word_start));
  return words;
}

inline size_t count_words(std::string_view s) { return split_words(s).size(); }

inline std::string join_words(const std::vector<std::string>& words,
                              size_t max_words) {
  std::string out;
  const size_t n = std::min(words.size(), max_words);
  for (size_t k = 0; k < n; ++k) {
    if (k) out += ' ';
    out += words[k];
  }
  return out;
}

inline std::string trim(std::string_view s) {
  size_t begin = 0;
  size_t i = 0;
  size_t end = 0;  // byte offset one past the last non-space
  bool seen = false;
  while (i < s.size()) {
    const size_t start = i;
    const uint32_t cp = decode_cp(s, i);
    if (!is_space_cp(cp)) {
      if (!seen) {
        begin = start;
        seen = true;
      }
      end = i;
    }
  }
  if (!seen) return {};
  return std::string(s.substr(begin, end - begin));
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace squadgen::text
