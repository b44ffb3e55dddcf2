#include "emif/corpus.hpp"

#include <cctype>
#include <cstdint>

namespace emif {
namespace {

// Decodes the UTF-8 sequence starting at text[pos]. Returns the code point
// and its byte length; malformed input decodes as a single opaque byte.
std::pair<char32_t, std::size_t> decode_utf8(std::string_view text, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  if (lead < 0x80) return {lead, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + len > text.size()) return {0xFFFD, 1};
  for (std::size_t i = 1; i < len; ++i) {
    const auto cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (cont & 0x3F);
  }
  return {cp, len};
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

void emit_token(std::string_view raw, TokenSeq& out) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && is_ascii_punct(raw[begin])) ++begin;
  while (end > begin && is_ascii_punct(raw[end - 1])) --end;
  if (begin == end) return;
  std::string token(raw.substr(begin, end - begin));
  for (char& c : token) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  out.push_back(std::move(token));
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto [cp, len] = decode_utf8(text, pos);
    if (is_unicode_space(cp)) {
      if (pos > start) emit_token(text.substr(start, pos - start), out);
      start = pos + len;
    }
    pos += len;
  }
  if (start < text.size()) emit_token(text.substr(start), out);
  return out;
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string piece(text.substr(start, end - start));
    if (!tokenize(piece).empty()) out.push_back(std::move(piece));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '.' || text[i] == '!' || text[i] == '?') {
      flush(i);
      start = i + 1;
    }
  }
  if (start < text.size()) flush(text.size());
  return out;
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace emif
