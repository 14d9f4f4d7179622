#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccrseq {
namespace charset {

// 36 case-insensitive alphanumerics; specials appended after the characters.
inline constexpr int kNumChars = 36;
inline constexpr int kEos = 36;
inline constexpr int kBos = 37;
inline constexpr int kPad = 38;
// classifier output space: characters + EOS
inline constexpr int kOutVocab = 37;
// decoder input space adds BOS and PAD
inline constexpr int kInVocab = 39;

inline constexpr const char* kChars = "abcdefghijklmnopqrstuvwxyz0123456789";

inline int index_of(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= '0' && c <= '9') return 26 + (c - '0');
  return -1;
}

inline char char_at(int idx) {
  if (idx < 0 || idx >= kNumChars) throw std::out_of_range("charset index out of range");
  return kChars[idx];
}

inline bool valid_text(const std::string& text, char* bad = nullptr) {
  for (char c : text) {
    if (index_of(c) < 0) {
      if (bad != nullptr) *bad = c;
      return false;
    }
  }
  return true;
}

inline std::vector<int> encode(const std::string& text) {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    const int idx = index_of(c);
    if (idx < 0)
      throw std::invalid_argument(std::string("character not in charset: '") + c + "'");
    out.push_back(idx);
  }
  return out;
}

// Decodes up to (excluding) the first EOS; ignores BOS/PAD.
inline std::string decode(const std::vector<int>& tokens) {
  std::string out;
  for (int t : tokens) {
    if (t == kEos) break;
    if (t == kBos || t == kPad) continue;
    out.push_back(char_at(t));
  }
  return out;
}

}  // namespace charset
}  // namespace ccrseq
