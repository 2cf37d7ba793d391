#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>

#include "json.hpp"

namespace vsrhpo::detail {

using ordered_json = nlohmann::ordered_json;

/// 1-based line number of a byte offset within `text`.
inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

/// Rejects object keys outside `allowed`; returns the first offender or "".
inline std::string first_unknown_key(const nlohmann::json& object,
                                     std::initializer_list<const char*> allowed) {
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) return item.key();
  }
  return {};
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace vsrhpo::detail
