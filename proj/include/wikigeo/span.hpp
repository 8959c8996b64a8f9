#pragma once

#include <compare>
#include <cstddef>

namespace wikigeo {

// Character range in Unicode code points, end-exclusive.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  friend auto operator<=>(const Span&, const Span&) = default;
};

}  // namespace wikigeo
