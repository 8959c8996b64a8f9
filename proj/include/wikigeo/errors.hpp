#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wikigeo {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unbalanced anchor markup; offset is in code points of the input markup.
struct ExtractError : std::runtime_error {
  ExtractError(const std::string& what, std::size_t offset_cp)
      : std::runtime_error(what), offset(offset_cp) {}
  std::size_t offset;
};

// Schema or invariant violation in a corpus file. Corrupt corpora must not
// pass silently, so readers throw instead of skipping.
struct CorpusError : std::runtime_error {
  CorpusError(const std::string& what, std::uint64_t line_number)
      : std::runtime_error("line " + std::to_string(line_number) + ": " + what),
        line(line_number) {}
  std::uint64_t line;
};

struct ConlluError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GazetteerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wikigeo
