#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace wikigeo {

// Collects per-record problems that are reported and skipped rather than
// fatal. Keeps the first few messages and a total count.
class Diagnostics {
 public:
  void warn(std::string message) {
    ++count_;
    if (echo_) (*echo_) << "warning: " << message << '\n';
    if (messages_.size() < max_kept_) messages_.push_back(std::move(message));
  }

  std::uint64_t count() const { return count_; }
  const std::vector<std::string>& messages() const { return messages_; }
  void echo_to(std::ostream* os) { echo_ = os; }

 private:
  std::uint64_t count_ = 0;
  std::size_t max_kept_ = 50;
  std::vector<std::string> messages_;
  std::ostream* echo_ = nullptr;
};

}  // namespace wikigeo
