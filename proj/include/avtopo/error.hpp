#pragma once

#include <stdexcept>
#include <string>

namespace avtopo {

enum class ErrorKind {
  parameter,     // a parameter record violates its invariants
  precondition,  // inputs violate an operation's precondition
  dimension,     // rasters that must share a shape do not
  decode,        // label image contains colors outside the policy
  io,            // file missing, unreadable or unwritable
  generation,    // synthetic tree does not fit its canvas
  preprocessing, // degenerate illumination statistics
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace avtopo
