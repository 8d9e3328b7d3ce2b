#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparsevox {

// Invalid argument to a pure operation (bad pixel index, non-positive depth, shape mismatch).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A voxel key that is not stored in the grid.
class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Topology operation refused by an octree invariant (e.g. splitting at l_max).
class RefusalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset contents inconsistent with what they describe.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimizer state and grid topology disagree; an adaptation barrier was violated.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed file contents. Carries the byte offset where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

}  // namespace sparsevox
