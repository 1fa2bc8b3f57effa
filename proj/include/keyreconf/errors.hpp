#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace keyreconf {

// Malformed layout or profile document.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called outside its preconditions.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A key event that cannot be applied to the active profile.
class EventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input text that cannot be produced on a layout.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayError : public std::runtime_error {
 public:
  ReplayError(std::size_t record_index, const std::string& what)
      : std::runtime_error(what), record_index_(record_index) {}

  // Index of the first divergent record (0 = header line).
  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_;
};

}  // namespace keyreconf
