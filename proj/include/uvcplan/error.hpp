#pragma once

#include <stdexcept>
#include <string>

namespace uvcplan {

/// Input failed a range or invariant check. `field()` names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed text input. Carries the 1-based line number (0 when unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, int line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  std::string source_;
  int line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point was evaluated where the field is undefined (inside the robot body).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The planner cannot reach part of the free space.
class UnreachableError : public std::runtime_error {
 public:
  UnreachableError(const std::string& message, std::size_t cell_count)
      : std::runtime_error(message), cell_count_(cell_count) {}

  std::size_t cell_count() const noexcept { return cell_count_; }

 private:
  std::size_t cell_count_;
};

}  // namespace uvcplan
