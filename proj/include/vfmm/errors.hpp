#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vfmm {

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A position (or the particle at `index`) falls outside the domain square.
class OutOfDomain : public std::out_of_range {
public:
  explicit OutOfDomain(const std::string& what, std::size_t index = npos)
      : std::out_of_range(what), index_(index) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

/// Missing or wrong CSV header.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed data row; `line()` is 1-based and counts the header.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Sweep configuration problem; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(key) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// M2L requested between expansions sharing a center.
class CoincidentCenters : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Multipole series evaluated at its own center.
class SingularEvaluation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace vfmm
