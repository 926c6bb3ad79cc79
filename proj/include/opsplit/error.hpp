#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace opsplit {

/// Precondition violation on a public entry point.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A flow produced non-finite values or its implicit solve did not converge.
/// The splitting layer attaches the id of the dictionary entry that failed.
class StabilityError : public std::runtime_error {
public:
  explicit StabilityError(const std::string& what, std::optional<int> operator_id = {})
      : std::runtime_error(what), operator_id_(operator_id) {}

  std::optional<int> operator_id() const { return operator_id_; }

private:
  std::optional<int> operator_id_;
};

/// Trajectory container decoding failure.
class FormatError : public std::runtime_error {
public:
  enum class Kind { Io, BadMagic, CorruptHeader, Truncated, ChecksumMismatch };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace opsplit
