#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace judgevar {

enum class ErrorKind {
  Parse,
  MissingCell,
  DuplicateCell,
  UnbalancedDesign,
  OutOfScale,
  DegenerateDesign,
  ZeroResidual,
  InvalidDesign,
  Uncentered,
  IndivisibleBudget,
  InvalidConfig,
  DegeneratePool,
  EmptyPool,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-readable kind so callers (notably the CLI)
/// can map failures onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Degenerate-design failures are distinguished from malformed input.
  bool is_degenerate() const noexcept {
    return kind_ == ErrorKind::DegenerateDesign || kind_ == ErrorKind::ZeroResidual ||
           kind_ == ErrorKind::DegeneratePool || kind_ == ErrorKind::EmptyPool;
  }

 private:
  ErrorKind kind_;
};

}  // namespace judgevar
