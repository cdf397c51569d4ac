#pragma once

#include <stdexcept>
#include <string>

namespace skle {

enum class ErrorKind {
  Degenerate,
  ShapeMismatch,
  Validation,
  IllConditioned,
  NoConvergence,
  AtPole,
  ExtrapolationUnstable,
  Singular,
  NonConvergent,
  HullTooLarge,
  KernelFailure,
  LeftStateSpace,
  StepRejected,
  FitUnstable,
  LiftTooSmall,
  InsideHull,
  TooCloseToHull,
  InsufficientPaths,
  TooManyHits,
};

const char* kind_name(ErrorKind k);

// Validation-class errors map to CLI exit code 2, everything else to 3.
bool is_validation(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = 0.0)
      : std::runtime_error(what), kind_(kind), value_(value) {}
  ErrorKind kind() const { return kind_; }
  double value() const { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace skle
