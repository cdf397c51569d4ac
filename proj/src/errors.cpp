#include "skle/errors.hpp"

namespace skle {

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::AtPole: return "AtPole";
    case ErrorKind::ExtrapolationUnstable: return "ExtrapolationUnstable";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::HullTooLarge: return "HullTooLarge";
    case ErrorKind::KernelFailure: return "KernelFailure";
    case ErrorKind::LeftStateSpace: return "LeftStateSpace";
    case ErrorKind::StepRejected: return "StepRejected";
    case ErrorKind::FitUnstable: return "FitUnstable";
    case ErrorKind::LiftTooSmall: return "LiftTooSmall";
    case ErrorKind::InsideHull: return "InsideHull";
    case ErrorKind::TooCloseToHull: return "TooCloseToHull";
    case ErrorKind::InsufficientPaths: return "InsufficientPaths";
    case ErrorKind::TooManyHits: return "TooManyHits";
  }
  return "Unknown";
}

bool is_validation(ErrorKind k) {
  return k == ErrorKind::Degenerate || k == ErrorKind::ShapeMismatch ||
         k == ErrorKind::Validation;
}

}  // namespace skle
