#pragma once

#include <stdexcept>
#include <string>

namespace neuroline {

// Error taxonomy shared by all modules. The CLI maps these onto its exit-code
// contract: Screening -> 2, everything else -> 1.
enum class ErrorKind {
  Length,       // input shorter than an operation's minimum
  Data,         // non-finite / malformed numeric input
  Config,       // invalid configuration value
  Size,         // sample size outside a test's supported range
  Degenerate,   // zero-variance or otherwise uninformative sample
  Baseline,     // unusable idle baseline (sd <= 0, too few samples)
  Screening,    // user not onboardable with the provided data
  Undecidable,  // measurement outside both likelihood supports
  Unsupported,  // distribution family cannot host the data / requested mode
  Format,       // wire/file format violation
  Io,           // filesystem or stream failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Screening failures carry the normalized KL score so callers can report it.
class ScreeningError : public Error {
 public:
  ScreeningError(double kl_norm, const std::string& what)
      : Error(ErrorKind::Screening, what), kl_norm_(kl_norm) {}

  double kl_norm() const noexcept { return kl_norm_; }

 private:
  double kl_norm_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Length: return "length";
    case ErrorKind::Data: return "data";
    case ErrorKind::Config: return "config";
    case ErrorKind::Size: return "size";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Baseline: return "baseline";
    case ErrorKind::Screening: return "screening";
    case ErrorKind::Undecidable: return "undecidable";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace neuroline
