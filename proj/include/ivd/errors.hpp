#pragma once

#include <stdexcept>
#include <string>

namespace ivd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file header or record.
struct FormatError : Error {
  using Error::Error;
};

// Declared size does not match payload.
struct TruncationError : Error {
  using Error::Error;
};

// Values out of physical or numeric range.
struct DataError : Error {
  using Error::Error;
};

// Empty intersection, degenerate box, out-of-frame geometry.
struct GeometryError : Error {
  using Error::Error;
};

// Unknown enumerant (region, view, state).
struct DomainError : Error {
  using Error::Error;
};

// Layer/shape chain inconsistency in a model spec.
struct SpecError : Error {
  using Error::Error;
};

// API misuse: missing cache, empty input set, bad call order.
struct UsageError : Error {
  using Error::Error;
};

// Record-level validation failure (e.g. score outside [0,1]).
struct ValidationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Single-class training set or failed optimization.
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace ivd
