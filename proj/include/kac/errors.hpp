#pragma once

#include <stdexcept>
#include <string>

namespace kac {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw velocities collapse to a single point: no direction to normalize.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Angular kernel with infinite total mass (no angular cut-off).
class NonIntegrable : public Error {
 public:
  using Error::Error;
};

/// Dirac kernel placed where sin(theta) vanishes.
class BadAngle : public Error {
 public:
  using Error::Error;
};

/// Parameters outside the documented validity range.
class BadParams : public Error {
 public:
  using Error::Error;
};

/// Assignment problem larger than the configured maximum.
class SizeLimit : public Error {
 public:
  using Error::Error;
};

/// Both covariances are rank-1 while the left side is positive.
class RhsInfinite : public Error {
 public:
  using Error::Error;
};

class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

/// Empirical moment falls outside the integrability regime.
class MomentBlowup : public Error {
 public:
  using Error::Error;
};

/// The radial band carries no probability mass.
class DegenerateBand : public Error {
 public:
  using Error::Error;
};

/// A per-event invariant of the coupled process was violated.
/// `event_json` holds the serialized offending event.
class InvariantViolation : public Error {
 public:
  InvariantViolation(const std::string& what, std::string event_json)
      : Error(what), event_json_(std::move(event_json)) {}
  const std::string& event_json() const noexcept { return event_json_; }

 private:
  std::string event_json_;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kac
