#pragma once

#include <stdexcept>
#include <string>

namespace spiquad {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Newton refinement of a Gauss-Legendre root did not converge.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// The damped normal matrix is singular or too ill-conditioned to factor.
class InversionFailure : public Error {
public:
  using Error::Error;
};

/// A projected step has zero length because the iterate is pinned at a bound.
class ZeroStep : public Error {
public:
  using Error::Error;
};

/// Two nodes generated from one orbit coincide.
class DegenerateOrbit : public Error {
public:
  using Error::Error;
};

/// A node set does not decompose into symmetry orbits.
class NotSymmetric : public Error {
public:
  using Error::Error;
};

class NoProjection : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

class VersionError : public Error {
public:
  using Error::Error;
};

/// A rule fails positivity, interiority, symmetry, or its moment residual.
class CertificationFailure : public Error {
public:
  using Error::Error;
};

/// Required input data (an auxiliary rule, a file, a count) is unavailable.
class MissingData : public Error {
public:
  using Error::Error;
};

class SolveFailed : public Error {
public:
  using Error::Error;
};

/// Errors reached the arithmetic floor before a rate could be measured.
class PrecisionFloor : public Error {
public:
  using Error::Error;
};

}  // namespace spiquad
