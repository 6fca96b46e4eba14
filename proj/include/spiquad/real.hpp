#pragma once

// Extended-precision real number backed by GNU MPFR.
//
// Every Real carries its own binary precision. Default-constructed values and
// values converted from builtin types take the thread's working precision,
// which is controlled with PrecisionScope. Binary operations round to the
// larger of the two operand precisions, so arithmetic between values of equal
// precision stays at that precision.

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace spiquad {

/// Precision (bits) used for newly created Reals on this thread.
int working_precision() noexcept;

/// RAII guard that sets the working precision for the current thread.
class PrecisionScope {
public:
  explicit PrecisionScope(int bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
  int saved_;
};

class Real {
public:
  Real();
  Real(double v);  // NOLINT(google-explicit-constructor)
  Real(int v);     // NOLINT(google-explicit-constructor)
  Real(long v);    // NOLINT(google-explicit-constructor)
  Real(long long v);  // NOLINT(google-explicit-constructor)
  Real(unsigned long v);  // NOLINT(google-explicit-constructor)

  /// Parses a decimal literal at the working precision; throws ParseError.
  static Real parse(std::string_view text);
  /// Same value, rounded to `bits` of precision.
  static Real with_precision(const Real& v, int bits);

  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  int precision() const noexcept { return static_cast<int>(mpfr_get_prec(v_)); }
  mpfr_srcptr get() const noexcept { return v_; }
  mpfr_ptr get() noexcept { return v_; }

  Real& operator+=(const Real& o);
  Real& operator-=(const Real& o);
  Real& operator*=(const Real& o);
  Real& operator/=(const Real& o);

  double to_double() const noexcept { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long() const noexcept { return mpfr_get_si(v_, MPFR_RNDN); }
  bool is_zero() const noexcept { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const noexcept { return mpfr_number_p(v_) != 0; }
  int sign() const noexcept { return mpfr_sgn(v_); }

  /// Scientific notation with `digits` significant digits; 0 picks the
  /// shortest count that round-trips exactly at this precision.
  std::string to_string(int digits = 0) const;

private:
  struct Uninit {};
  explicit Real(Uninit, int bits);
  friend Real make_result(const Real& a, const Real& b);

  mpfr_t v_;
};

Real operator-(const Real& a);
Real operator+(const Real& a, const Real& b);
Real operator-(const Real& a, const Real& b);
Real operator*(const Real& a, const Real& b);
Real operator/(const Real& a, const Real& b);

bool operator==(const Real& a, const Real& b);
std::partial_ordering operator<=>(const Real& a, const Real& b);

Real abs(const Real& x);
Real sqrt(const Real& x);
Real exp(const Real& x);
Real log(const Real& x);
Real sin(const Real& x);
Real cos(const Real& x);
Real pow(const Real& x, int n);
/// x * 2^e, exact.
Real ldexp(const Real& x, long e);
Real min(const Real& a, const Real& b);
Real max(const Real& a, const Real& b);

/// pi at the working precision.
Real pi();
/// 2^-bits, the unit roundoff scale for the working precision.
Real epsilon();
/// 2^e at the working precision.
Real pow2(long e);

std::ostream& operator<<(std::ostream& os, const Real& x);

}  // namespace spiquad
