#include "spiquad/real.hpp"

#include "spiquad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ostream>

namespace spiquad {

namespace {

thread_local int tl_precision = 113;

int result_precision(const Real& a, const Real& b) {
  return std::max(a.precision(), b.precision());
}

}  // namespace

int working_precision() noexcept { return tl_precision; }

PrecisionScope::PrecisionScope(int bits) : saved_(tl_precision) {
  if (bits < 53 || bits > 1024) {
    throw Error("precision must lie in [53, 1024] bits, got " + std::to_string(bits));
  }
  tl_precision = bits;
}

PrecisionScope::~PrecisionScope() { tl_precision = saved_; }

Real::Real(Uninit, int bits) { mpfr_init2(v_, bits); }

Real::Real() {
  mpfr_init2(v_, tl_precision);
  mpfr_set_zero(v_, 1);
}

Real::Real(double v) {
  mpfr_init2(v_, tl_precision);
  mpfr_set_d(v_, v, MPFR_RNDN);
}

Real::Real(int v) {
  mpfr_init2(v_, tl_precision);
  mpfr_set_si(v_, v, MPFR_RNDN);
}

Real::Real(long v) {
  mpfr_init2(v_, tl_precision);
  mpfr_set_si(v_, v, MPFR_RNDN);
}

Real::Real(long long v) {
  mpfr_init2(v_, tl_precision);
  mpfr_set_si(v_, static_cast<long>(v), MPFR_RNDN);
}

Real::Real(unsigned long v) {
  mpfr_init2(v_, tl_precision);
  mpfr_set_ui(v_, v, MPFR_RNDN);
}

Real Real::parse(std::string_view text) {
  Real r;
  std::string s(text);
  char* end = nullptr;
  if (!s.empty()) mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
  if (s.empty() || end == s.c_str() || *end != '\0') {
    throw ParseError("malformed number '" + s + "'");
  }
  return r;
}

Real Real::with_precision(const Real& v, int bits) {
  Real r(Uninit{}, bits);
  mpfr_set(r.v_, v.v_, MPFR_RNDN);
  return r;
}

Real::Real(const Real& other) {
  mpfr_init2(v_, mpfr_get_prec(other.v_));
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
  // Steal the limbs and leave `other` as a valid minimal-precision zero.
  std::memcpy(v_, other.v_, sizeof(mpfr_t));
  mpfr_init2(other.v_, MPFR_PREC_MIN);
  mpfr_set_zero(other.v_, 1);
}

Real& Real::operator=(const Real& other) {
  if (this != &other) {
    mpfr_set_prec(v_, mpfr_get_prec(other.v_));
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  mpfr_swap(v_, other.v_);
  return *this;
}

Real::~Real() { mpfr_clear(v_); }

Real make_result(const Real& a, const Real& b) {
  return Real(Real::Uninit{}, result_precision(a, b));
}

Real& Real::operator+=(const Real& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_add(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

Real& Real::operator-=(const Real& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

Real& Real::operator*=(const Real& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

Real& Real::operator/=(const Real& o) {
  if (o.precision() > precision()) mpfr_prec_round(v_, o.precision(), MPFR_RNDN);
  mpfr_div(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

std::string Real::to_string(int digits) const {
  if (mpfr_nan_p(v_)) return "nan";
  if (mpfr_inf_p(v_)) return mpfr_sgn(v_) > 0 ? "inf" : "-inf";
  if (digits <= 0) {
    // Enough digits for an exact decimal round trip at this precision.
    digits = 1 + static_cast<int>(std::ceil(static_cast<double>(precision()) * 0.30102999566398120));
  }
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", digits - 1, v_);
  std::string out(buf);
  mpfr_free_str(buf);
  return out;
}

Real operator-(const Real& a) {
  Real r = a;
  mpfr_neg(r.get(), r.get(), MPFR_RNDN);
  return r;
}

Real operator+(const Real& a, const Real& b) {
  Real r = make_result(a, b);
  mpfr_add(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}

Real operator-(const Real& a, const Real& b) {
  Real r = make_result(a, b);
  mpfr_sub(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}

Real operator*(const Real& a, const Real& b) {
  Real r = make_result(a, b);
  mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}

Real operator/(const Real& a, const Real& b) {
  Real r = make_result(a, b);
  mpfr_div(r.get(), a.get(), b.get(), MPFR_RNDN);
  return r;
}

bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.get(), b.get()) != 0; }

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.get(), b.get())) return std::partial_ordering::unordered;
  int c = mpfr_cmp(a.get(), b.get());
  if (c < 0) return std::partial_ordering::less;
  if (c > 0) return std::partial_ordering::greater;
  return std::partial_ordering::equivalent;
}

#define SPIQUAD_UNARY(name, fn)              \
  Real name(const Real& x) {                 \
    Real r = x;                              \
    fn(r.get(), x.get(), MPFR_RNDN);         \
    return r;                                \
  }

SPIQUAD_UNARY(abs, mpfr_abs)
SPIQUAD_UNARY(sqrt, mpfr_sqrt)
SPIQUAD_UNARY(exp, mpfr_exp)
SPIQUAD_UNARY(log, mpfr_log)
SPIQUAD_UNARY(sin, mpfr_sin)
SPIQUAD_UNARY(cos, mpfr_cos)

#undef SPIQUAD_UNARY

Real pow(const Real& x, int n) {
  Real r = x;
  mpfr_pow_si(r.get(), x.get(), n, MPFR_RNDN);
  return r;
}

Real ldexp(const Real& x, long e) {
  Real r = x;
  mpfr_mul_2si(r.get(), x.get(), e, MPFR_RNDN);
  return r;
}

Real min(const Real& a, const Real& b) { return b < a ? b : a; }
Real max(const Real& a, const Real& b) { return a < b ? b : a; }

Real pi() {
  Real r;
  mpfr_const_pi(r.get(), MPFR_RNDN);
  return r;
}

Real epsilon() { return pow2(-working_precision()); }

Real pow2(long e) {
  Real r(1);
  mpfr_mul_2si(r.get(), r.get(), e, MPFR_RNDN);
  return r;
}

std::ostream& operator<<(std::ostream& os, const Real& x) {
  return os << x.to_string(static_cast<int>(os.precision()) > 0 ? static_cast<int>(os.precision()) : 17);
}

}  // namespace spiquad
