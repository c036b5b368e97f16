#include "sepsplit/bigreal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include "sepsplit/errors.hpp"

namespace sepsplit {

namespace {

constexpr int kMinBits = 53;
constexpr int kMaxBits = 1 << 16;

int clamp_bits(int bits) { return std::clamp(bits, kMinBits, kMaxBits); }

int& thread_bits() {
  thread_local int bits = bits_from_env(128);
  return bits;
}

}  // namespace

int bits_from_env(int fallback) {
  const char* env = std::getenv("SEPSPLIT_BITS");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 53 || v > 1024) return fallback;
  return static_cast<int>(v);
}

int default_bits() { return thread_bits(); }

void set_default_bits(int bits) { thread_bits() = clamp_bits(bits); }

PrecisionGuard::PrecisionGuard(int bits) : saved_(default_bits()) { set_default_bits(bits); }

PrecisionGuard::~PrecisionGuard() { thread_bits() = saved_; }

BigReal::BigReal() {
  mpfr_init2(v_, default_bits());
  mpfr_set_zero(v_, 1);
}

BigReal::BigReal(double v) {
  mpfr_init2(v_, default_bits());
  mpfr_set_d(v_, v, MPFR_RNDN);
}

BigReal::BigReal(int v) {
  mpfr_init2(v_, default_bits());
  mpfr_set_si(v_, v, MPFR_RNDN);
}

BigReal::BigReal(long v) {
  mpfr_init2(v_, default_bits());
  mpfr_set_si(v_, v, MPFR_RNDN);
}

BigReal::BigReal(double v, int bits) {
  mpfr_init2(v_, clamp_bits(bits));
  mpfr_set_d(v_, v, MPFR_RNDN);
}

BigReal BigReal::zero(int bits) { return BigReal(0.0, bits); }

BigReal BigReal::from_string(const std::string& s, int bits) {
  BigReal r = zero(bits);
  if (s.empty() || mpfr_set_str(r.v_, s.c_str(), 10, MPFR_RNDN) != 0) {
    throw ValidationError("not a decimal number: '" + s + "'");
  }
  return r;
}

BigReal::BigReal(const BigReal& o) {
  mpfr_init2(v_, mpfr_get_prec(o.v_));
  mpfr_set(v_, o.v_, MPFR_RNDN);
}

BigReal::BigReal(BigReal&& o) noexcept {
  v_[0] = o.v_[0];
  o.v_[0]._mpfr_d = nullptr;
}

void BigReal::ensure_init(int bits) {
  if (v_[0]._mpfr_d == nullptr) {
    mpfr_init2(v_, bits);
  } else if (mpfr_get_prec(v_) != bits) {
    mpfr_set_prec(v_, bits);
  }
}

BigReal& BigReal::operator=(const BigReal& o) {
  if (this == &o) return *this;
  ensure_init(static_cast<int>(mpfr_get_prec(o.v_)));
  mpfr_set(v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator=(BigReal&& o) noexcept {
  if (this == &o) return *this;
  std::swap(v_[0], o.v_[0]);
  return *this;
}

BigReal::~BigReal() {
  if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
}

void BigReal::set_bits(int bits) {
  bits = clamp_bits(bits);
  if (bits == this->bits()) return;
  mpfr_prec_round(v_, bits, MPFR_RNDN);
}

BigReal BigReal::with_bits(int bits) const {
  BigReal r = zero(bits);
  mpfr_set(r.v_, v_, MPFR_RNDN);
  return r;
}

std::string BigReal::to_string() const {
  // digits needed for a decimal round trip at this precision
  int digits = static_cast<int>(std::ceil(bits() * 0.30102999566398120)) + 2;
  return to_string(digits);
}

std::string BigReal::to_string(int digits) const {
  if (!is_finite()) {
    if (mpfr_nan_p(v_)) return "nan";
    return sign() > 0 ? "inf" : "-inf";
  }
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Rg", digits, v_);
  std::string s(buf);
  mpfr_free_str(buf);
  return s;
}

BigReal& BigReal::operator+=(const BigReal& o) {
  if (o.bits() > bits()) mpfr_prec_round(v_, o.bits(), MPFR_RNDN);
  mpfr_add(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator-=(const BigReal& o) {
  if (o.bits() > bits()) mpfr_prec_round(v_, o.bits(), MPFR_RNDN);
  mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator*=(const BigReal& o) {
  if (o.bits() > bits()) mpfr_prec_round(v_, o.bits(), MPFR_RNDN);
  mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator/=(const BigReal& o) {
  if (o.bits() > bits()) mpfr_prec_round(v_, o.bits(), MPFR_RNDN);
  mpfr_div(v_, v_, o.v_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator*=(long o) {
  mpfr_mul_si(v_, v_, o, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator/=(long o) {
  mpfr_div_si(v_, v_, o, MPFR_RNDN);
  return *this;
}

BigReal BigReal::operator-() const {
  BigReal r(*this);
  mpfr_neg(r.v_, r.v_, MPFR_RNDN);
  return r;
}

namespace {

int joint_bits(const BigReal& a, const BigReal& b) { return std::max(a.bits(), b.bits()); }

template <class F>
BigReal unary(const BigReal& x, F f) {
  BigReal r = BigReal::zero(x.bits());
  f(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

}  // namespace

BigReal operator+(const BigReal& a, const BigReal& b) {
  BigReal r = BigReal::zero(joint_bits(a, b));
  mpfr_add(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
  return r;
}

BigReal operator-(const BigReal& a, const BigReal& b) {
  BigReal r = BigReal::zero(joint_bits(a, b));
  mpfr_sub(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
  return r;
}

BigReal operator*(const BigReal& a, const BigReal& b) {
  BigReal r = BigReal::zero(joint_bits(a, b));
  mpfr_mul(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
  return r;
}

BigReal operator/(const BigReal& a, const BigReal& b) {
  BigReal r = BigReal::zero(joint_bits(a, b));
  mpfr_div(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
  return r;
}

BigReal operator*(const BigReal& a, long b) {
  BigReal r = BigReal::zero(a.bits());
  mpfr_mul_si(r.raw(), a.raw(), b, MPFR_RNDN);
  return r;
}

BigReal operator*(long a, const BigReal& b) { return b * a; }

BigReal operator/(const BigReal& a, long b) {
  BigReal r = BigReal::zero(a.bits());
  mpfr_div_si(r.raw(), a.raw(), b, MPFR_RNDN);
  return r;
}

bool operator==(const BigReal& a, const BigReal& b) { return mpfr_equal_p(a.raw(), b.raw()) != 0; }
bool operator!=(const BigReal& a, const BigReal& b) { return !(a == b); }
bool operator<(const BigReal& a, const BigReal& b) { return mpfr_less_p(a.raw(), b.raw()) != 0; }
bool operator<=(const BigReal& a, const BigReal& b) { return mpfr_lessequal_p(a.raw(), b.raw()) != 0; }
bool operator>(const BigReal& a, const BigReal& b) { return mpfr_greater_p(a.raw(), b.raw()) != 0; }
bool operator>=(const BigReal& a, const BigReal& b) {
  return mpfr_greaterequal_p(a.raw(), b.raw()) != 0;
}

BigReal abs(const BigReal& x) { return unary(x, mpfr_abs); }
BigReal sqrt(const BigReal& x) { return unary(x, mpfr_sqrt); }
BigReal exp(const BigReal& x) { return unary(x, mpfr_exp); }
BigReal expm1(const BigReal& x) { return unary(x, mpfr_expm1); }
BigReal log(const BigReal& x) { return unary(x, mpfr_log); }
BigReal log1p(const BigReal& x) { return unary(x, mpfr_log1p); }
BigReal sin(const BigReal& x) { return unary(x, mpfr_sin); }
BigReal cos(const BigReal& x) { return unary(x, mpfr_cos); }
BigReal tan(const BigReal& x) { return unary(x, mpfr_tan); }
BigReal atan(const BigReal& x) { return unary(x, mpfr_atan); }
BigReal sinh(const BigReal& x) { return unary(x, mpfr_sinh); }
BigReal cosh(const BigReal& x) { return unary(x, mpfr_cosh); }
BigReal tanh(const BigReal& x) { return unary(x, mpfr_tanh); }
BigReal gamma(const BigReal& x) { return unary(x, mpfr_gamma); }

void sin_cos(const BigReal& x, BigReal& s, BigReal& c) {
  s = BigReal::zero(x.bits());
  c = BigReal::zero(x.bits());
  mpfr_sin_cos(s.raw(), c.raw(), x.raw(), MPFR_RNDN);
}

BigReal atan2(const BigReal& y, const BigReal& x) {
  BigReal r = BigReal::zero(joint_bits(y, x));
  mpfr_atan2(r.raw(), y.raw(), x.raw(), MPFR_RNDN);
  return r;
}

BigReal pow(const BigReal& x, const BigReal& y) {
  BigReal r = BigReal::zero(joint_bits(x, y));
  mpfr_pow(r.raw(), x.raw(), y.raw(), MPFR_RNDN);
  return r;
}

BigReal pow(const BigReal& x, long n) {
  BigReal r = BigReal::zero(x.bits());
  mpfr_pow_si(r.raw(), x.raw(), n, MPFR_RNDN);
  return r;
}

BigReal floor(const BigReal& x) {
  BigReal r = BigReal::zero(x.bits());
  mpfr_floor(r.raw(), x.raw());
  return r;
}

BigReal max(const BigReal& a, const BigReal& b) { return a < b ? b : a; }
BigReal min(const BigReal& a, const BigReal& b) { return b < a ? b : a; }

BigReal ldexp(const BigReal& x, long e) {
  BigReal r = BigReal::zero(x.bits());
  mpfr_mul_2si(r.raw(), x.raw(), e, MPFR_RNDN);
  return r;
}

BigReal const_pi(int bits) {
  BigReal r = BigReal::zero(bits);
  mpfr_const_pi(r.raw(), MPFR_RNDN);
  return r;
}

BigReal const_ln2(int bits) {
  BigReal r = BigReal::zero(bits);
  mpfr_const_log2(r.raw(), MPFR_RNDN);
  return r;
}

BigReal pow2(long e, int bits) {
  BigReal r = BigReal::zero(bits);
  mpfr_set_ui_2exp(r.raw(), 1, e, MPFR_RNDN);
  return r;
}

std::ostream& operator<<(std::ostream& os, const BigReal& x) { return os << x.to_string(); }

}  // namespace sepsplit
