#pragma once

#include <mpfr.h>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace sepsplit {

// Precision used for newly created scalars on this thread. Initialized from
// SEPSPLIT_BITS when set, otherwise 128.
int default_bits();
void set_default_bits(int bits);
int bits_from_env(int fallback);

class PrecisionGuard {
 public:
  explicit PrecisionGuard(int bits);
  ~PrecisionGuard();
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  int saved_;
};

// Value-semantics wrapper around mpfr_t. Binary operations produce a result
// at the larger of the operand precisions; copies keep the source precision.
class BigReal {
 public:
  BigReal();
  BigReal(double v);  // NOLINT(google-explicit-constructor)
  BigReal(int v);     // NOLINT(google-explicit-constructor)
  BigReal(long v);    // NOLINT(google-explicit-constructor)
  BigReal(double v, int bits);
  static BigReal zero(int bits);
  static BigReal from_string(const std::string& s, int bits = default_bits());

  BigReal(const BigReal& o);
  BigReal(BigReal&& o) noexcept;
  BigReal& operator=(const BigReal& o);
  BigReal& operator=(BigReal&& o) noexcept;
  ~BigReal();

  int bits() const { return static_cast<int>(mpfr_get_prec(v_)); }
  // Changes precision keeping the value (rounded).
  void set_bits(int bits);
  BigReal with_bits(int bits) const;

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long() const { return mpfr_get_si(v_, MPFR_RNDN); }
  // Shortest-ish decimal with enough digits to round-trip at this precision.
  std::string to_string() const;
  std::string to_string(int digits) const;

  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  BigReal& operator+=(const BigReal& o);
  BigReal& operator-=(const BigReal& o);
  BigReal& operator*=(const BigReal& o);
  BigReal& operator/=(const BigReal& o);
  BigReal& operator*=(long o);
  BigReal& operator/=(long o);
  BigReal& operator*=(int o) { return *this *= static_cast<long>(o); }
  BigReal& operator/=(int o) { return *this /= static_cast<long>(o); }
  // A double would silently truncate through the long overloads.
  BigReal& operator*=(double) = delete;
  BigReal& operator/=(double) = delete;
  BigReal operator-() const;

 private:
  mpfr_t v_;
  void ensure_init(int bits);
};

BigReal operator+(const BigReal& a, const BigReal& b);
BigReal operator-(const BigReal& a, const BigReal& b);
BigReal operator*(const BigReal& a, const BigReal& b);
BigReal operator/(const BigReal& a, const BigReal& b);
BigReal operator*(const BigReal& a, long b);
BigReal operator*(long a, const BigReal& b);
BigReal operator/(const BigReal& a, long b);
inline BigReal operator*(const BigReal& a, int b) { return a * static_cast<long>(b); }
inline BigReal operator*(int a, const BigReal& b) { return static_cast<long>(a) * b; }
inline BigReal operator/(const BigReal& a, int b) { return a / static_cast<long>(b); }
BigReal operator*(const BigReal& a, double b) = delete;
BigReal operator*(double a, const BigReal& b) = delete;
BigReal operator/(const BigReal& a, double b) = delete;

bool operator==(const BigReal& a, const BigReal& b);
bool operator!=(const BigReal& a, const BigReal& b);
bool operator<(const BigReal& a, const BigReal& b);
bool operator<=(const BigReal& a, const BigReal& b);
bool operator>(const BigReal& a, const BigReal& b);
bool operator>=(const BigReal& a, const BigReal& b);

BigReal abs(const BigReal& x);
BigReal sqrt(const BigReal& x);
BigReal exp(const BigReal& x);
BigReal expm1(const BigReal& x);
BigReal log(const BigReal& x);
BigReal log1p(const BigReal& x);
BigReal sin(const BigReal& x);
BigReal cos(const BigReal& x);
void sin_cos(const BigReal& x, BigReal& s, BigReal& c);
BigReal tan(const BigReal& x);
BigReal atan(const BigReal& x);
BigReal atan2(const BigReal& y, const BigReal& x);
BigReal sinh(const BigReal& x);
BigReal cosh(const BigReal& x);
BigReal tanh(const BigReal& x);
BigReal pow(const BigReal& x, const BigReal& y);
BigReal pow(const BigReal& x, long n);
inline BigReal pow(const BigReal& x, int n) { return pow(x, static_cast<long>(n)); }
BigReal pow(const BigReal& x, double) = delete;
BigReal gamma(const BigReal& x);
BigReal floor(const BigReal& x);
BigReal max(const BigReal& a, const BigReal& b);
BigReal min(const BigReal& a, const BigReal& b);
BigReal ldexp(const BigReal& x, long e);
BigReal const_pi(int bits = default_bits());
BigReal const_ln2(int bits = default_bits());
// 2^e as a BigReal of the given precision.
BigReal pow2(long e, int bits = default_bits());

std::ostream& operator<<(std::ostream& os, const BigReal& x);

}  // namespace sepsplit
