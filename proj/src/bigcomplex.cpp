#include "sepsplit/bigcomplex.hpp"

#include <ostream>

namespace sepsplit {

BigComplex& BigComplex::operator+=(const BigComplex& o) {
  re += o.re;
  im += o.im;
  return *this;
}

BigComplex& BigComplex::operator-=(const BigComplex& o) {
  re -= o.re;
  im -= o.im;
  return *this;
}

BigComplex& BigComplex::operator*=(const BigComplex& o) {
  *this = *this * o;
  return *this;
}

BigComplex& BigComplex::operator/=(const BigComplex& o) {
  *this = *this / o;
  return *this;
}

BigComplex& BigComplex::operator*=(const BigReal& o) {
  re *= o;
  im *= o;
  return *this;
}

BigComplex& BigComplex::operator/=(const BigReal& o) {
  re /= o;
  im /= o;
  return *this;
}

BigComplex operator+(const BigComplex& a, const BigComplex& b) { return {a.re + b.re, a.im + b.im}; }
BigComplex operator-(const BigComplex& a, const BigComplex& b) { return {a.re - b.re, a.im - b.im}; }

BigComplex operator*(const BigComplex& a, const BigComplex& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

BigComplex operator/(const BigComplex& a, const BigComplex& b) {
  // Smith's scaling avoids overflow of |b|^2 for huge |b|.
  if (abs(b.re) >= abs(b.im)) {
    BigReal t = b.im / b.re;
    BigReal d = b.re + b.im * t;
    return {(a.re + a.im * t) / d, (a.im - a.re * t) / d};
  }
  BigReal t = b.re / b.im;
  BigReal d = b.re * t + b.im;
  return {(a.re * t + a.im) / d, (a.im * t - a.re) / d};
}

BigComplex operator*(const BigComplex& a, const BigReal& b) { return {a.re * b, a.im * b}; }
BigComplex operator*(const BigReal& a, const BigComplex& b) { return b * a; }
BigComplex operator/(const BigComplex& a, const BigReal& b) { return {a.re / b, a.im / b}; }
BigComplex operator*(const BigComplex& a, long b) { return {a.re * b, a.im * b}; }
BigComplex operator/(const BigComplex& a, long b) { return {a.re / b, a.im / b}; }

bool operator==(const BigComplex& a, const BigComplex& b) { return a.re == b.re && a.im == b.im; }

BigComplex conj(const BigComplex& z) { return {z.re, -z.im}; }

BigReal abs(const BigComplex& z) {
  BigReal r = BigReal::zero(z.bits());
  mpfr_hypot(r.raw(), z.re.raw(), z.im.raw(), MPFR_RNDN);
  return r;
}

BigReal norm(const BigComplex& z) { return z.re * z.re + z.im * z.im; }

BigReal arg(const BigComplex& z) { return atan2(z.im, z.re); }

BigComplex polar(const BigReal& r, const BigReal& theta) {
  BigReal s, c;
  sin_cos(theta, s, c);
  return {r * c, r * s};
}

BigComplex exp(const BigComplex& z) { return polar(exp(z.re), z.im); }

BigComplex log(const BigComplex& z) { return {log(abs(z)), arg(z)}; }

BigComplex sqrt(const BigComplex& z) {
  if (z.is_zero()) return BigComplex::zero(z.bits());
  BigReal m = abs(z);
  BigReal t = sqrt((m + abs(z.re)) / 2L);
  if (z.re.sign() >= 0) return {t, z.im / (t * 2L)};
  BigReal u = abs(z.im) / (t * 2L);
  return {u, z.im.sign() < 0 ? -t : t};
}

BigComplex pow(const BigComplex& z, const BigReal& p) {
  if (z.is_zero()) return BigComplex::zero(z.bits());
  return polar(pow(abs(z), p), arg(z) * p);
}

BigComplex pow(const BigComplex& z, long n) {
  if (n < 0) return BigComplex(BigReal(1.0, z.bits())) / pow(z, -n);
  BigComplex result(BigReal(1.0, z.bits()));
  BigComplex base = z;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

BigComplex sin(const BigComplex& z) {
  BigReal s, c;
  sin_cos(z.re, s, c);
  return {s * cosh(z.im), c * sinh(z.im)};
}

BigComplex cos(const BigComplex& z) {
  BigReal s, c;
  sin_cos(z.re, s, c);
  return {c * cosh(z.im), -(s * sinh(z.im))};
}

BigComplex sinh(const BigComplex& z) {
  BigReal s, c;
  sin_cos(z.im, s, c);
  return {sinh(z.re) * c, cosh(z.re) * s};
}

BigComplex cosh(const BigComplex& z) {
  BigReal s, c;
  sin_cos(z.im, s, c);
  return {cosh(z.re) * c, sinh(z.re) * s};
}

BigComplex tanh(const BigComplex& z) { return sinh(z) / cosh(z); }

BigComplex atan(const BigComplex& z) {
  // atan z = (i/2) [log(1 - iz) - log(1 + iz)]
  int b = z.bits();
  BigComplex iz{-z.im, z.re};
  BigComplex one(BigReal(1.0, b));
  BigComplex d = log(one - iz) - log(one + iz);
  return {-d.im / 2L, d.re / 2L};
}

BigComplex i_pow(const BigReal& p) {
  BigReal half_pi = const_pi(p.bits()) / 2L;
  return polar(BigReal(1.0, p.bits()), half_pi * p);
}

std::ostream& operator<<(std::ostream& os, const BigComplex& z) {
  return os << "(" << z.re << ", " << z.im << ")";
}

void mul_add(BigComplex& acc, const BigComplex& a, const BigComplex& b, BigReal& t) {
  mpfr_mul(t.raw(), a.re.raw(), b.re.raw(), MPFR_RNDN);
  mpfr_add(acc.re.raw(), acc.re.raw(), t.raw(), MPFR_RNDN);
  mpfr_mul(t.raw(), a.im.raw(), b.im.raw(), MPFR_RNDN);
  mpfr_sub(acc.re.raw(), acc.re.raw(), t.raw(), MPFR_RNDN);
  mpfr_mul(t.raw(), a.re.raw(), b.im.raw(), MPFR_RNDN);
  mpfr_add(acc.im.raw(), acc.im.raw(), t.raw(), MPFR_RNDN);
  mpfr_mul(t.raw(), a.im.raw(), b.re.raw(), MPFR_RNDN);
  mpfr_add(acc.im.raw(), acc.im.raw(), t.raw(), MPFR_RNDN);
}

void mul_add(BigReal& acc, const BigReal& a, const BigReal& b, BigReal& t) {
  mpfr_mul(t.raw(), a.raw(), b.raw(), MPFR_RNDN);
  mpfr_add(acc.raw(), acc.raw(), t.raw(), MPFR_RNDN);
}

void mul_into(BigComplex& out, const BigComplex& a, const BigComplex& b, BigReal& t) {
  mpfr_mul(t.raw(), a.im.raw(), b.im.raw(), MPFR_RNDN);
  mpfr_fms(out.re.raw(), a.re.raw(), b.re.raw(), t.raw(), MPFR_RNDN);
  mpfr_mul(t.raw(), a.im.raw(), b.re.raw(), MPFR_RNDN);
  mpfr_fma(out.im.raw(), a.re.raw(), b.im.raw(), t.raw(), MPFR_RNDN);
}

}  // namespace sepsplit
