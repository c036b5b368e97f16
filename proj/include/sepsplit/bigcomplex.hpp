#pragma once

#include <complex>
#include <iosfwd>

#include "sepsplit/bigreal.hpp"

namespace sepsplit {

// Complex number over BigReal. Branch cuts follow the principal-value
// conventions of std::complex (log/sqrt/pow cut along the negative real axis).
struct BigComplex {
  BigReal re;
  BigReal im;

  BigComplex() = default;
  BigComplex(const BigReal& r) : re(r), im(BigReal::zero(r.bits())) {}  // NOLINT
  BigComplex(BigReal r, BigReal i) : re(std::move(r)), im(std::move(i)) {}
  BigComplex(double r) : re(r), im(0.0) {}  // NOLINT
  BigComplex(double r, double i) : re(r), im(i) {}
  static BigComplex zero(int bits) { return {BigReal::zero(bits), BigReal::zero(bits)}; }
  static BigComplex i_unit(int bits) { return {BigReal::zero(bits), BigReal(1.0, bits)}; }

  int bits() const { return re.bits(); }
  void set_bits(int bits) {
    re.set_bits(bits);
    im.set_bits(bits);
  }
  BigComplex with_bits(int bits) const { return {re.with_bits(bits), im.with_bits(bits)}; }
  std::complex<double> to_complex() const { return {re.to_double(), im.to_double()}; }
  bool is_finite() const { return re.is_finite() && im.is_finite(); }
  bool is_zero() const { return re.is_zero() && im.is_zero(); }

  BigComplex& operator+=(const BigComplex& o);
  BigComplex& operator-=(const BigComplex& o);
  BigComplex& operator*=(const BigComplex& o);
  BigComplex& operator/=(const BigComplex& o);
  BigComplex& operator*=(const BigReal& o);
  BigComplex& operator/=(const BigReal& o);
  BigComplex operator-() const { return {-re, -im}; }
};

BigComplex operator+(const BigComplex& a, const BigComplex& b);
BigComplex operator-(const BigComplex& a, const BigComplex& b);
BigComplex operator*(const BigComplex& a, const BigComplex& b);
BigComplex operator/(const BigComplex& a, const BigComplex& b);
BigComplex operator*(const BigComplex& a, const BigReal& b);
BigComplex operator*(const BigReal& a, const BigComplex& b);
BigComplex operator/(const BigComplex& a, const BigReal& b);
BigComplex operator*(const BigComplex& a, long b);
BigComplex operator/(const BigComplex& a, long b);
inline BigComplex operator*(const BigComplex& a, int b) { return a * static_cast<long>(b); }
inline BigComplex operator/(const BigComplex& a, int b) { return a / static_cast<long>(b); }
BigComplex operator*(const BigComplex& a, double b) = delete;
BigComplex operator/(const BigComplex& a, double b) = delete;
bool operator==(const BigComplex& a, const BigComplex& b);

BigComplex conj(const BigComplex& z);
BigReal abs(const BigComplex& z);
BigReal norm(const BigComplex& z);  // |z|^2
BigReal arg(const BigComplex& z);
BigComplex polar(const BigReal& r, const BigReal& theta);
BigComplex exp(const BigComplex& z);
BigComplex log(const BigComplex& z);
BigComplex sqrt(const BigComplex& z);
BigComplex pow(const BigComplex& z, const BigReal& p);
BigComplex pow(const BigComplex& z, long n);
inline BigComplex pow(const BigComplex& z, int n) { return pow(z, static_cast<long>(n)); }
BigComplex pow(const BigComplex& z, double) = delete;
BigComplex sin(const BigComplex& z);
BigComplex cos(const BigComplex& z);
BigComplex sinh(const BigComplex& z);
BigComplex cosh(const BigComplex& z);
BigComplex tanh(const BigComplex& z);
BigComplex atan(const BigComplex& z);
// i^p = e^{iπp/2}
BigComplex i_pow(const BigReal& p);

std::ostream& operator<<(std::ostream& os, const BigComplex& z);

// In-place kernels for hot loops; acc, a, b must not alias acc's parts.
// acc += a*b
void mul_add(BigComplex& acc, const BigComplex& a, const BigComplex& b, BigReal& t);
void mul_add(BigReal& acc, const BigReal& a, const BigReal& b, BigReal& t);
void mul_into(BigComplex& out, const BigComplex& a, const BigComplex& b, BigReal& t);

}  // namespace sepsplit
