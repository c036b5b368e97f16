#include "sepsplit/fourier.hpp"

#include <cstdlib>

#include "sepsplit/errors.hpp"

namespace sepsplit {

void FourierSeries::set(int j, const BigReal& c, const BigReal& s) {
  if (j < 1) throw ValidationError("Fourier harmonic index must be >= 1, got " + std::to_string(j));
  if (c.is_zero() && s.is_zero()) {
    harmonics_.erase(j);
    return;
  }
  harmonics_[j] = Harmonic{c, s};
}

bool FourierSeries::is_zero() const { return harmonics_.empty() && mean_.is_zero(); }

int FourierSeries::max_harmonic() const {
  return harmonics_.empty() ? 0 : harmonics_.rbegin()->first;
}

BigReal FourierSeries::evaluate(const BigReal& tau) const {
  BigReal acc = mean_.with_bits(tau.bits());
  for (const auto& [j, h] : harmonics_) {
    BigReal s, c;
    sin_cos(tau * static_cast<long>(j), s, c);
    acc += h.cos_coeff * c + h.sin_coeff * s;
  }
  return acc;
}

BigComplex FourierSeries::exp_coeff(int k, int bits) const {
  if (k == 0) return BigComplex(mean_.with_bits(bits));
  auto it = harmonics_.find(std::abs(k));
  if (it == harmonics_.end()) return BigComplex::zero(bits);
  BigReal c = it->second.cos_coeff.with_bits(bits) / 2L;
  BigReal s = it->second.sin_coeff.with_bits(bits) / 2L;
  return k > 0 ? BigComplex(c, -s) : BigComplex(c, s);
}

FourierSeries FourierSeries::shifted(const BigReal& shift) const {
  // c cos(j(τ+d)) + s sin(j(τ+d)) = (c cos jd + s sin jd) cos jτ + (s cos jd − c sin jd) sin jτ
  FourierSeries out;
  out.mean_ = mean_;
  for (const auto& [j, h] : harmonics_) {
    BigReal sd, cd;
    sin_cos(shift * static_cast<long>(j), sd, cd);
    out.set(j, h.cos_coeff * cd + h.sin_coeff * sd, h.sin_coeff * cd - h.cos_coeff * sd);
  }
  return out;
}

FourierSeries FourierSeries::scaled(const BigReal& factor) const {
  FourierSeries out;
  out.mean_ = mean_ * factor;
  for (const auto& [j, h] : harmonics_) out.set(j, h.cos_coeff * factor, h.sin_coeff * factor);
  return out;
}

bool operator==(const FourierSeries& a, const FourierSeries& b) {
  if (a.mean_ != b.mean_ || a.harmonics_.size() != b.harmonics_.size()) return false;
  for (auto ia = a.harmonics_.begin(), ib = b.harmonics_.begin(); ia != a.harmonics_.end();
       ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.cos_coeff != ib->second.cos_coeff ||
        ia->second.sin_coeff != ib->second.sin_coeff)
      return false;
  }
  return true;
}

HarmonicSeries HarmonicSeries::from_real(const FourierSeries& f, int bits) {
  HarmonicSeries h;
  if (!f.mean().is_zero()) h.add(0, BigComplex(f.mean().with_bits(bits)));
  for (const auto& [j, unused] : f.harmonics()) {
    h.add(j, f.exp_coeff(j, bits));
    h.add(-j, f.exp_coeff(-j, bits));
  }
  return h;
}

BigComplex HarmonicSeries::coeff(int k, int bits) const {
  auto it = c_.find(k);
  return it == c_.end() ? BigComplex::zero(bits) : it->second;
}

void HarmonicSeries::add(int k, const BigComplex& v) {
  auto it = c_.find(k);
  if (it == c_.end()) {
    if (!v.is_zero()) c_.emplace(k, v);
    return;
  }
  it->second += v;
  if (it->second.is_zero()) c_.erase(it);
}

bool HarmonicSeries::is_zero() const { return c_.empty(); }

BigComplex HarmonicSeries::evaluate(const BigReal& tau) const {
  BigComplex acc = BigComplex::zero(tau.bits());
  for (const auto& [k, v] : c_) acc += v * polar(BigReal(1.0, tau.bits()), tau * static_cast<long>(k));
  return acc;
}

HarmonicSeries HarmonicSeries::operator+(const HarmonicSeries& o) const {
  HarmonicSeries r = *this;
  for (const auto& [k, v] : o.c_) r.add(k, v);
  return r;
}

HarmonicSeries HarmonicSeries::operator*(const BigComplex& s) const {
  HarmonicSeries r;
  for (const auto& [k, v] : c_) r.add(k, v * s);
  return r;
}

HarmonicSeries HarmonicSeries::multiply(const HarmonicSeries& o, int kmax) const {
  HarmonicSeries r;
  for (const auto& [k1, v1] : c_) {
    for (const auto& [k2, v2] : o.c_) {
      int k = k1 + k2;
      if (kmax >= 0 && std::abs(k) > kmax) continue;
      r.add(k, v1 * v2);
    }
  }
  return r;
}

HarmonicSeries HarmonicSeries::antiderivative() const {
  HarmonicSeries r;
  for (const auto& [k, v] : c_) {
    if (k == 0) throw NumericalError("antiderivative of a series with nonzero mean");
    // v/(ik) = −i v/k
    r.add(k, BigComplex(v.im, -v.re) / static_cast<long>(k));
  }
  return r;
}

HarmonicSeries HarmonicSeries::shifted(const BigReal& shift) const {
  HarmonicSeries r;
  for (const auto& [k, v] : c_) r.add(k, v * polar(BigReal(1.0, shift.bits()), shift * static_cast<long>(k)));
  return r;
}

BigComplex average_product(const HarmonicSeries& f, const HarmonicSeries& g, int bits) {
  BigComplex acc = BigComplex::zero(bits);
  for (const auto& [k, v] : f.coeffs()) {
    auto it = g.coeffs().find(-k);
    if (it != g.coeffs().end()) acc += v * it->second;
  }
  return acc;
}

}  // namespace sepsplit
