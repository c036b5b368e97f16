#pragma once

#include <map>

#include "sepsplit/bigcomplex.hpp"

namespace sepsplit {

struct Harmonic {
  BigReal cos_coeff;
  BigReal sin_coeff;
};

// Real trigonometric polynomial Σ_j c_j cos(jτ) + s_j sin(jτ), j ≥ 1.
// A constant term is representable only so that validation can report it;
// well-formed models have mean() == 0.
class FourierSeries {
 public:
  void set(int j, const BigReal& c, const BigReal& s);
  void set_mean(const BigReal& m) { mean_ = m; }
  const BigReal& mean() const { return mean_; }
  const std::map<int, Harmonic>& harmonics() const { return harmonics_; }
  bool is_zero() const;
  int max_harmonic() const;
  BigReal evaluate(const BigReal& tau) const;
  // Coefficient of e^{ikτ}: (c − i s)/2 for k > 0, (c + i s)/2 for k < 0.
  BigComplex exp_coeff(int k, int bits) const;
  // Series of τ ↦ f(τ + shift).
  FourierSeries shifted(const BigReal& shift) const;
  FourierSeries scaled(const BigReal& factor) const;

  friend bool operator==(const FourierSeries& a, const FourierSeries& b);

 private:
  std::map<int, Harmonic> harmonics_;
  BigReal mean_;
};

// Complex trigonometric polynomial Σ_k c_k e^{ikτ}, k ∈ ℤ.
class HarmonicSeries {
 public:
  HarmonicSeries() = default;
  static HarmonicSeries from_real(const FourierSeries& f, int bits);

  const std::map<int, BigComplex>& coeffs() const { return c_; }
  BigComplex coeff(int k, int bits) const;
  void add(int k, const BigComplex& v);
  bool is_zero() const;
  BigComplex mean(int bits) const { return coeff(0, bits); }
  BigComplex evaluate(const BigReal& tau) const;

  HarmonicSeries operator+(const HarmonicSeries& o) const;
  HarmonicSeries operator*(const BigComplex& s) const;
  // Product truncated to |k| ≤ kmax (kmax < 0: no truncation).
  HarmonicSeries multiply(const HarmonicSeries& o, int kmax = -1) const;
  // Zero-mean antiderivative; requires zero mean.
  HarmonicSeries antiderivative() const;
  HarmonicSeries shifted(const BigReal& shift) const;

 private:
  std::map<int, BigComplex> c_;
};

// ⟨f g⟩ = Σ_k f_k g_{−k}
BigComplex average_product(const HarmonicSeries& f, const HarmonicSeries& g, int bits);

}  // namespace sepsplit
