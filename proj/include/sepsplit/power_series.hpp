#pragma once

#include <algorithm>
#include <vector>

#include "sepsplit/bigcomplex.hpp"
#include "sepsplit/errors.hpp"

namespace sepsplit {

// Truncated power series Σ_{n ≤ order} c_n u^n. Binary operations truncate
// to the smaller order of the operands.
template <class T>
class PowerSeries {
 public:
  PowerSeries() = default;
  explicit PowerSeries(std::vector<T> c) : c_(std::move(c)) {}
  static PowerSeries constant(const T& v, int order, int bits) {
    std::vector<T> c(order + 1, T(BigReal::zero(bits)));
    c[0] = v;
    return PowerSeries(std::move(c));
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const T& operator[](int n) const { return c_[n]; }
  T& operator[](int n) { return c_[n]; }
  const std::vector<T>& coeffs() const { return c_; }

  PowerSeries operator+(const PowerSeries& o) const {
    int n = std::min(order(), o.order());
    std::vector<T> r;
    r.reserve(n + 1);
    for (int i = 0; i <= n; ++i) r.push_back(c_[i] + o.c_[i]);
    return PowerSeries(std::move(r));
  }

  PowerSeries operator-(const PowerSeries& o) const {
    int n = std::min(order(), o.order());
    std::vector<T> r;
    r.reserve(n + 1);
    for (int i = 0; i <= n; ++i) r.push_back(c_[i] - o.c_[i]);
    return PowerSeries(std::move(r));
  }

  PowerSeries operator*(const PowerSeries& o) const {
    int n = std::min(order(), o.order());
    std::vector<T> r;
    r.reserve(n + 1);
    BigReal t = BigReal::zero(c_[0].bits());
    for (int i = 0; i <= n; ++i) {
      T acc = T(BigReal::zero(c_[0].bits()));
      for (int j = 0; j <= i; ++j) mul_add(acc, c_[j], o.c_[i - j], t);
      r.push_back(std::move(acc));
    }
    return PowerSeries(std::move(r));
  }

  PowerSeries derive() const {
    std::vector<T> r;
    if (order() < 1) return PowerSeries(std::vector<T>{T(BigReal::zero(c_.empty() ? 53 : c_[0].bits()))});
    r.reserve(order());
    for (int i = 1; i <= order(); ++i) r.push_back(c_[i] * static_cast<long>(i));
    return PowerSeries(std::move(r));
  }

  // f(g(u)) for g with g(0) = 0, by Horner in series arithmetic.
  PowerSeries compose(const PowerSeries& g) const {
    if (!g.c_.empty() && !g.c_[0].is_zero())
      throw ValidationError("compose requires an inner series with zero constant term");
    int n = std::min(order(), g.order());
    int bits = c_[0].bits();
    PowerSeries acc = constant(c_[n], n, bits);
    PowerSeries inner(std::vector<T>(g.c_.begin(), g.c_.begin() + n + 1));
    for (int i = n - 1; i >= 0; --i) {
      acc = acc * inner;
      acc.c_[0] += c_[i];
    }
    return acc;
  }

  T evaluate(const T& u) const {
    T acc = c_.back();
    for (int i = order() - 1; i >= 0; --i) acc = acc * u + c_[i];
    return acc;
  }

 private:
  std::vector<T> c_;
};

}  // namespace sepsplit
