#include "sepsplit/rational.hpp"

#include <cmath>
#include <numeric>

#include "sepsplit/errors.hpp"

namespace sepsplit {

namespace {

using i128 = __int128;

Rational make(i128 n, i128 d) {
  if (d == 0) throw ValidationError("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 a = n < 0 ? -n : n;
  i128 b = d;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    n /= a;
    d /= a;
  }
  constexpr i128 lim = INT64_MAX;
  if (n > lim || n < -lim || d > lim) throw NumericalError("rational overflow");
  return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw ValidationError("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  num_ = n;
  den_ = d;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(const std::string& s) {
  auto bad = [&]() { return ValidationError("not a rational number: '" + s + "'"); };
  if (s.empty()) throw bad();
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      std::size_t p1 = 0, p2 = 0;
      std::int64_t n = std::stoll(s.substr(0, slash), &p1);
      std::int64_t d = std::stoll(s.substr(slash + 1), &p2);
      if (p1 != slash || p2 != s.size() - slash - 1) throw bad();
      return Rational(n, d);
    }
    // decimal literal: integer part, optional fraction, no exponent
    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '-' || s[i] == '+') neg = s[i++] == '-';
    i128 n = 0, d = 1;
    bool any = false, frac = false;
    for (; i < s.size(); ++i) {
      char c = s[i];
      if (c == '.' && !frac) {
        frac = true;
        continue;
      }
      if (c < '0' || c > '9') throw bad();
      n = n * 10 + (c - '0');
      if (frac) d *= 10;
      any = true;
      if (d > static_cast<i128>(1e18) || n > static_cast<i128>(INT64_MAX)) throw bad();
    }
    if (!any) throw bad();
    return make(neg ? -n : n, d);
  } catch (const std::logic_error&) {
    throw bad();
  }
}

std::optional<Rational> Rational::snap(double x, std::int64_t max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  std::optional<Rational> best;
  double best_err = tol;
  for (std::int64_t q = 1; q <= max_den; ++q) {
    double p = std::round(x * static_cast<double>(q));
    double err = std::fabs(x - p / static_cast<double>(q));
    if (err <= best_err && (!best || err < best_err)) {
      best = Rational(static_cast<std::int64_t>(p), q);
      best_err = err;
    }
  }
  return best;
}

Rational operator+(const Rational& a, const Rational& b) {
  return make(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
              static_cast<i128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  return make(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw NumericalError("rational division by zero");
  return make(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
}

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<i128>(a.num_) * b.den_ < static_cast<i128>(b.num_) * a.den_;
}

Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }
Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }

}  // namespace sepsplit
