#pragma once
// Special functions backing the tomographic kernels: Hermite and generalized
// Laguerre polynomials, the confluent hypergeometric function Phi(a,b;x),
// and log-factorials. Everything here is pure and reentrant.

#include <cmath>
#include <stdexcept>
#include <string>

namespace qht {

// Tunable limits. Kept as named constants so tests can probe the boundaries.
inline constexpr int kMaxPolyOrder = 64;       // hermite / laguerre order cap
inline constexpr double kKummerArgBound = 200; // |x| cap for kummer_phi
inline constexpr int kKummerMaxTerms = 500;
inline constexpr double kKummerRelTol = 1e-15;

namespace detail {
inline void check_order(int n, const char* fn) {
  if (n < 0) throw std::invalid_argument(std::string(fn) + ": negative order");
  if (n > kMaxPolyOrder)
    throw std::invalid_argument(std::string(fn) + ": order " + std::to_string(n) +
                                " exceeds cap " + std::to_string(kMaxPolyOrder));
}
}  // namespace detail

// Physicists' Hermite polynomial H_n(y) by the three-term recurrence
// H_{k+1} = 2y H_k - 2k H_{k-1}.
inline double hermite(int n, double y) {
  detail::check_order(n, "hermite");
  if (!std::isfinite(y)) throw std::invalid_argument("hermite: non-finite argument");
  double prev = 1.0;  // H_0
  if (n == 0) return prev;
  double cur = 2.0 * y;  // H_1
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * y * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Generalized Laguerre polynomial L_n^d(y), recurrence in n.
inline double laguerre(int n, int d, double y) {
  detail::check_order(n, "laguerre");
  detail::check_order(d, "laguerre");
  if (!std::isfinite(y)) throw std::invalid_argument("laguerre: non-finite argument");
  double prev = 1.0;  // L_0
  if (n == 0) return prev;
  double cur = 1.0 + d - y;  // L_1
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + d - y) * cur - (k + d) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

// Confluent hypergeometric function Phi(a,b;x) = sum_k (a)_k/(b)_k x^k/k!.
// Negative arguments go through the transformation Phi(a,b;x) = e^x Phi(b-a,b;-x)
// so the series is summed with non-negative terms ratio-wise; direct alternating
// summation loses all precision once |x| is a few units.
inline double kummer_phi(double a, double b, double x) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(x))
    throw std::invalid_argument("kummer_phi: non-finite input");
  if (b <= 0.0 && b == std::floor(b))
    throw std::invalid_argument("kummer_phi: b must not be a non-positive integer");
  if (std::abs(x) > kKummerArgBound)
    throw std::invalid_argument("kummer_phi: |x| exceeds bound " +
                                std::to_string(kKummerArgBound));
  if (x < 0.0) return std::exp(x) * kummer_phi(b - a, b, -x);
  double term = 1.0;
  double sum = 1.0;
  for (int i = 0; i < kKummerMaxTerms; ++i) {
    term *= (a + i) / (b + i) * x / (i + 1);
    sum += term;
    if (std::abs(term) <= kKummerRelTol * std::abs(sum)) return sum;
  }
  throw std::runtime_error("kummer_phi: no convergence within " +
                           std::to_string(kKummerMaxTerms) + " terms");
}

// ln(n!). Exact integer product through 20!, Stirling series beyond
// (four correction terms; relative error far below 1e-14 for n >= 21).
inline double ln_factorial(int n) {
  if (n < 0) throw std::invalid_argument("ln_factorial: negative argument");
  if (n <= 20) {
    unsigned long long f = 1;
    for (int k = 2; k <= n; ++k) f *= static_cast<unsigned long long>(k);
    return std::log(static_cast<double>(f));
  }
  const double nn = static_cast<double>(n);
  const double inv = 1.0 / nn;
  const double inv2 = inv * inv;
  constexpr double half_ln_2pi = 0.91893853320467274178;
  return (nn + 0.5) * std::log(nn) - nn + half_ln_2pi +
         inv * (1.0 / 12.0 + inv2 * (-1.0 / 360.0 + inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

}  // namespace qht
