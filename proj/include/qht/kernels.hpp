#pragma once
// Tomographic kernel (pattern) functions. Averaging one of these over
// calibrated homodyne records (phi, x) estimates the corresponding operator
// expectation: normally-ordered moments <a^dag^n a^m>, density-matrix
// elements <n|rho|n+k>, and the variance-tunable photon-number kernel.
//
// Kernel evaluation is pure; the batch evaluator precomputes x-independent
// coefficient tables and produces bit-identical values to matrix_kernel.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qht/detail/pairwise.hpp"
#include "qht/model.hpp"
#include "qht/specfun.hpp"

namespace qht {

inline constexpr int kMaxMomentOrder = 16;  // cap on n + m for moment kernels
inline constexpr int kMaxFockIndex = 64;    // cap on n + k for matrix kernels
inline constexpr double kLn2 = 0.69314718055994530942;

struct MomentIndex {
  int n = 0;  // power of a^dag
  int m = 0;  // power of a

  void validate() const {
    if (n < 0 || m < 0) throw std::invalid_argument("MomentIndex: negative power");
    if (n + m > kMaxMomentOrder)
      throw std::invalid_argument("MomentIndex: order " + std::to_string(n + m) +
                                  " exceeds cap " + std::to_string(kMaxMomentOrder));
  }
};

struct MatrixIndex {
  int n = 0;  // Fock row
  int k = 0;  // off-diagonal offset, column n + k

  void validate() const {
    if (n < 0 || k < 0) throw std::invalid_argument("MatrixIndex: negative index");
    if (n + k > kMaxFockIndex)
      throw std::invalid_argument("MatrixIndex: n + k = " + std::to_string(n + k) +
                                  " exceeds cap " + std::to_string(kMaxFockIndex));
  }
};

struct AdaptiveCoefficient {
  std::complex<double> mu{0.0, 0.0};
};

// Estimator phases live on [0, pi): a record with phi in [pi, 2*pi) is
// equivalent to (phi - pi, -x).
inline HomodyneRecord fold_phase(const HomodyneRecord& r) {
  if (r.phi >= kPi) return HomodyneRecord{r.phi - kPi, -r.x};
  return r;
}

// e^{i(m-n)phi} H_{n+m}(sqrt(2) x) / (sqrt(2^{n+m}) C(n+m, n))
inline std::complex<double> moment_kernel(const MomentIndex& idx, double phi, double x) {
  idx.validate();
  if (!std::isfinite(phi) || !std::isfinite(x))
    throw std::invalid_argument("moment_kernel: non-finite input");
  const int order = idx.n + idx.m;
  const double h = hermite(order, std::sqrt(2.0) * x);
  double binom = 1.0;  // C(order, n), exact in double at these orders
  for (int i = 1; i <= idx.n; ++i) binom = binom * (order - idx.n + i) / i;
  const double amp = h / (std::exp2(0.5 * order) * binom);
  return amp * std::polar(1.0, (idx.m - idx.n) * phi);
}

// x^k e^{i(k+2)phi}; zero tomographic average for every state.
inline std::complex<double> null_function(int k, double phi, double x) {
  if (k < 0) throw std::invalid_argument("null_function: negative order");
  return std::pow(x, k) * std::polar(1.0, (k + 2) * phi);
}

// 2x^2 - 1/2 + 2 Re(mu e^{2 i phi}); the mean-photon kernel augmented with
// one zero-average term that tunes its variance.
inline double adaptive_number_kernel(const AdaptiveCoefficient& coef, double phi, double x) {
  if (!std::isfinite(phi) || !std::isfinite(x))
    throw std::invalid_argument("adaptive_number_kernel: non-finite input");
  return 2.0 * x * x - 0.5 + 2.0 * (coef.mu * std::polar(1.0, 2.0 * phi)).real();
}

// Hook for schemes that add further zero-average terms to a real base kernel.
// Each term contributes 2 Re(mu_k F_k); expectations are unchanged.
template <typename Base>
class NullAugmentedKernel {
 public:
  NullAugmentedKernel(Base base, std::vector<std::pair<int, std::complex<double>>> terms)
      : base_(std::move(base)), terms_(std::move(terms)) {}

  double operator()(double phi, double x) const {
    double v = base_(phi, x);
    for (const auto& [k, mu] : terms_) v += 2.0 * (mu * null_function(k, phi, x)).real();
    return v;
  }

 private:
  Base base_;
  std::vector<std::pair<int, std::complex<double>>> terms_;
};

namespace detail {

// Raw Kummer series, y >= 0 assumed (callers pre-transform negative arguments).
inline double kummer_series_raw(double a, double b, double y) {
  double term = 1.0;
  double sum = 1.0;
  for (int i = 0; i < kKummerMaxTerms; ++i) {
    term *= (a + i) / (b + i) * y / (i + 1);
    sum += term;
    if (std::abs(term) <= kKummerRelTol * std::abs(sum)) return sum;
  }
  throw std::runtime_error("kummer_series_raw: no convergence");
}

// Checks the kernel argument bound 2x^2 <= kKummerArgBound and returns y = 2x^2.
inline double kernel_y(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("matrix kernel: non-finite x");
  const double y = 2.0 * x * x;
  if (y > kKummerArgBound)
    throw std::invalid_argument("matrix kernel: |x| = " + std::to_string(std::abs(x)) +
                                " outside the supported quadrature range");
  return y;
}

// l-th coefficient of the f_nk sum (sign and 2-power folded in).
inline double fnk_coefficient(int n, int k, int l) {
  const bool even = (k % 2) == 0;
  const int kap = even ? k / 2 : (k + 1) / 2;
  const double lg = ln_factorial(l + kap) - ln_factorial(l) - ln_factorial(n - l) -
                    ln_factorial(l + k);
  const double c = std::exp2(even ? static_cast<double>(l) : l + 0.5) * std::exp(lg);
  return (l % 2 == 0) ? c : -c;
}

// Leading factor of R[|n><n+k|]. The alternating (-1)^(k/2) makes the
// tomographic average reproduce <n|rho|n+k> with the standard sign for
// every offset k (checked against exact coherent-state matrix elements).
inline double fnk_prefactor(int n, int k) {
  const double p =
      2.0 * std::exp(0.5 * (k * kLn2 + ln_factorial(n) + ln_factorial(n + k)));
  return ((k / 2) % 2 == 0) ? p : -p;
}

}  // namespace detail

// R[|n><n+k|](phi, x) = prefactor * e^{-ik phi} * f_nk(x). The even-offset
// branch sums confluent-hypergeometric terms at argument -2x^2 (evaluated via
// the e^{-y}-transformed series); the odd branch carries an extra 2x e^{-2x^2}.
inline std::complex<double> matrix_kernel(const MatrixIndex& idx, double phi, double x) {
  idx.validate();
  if (!std::isfinite(phi)) throw std::invalid_argument("matrix_kernel: non-finite phi");
  const double y = detail::kernel_y(x);
  const bool even = (idx.k % 2) == 0;
  const int shift = even ? idx.k / 2 : (idx.k - 1) / 2;
  const double b = even ? 0.5 : 1.5;
  double f = 0.0;
  for (int l = 0; l <= idx.n; ++l) {
    const double s = detail::kummer_series_raw(-0.5 - (l + shift), b, y);
    f += detail::fnk_coefficient(idx.n, idx.k, l) * s;
  }
  const double ey = std::exp(-y);
  const double bf = even ? ey : 2.0 * x * ey;
  const double amp = (detail::fnk_prefactor(idx.n, idx.k) * bf) * f;
  return amp * std::polar(1.0, -static_cast<double>(idx.k) * phi);
}

// Evaluates every R[|n><n+k|] with n + k <= n_max at one record, sharing the
// two per-record series tables across all indices. Values are bit-identical
// to matrix_kernel.
class MatrixKernelBatch {
 public:
  explicit MatrixKernelBatch(int n_max) : n_max_(n_max) {
    MatrixIndex{0, n_max}.validate();
    std::size_t count = 0;
    for (int k = 0; k <= n_max_; ++k)
      for (int n = 0; n + k <= n_max_; ++n) {
        pref_.push_back(detail::fnk_prefactor(n, k));
        for (int l = 0; l <= n; ++l) coef_.push_back(detail::fnk_coefficient(n, k, l));
        ++count;
      }
    size_ = count;
  }

  int n_max() const { return n_max_; }
  std::size_t size() const { return size_; }

  // Storage order is offset-major: index 0 is (n=0,k=0), then (1,0) ... up k.
  static std::size_t index_of(int n, int k, int n_max) {
    std::size_t base = 0;
    for (int kk = 0; kk < k; ++kk) base += static_cast<std::size_t>(n_max - kk + 1);
    return base + static_cast<std::size_t>(n);
  }

  struct Workspace {
    std::vector<double> se, so;
  };

  void eval(double phi, double x, Workspace& ws, std::complex<double>* out) const {
    if (!std::isfinite(phi)) throw std::invalid_argument("MatrixKernelBatch: non-finite phi");
    const double y = detail::kernel_y(x);
    ws.se.resize(n_max_ + 1);
    ws.so.resize(n_max_ + 1);
    for (int j = 0; j <= n_max_; ++j) {
      ws.se[j] = detail::kummer_series_raw(-0.5 - j, 0.5, y);
      ws.so[j] = detail::kummer_series_raw(-0.5 - j, 1.5, y);
    }
    const double ey = std::exp(-y);
    const double txey = 2.0 * x * ey;
    std::size_t idx = 0;
    std::size_t ci = 0;
    for (int k = 0; k <= n_max_; ++k) {
      const bool even = (k % 2) == 0;
      const int shift = even ? k / 2 : (k - 1) / 2;
      const double bf = even ? ey : txey;
      const double* s = even ? ws.se.data() : ws.so.data();
      const std::complex<double> phase = std::polar(1.0, -static_cast<double>(k) * phi);
      for (int n = 0; n + k <= n_max_; ++n, ++idx) {
        double f = 0.0;
        for (int l = 0; l <= n; ++l) f += coef_[ci++] * s[l + shift];
        const double amp = (pref_[idx] * bf) * f;
        out[idx] = amp * phase;
      }
    }
  }

 private:
  int n_max_;
  std::size_t size_ = 0;
  std::vector<double> pref_;
  std::vector<double> coef_;
};

// mu = -<a^dag 2>/2 estimated from the data themselves; plugging it into
// adaptive_number_kernel minimizes the estimator variance over the family.
inline AdaptiveCoefficient optimal_mu(const HomodyneDataset& ds) {
  if (ds.records.empty()) throw std::invalid_argument("optimal_mu: empty dataset");
  if (!ds.calibrated) throw std::invalid_argument("optimal_mu: dataset not calibrated");
  detail::PairwiseSum re, im;
  const MomentIndex a2{2, 0};
  for (const auto& rec : ds.records) {
    const HomodyneRecord r = fold_phase(rec);
    const std::complex<double> v = moment_kernel(a2, r.phi, r.x);
    re.push(v.real());
    im.push(v.imag());
  }
  const double n = static_cast<double>(ds.records.size());
  return AdaptiveCoefficient{{-0.5 * (re.total() / n), -0.5 * (im.total() / n)}};
}

}  // namespace qht
