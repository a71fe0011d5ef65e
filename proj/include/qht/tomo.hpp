#pragma once
// Tomographic averaging engine: a dataset plus a kernel gives an estimate
// with a standard error; on top of that, density-matrix reconstruction,
// photon distribution extraction, and the Wigner function series.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "qht/detail/pairwise.hpp"
#include "qht/kernels.hpp"
#include "qht/model.hpp"
#include "qht/specfun.hpp"

namespace qht {

struct EstimateResult {
  std::complex<double> value{0.0, 0.0};
  double stderr_re = 0.0;  // rms deviation of Re(kernel) / sqrt(N)
  double stderr_im = 0.0;  // rms deviation of Im(kernel) / sqrt(N); 0 for real kernels
};

// Mean of the kernel over all (folded) records. Kernel may return double or
// std::complex<double>; real kernels get stderr_im = 0 exactly.
template <typename Kernel>
EstimateResult average_kernel(const HomodyneDataset& ds, Kernel&& kernel) {
  if (ds.records.empty()) throw std::invalid_argument("average_kernel: empty dataset");
  if (!ds.calibrated) throw std::invalid_argument("average_kernel: dataset not calibrated");
  using R = std::remove_cvref_t<std::invoke_result_t<Kernel&, double, double>>;
  constexpr bool kRealKernel = std::is_arithmetic_v<R>;
  detail::PairwiseSum sre, sim, sre2, sim2;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const HomodyneRecord r = fold_phase(ds.records[i]);
    double re, im;
    if constexpr (kRealKernel) {
      re = static_cast<double>(kernel(r.phi, r.x));
      im = 0.0;
    } else {
      const std::complex<double> v = kernel(r.phi, r.x);
      re = v.real();
      im = v.imag();
    }
    if (!std::isfinite(re) || !std::isfinite(im))
      throw std::runtime_error("average_kernel: non-finite kernel value at record " +
                               std::to_string(i));
    sre.push(re);
    sre2.push(re * re);
    if constexpr (!kRealKernel) {
      sim.push(im);
      sim2.push(im * im);
    }
  }
  const double n = static_cast<double>(ds.records.size());
  EstimateResult out;
  const double mre = sre.total() / n;
  const double vre = std::max(0.0, sre2.total() / n - mre * mre);
  out.stderr_re = std::sqrt(vre / n);
  if constexpr (kRealKernel) {
    out.value = {mre, 0.0};
  } else {
    const double mim = sim.total() / n;
    const double vim = std::max(0.0, sim2.total() / n - mim * mim);
    out.value = {mre, mim};
    out.stderr_im = std::sqrt(vim / n);
  }
  return out;
}

// Hermitian by construction: only the upper triangle is stored; mirrored
// entries are conjugates with the same per-component errors.
class DensityMatrix {
 public:
  explicit DensityMatrix(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw std::invalid_argument("DensityMatrix: negative cutoff");
    elems_.resize(static_cast<std::size_t>(n_max + 1) * (n_max + 2) / 2);
  }

  int n_max() const { return n_max_; }
  int dim() const { return n_max_ + 1; }

  EstimateResult& upper(int j, int k) {
    check(j, k);
    if (j > k) throw std::invalid_argument("DensityMatrix::upper: need j <= k");
    return elems_[tri_index(j, k)];
  }
  const EstimateResult& upper(int j, int k) const {
    return const_cast<DensityMatrix*>(this)->upper(j, k);
  }

  EstimateResult at(int j, int k) const {
    check(j, k);
    if (j <= k) return elems_[tri_index(j, k)];
    EstimateResult m = elems_[tri_index(k, j)];
    m.value = std::conj(m.value);
    return m;
  }

  // Sum of diagonal values with combined (quadrature) standard error.
  EstimateResult trace() const {
    double t = 0.0, e2 = 0.0;
    for (int n = 0; n <= n_max_; ++n) {
      const EstimateResult& d = elems_[tri_index(n, n)];
      t += d.value.real();
      e2 += d.stderr_re * d.stderr_re;
    }
    return EstimateResult{{t, 0.0}, std::sqrt(e2), 0.0};
  }

 private:
  void check(int j, int k) const {
    if (j < 0 || k < 0 || j > n_max_ || k > n_max_)
      throw std::out_of_range("DensityMatrix: index outside cutoff");
  }
  std::size_t tri_index(int j, int k) const {
    // row-major upper triangle: row j starts after rows 0..j-1
    return static_cast<std::size_t>(j) * (n_max_ + 1) - static_cast<std::size_t>(j) * (j - 1) / 2 +
           static_cast<std::size_t>(k - j);
  }

  int n_max_;
  std::vector<EstimateResult> elems_;
};

// One pass over the records evaluates all (n, n+k) kernels per record via the
// shared series tables; per-element results are bit-identical to running
// average_kernel with the corresponding matrix_kernel.
inline DensityMatrix reconstruct_rho(const HomodyneDataset& ds, int n_max) {
  if (ds.records.empty()) throw std::invalid_argument("reconstruct_rho: empty dataset");
  if (!ds.calibrated) throw std::invalid_argument("reconstruct_rho: dataset not calibrated");
  const MatrixKernelBatch batch(n_max);
  struct Acc {
    detail::PairwiseSum re, im, re2, im2;
  };
  std::vector<Acc> accs(batch.size());
  std::vector<std::complex<double>> vals(batch.size());
  MatrixKernelBatch::Workspace ws;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const HomodyneRecord r = fold_phase(ds.records[i]);
    batch.eval(r.phi, r.x, ws, vals.data());
    for (std::size_t e = 0; e < vals.size(); ++e) {
      const double re = vals[e].real();
      const double im = vals[e].imag();
      if (!std::isfinite(re) || !std::isfinite(im))
        throw std::runtime_error("reconstruct_rho: non-finite kernel value at record " +
                                 std::to_string(i));
      accs[e].re.push(re);
      accs[e].im.push(im);
      accs[e].re2.push(re * re);
      accs[e].im2.push(im * im);
    }
  }
  const double n = static_cast<double>(ds.records.size());
  DensityMatrix rho(n_max);
  std::size_t idx = 0;
  for (int k = 0; k <= n_max; ++k)
    for (int row = 0; row + k <= n_max; ++row, ++idx) {
      const double mre = accs[idx].re.total() / n;
      const double mim = accs[idx].im.total() / n;
      const double vre = std::max(0.0, accs[idx].re2.total() / n - mre * mre);
      const double vim = std::max(0.0, accs[idx].im2.total() / n - mim * mim);
      rho.upper(row, row + k) =
          EstimateResult{{mre, mim}, std::sqrt(vre / n), std::sqrt(vim / n)};
    }
  return rho;
}

struct PhotonBin {
  int n = 0;
  double p = 0.0;
  double err = 0.0;
};

inline std::vector<PhotonBin> photon_distribution(const DensityMatrix& rho) {
  std::vector<PhotonBin> out;
  out.reserve(rho.dim());
  for (int n = 0; n <= rho.n_max(); ++n) {
    const EstimateResult& e = rho.at(n, n);
    out.push_back(PhotonBin{n, e.value.real(), e.stderr_re});
  }
  return out;
}

struct WignerPoint {
  std::complex<double> z;
  double w = 0.0;
};

struct WignerGrid {
  std::vector<WignerPoint> points;
  int n_max = 0;
  int d_max = 0;
  // Series normalization: vacuum peak W(0) = 2, integral over the plane = pi.
  std::string normalization = "vacuum-peak-2;plane-integral-pi";
};

// W(z) = Re sum_d e^{i d arg z} sum_n Lambda(n, d; |z|^2) rho_{n,n+d}, with
// Lambda = (-1)^n 2 (2 - delta_{d0}) |2z|^d sqrt(n!/(n+d)!) e^{-2|z|^2} L_n^d(4|z|^2).
// Truncated at n + d <= rho cutoff and d <= d_max.
//
// Truncation caution: for coherent amplitudes beyond ~1.5 the raised-cutoff
// residual off the state's axis is far larger than near the peak (measured:
// worst grid change 20 -> 30 is ~1e-10 at alpha=1, ~4e-7 at alpha=1.5,
// ~7e-5 at alpha=2, ~5e-2 at alpha=3 on a +/-3 grid).
inline WignerGrid wigner_from_rho(const DensityMatrix& rho,
                                  const std::vector<std::complex<double>>& grid, int d_max) {
  if (d_max < 0) throw std::invalid_argument("wigner_from_rho: negative d_max");
  if (d_max > rho.n_max())
    throw std::invalid_argument("wigner_from_rho: d_max exceeds the matrix cutoff");
  WignerGrid out;
  out.n_max = rho.n_max();
  out.d_max = d_max;
  out.points.reserve(grid.size());
  for (const std::complex<double>& z : grid) {
    const double az = std::abs(z);
    const double az2 = az * az;
    const double phi = std::arg(z);
    const double lr = (az > 0.0) ? std::log(2.0 * az) : 0.0;
    std::complex<double> total{0.0, 0.0};
    for (int d = 0; d <= d_max; ++d) {
      if (d > 0 && az == 0.0) break;  // |2z|^d = 0 kills every remaining d
      const double dpref = (d == 0) ? 2.0 : 4.0;
      std::complex<double> inner{0.0, 0.0};
      for (int n = 0; n + d <= rho.n_max(); ++n) {
        const double mag =
            std::exp(d * lr + 0.5 * (ln_factorial(n) - ln_factorial(n + d)) - 2.0 * az2);
        double lam = dpref * mag * laguerre(n, d, 4.0 * az2);
        if (n % 2 != 0) lam = -lam;
        inner += lam * rho.at(n, n + d).value;
      }
      total += std::polar(1.0, d * phi) * inner;
    }
    const double w = total.real();
    if (!std::isfinite(w))
      throw std::runtime_error("wigner_from_rho: non-finite value in the series");
    out.points.push_back(WignerPoint{z, w});
  }
  return out;
}

}  // namespace qht
