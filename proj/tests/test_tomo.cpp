#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qht/kernels.hpp"
#include "qht/model.hpp"
#include "qht/specfun.hpp"
#include "qht/tomo.hpp"

using namespace qht;
using std::complex;

namespace {

// <n|alpha><alpha|n+k> = e^{-|alpha|^2} alpha^n conj(alpha)^{n+k} / sqrt(n!(n+k)!)
complex<double> coherent_element(complex<double> alpha, int n, int k) {
  complex<double> v{std::exp(-std::norm(alpha)), 0.0};
  for (int i = 0; i < n; ++i) v *= alpha;
  for (int i = 0; i < n + k; ++i) v *= std::conj(alpha);
  return v * std::exp(-0.5 * (ln_factorial(n) + ln_factorial(n + k)));
}

double poisson_p(double mean, int n) {
  return std::exp(-mean + n * std::log(mean) - ln_factorial(n));
}

DensityMatrix exact_coherent_rho(complex<double> alpha, int n_max) {
  DensityMatrix rho(n_max);
  for (int j = 0; j <= n_max; ++j)
    for (int k = j; k <= n_max; ++k)
      rho.upper(j, k) = EstimateResult{coherent_element(alpha, j, k - j), 0.0, 0.0};
  return rho;
}

double wigner_coherent(complex<double> z, complex<double> alpha) {
  return 2.0 * std::exp(-2.0 * std::norm(z - alpha));
}

}  // namespace

TEST_CASE("average of a constant kernel is exact with zero error", "[tomo]") {
  const HomodyneDataset ds = sample_dataset(SignalSpec{{1.0, 0.0}}, ChannelSpec{}, 100, 5);
  const EstimateResult r = average_kernel(ds, [](double, double) { return 1.0; });
  CHECK(r.value.real() == 1.0);
  CHECK(r.value.imag() == 0.0);
  CHECK(r.stderr_re == 0.0);
  CHECK(r.stderr_im == 0.0);
}

TEST_CASE("averaging validates its inputs and aborts on non-finite kernels", "[tomo]") {
  CHECK_THROWS_AS(average_kernel(HomodyneDataset{}, [](double, double) { return 1.0; }),
                  std::invalid_argument);

  HomodyneDataset uncal = sample_dataset(SignalSpec{}, ChannelSpec{}, 10, 1);
  uncal.calibrated = false;
  CHECK_THROWS_AS(average_kernel(uncal, [](double, double) { return 1.0; }),
                  std::invalid_argument);

  const HomodyneDataset ds = sample_dataset(SignalSpec{}, ChannelSpec{}, 20, 1);
  int count = 0;
  const auto poisoned = [&](double, double) {
    return (count++ == 7) ? std::nan("") : 1.0;
  };
  CHECK_THROWS_WITH(average_kernel(ds, poisoned),
                    Catch::Matchers::ContainsSubstring("record 7"));
}

TEST_CASE("mean photon number of a bright coherent state", "[tomo]") {
  const double nbar = 8.4;
  const HomodyneDataset ds =
      sample_dataset(SignalSpec{{std::sqrt(nbar), 0.0}}, ChannelSpec{}, 100000, 61);
  const EstimateResult r = average_kernel(
      ds, [](double phi, double x) { return adaptive_number_kernel({}, phi, x); });
  CHECK(std::abs(r.value.real() - nbar) <= 3.0 * r.stderr_re);
  CHECK(r.stderr_re > 0.0);
}

TEST_CASE("vacuum ground-state population from a single kernel", "[tomo]") {
  const HomodyneDataset ds = sample_dataset(SignalSpec{}, ChannelSpec{}, 20000, 12);
  const EstimateResult r = average_kernel(
      ds, [](double phi, double x) { return matrix_kernel({0, 0}, phi, x); });
  CHECK(std::abs(r.value.real() - 1.0) <= 4.0 * r.stderr_re);
  CHECK(std::abs(r.value.imag()) <= 4.0 * r.stderr_im + 1e-12);
}

TEST_CASE("density matrix storage is hermitian by construction", "[tomo]") {
  DensityMatrix rho(3);
  rho.upper(0, 2) = EstimateResult{{0.3, -0.1}, 0.01, 0.02};
  const EstimateResult lower = rho.at(2, 0);
  CHECK(lower.value == std::conj(complex<double>{0.3, -0.1}));
  CHECK(lower.stderr_re == 0.01);
  CHECK(lower.stderr_im == 0.02);
  CHECK(rho.at(0, 2).value == complex<double>{0.3, -0.1});
  CHECK(rho.dim() == 4);
  CHECK_THROWS_AS(rho.at(0, 4), std::out_of_range);
  CHECK_THROWS_AS(rho.upper(2, 1), std::invalid_argument);
  CHECK_THROWS_AS(DensityMatrix(-1), std::invalid_argument);

  DensityMatrix d(2);
  d.upper(0, 0) = EstimateResult{{0.5, 0.0}, 0.03, 0.0};
  d.upper(1, 1) = EstimateResult{{0.3, 0.0}, 0.04, 0.0};
  d.upper(2, 2) = EstimateResult{{0.2, 0.0}, 0.0, 0.0};
  const EstimateResult t = d.trace();
  CHECK(t.value.real() == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(t.stderr_re == Catch::Approx(std::sqrt(0.03 * 0.03 + 0.04 * 0.04)).epsilon(1e-15));
}

TEST_CASE("reconstruction matches per-element kernel averages bit for bit", "[tomo]") {
  const int n_max = 6;
  const HomodyneDataset ds =
      sample_dataset(SignalSpec{{1.0, 0.5}}, ChannelSpec{0.2, 0.0, 0.95, 1.0}, 500, 77);
  const DensityMatrix rho = reconstruct_rho(ds, n_max);
  for (int n = 0; n <= n_max; ++n)
    for (int k = 0; n + k <= n_max; ++k) {
      const EstimateResult direct = average_kernel(
          ds, [&](double phi, double x) { return matrix_kernel({n, k}, phi, x); });
      const EstimateResult& got = rho.upper(n, n + k);
      REQUIRE(got.value.real() == direct.value.real());
      REQUIRE(got.value.imag() == direct.value.imag());
      REQUIRE(got.stderr_re == direct.stderr_re);
      REQUIRE(got.stderr_im == direct.stderr_im);
    }
}

TEST_CASE("reconstruction recovers the vacuum", "[tomo]") {
  const HomodyneDataset ds = sample_dataset(SignalSpec{}, ChannelSpec{}, 20000, 2);
  const DensityMatrix rho = reconstruct_rho(ds, 4);
  CHECK(std::abs(rho.at(0, 0).value.real() - 1.0) <= 4.0 * rho.at(0, 0).stderr_re);
  for (int n = 1; n <= 4; ++n) {
    INFO("n=" << n);
    CHECK(std::abs(rho.at(n, n).value.real()) <= 4.0 * rho.at(n, n).stderr_re);
  }
  const EstimateResult t = rho.trace();
  CHECK(std::abs(t.value.real() - 1.0) <= 5.0 * t.stderr_re);
}

TEST_CASE("reconstruction recovers a coherent state's photon statistics", "[tomo]") {
  const double nbar = 2.0;
  const HomodyneDataset ds =
      sample_dataset(SignalSpec{{std::sqrt(nbar), 0.0}}, ChannelSpec{}, 30000, 8);
  const int n_max = 8;
  const DensityMatrix rho = reconstruct_rho(ds, n_max);
  for (int n = 0; n <= n_max; ++n) {
    INFO("n=" << n);
    CHECK(std::abs(rho.at(n, n).value.real() - poisson_p(nbar, n)) <=
          4.0 * rho.at(n, n).stderr_re);
    CHECK(rho.at(n, n).value.imag() == 0.0);  // diagonal kernels are real
  }
  const EstimateResult t = rho.trace();
  CHECK(std::abs(t.value.real() - 1.0) <= 5.0 * t.stderr_re);

  const std::vector<PhotonBin> bins = photon_distribution(rho);
  REQUIRE(bins.size() == static_cast<std::size_t>(n_max + 1));
  double sum = 0.0;
  for (const PhotonBin& b : bins) {
    CHECK(b.p == rho.at(b.n, b.n).value.real());
    CHECK(b.err == rho.at(b.n, b.n).stderr_re);
    sum += b.p;
  }
  CHECK(sum == Catch::Approx(t.value.real()).epsilon(1e-15));
}

TEST_CASE("reconstruction validates its inputs", "[tomo]") {
  CHECK_THROWS_AS(reconstruct_rho(HomodyneDataset{}, 2), std::invalid_argument);
  HomodyneDataset uncal = sample_dataset(SignalSpec{}, ChannelSpec{}, 10, 1);
  uncal.calibrated = false;
  CHECK_THROWS_AS(reconstruct_rho(uncal, 2), std::invalid_argument);
  const HomodyneDataset ds = sample_dataset(SignalSpec{}, ChannelSpec{}, 10, 1);
  CHECK_THROWS_AS(reconstruct_rho(ds, kMaxFockIndex + 1), std::invalid_argument);
}

TEST_CASE("degenerate all-zero quadratures give exact kernel constants", "[tomo]") {
  HomodyneDataset ds;
  for (int j = 0; j < 50; ++j)
    ds.records.push_back(HomodyneRecord{kPi * (j + 0.5) / 50.0, 0.0});
  ds.calibrated = true;
  const DensityMatrix rho = reconstruct_rho(ds, 3);
  // n <= 1 evaluates through exactly representable factors; higher orders
  // pick up exp(log ...) rounding at the last few bits.
  CHECK(rho.at(0, 0).value.real() == 2.0);
  CHECK(rho.at(1, 1).value.real() == -2.0);
  for (int n = 0; n <= 3; ++n) {
    CHECK(rho.at(n, n).value.real() ==
          Catch::Approx(n % 2 == 0 ? 2.0 : -2.0).epsilon(1e-13));
    CHECK(rho.at(n, n).stderr_re == 0.0);
  }
}

TEST_CASE("element estimates cover the truth at their quoted errors", "[tomo]") {
  const complex<double> alpha{1.0, 0.0};
  const int n_max = 4;
  const int reps = 100;
  int inside = 0, total = 0;
  for (int r = 0; r < reps; ++r) {
    const HomodyneDataset ds =
        sample_dataset(SignalSpec{alpha}, ChannelSpec{}, 2000, 1000 + r);
    const DensityMatrix rho = reconstruct_rho(ds, n_max);
    for (int n = 0; n <= n_max; ++n)
      for (int k = 0; n + k <= n_max; ++k) {
        const complex<double> truth = coherent_element(alpha, n, k);
        const EstimateResult& e = rho.upper(n, n + k);
        if (std::abs(e.value.real() - truth.real()) <= 4.0 * e.stderr_re) ++inside;
        if (std::abs(e.value.imag() - truth.imag()) <= 4.0 * e.stderr_im + 1e-12) ++inside;
        total += 2;
      }
  }
  // 4-sigma coverage leaves ~0.006% outside; demand 99%.
  CHECK(inside >= (total * 99) / 100);
}

TEST_CASE("quoted errors shrink as one over the square root of the sample size", "[tomo]") {
  for (int s = 0; s < 10; ++s) {
    const HomodyneDataset small =
        sample_dataset(SignalSpec{{1.0, 0.0}}, ChannelSpec{}, 4000, 500 + 2 * s);
    const HomodyneDataset big =
        sample_dataset(SignalSpec{{1.0, 0.0}}, ChannelSpec{}, 8000, 501 + 2 * s);
    const DensityMatrix r1 = reconstruct_rho(small, 2);
    const DensityMatrix r2 = reconstruct_rho(big, 2);
    const double ratio = r1.at(1, 1).stderr_re / r2.at(1, 1).stderr_re;
    INFO("seed offset " << s);
    CHECK(ratio >= std::sqrt(2.0) * 0.9);
    CHECK(ratio <= std::sqrt(2.0) * 1.1);
  }
}

TEST_CASE("phase folding leaves every estimate bit-identical", "[tomo]") {
  // Records on the upper half-circle with phases pi + t, where t is exact at
  // double precision and the subtraction (pi + t) - pi is exact by Sterbenz'
  // lemma, must give the same sums as the pre-folded records (t, -x).
  HomodyneDataset hi, lo;
  SeededRng rng(99);
  for (int j = 0; j < 64; ++j) {
    const double t = static_cast<double>(j) / 64.0;
    const double x = rng.normal();
    hi.records.push_back(HomodyneRecord{kPi + t, x});
    lo.records.push_back(HomodyneRecord{t, -x});
  }
  hi.calibrated = lo.calibrated = true;

  const auto complex_kernel = [](double phi, double x) {
    return matrix_kernel({1, 2}, phi, x);
  };
  const EstimateResult a = average_kernel(hi, complex_kernel);
  const EstimateResult b = average_kernel(lo, complex_kernel);
  CHECK(a.value.real() == b.value.real());
  CHECK(a.value.imag() == b.value.imag());
  CHECK(a.stderr_re == b.stderr_re);
  CHECK(a.stderr_im == b.stderr_im);

  const auto real_kernel = [](double phi, double x) {
    return adaptive_number_kernel({{0.2, -0.3}}, phi, x);
  };
  const EstimateResult c = average_kernel(hi, real_kernel);
  const EstimateResult d = average_kernel(lo, real_kernel);
  CHECK(c.value.real() == d.value.real());
  CHECK(c.stderr_re == d.stderr_re);
}

TEST_CASE("phase-space function of the vacuum", "[tomo]") {
  DensityMatrix rho(5);
  rho.upper(0, 0) = EstimateResult{{1.0, 0.0}, 0.0, 0.0};
  const std::vector<complex<double>> grid = {
      {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {-0.6, 0.8}, {1.5, -1.5}};
  const WignerGrid w = wigner_from_rho(rho, grid, 5);
  REQUIRE(w.points.size() == grid.size());
  CHECK(w.points[0].w == 2.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double want = 2.0 * std::exp(-2.0 * std::norm(grid[i]));
    CHECK(w.points[i].w == Catch::Approx(want).epsilon(1e-13));
  }
  CHECK(w.n_max == 5);
  CHECK(w.d_max == 5);
}

TEST_CASE("phase-space function of a coherent state peaks at its amplitude", "[tomo]") {
  const complex<double> alpha{1.2, -0.4};
  const DensityMatrix rho = exact_coherent_rho(alpha, 20);
  std::vector<complex<double>> grid;
  for (double re = -2.0; re <= 2.01; re += 0.4)
    for (double im = -2.0; im <= 2.01; im += 0.4) grid.push_back({re, im});
  grid.push_back(alpha);
  const WignerGrid w = wigner_from_rho(rho, grid, 20);

  double best = -1.0;
  complex<double> best_z;
  for (const WignerPoint& p : w.points) {
    const double want = wigner_coherent(p.z, alpha);
    CHECK(std::abs(p.w - want) <= 1e-6);
    if (p.w > best) {
      best = p.w;
      best_z = p.z;
    }
  }
  // The accumulated grid contains a point within one ulp-sum of alpha, so
  // compare locations by distance, not bit pattern.
  CHECK(std::abs(best_z - alpha) <= 1e-9);
  CHECK(best == Catch::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("phase-space series is stable under a raised cutoff", "[tomo]") {
  // Exact coherent input with |alpha| <= 1.5: raising the cutoff 20 -> 30
  // moves no grid value by more than 1e-6. Larger amplitudes put weight in
  // high Fock states and genuinely need a larger cutoff off the state's axis.
  std::vector<complex<double>> grid;
  for (double re = -3.0; re <= 3.01; re += 0.5)
    for (double im = -3.0; im <= 3.01; im += 0.5) grid.push_back({re, im});

  for (const complex<double> alpha :
       {complex<double>{0.0, 0.0}, complex<double>{1.5, 0.0}, complex<double>{-0.9, 1.1}}) {
    const WignerGrid w20 = wigner_from_rho(exact_coherent_rho(alpha, 20), grid, 20);
    const WignerGrid w30 = wigner_from_rho(exact_coherent_rho(alpha, 30), grid, 30);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      worst = std::max(worst, std::abs(w20.points[i].w - w30.points[i].w));
    INFO("alpha=" << alpha);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("phase-space truncation controls", "[tomo]") {
  const DensityMatrix rho = exact_coherent_rho({1.0, 0.0}, 6);
  const std::vector<complex<double>> grid = {{0.5, 0.5}};
  CHECK_THROWS_AS(wigner_from_rho(rho, grid, 7), std::invalid_argument);
  CHECK_THROWS_AS(wigner_from_rho(rho, grid, -1), std::invalid_argument);

  // d_max = 0 keeps only the phase-independent part; for a displaced state
  // that visibly differs from the full series.
  const WignerGrid full = wigner_from_rho(rho, grid, 6);
  const WignerGrid flat = wigner_from_rho(rho, grid, 0);
  CHECK(std::abs(full.points[0].w - flat.points[0].w) > 0.1);
  CHECK(full.normalization == flat.normalization);
}

TEST_CASE("reconstructed state feeds the phase-space series end to end", "[tomo]") {
  const complex<double> alpha{1.0, 0.0};
  const HomodyneDataset ds = sample_dataset(SignalSpec{alpha}, ChannelSpec{}, 40000, 330);
  const DensityMatrix rho = reconstruct_rho(ds, 10);
  const std::vector<complex<double>> grid = {{0.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0}};
  const WignerGrid w = wigner_from_rho(rho, grid, 10);

  // At the origin only the diagonal contributes, with weights exactly +/-2,
  // so the statistical error of W(0) propagates in closed form.
  double var0 = 0.0;
  for (int n = 0; n <= 10; ++n) {
    const double e = rho.at(n, n).stderr_re;
    var0 += 4.0 * e * e;
  }
  CHECK(std::abs(w.points[0].w - wigner_coherent(grid[0], alpha)) <=
        5.0 * std::sqrt(var0) + 1e-3);

  // Away from the origin all offsets contribute; allow a generous
  // statistical band, this guards normalization and sign conventions.
  CHECK(std::abs(w.points[1].w - wigner_coherent(grid[1], alpha)) < 0.25);
  CHECK(std::abs(w.points[2].w - wigner_coherent(grid[2], alpha)) < 0.25);
}
