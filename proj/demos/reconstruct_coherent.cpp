// Worked example: simulate a coherent state, reconstruct its density matrix
// by kernel averaging, and compare the photon distribution with the Poisson
// law it must follow. Finishes with the Wigner peak, which for a coherent
// state sits at the amplitude itself with height 2.
#include <qht/qht.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

int main() {
  const std::complex<double> alpha{1.5, 0.5};
  const double nbar = std::norm(alpha);

  qht::SignalSpec sig;
  sig.alpha = alpha;
  const qht::ChannelSpec channel{};  // identity: no loss, ideal detector
  const qht::HomodyneDataset data = qht::sample_dataset(sig, channel, 30000, 2024);
  std::printf("dataset: %zu records, mean photon number %.2f\n", data.size(), nbar);

  const int n_max = 10;
  const qht::DensityMatrix rho = qht::reconstruct_rho(data, n_max);
  const qht::EstimateResult trace = rho.trace();
  std::printf("trace = %.4f +- %.4f\n\n", trace.value.real(), trace.stderr_re);

  std::printf("%3s %12s %12s %12s %8s\n", "n", "p_est", "stderr", "poisson", "pull");
  double log_pn = -nbar;  // ln Poisson(nbar; 0)
  for (const qht::PhotonBin& bin : qht::photon_distribution(rho)) {
    const double poisson = std::exp(log_pn);
    const double pull = (bin.p - poisson) / bin.err;
    std::printf("%3d %12.6f %12.6f %12.6f %8.2f\n", bin.n, bin.p, bin.err, poisson, pull);
    log_pn += std::log(nbar) - std::log1p(bin.n);
  }

  std::vector<std::complex<double>> grid;
  for (double im = -3.0; im <= 3.0; im += 0.25)
    for (double re = -3.0; re <= 3.0; re += 0.25) grid.emplace_back(re, im);
  const qht::WignerGrid w = qht::wigner_from_rho(rho, grid, n_max);
  const qht::WignerPoint* peak = &w.points.front();
  for (const qht::WignerPoint& p : w.points)
    if (p.w > peak->w) peak = &p;
  std::printf("\nWigner peak %.3f at (%.2f, %.2f); expected 2 at (%.2f, %.2f)\n", peak->w,
              peak->z.real(), peak->z.imag(), alpha.real(), alpha.imag());
  return 0;
}
