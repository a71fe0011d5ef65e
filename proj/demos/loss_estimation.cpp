// Worked example: estimate the loss parameter of a decay channel directly
// from homodyne data, without reconstructing the full state. For each gamma
// a fresh input/output pair is simulated; the detected mean photon number
// must follow nbar * e^{-2 gamma}.
#include <qht/qht.hpp>

#include <cmath>
#include <cstdio>
#include <cstdint>

int main() {
  const double amplitude = 2.0;
  const double nbar = amplitude * amplitude;
  const double gammas[] = {0.0, 0.2, 0.4, 0.8, 1.2};
  const std::size_t n = 30000;

  qht::SignalSpec sig;
  sig.alpha = {amplitude, 0.0};

  std::printf("input mean photon number: %.1f, %zu records per dataset\n\n", nbar, n);
  std::printf("%8s %12s %12s %12s %12s %12s\n", "gamma", "gamma_est", "gamma_err", "n_est",
              "n_err", "n_expected");
  std::uint64_t seed = 7000;
  for (double gamma : gammas) {
    const qht::ChannelSpec identity{};
    const qht::ChannelSpec lossy{2.0 * gamma, 0.0, 1.0, 1.0};  // pure loss: g = e^{-gamma}
    const qht::HomodyneDataset d0 = qht::sample_dataset(sig, identity, n, seed++);
    const qht::HomodyneDataset dg = qht::sample_dataset(sig, lossy, n, seed++);
    const qht::LossEstimate est = qht::estimate_loss(d0, dg, 1.0, 1.0);
    std::printf("%8.2f %12.4f %12.4f %12.4f %12.4f %12.4f\n", gamma, est.gamma, est.gamma_err,
                est.n_gamma.value.real(), est.n_gamma.stderr_re, nbar * std::exp(-2.0 * gamma));
  }
  return 0;
}
