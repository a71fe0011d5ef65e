#pragma once
// Signal/channel model and synthetic data generation.
//
// Quadrature convention used throughout: x_phi = (a e^{-i phi} + a^dag e^{i phi})/2,
// vacuum variance 1/4. A coherent signal of amplitude alpha passing an
// absorber/amplifier channel (absorption rate-time g1t, amplification g2t),
// detected with quantum efficiency eta and mode visibility V, has quadrature
// distribution p(x; phi) = (pi s2)^{-1/2} exp{-[x - g V Re(alpha e^{-i phi})]^2 / s2}
// with g = e^{-qt}, qt = (g1t - g2t)/2, delta2 = (g1t + g2t)(1 - g^2)/(4 qt),
// s2 = delta2 + g^2/2 + (1 - eta)/(2 eta).

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qht/detail/pairwise.hpp"

namespace qht {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

struct SignalSpec {
  std::complex<double> alpha{0.0, 0.0};
  double squeeze_r = 0.0;
  double n_thermal = 0.0;

  void validate() const {
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()) ||
        !std::isfinite(squeeze_r) || !std::isfinite(n_thermal))
      throw std::invalid_argument("SignalSpec: non-finite field");
    if (n_thermal < 0.0) throw std::invalid_argument("SignalSpec: n_thermal < 0");
  }
  bool coherent() const { return squeeze_r == 0.0 && n_thermal == 0.0; }
};

struct ChannelSpec {
  double g1t = 0.0;        // absorption rate x time, >= 0
  double g2t = 0.0;        // amplification rate x time, >= 0
  double eta = 1.0;        // quantum efficiency, (0, 1]
  double visibility = 1.0; // homodyne mode overlap, (0, 1]

  // Convenience constructor from the rate decomposition g1 = gamma*n1,
  // g2 = gamma*n2 acting for time t.
  static ChannelSpec from_rates(double gamma, double n1, double n2, double t,
                                double eta = 1.0, double visibility = 1.0) {
    return ChannelSpec{gamma * n1 * t, gamma * n2 * t, eta, visibility};
  }

  void validate() const {
    if (!std::isfinite(g1t) || !std::isfinite(g2t) || !std::isfinite(eta) ||
        !std::isfinite(visibility))
      throw std::invalid_argument("ChannelSpec: non-finite field");
    if (g1t < 0.0 || g2t < 0.0) throw std::invalid_argument("ChannelSpec: negative rate");
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("ChannelSpec: eta outside (0,1]");
    if (!(visibility > 0.0 && visibility <= 1.0))
      throw std::invalid_argument("ChannelSpec: visibility outside (0,1]");
  }
};

struct DerivedChannel {
  double g = 1.0;          // amplitude transmission e^{-qt}
  double qt = 0.0;         // (g1t - g2t)/2
  double delta2 = 0.0;     // added noise
  double s2 = 0.5;         // total Gaussian width parameter
  double visibility = 1.0; // carried through for the pdf mean
};

inline DerivedChannel derive_channel(const ChannelSpec& ch) {
  ch.validate();
  DerivedChannel d;
  d.qt = (ch.g1t - ch.g2t) / 2.0;
  d.g = std::exp(-d.qt);
  const double gg = d.g * d.g;
  if (std::abs(d.qt) < 1e-9) {
    d.delta2 = (ch.g1t + ch.g2t) / 2.0;  // analytic qt -> 0 limit
  } else {
    // Grouped so that pure loss (g2t = 0) gives ratio exactly 1/2 and hence
    // delta2 + g^2/2 == 1/2 to the last bit.
    const double ratio = (ch.g1t + ch.g2t) / (4.0 * d.qt);
    d.delta2 = ratio * (1.0 - gg);
  }
  d.s2 = d.delta2 + gg / 2.0 + (1.0 - ch.eta) / (2.0 * ch.eta);
  d.visibility = ch.visibility;
  return d;
}

// Mean of the quadrature distribution at local-oscillator phase phi.
inline double quadrature_mean(const SignalSpec& sig, const DerivedChannel& d, double phi) {
  const std::complex<double> rot = sig.alpha * std::polar(1.0, -phi);
  return d.g * d.visibility * rot.real();
}

inline double homodyne_pdf(const SignalSpec& sig, const DerivedChannel& d,
                           double phi, double x) {
  sig.validate();
  if (!sig.coherent())
    throw std::invalid_argument("homodyne_pdf: only coherent signals are supported");
  const double m = quadrature_mean(sig, d, phi);
  const double dev = x - m;
  return std::exp(-dev * dev / d.s2) / std::sqrt(kPi * d.s2);
}

struct HomodyneRecord {
  double phi = 0.0;  // radians, in [0, 2*pi)
  double x = 0.0;    // calibrated quadrature outcome
};

struct DatasetMeta {
  std::uint64_t seed = 0;
  bool synthetic = false;
  SignalSpec signal;
  ChannelSpec channel;
  double scale = 1.0;   // calibration factor applied to x
  std::string source;   // file path when loaded from disk
};

struct HomodyneDataset {
  std::vector<HomodyneRecord> records;
  bool calibrated = false;
  DatasetMeta meta;

  std::size_t size() const { return records.size(); }
};

inline double normalize_phase(double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("normalize_phase: non-finite phase");
  double r = std::fmod(phi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// Deterministic seeded generator. Gaussian variates come from an explicit
// Box-Muller transform, one variate per two engine draws with no caching,
// so the stream position is a pure function of the draw count.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }  // [0, 1)

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

// Phases form the deterministic grid phi_j = 2*pi*(j - 1/2)/n, j = 1..n;
// one quadrature draw per phase. Identical inputs give bit-identical output.
inline HomodyneDataset sample_dataset(const SignalSpec& sig, const ChannelSpec& ch,
                                      std::size_t n, std::uint64_t seed) {
  sig.validate();
  if (!sig.coherent())
    throw std::invalid_argument("sample_dataset: only coherent signals are supported");
  if (n == 0) throw std::invalid_argument("sample_dataset: n must be >= 1");
  const DerivedChannel d = derive_channel(ch);
  const double sigma = std::sqrt(0.5 * d.s2);
  SeededRng rng(seed);
  HomodyneDataset ds;
  ds.records.resize(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const double phi = kTwoPi * (static_cast<double>(j) - 0.5) / static_cast<double>(n);
    const double m = quadrature_mean(sig, d, phi);
    ds.records[j - 1] = HomodyneRecord{phi, m + sigma * rng.normal()};
  }
  ds.calibrated = true;  // synthetic data are born calibrated
  ds.meta.seed = seed;
  ds.meta.synthetic = true;
  ds.meta.signal = sig;
  ds.meta.channel = ch;
  ds.meta.scale = 1.0;
  return ds;
}

// Rescales raw data so the vacuum reference has variance exactly 1/4.
inline HomodyneDataset calibrate(const HomodyneDataset& raw, const HomodyneDataset& vacuum) {
  if (vacuum.records.empty()) throw std::invalid_argument("calibrate: empty vacuum dataset");
  if (raw.calibrated) throw std::invalid_argument("calibrate: dataset already calibrated");
  detail::PairwiseSum sx, sxx;
  for (const auto& r : vacuum.records) {
    sx.push(r.x);
    sxx.push(r.x * r.x);
  }
  const double n = static_cast<double>(vacuum.records.size());
  const double mean = sx.total() / n;
  const double var = sxx.total() / n - mean * mean;  // population variance
  if (!std::isfinite(var) || var <= 0.0)
    throw std::invalid_argument("calibrate: vacuum variance must be positive and finite");
  const double c = std::sqrt(0.25 / var);
  HomodyneDataset out = raw;
  for (auto& r : out.records) r.x *= c;
  out.calibrated = true;
  out.meta.scale = c;
  return out;
}

}  // namespace qht
