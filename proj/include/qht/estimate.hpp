#pragma once
// Device-parameter estimation: adaptive mean-photon estimation, loss
// estimation from a before/after dataset pair, and maximum-likelihood
// fitting of the channel parameters (g1t, g2t) through the identifiable
// coordinates (g, delta2).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qht/detail/pairwise.hpp"
#include "qht/kernels.hpp"
#include "qht/model.hpp"
#include "qht/tomo.hpp"

namespace qht {

struct MeanPhotonResult {
  EstimateResult estimate;          // mean photon number with standard error
  AdaptiveCoefficient mu;           // variance-reducing coefficient used in pass 2
};

// Two passes over the same data: the first estimates mu = -<a^dag 2>/2, the
// second averages the adaptive kernel at that mu.
inline MeanPhotonResult mean_photon_adaptive(const HomodyneDataset& ds) {
  const AdaptiveCoefficient mu = optimal_mu(ds);
  const EstimateResult est = average_kernel(
      ds, [&mu](double phi, double x) { return adaptive_number_kernel(mu, phi, x); });
  return MeanPhotonResult{est, mu};
}

struct LossEstimate {
  double gamma = 0.0;
  double gamma_err = 0.0;
  EstimateResult n0;        // input mean photons
  EstimateResult n_gamma;   // output mean photons
  double visibility_exponent = 1.0;
};

// Gamma = -ln[(n_gamma/n0) / V^exponent] / 2 with V = visG/vis0. Exponent 1
// matches the linear relative-visibility correction of the expected curve;
// exponent 2 matches a mean scaling with V (detected photons with V^2).
inline LossEstimate estimate_loss(const HomodyneDataset& data0, const HomodyneDataset& dataG,
                                  double vis0, double visG, double exponent = 1.0) {
  if (!(vis0 > 0.0 && vis0 <= 1.0) || !(visG > 0.0 && visG <= 1.0))
    throw std::invalid_argument("estimate_loss: visibilities must lie in (0, 1]");
  if (!std::isfinite(exponent)) throw std::invalid_argument("estimate_loss: non-finite exponent");
  const MeanPhotonResult m0 = mean_photon_adaptive(data0);
  const MeanPhotonResult mG = mean_photon_adaptive(dataG);
  const double n0 = m0.estimate.value.real();
  const double nG = mG.estimate.value.real();
  if (!(n0 > 2.0 * m0.estimate.stderr_re) || !(nG > 2.0 * mG.estimate.stderr_re))
    throw std::runtime_error(
        "estimate_loss: loss not identifiable, photon estimate not positive beyond 2 sigma");
  const double v = visG / vis0;
  LossEstimate out;
  // + 0.0 canonicalizes the -0 that -0.5 * log(1) would produce.
  out.gamma = -0.5 * std::log((nG / n0) / std::pow(v, exponent)) + 0.0;
  out.gamma_err =
      0.5 * std::hypot(mG.estimate.stderr_re / nG, m0.estimate.stderr_re / n0);
  out.n0 = m0.estimate;
  out.n_gamma = mG.estimate;
  out.visibility_exponent = exponent;
  return out;
}

namespace detail {

// Sufficient statistics of the channel log-likelihood for fixed alpha0:
// it depends on the data only through N, sum x^2, sum x*c, sum c^2 with
// c_j = Re(alpha0 e^{-i phi_j}).
struct ChannelStats {
  double n = 0.0;
  double sxx = 0.0;
  double sxc = 0.0;
  double scc = 0.0;
  double sxcos = 0.0;  // sum x cos(phi), for the moment-based start value
  double sxsin = 0.0;  // sum x sin(phi)
};

inline ChannelStats channel_stats(const HomodyneDataset& ds, std::complex<double> alpha0) {
  PairwiseSum xx, xc, cc, xcos, xsin;
  for (const auto& rec : ds.records) {
    const HomodyneRecord r = fold_phase(rec);
    const double c = (alpha0 * std::polar(1.0, -r.phi)).real();
    xx.push(r.x * r.x);
    xc.push(r.x * c);
    cc.push(c * c);
    xcos.push(r.x * std::cos(r.phi));
    xsin.push(r.x * std::sin(r.phi));
  }
  return ChannelStats{static_cast<double>(ds.records.size()), xx.total(), xc.total(),
                      cc.total(), xcos.total(), xsin.total()};
}

// No delta2 >= 0 guard here: Hessian probing evaluates slightly negative
// delta2, which is fine as long as the total width stays positive.
inline double loglik_from_stats(const ChannelStats& st, double eta, double g, double delta2) {
  const double s2 = delta2 + g * g / 2.0 + (1.0 - eta) / (2.0 * eta);
  if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
  const double quad = st.sxx - 2.0 * g * st.sxc + g * g * st.scc;
  return -0.5 * st.n * std::log(kPi * s2) - quad / s2;
}

}  // namespace detail

// Literal per-record log-likelihood sum_j [-ln(pi s2)/2 - (x_j - g c_j)^2/s2].
inline double channel_loglik(const HomodyneDataset& ds, std::complex<double> alpha0,
                             double eta, double g, double delta2) {
  if (ds.records.empty()) throw std::invalid_argument("channel_loglik: empty dataset");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("channel_loglik: eta outside (0,1]");
  if (!(g > 0.0)) throw std::invalid_argument("channel_loglik: g must be positive");
  if (delta2 < 0.0) throw std::invalid_argument("channel_loglik: delta2 must be non-negative");
  const double s2 = delta2 + g * g / 2.0 + (1.0 - eta) / (2.0 * eta);
  if (!(s2 > 0.0)) throw std::invalid_argument("channel_loglik: total width must be positive");
  detail::PairwiseSum dev2;
  for (const auto& rec : ds.records) {
    const HomodyneRecord r = fold_phase(rec);
    const double c = (alpha0 * std::polar(1.0, -r.phi)).real();
    const double dev = r.x - g * c;
    dev2.push(dev * dev);
  }
  return -0.5 * static_cast<double>(ds.records.size()) * std::log(kPi * s2) -
         dev2.total() / s2;
}

struct ChannelFit {
  double g_hat = 1.0;
  double delta2_hat = 0.0;
  double g1t_hat = 0.0;
  double g2t_hat = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::array<std::array<double, 2>, 2> cov{{{0.0, 0.0}, {0.0, 0.0}}};  // over (g, delta2)
  bool degenerate = false;    // g_hat within 3 sigma of 1: the (g1t, g2t) split is ill-determined
  bool non_physical = false;  // a derived rate came out negative (reported, not clamped)
};

inline constexpr int kFitMaxIterations = 10000;
inline constexpr double kFitSimplexTol = 1e-8;

namespace detail {

struct SimplexPoint {
  double g = 0.0;
  double u = 0.0;  // sqrt(delta2); squaring keeps delta2 >= 0 without penalties
  double f = 0.0;  // negated log-likelihood
};

}  // namespace detail

// Maximizes the likelihood over (g, delta2) by Nelder-Mead descent on
// (g, sqrt(delta2)) from moment-based start values; maps the optimum to
// (g1t, g2t), with the g -> 1 limit for the sum. Covariance from the
// observed information (numerical Hessian at the optimum).
inline ChannelFit fit_channel(const HomodyneDataset& ds, std::complex<double> alpha0,
                              double eta) {
  if (ds.records.empty()) throw std::invalid_argument("fit_channel: empty dataset");
  if (!ds.calibrated) throw std::invalid_argument("fit_channel: dataset not calibrated");
  if (!(std::abs(alpha0) > 0.0))
    throw std::invalid_argument("fit_channel: |alpha0| must be positive for identifiability");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("fit_channel: eta outside (0,1]");

  const detail::ChannelStats st = detail::channel_stats(ds, alpha0);
  const double eta_term = (1.0 - eta) / (2.0 * eta);

  // Start values: |<2 x e^{i phi}>| / |alpha0| for g; residual variance for delta2.
  const double mean_a = 2.0 * std::hypot(st.sxcos, st.sxsin) / st.n;
  double g0 = mean_a / std::abs(alpha0);
  if (!(g0 > 1e-6)) g0 = 1e-6;
  const double resid_var = (st.sxx - 2.0 * g0 * st.sxc + g0 * g0 * st.scc) / st.n;
  const double d20 = std::max(0.0, 2.0 * resid_var - g0 * g0 / 2.0 - eta_term);

  const auto objective = [&](double g, double u) {
    if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
    return -detail::loglik_from_stats(st, eta, g, u * u);
  };

  std::array<detail::SimplexPoint, 3> sp;
  const double u0 = std::sqrt(d20);
  const double step_g = std::max(0.05 * g0, 0.01);
  const double step_u = std::max(0.05 * u0, 0.01);
  sp[0] = {g0, u0, objective(g0, u0)};
  sp[1] = {g0 + step_g, u0, objective(g0 + step_g, u0)};
  sp[2] = {g0, u0 + step_u, objective(g0, u0 + step_u)};

  const auto order = [&] {
    if (sp[0].f > sp[1].f) std::swap(sp[0], sp[1]);
    if (sp[1].f > sp[2].f) std::swap(sp[1], sp[2]);
    if (sp[0].f > sp[1].f) std::swap(sp[0], sp[1]);
  };
  const auto diameter = [&] {
    double d = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        d = std::max(d, std::hypot(sp[a].g - sp[b].g, sp[a].u - sp[b].u));
    return d;
  };

  ChannelFit fit;
  int it = 0;
  for (; it < kFitMaxIterations; ++it) {
    order();
    if (diameter() < kFitSimplexTol) {
      fit.converged = true;
      break;
    }
    const double cg = (sp[0].g + sp[1].g) / 2.0;  // centroid of the two best
    const double cu = (sp[0].u + sp[1].u) / 2.0;
    const double rg = cg + (cg - sp[2].g);  // reflection
    const double ru = cu + (cu - sp[2].u);
    const double fr = objective(rg, ru);
    if (fr < sp[0].f) {
      const double eg = cg + 2.0 * (cg - sp[2].g);  // expansion
      const double eu = cu + 2.0 * (cu - sp[2].u);
      const double fe = objective(eg, eu);
      sp[2] = (fe < fr) ? detail::SimplexPoint{eg, eu, fe} : detail::SimplexPoint{rg, ru, fr};
    } else if (fr < sp[1].f) {
      sp[2] = {rg, ru, fr};
    } else {
      const double kg = cg + 0.5 * (sp[2].g - cg);  // contraction
      const double ku = cu + 0.5 * (sp[2].u - cu);
      const double fk = objective(kg, ku);
      if (fk < sp[2].f) {
        sp[2] = {kg, ku, fk};
      } else {  // shrink toward the best vertex
        for (int a = 1; a < 3; ++a) {
          sp[a].g = sp[0].g + 0.5 * (sp[a].g - sp[0].g);
          sp[a].u = sp[0].u + 0.5 * (sp[a].u - sp[0].u);
          sp[a].f = objective(sp[a].g, sp[a].u);
        }
      }
    }
  }
  order();
  fit.iterations = it;
  fit.g_hat = sp[0].g;
  fit.delta2_hat = sp[0].u * sp[0].u;
  fit.loglik = -sp[0].f;

  const double lng = std::log(fit.g_hat);
  const double diff = -2.0 * lng;  // g1t - g2t
  const double sum = (std::abs(fit.g_hat - 1.0) < 1e-9)
                         ? 2.0 * fit.delta2_hat
                         : -4.0 * lng * fit.delta2_hat / (1.0 - fit.g_hat * fit.g_hat);
  fit.g1t_hat = (sum + diff) / 2.0;
  fit.g2t_hat = (sum - diff) / 2.0;
  fit.non_physical = (fit.g1t_hat < 0.0) || (fit.g2t_hat < 0.0);

  // Observed information in (g, delta2) coordinates.
  const auto ll = [&](double g, double d2) { return detail::loglik_from_stats(st, eta, g, d2); };
  const double hg = 1e-4 * (std::abs(fit.g_hat) + 1e-3);
  const double hd = 1e-4 * (std::abs(fit.delta2_hat) + 1e-3);
  const double f0 = ll(fit.g_hat, fit.delta2_hat);
  const double h00 = (ll(fit.g_hat + hg, fit.delta2_hat) - 2.0 * f0 +
                      ll(fit.g_hat - hg, fit.delta2_hat)) / (hg * hg);
  const double h11 = (ll(fit.g_hat, fit.delta2_hat + hd) - 2.0 * f0 +
                      ll(fit.g_hat, fit.delta2_hat - hd)) / (hd * hd);
  const double h01 = (ll(fit.g_hat + hg, fit.delta2_hat + hd) -
                      ll(fit.g_hat + hg, fit.delta2_hat - hd) -
                      ll(fit.g_hat - hg, fit.delta2_hat + hd) +
                      ll(fit.g_hat - hg, fit.delta2_hat - hd)) / (4.0 * hg * hd);
  const double i00 = -h00, i11 = -h11, i01 = -h01;
  const double det = i00 * i11 - i01 * i01;
  if (std::isfinite(det) && det > 0.0 && i00 > 0.0) {
    fit.cov[0][0] = i11 / det;
    fit.cov[0][1] = fit.cov[1][0] = -i01 / det;
    fit.cov[1][1] = i00 / det;
  }
  fit.degenerate = std::abs(fit.g_hat - 1.0) <= 3.0 * std::sqrt(std::max(0.0, fit.cov[0][0]));
  return fit;
}

// <a> from the data; equals g V alpha0, so it recovers alpha0 for
// identity-channel reference data.
inline EstimateResult estimate_alpha(const HomodyneDataset& ds) {
  return average_kernel(
      ds, [](double phi, double x) { return moment_kernel(MomentIndex{0, 1}, phi, x); });
}

// Convenience overload: characterize the reference beam first, then fit.
inline ChannelFit fit_channel(const HomodyneDataset& ds, const HomodyneDataset& reference,
                              double eta) {
  return fit_channel(ds, estimate_alpha(reference).value, eta);
}

}  // namespace qht
