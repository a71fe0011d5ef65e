// Command-line front end: simulate | calibrate | reconstruct | wigner |
// estimate (mean-photon | loss | channel) | loss-sweep, operating on the
// CSV/JSON artifacts defined in qht/io.hpp.
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
// Every subcommand is deterministic given its flags; randomness enters only
// through --seed.
#include <qht/qht.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace {

using qht::format_double;

double parse_number(const std::string& tok, const char* what) {
  double v = 0.0;
  const char* last = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), last, v);
  if (ec != std::errc() || p != last)
    throw std::invalid_argument(std::string(what) + ": malformed number '" + tok + "'");
  return v;
}

// Comma-separated doubles; every token must parse, empty input gives {}.
std::vector<double> parse_list(const std::string& csv, const char* what) {
  std::vector<double> out;
  if (csv.empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = csv.find(',', pos);
    const std::size_t end = (comma == std::string::npos) ? csv.size() : comma;
    out.push_back(parse_number(csv.substr(pos, end - pos), what));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
};

GridAxis parse_grid(const std::string& s) {
  const std::size_t c1 = s.find(':');
  const std::size_t c2 = (c1 == std::string::npos) ? std::string::npos : s.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos ||
      s.find(':', c2 + 1) != std::string::npos)
    throw std::invalid_argument("grid: expected min:max:step, got '" + s + "'");
  GridAxis g;
  g.min = parse_number(s.substr(0, c1), "grid min");
  g.max = parse_number(s.substr(c1 + 1, c2 - c1 - 1), "grid max");
  g.step = parse_number(s.substr(c2 + 1), "grid step");
  if (!(g.step > 0.0)) throw std::invalid_argument("grid: step must be positive");
  if (!(g.max >= g.min)) throw std::invalid_argument("grid: max must be >= min");
  return g;
}

// i*step instead of running accumulation keeps the axis reproducible.
std::vector<double> grid_values(const GridAxis& g) {
  const int count = static_cast<int>(std::floor((g.max - g.min) / g.step + 1e-9)) + 1;
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v.push_back(g.min + i * g.step);
  return v;
}

qht::HomodyneDataset load_calibrated(const std::string& path, bool assume_calibrated) {
  qht::HomodyneDataset ds = qht::read_dataset(path);
  if (!ds.calibrated) {
    if (!assume_calibrated)
      throw std::invalid_argument(path +
                                  ": dataset is not marked calibrated; run `qht calibrate` "
                                  "or pass --assume-calibrated");
    ds.calibrated = true;
  }
  return ds;
}

struct SimulateArgs {
  double alpha_re = 0.0;
  double alpha_im = 0.0;
  double g1t = 0.0;
  double g2t = 0.0;
  double eta = 1.0;
  double visibility = 1.0;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  qht::SignalSpec sig;
  sig.alpha = {a.alpha_re, a.alpha_im};
  qht::ChannelSpec ch{a.g1t, a.g2t, a.eta, a.visibility};
  const qht::HomodyneDataset ds = qht::sample_dataset(sig, ch, a.n, a.seed);
  qht::write_dataset(a.out, ds);
  std::cout << "simulated n=" << a.n << " seed=" << a.seed << " -> " << a.out << "\n";
}

struct CalibrateArgs {
  std::string raw;
  std::string vacuum;
  std::string out;
};

void run_calibrate(const CalibrateArgs& a) {
  const qht::HomodyneDataset raw = qht::read_dataset(a.raw);
  const qht::HomodyneDataset vac = qht::read_dataset(a.vacuum);
  const qht::HomodyneDataset cal = qht::calibrate(raw, vac);
  qht::write_dataset(a.out, cal);
  std::cout << "calibrated " << cal.size() << " records, scale=" << format_double(cal.meta.scale)
            << " -> " << a.out << "\n";
}

struct ReconstructArgs {
  std::string data;
  int nmax = 0;
  std::string out_rho;
  std::string out_photon;
  bool assume_calibrated = false;
};

void run_reconstruct(const ReconstructArgs& a) {
  const qht::HomodyneDataset ds = load_calibrated(a.data, a.assume_calibrated);
  const qht::DensityMatrix rho = qht::reconstruct_rho(ds, a.nmax);
  const std::vector<qht::PhotonBin> bins = qht::photon_distribution(rho);
  qht::write_rho(a.out_rho, rho);
  qht::write_photon_csv(a.out_photon, bins);
  double mean = 0.0, mean_var = 0.0;
  for (const qht::PhotonBin& b : bins) {
    mean += b.n * b.p;
    mean_var += b.n * b.n * b.err * b.err;
  }
  const qht::EstimateResult tr = rho.trace();
  std::cout << "trace = " << format_double(tr.value.real()) << " +- "
            << format_double(tr.stderr_re) << ", mean photons = " << format_double(mean)
            << " +- " << format_double(std::sqrt(mean_var)) << "\n";
}

struct WignerArgs {
  std::string rho;
  std::string grid;
  int dmax = 0;
  std::string out;
};

void run_wigner(const WignerArgs& a) {
  const qht::DensityMatrix rho = qht::read_rho(a.rho);
  const GridAxis axis = parse_grid(a.grid);
  const std::vector<double> values = grid_values(axis);
  std::vector<std::complex<double>> grid;
  grid.reserve(values.size() * values.size());
  for (double im : values)
    for (double re : values) grid.emplace_back(re, im);
  const qht::WignerGrid w = qht::wigner_from_rho(rho, grid, a.dmax);
  qht::write_wigner_csv(a.out, w);
  const qht::WignerPoint* peak = &w.points.front();
  for (const qht::WignerPoint& p : w.points)
    if (p.w > peak->w) peak = &p;
  std::cout << "wrote " << w.points.size() << " points, peak W = " << format_double(peak->w)
            << " at (" << format_double(peak->z.real()) << ", " << format_double(peak->z.imag())
            << ") -> " << a.out << "\n";
}

struct MeanPhotonArgs {
  std::string data;
  std::string out;
};

void run_mean_photon(const MeanPhotonArgs& a) {
  const qht::HomodyneDataset ds = load_calibrated(a.data, false);
  const qht::MeanPhotonResult r = qht::mean_photon_adaptive(ds);
  qht::write_json_atomic(a.out, qht::mean_photon_to_json(r));
  std::cout << "mean photons = " << format_double(r.estimate.value.real()) << " +- "
            << format_double(r.estimate.stderr_re) << " (mu = " << format_double(r.mu.mu.real())
            << " + " << format_double(r.mu.mu.imag()) << "i) -> " << a.out << "\n";
}

struct LossArgs {
  std::string data0;
  std::string data_gamma;
  double vis0 = 1.0;
  double visg = 1.0;
  double vis_exponent = 1.0;
  std::string out;
};

void run_loss(const LossArgs& a) {
  const qht::HomodyneDataset d0 = load_calibrated(a.data0, false);
  const qht::HomodyneDataset dg = load_calibrated(a.data_gamma, false);
  const qht::LossEstimate r = qht::estimate_loss(d0, dg, a.vis0, a.visg, a.vis_exponent);
  qht::write_json_atomic(a.out, qht::loss_to_json(r));
  std::cout << "gamma = " << format_double(r.gamma) << " +- " << format_double(r.gamma_err)
            << " (n0 = " << format_double(r.n0.value.real())
            << ", n_gamma = " << format_double(r.n_gamma.value.real()) << ") -> " << a.out << "\n";
}

struct ChannelArgs {
  std::string data;
  double alpha0_re = 0.0;
  double alpha0_im = 0.0;
  double eta = 1.0;
  std::string out;
};

void run_channel(const ChannelArgs& a) {
  const qht::HomodyneDataset ds = load_calibrated(a.data, false);
  const qht::ChannelFit fit = qht::fit_channel(ds, {a.alpha0_re, a.alpha0_im}, a.eta);
  qht::write_json_atomic(a.out, qht::channel_fit_to_json(fit));
  std::cout << "g = " << format_double(fit.g_hat) << " +- "
            << format_double(std::sqrt(fit.cov[0][0])) << ", delta2 = "
            << format_double(fit.delta2_hat) << " +- " << format_double(std::sqrt(fit.cov[1][1]))
            << ", g1t = " << format_double(fit.g1t_hat) << ", g2t = "
            << format_double(fit.g2t_hat) << " -> " << a.out << "\n";
  if (!fit.converged) std::cerr << "warning: fit did not converge\n";
  if (fit.degenerate)
    std::cerr << "warning: g is within 3 sigma of 1; the g1t/g2t split is not identifiable\n";
  if (fit.non_physical) std::cerr << "warning: a fitted rate came out negative\n";
}

struct SweepArgs {
  std::string amplitudes;
  std::string gammas;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_loss_sweep(const SweepArgs& a) {
  const std::vector<double> amps = parse_list(a.amplitudes, "amplitudes");
  const std::vector<double> gammas = parse_list(a.gammas, "gammas");
  if (amps.empty()) throw std::invalid_argument("loss-sweep: need at least one amplitude");
  if (gammas.empty()) throw std::invalid_argument("loss-sweep: need at least one gamma");
  std::string csv = "n0,gamma_true,n_est,n_err,n_expected\n";
  std::uint64_t row = 0;
  for (double amp : amps) {
    qht::SignalSpec sig;
    sig.alpha = {amp, 0.0};
    for (double gamma : gammas) {
      // Pure loss gamma means g = e^{-gamma}: g1t = 2 gamma, g2t = 0.
      const qht::ChannelSpec identity{};
      const qht::ChannelSpec lossy{2.0 * gamma, 0.0, 1.0, 1.0};
      const qht::HomodyneDataset d0 = qht::sample_dataset(sig, identity, a.n, a.seed + 2 * row);
      const qht::HomodyneDataset dg = qht::sample_dataset(sig, lossy, a.n, a.seed + 2 * row + 1);
      const qht::LossEstimate r = qht::estimate_loss(d0, dg, 1.0, 1.0);
      const double expected = amp * amp * std::exp(-2.0 * gamma);
      csv += format_double(r.n0.value.real()) + ',' + format_double(gamma) + ',' +
             format_double(r.n_gamma.value.real()) + ',' + format_double(r.n_gamma.stderr_re) +
             ',' + format_double(expected) + '\n';
      ++row;
    }
  }
  qht::write_text_atomic(a.out, csv);
  std::cout << "wrote " << row << " rows -> " << a.out << "\n";
}

template <typename Body>
int guarded(Body&& body) {
  try {
    body();
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homodyne tomography toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "sample a phase-scanned homodyne dataset from a coherent state");
  sim->add_option("--alpha-re", sim_args.alpha_re, "input amplitude, real part");
  sim->add_option("--alpha-im", sim_args.alpha_im, "input amplitude, imaginary part");
  sim->add_option("--g1t", sim_args.g1t, "absorption rate times interaction time");
  sim->add_option("--g2t", sim_args.g2t, "amplification rate times interaction time");
  sim->add_option("--eta", sim_args.eta, "detector quantum efficiency in (0,1]");
  sim->add_option("--visibility", sim_args.visibility, "homodyne mode overlap in (0,1]");
  sim->add_option("--n", sim_args.n, "number of records")->required();
  sim->add_option("--seed", sim_args.seed, "RNG seed");
  sim->add_option("--out", sim_args.out, "output CSV path")->required();

  CalibrateArgs cal_args;
  CLI::App* cal = app.add_subcommand(
      "calibrate", "rescale raw quadratures so a vacuum reference has variance 1/4");
  cal->add_option("--raw", cal_args.raw, "raw dataset CSV")->required();
  cal->add_option("--vacuum", cal_args.vacuum, "vacuum reference CSV at the same scale")
      ->required();
  cal->add_option("--out", cal_args.out, "output CSV path")->required();

  ReconstructArgs rec_args;
  CLI::App* rec = app.add_subcommand(
      "reconstruct", "estimate density-matrix elements by kernel averaging");
  rec->add_option("--data", rec_args.data, "calibrated dataset CSV")->required();
  rec->add_option("--nmax", rec_args.nmax, "Fock-space cutoff")->required();
  rec->add_option("--out-rho", rec_args.out_rho, "output density-matrix JSON")->required();
  rec->add_option("--out-photon", rec_args.out_photon, "output photon-distribution CSV")
      ->required();
  rec->add_flag("--assume-calibrated", rec_args.assume_calibrated,
                "treat input as calibrated even if not marked so");

  WignerArgs wig_args;
  CLI::App* wig = app.add_subcommand(
      "wigner", "evaluate the Wigner function of a reconstructed density matrix");
  wig->add_option("--rho", wig_args.rho, "density-matrix JSON")->required();
  wig->add_option("--grid", wig_args.grid, "square grid spec min:max:step for both axes")
      ->required();
  wig->add_option("--dmax", wig_args.dmax, "off-diagonal band cutoff")->required();
  wig->add_option("--out", wig_args.out, "output CSV path")->required();

  CLI::App* est = app.add_subcommand("estimate", "direct kernel-based estimators");
  est->require_subcommand(1);

  MeanPhotonArgs mp_args;
  CLI::App* mp = est->add_subcommand(
      "mean-photon", "variance-reduced mean photon number of a dataset");
  mp->add_option("--data", mp_args.data, "calibrated dataset CSV")->required();
  mp->add_option("--out", mp_args.out, "output JSON path")->required();

  LossArgs loss_args;
  CLI::App* loss = est->add_subcommand(
      "loss", "loss parameter from an input/output dataset pair");
  loss->add_option("--data0", loss_args.data0, "dataset before the channel")->required();
  loss->add_option("--data-gamma", loss_args.data_gamma, "dataset after the channel")
      ->required();
  loss->add_option("--vis0", loss_args.vis0, "visibility of the input measurement")->required();
  loss->add_option("--visg", loss_args.visg, "visibility of the output measurement")->required();
  loss->add_option("--vis-exponent", loss_args.vis_exponent,
                   "power of the relative visibility dividing the photon ratio");
  loss->add_option("--out", loss_args.out, "output JSON path")->required();

  ChannelArgs ch_args;
  CLI::App* cha = est->add_subcommand(
      "channel", "maximum-likelihood Gaussian channel fit for a known input state");
  cha->add_option("--data", ch_args.data, "calibrated dataset CSV")->required();
  cha->add_option("--alpha0-re", ch_args.alpha0_re, "known input amplitude, real part")
      ->required();
  cha->add_option("--alpha0-im", ch_args.alpha0_im, "known input amplitude, imaginary part")
      ->required();
  cha->add_option("--eta", ch_args.eta, "detector quantum efficiency in (0,1]");
  cha->add_option("--out", ch_args.out, "output JSON path")->required();

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "loss-sweep", "simulate and estimate photon decay over a grid of loss values");
  sweep->add_option("--amplitudes", sweep_args.amplitudes, "comma-separated input amplitudes")
      ->required();
  sweep->add_option("--gammas", sweep_args.gammas, "comma-separated loss values")->required();
  sweep->add_option("--n", sweep_args.n, "records per dataset")->required();
  sweep->add_option("--seed", sweep_args.seed, "base RNG seed; each dataset offsets it");
  sweep->add_option("--out", sweep_args.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) return guarded([&] { run_simulate(sim_args); });
  if (cal->parsed()) return guarded([&] { run_calibrate(cal_args); });
  if (rec->parsed()) return guarded([&] { run_reconstruct(rec_args); });
  if (wig->parsed()) return guarded([&] { run_wigner(wig_args); });
  if (mp->parsed()) return guarded([&] { run_mean_photon(mp_args); });
  if (loss->parsed()) return guarded([&] { run_loss(loss_args); });
  if (cha->parsed()) return guarded([&] { run_channel(ch_args); });
  if (sweep->parsed()) return guarded([&] { run_loss_sweep(sweep_args); });
  return 2;
}
