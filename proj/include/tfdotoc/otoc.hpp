#pragma once

// Thermal OTOCs from the chain spectrum and their two-leg circuit estimators.

#include "tfdotoc/dynamics.hpp"
#include "tfdotoc/hilbert.hpp"
#include "tfdotoc/model.hpp"
#include "tfdotoc/spectral.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tfdotoc {

/// W on leg-1 site i (or identity) and V on leg-1 site j, sites 0-based.
class ObservablePair {
 public:
  ObservablePair(int n, std::optional<PauliFactor> W, PauliFactor V);

  int n() const noexcept { return n_; }
  const std::optional<PauliFactor>& W_factor() const noexcept { return W_; }
  const PauliFactor& V_factor() const noexcept { return V_; }

  PauliString W() const;
  PauliString V() const;
  /// V^dag on leg 1.
  PauliString measured_first() const;
  /// V^T moved to site j + n of leg 2.
  PauliString measured_second() const;
  /// V^dag (x) V^T
  PauliString measured() const;

  ObservablePair without_W() const { return ObservablePair(n_, std::nullopt, V_); }
  /// "Z@5,X@4" with 1-based sites.
  std::string label() const;

 private:
  int n_;
  std::optional<PauliFactor> W_;
  PauliFactor V_;
};

/// "<axis>@<site>" with a 1-based leg-1 site; axis I yields nullopt.
std::optional<PauliFactor> parse_site_operator(const std::string& text, int n);
std::string format_site_operator(const std::optional<PauliFactor>& f);

enum class VariantKind { O1, O2, O3, Oth };

std::string to_string(VariantKind kind);

/// Regularized OTOCs with y = e^{-beta H / 4}:
///   Oth = tr(y^2 W^dag V^dag(t) W y^2 V(t)) / Z
///   O1  = tr(y^2 W^dag V^dag(t) y^2 W V(t)) / Z
///   O2  = tr(y^4 W^dag V^dag(t) W V(t)) / Z
///   O3  = tr(y W^dag y V^dag(t) y W y V(t)) / Z
/// evaluated in the eigenbasis of a complete chain spectrum.
class ThermalOtoc {
 public:
  ThermalOtoc(const Spectrum& chain, const ObservablePair& pair);

  cplx value(double beta, double t, VariantKind kind) const;
  std::vector<cplx> series(double beta, std::span<const double> times, VariantKind kind) const;

 private:
  std::vector<double> energies_;
  DenseMatrix W_;  // eigenbasis matrices
  DenseMatrix V_;
};

/// Real part of the chosen variant. Oth and O3 are real for Hermitian W, V,
/// so an imaginary part above 1e-9 raises Error; O1 and O2 are genuinely
/// complex in general and are not checked.
double otoc_exact(const Spectrum& chain, const ObservablePair& pair, double beta, double t,
                  VariantKind kind);
std::vector<double> otoc_exact_series(const Spectrum& chain, const ObservablePair& pair, double beta,
                                      std::span<const double> times, VariantKind kind);

/// Whether the initial state is the thermofield double itself or one
/// rotated by U_0 (|phi>, |g>). In the rotated frame the measured
/// correlator picks up the sign of U_0 (V^dag (x) V^T) U_0^dag, which the
/// circuit removes.
enum class Frame { tfd, rotated };

struct CircuitSeries {
  std::vector<double> times;
  /// Frame-corrected expectations of V^dag (x) V^T with (O) and without (N) W.
  std::vector<double> O;
  std::vector<double> N;
  /// Spread from stochastic channels; zero otherwise.
  std::vector<double> O_noise_se;
  std::vector<double> N_noise_se;
  /// Raw outcome distributions of (V^dag, V^T) per time.
  std::vector<OutcomeDistribution> O_outcomes;
  std::vector<OutcomeDistribution> N_outcomes;
  int frame_sign = 1;
};

/// Runs both branches (W applied or not) from `initial` through the channel
/// in `evo` and records <V^dag (x) V^T> on the grid.
CircuitSeries otoc_circuit(const PureState& initial, const ObservablePair& pair, const ChainSpec& chain,
                           const EvolutionSpec& evo, std::span<const double> times, Frame frame,
                           unsigned threads = 0);

/// Joint outcome distribution of (V^dag, V^T) in a propagated state.
OutcomeDistribution measured_outcomes(const PropagatedState& state, const ObservablePair& pair);

struct ShotEstimate {
  double estimate = 0.0;
  double sigma = 0.0;
};

/// Mean of sigma_1 sigma_2 over `shots` draws after readout errors, with its
/// standard error.
ShotEstimate sample_shots(const OutcomeDistribution& p, int shots, double x_readout, std::mt19937_64& rng);
ShotEstimate sample_shots(const PropagatedState& state, const ObservablePair& pair, int shots,
                          double x_readout, std::uint64_t seed);

struct CorrectedSeries {
  /// NaN where |N| < 1e-9.
  std::vector<double> value;
  std::vector<double> sigma;
  std::vector<bool> defined;
};

/// O / N with first-order propagation of independent 1-sigma errors.
CorrectedSeries correct(std::span<const double> O, std::span<const double> N,
                        std::span<const double> sigma_O = {}, std::span<const double> sigma_N = {});
/// Same ratio; sigma from the spread of O'/N' with Gaussian O', N'.
CorrectedSeries correct_resampled(std::span<const double> O, std::span<const double> N,
                                  std::span<const double> sigma_O, std::span<const double> sigma_N,
                                  int samples, std::uint64_t seed);

/// 2 ||V||^2 sqrt(1 - F) for a Pauli V.
double error_bound(const ObservablePair& pair, double F);

/// series / series[0]
std::vector<double> normalized(std::span<const double> series);

struct KappaResult {
  double kappa = 0.0;
  double crossing_time = 0.0;
};

/// |slope| of the least-squares line through the five grid points around
/// the first downward crossing of 0.5. Throws NoCrossing.
KappaResult extract_kappa(std::span<const double> times, std::span<const double> values);

}  // namespace tfdotoc
