#pragma once

// Thermofield double states, the U_0-rotated target and fidelity
// maximization that assigns an effective temperature to a ladder coupling.

#include "tfdotoc/hilbert.hpp"
#include "tfdotoc/model.hpp"
#include "tfdotoc/spectral.hpp"

#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace tfdotoc {

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

struct TfdResult {
  double beta;
  /// log of sum_E exp(-beta E); finite for every beta via the ground-energy shift.
  double log_z;
  PureState state;  // full 2n-qubit basis, leg 1 in the low bits

  double z() const { return std::exp(log_z); }
};

/// sum_E e^{-beta E / 2} |E> (x) |E^*> / sqrt(Z). beta may be kInfiniteBeta,
/// which keeps only the ground manifold.
TfdResult build_tfd(const Spectrum& chain, double beta);

/// Boltzmann weights e^{-beta (E - E_0) / 2} and the matching log Z.
std::vector<double> half_boltzmann_weights(std::span<const double> energies, double beta,
                                           double* log_z = nullptr);

/// (U_0 (x) 1)|tfd>; U_0 must act on the tfd's basis.
PureState build_phi(const TfdResult& tfd, const SparseOperator& U0);

/// |<g|phi>|^2
double fidelity(const PureState& g, const PureState& phi);

/// F(beta) = |<g|phi(beta)>|^2 for a fixed ladder state, evaluated in
/// O(2^n) per beta after an O(8^n) setup.
class FidelityProfile {
 public:
  FidelityProfile(const Spectrum& chain, const PureState& ground);
  double operator()(double beta) const;

 private:
  std::vector<double> energies_;
  std::vector<cplx> overlaps_;  // <g| (U_0|E>) (x) |E^*>
};

struct ScanOptions {
  double beta_min = 1e-3;
  double beta_max = 1e3;
  int points = 60;
  double rel_tol = 1e-6;
  unsigned threads = 0;
};

struct FidelityResult {
  double lambda = 0.0;
  double beta0 = 0.0;
  double T0 = 0.0;
  double F = 0.0;
  std::vector<std::pair<double, double>> scan;  // (beta, F)
  /// More than one separated peak in the scan; `maxima` lists them all.
  bool multimodal = false;
  std::vector<std::pair<double, double>> maxima;
};

FidelityResult optimize_beta(const FidelityProfile& profile, double lambda,
                             const ScanOptions& options = {});
/// Builds the chain spectrum and the S^z = 0 ladder ground state itself.
/// lambda must be finite and positive.
FidelityResult optimize_beta(const LadderSpec& spec, const ScanOptions& options = {});

struct T0Fit {
  double slope = 0.0;
  double intercept = 0.0;
  double t0_infinity = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
};

/// Least squares T_0 = slope / n + intercept over >= 3 distinct n.
T0Fit extrapolate_T0(std::span<const std::pair<int, double>> points);

}  // namespace tfdotoc
