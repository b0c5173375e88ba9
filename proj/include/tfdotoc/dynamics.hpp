#pragma once

// Two-leg time evolution: Krylov propagation of pure states, the R-conjugated
// forward evolution, open-system channels and readout errors.

#include "tfdotoc/hilbert.hpp"
#include "tfdotoc/model.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tfdotoc {

struct KrylovOptions {
  int max_dim = 30;
  /// Target for the a-posteriori error of each accepted step, in vector norm.
  double tol = 1e-10;
  double min_step = 1e-12;
};

struct KrylovStats {
  std::size_t matvecs = 0;
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

/// exp(-i H t) v by Lanczos with full reorthogonalization. H must be
/// Hermitian. The basis grows until the step meets the error target, and
/// the step is cut when max_dim is not enough.
Vec expm_krylov(const SparseOperator& H, const Vec& v, double t, const KrylovOptions& options = {},
                KrylovStats* stats = nullptr);

/// exp(-i (H_1 - H_2^*) t)|state>; `generator` must act on the state's basis.
PureState evolve_ideal(const PureState& state, const SparseOperator& generator, double t,
                       const KrylovOptions& options = {});

/// R_2^dag exp(-i (H_1 + H_2) t) R_2 |state>. Refuses (SymmetryViolation)
/// unless R_2^dag H_2 R_2 = -H_2^* holds for the supplied leg operators.
PureState evolve_via_R(const PureState& state, const LegOperators& legs, const SparseOperator& R2,
                       double t, const KrylovOptions& options = {});

enum class EvolutionKind {
  ideal_direct,
  ideal_via_R,
  collective_dephasing,
  depolarization,
  local_dephasing,
  remnant_coupling,
  asymmetric_legs,
};

std::string to_string(EvolutionKind kind);
EvolutionKind parse_evolution_kind(const std::string& name);

struct EvolutionSpec {
  EvolutionKind kind = EvolutionKind::ideal_direct;
  double gamma = 0.0;
  double epsilon = 0.0;
  int trajectories = 500;
  std::uint64_t seed = 0;

  void validate() const;
  bool stochastic() const noexcept { return kind == EvolutionKind::local_dephasing && gamma > 0.0; }
};

/// Ideal evolution with decay factor e^{-gamma t}; the rest of the weight is
/// the maximally mixed state.
struct DepolarizedState {
  PureState state;
  double decay = 1.0;
  double mixed_fraction() const noexcept { return 1.0 - decay; }
};

/// Unitarily evolved state whose coherences between magnetization sectors
/// m, m' are damped by exp(-exposure (m - m')^2 / 2), exposure = gamma t.
struct DephasedState {
  PureState state;
  double exposure = 0.0;
};

struct TrajectoryEnsemble {
  std::vector<PureState> members;
  std::vector<double> weights;
};

using PropagatedState = std::variant<PureState, DepolarizedState, DephasedState, TrajectoryEnsemble>;

/// Re <P> on any propagated state.
double expectation(const PropagatedState& state, const PauliString& p);

/// The mixed part enters expectations only through tr(P) / 4^n, which
/// vanishes for every non-identity Pauli string.
DepolarizedState evolve_depolarization(const PureState& state, const SparseOperator& generator,
                                       double t, double gamma, const KrylovOptions& options = {});

DephasedState evolve_collective_dephasing(const PureState& state, const SparseOperator& generator,
                                          double t, double gamma, const KrylovOptions& options = {});

/// Quantum-trajectory unravelling of gamma sum_i (sigma^z_i rho sigma^z_i - rho)
/// over every site of the register.
TrajectoryEnsemble evolve_local_dephasing(const PureState& state, const SparseOperator& generator,
                                          double t, double gamma, const EvolutionSpec& spec,
                                          unsigned threads = 0, const KrylovOptions& options = {});

/// Generator for the coherent imperfection kinds (and the ideal kinds).
SparseOperator imperfect_generator(const LegOperators& legs, const EvolutionSpec& spec);

PureState evolve_imperfect(const PureState& state, const LegOperators& legs, const EvolutionSpec& spec,
                           double t, const KrylovOptions& options = {});

/// Expectations of Hermitian Pauli strings along a time grid.
struct ExpectationSeries {
  std::vector<double> times;
  /// mean[t][k]: ensemble mean of observable k at times[t].
  std::vector<std::vector<double>> mean;
  /// Standard error over trajectories; zero for deterministic kinds.
  std::vector<std::vector<double>> trajectory_se;
  int trajectories = 1;
};

/// Evolves `state` (2n-qubit register) under the channel in `spec` for the
/// ladder `chain`, stepping through the sorted, non-negative `times`.
ExpectationSeries evolve_expectations(const PureState& state, const ChainSpec& chain,
                                      const EvolutionSpec& spec, std::span<const double> times,
                                      std::span<const PauliString> observables, unsigned threads = 0,
                                      const KrylovOptions& options = {});

/// Joint distribution of two commuting +-1 observables, indexed
/// (+,+), (+,-), (-,+), (-,-).
using OutcomeDistribution = std::array<double, 4>;

OutcomeDistribution outcome_distribution(double mean_a, double mean_b, double mean_ab);
double correlator(const OutcomeDistribution& p);

/// Each outcome bit flips independently with probability x.
OutcomeDistribution apply_readout_error(const OutcomeDistribution& p, double x);

}  // namespace tfdotoc
