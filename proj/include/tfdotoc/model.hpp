#pragma once

// Long-range XX chain, its two-leg ladder and the symmetry operators used by
// the measurement protocol.
//
// Sites are 0-based in code. Leg 1 holds sites [0, n), leg 2 holds
// [n, 2n). When a rule refers to "even" sites it means the 1-based label
// (site index + 1) is even.

#include "tfdotoc/hilbert.hpp"

#include <limits>
#include <vector>

namespace tfdotoc {

inline constexpr double kInfiniteCoupling = std::numeric_limits<double>::infinity();

struct ChainSpec {
  int n = 2;
  double J = 1.0;
  void validate() const;
};

struct LadderSpec {
  ChainSpec chain;
  double lambda = 1.0;  // may be kInfiniteCoupling
  bool rung_only() const noexcept { return lambda == kInfiniteCoupling; }
  void validate() const;
};

enum class Leg { first, second };

/// coupling * (X_i X_j + Y_i Y_j)
struct Bond {
  int i = 0;
  int j = 0;
  double coupling = 0.0;
};

/// Every opposite-parity pair (i < j) of the chain with J / |i - j|^3,
/// offset by `first_site`.
std::vector<Bond> chain_bonds(const ChainSpec& spec, int first_site = 0);

/// Sum of XX + YY bonds. Real symmetric in the computational basis and
/// sector preserving.
SparseOperator hopping_operator(const std::vector<Bond>& bonds, const BasisPtr& basis);

/// Single chain on an n-qubit basis.
SparseOperator build_chain_hamiltonian(const ChainSpec& spec, const BasisPtr& basis);

/// H (x) 1 or 1 (x) H on a 2n-qubit basis.
SparseOperator build_leg_hamiltonian(const ChainSpec& spec, Leg leg, const BasisPtr& basis);

/// J * sum_k (X_k X_{k+n} + Y_k Y_{k+n}).
SparseOperator build_rung_coupling(const ChainSpec& spec, const BasisPtr& basis);

struct ParentHamiltonian {
  SparseOperator op;
  /// lambda = infinity: `op` is the rung coupling alone.
  bool rung_only = false;
};

/// H_1 + H_2 + lambda * H_12 on a 2n-qubit basis.
ParentHamiltonian build_parent_hamiltonian(const LadderSpec& spec, const BasisPtr& basis);

/// The three pieces the dynamics need, all on the same 2n-qubit basis.
struct LegOperators {
  SparseOperator H1;
  SparseOperator H2;
  SparseOperator H12;

  /// H_1 - H_2^*, the ideal two-leg generator.
  SparseOperator ideal_generator() const { return H1 - H2.conjugate(); }
  SparseOperator forward_generator() const { return H1 + H2; }
};

LegOperators build_leg_operators(const ChainSpec& spec, const BasisPtr& basis);

/// Product of sigma^z over even-labelled sites of one leg. On an n-qubit
/// basis the whole register is the leg; on a 2n-qubit basis the labels are
/// global (n+1..2n for the second leg).
PauliString R_string(int n, Leg leg, int num_qubits);
SparseOperator build_R(int n, Leg leg, const BasisPtr& basis);

/// Product of sigma^y over leg 1.
PauliString U0_string(int n);
/// The basis must be closed under U_0 (full basis, or an n-qubit sector 0).
SparseOperator build_U0(int n, const BasisPtr& basis);

/// Sign s with U_0 P U_0^dag = s P for a Pauli string P.
int u0_commutation_sign(int n, const PauliString& p);

/// max |R^dag H R + H^*| elementwise.
double particle_hole_residual(const SparseOperator& H, const SparseOperator& R);

/// Dense check of R^dag H R = -H^* for the chain, n <= 8.
bool verify_particle_hole(const ChainSpec& spec);

/// Product of rung singlets (|ud> - |du>)/sqrt(2) over (k, k+n): the
/// lambda = infinity ground state.
PureState rung_singlet_state(int n, const BasisPtr& basis);

}  // namespace tfdotoc
