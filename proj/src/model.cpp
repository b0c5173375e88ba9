#include "tfdotoc/model.hpp"

#include "tfdotoc/errors.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace tfdotoc {

void ChainSpec::validate() const {
  if (n < 2) throw ValidationError("chain length n must be >= 2, got " + std::to_string(n));
  if (!(J > 0.0) || !std::isfinite(J)) throw ValidationError("J must be positive and finite");
}

void LadderSpec::validate() const {
  chain.validate();
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
}

std::vector<Bond> chain_bonds(const ChainSpec& spec, int first_site) {
  spec.validate();
  std::vector<Bond> bonds;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; j += 2) {
      const double r = j - i;
      bonds.push_back({first_site + i, first_site + j, spec.J / (r * r * r)});
    }
  }
  return bonds;
}

SparseOperator hopping_operator(const std::vector<Bond>& bonds, const BasisPtr& basis) {
  const int width = basis->num_qubits();
  for (const auto& b : bonds) {
    if (b.i < 0 || b.j < 0 || b.i >= width || b.j >= width || b.i == b.j) {
      throw BasisMismatch("bond (" + std::to_string(b.i) + "," + std::to_string(b.j) +
                          ") outside a " + std::to_string(width) + "-qubit basis");
    }
  }
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(basis->dim() * bonds.size() / 2 + 1);
  for (std::size_t col = 0; col < basis->dim(); ++col) {
    const Bits s = basis->state(col);
    for (const auto& b : bonds) {
      const Bits mask = (Bits{1} << b.i) | (Bits{1} << b.j);
      // (XX + YY) = 2 (s+ s- + s- s+): only anti-aligned pairs hop.
      if (std::popcount(s & mask) != 1) continue;
      auto row = basis->index_of(s ^ mask);
      if (!row) throw SectorViolation("hopping left the basis");  // unreachable for sector bases
      triplets.emplace_back(static_cast<int>(*row), static_cast<int>(col), 2.0 * b.coupling);
    }
  }
  SparseMatrix m(basis->dim(), basis->dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(basis, std::move(m), true, false);
}

SparseOperator build_chain_hamiltonian(const ChainSpec& spec, const BasisPtr& basis) {
  if (basis->num_qubits() != spec.n) {
    throw BasisMismatch("chain Hamiltonian needs an " + std::to_string(spec.n) + "-qubit basis");
  }
  return hopping_operator(chain_bonds(spec), basis);
}

SparseOperator build_leg_hamiltonian(const ChainSpec& spec, Leg leg, const BasisPtr& basis) {
  if (basis->num_qubits() != 2 * spec.n) {
    throw BasisMismatch("leg Hamiltonian needs a " + std::to_string(2 * spec.n) + "-qubit basis");
  }
  return hopping_operator(chain_bonds(spec, leg == Leg::first ? 0 : spec.n), basis);
}

SparseOperator build_rung_coupling(const ChainSpec& spec, const BasisPtr& basis) {
  spec.validate();
  if (basis->num_qubits() != 2 * spec.n) {
    throw BasisMismatch("rung coupling needs a " + std::to_string(2 * spec.n) + "-qubit basis");
  }
  std::vector<Bond> rungs;
  for (int k = 0; k < spec.n; ++k) rungs.push_back({k, k + spec.n, spec.J});
  return hopping_operator(rungs, basis);
}

ParentHamiltonian build_parent_hamiltonian(const LadderSpec& spec, const BasisPtr& basis) {
  spec.validate();
  if (spec.rung_only()) return {build_rung_coupling(spec.chain, basis), true};
  const LegOperators legs = build_leg_operators(spec.chain, basis);
  SparseOperator h = legs.H1 + legs.H2;
  if (spec.lambda != 0.0) h = h + legs.H12.scaled(spec.lambda);
  return {std::move(h), false};
}

LegOperators build_leg_operators(const ChainSpec& spec, const BasisPtr& basis) {
  return {build_leg_hamiltonian(spec, Leg::first, basis),
          build_leg_hamiltonian(spec, Leg::second, basis), build_rung_coupling(spec, basis)};
}

PauliString R_string(int n, Leg leg, int num_qubits) {
  std::vector<PauliFactor> factors;
  if (num_qubits == n) {
    for (int k = 0; k < n; ++k) {
      if ((k + 1) % 2 == 0) factors.push_back({k, Axis::Z});
    }
  } else if (num_qubits == 2 * n) {
    const int lo = leg == Leg::first ? 0 : n;
    for (int k = lo; k < lo + n; ++k) {
      if ((k + 1) % 2 == 0) factors.push_back({k, Axis::Z});
    }
  } else {
    throw BasisMismatch("R needs an n- or 2n-qubit basis");
  }
  return PauliString(std::move(factors));
}

SparseOperator build_R(int n, Leg leg, const BasisPtr& basis) {
  return pauli_string_to_operator(R_string(n, leg, basis->num_qubits()), basis);
}

PauliString U0_string(int n) {
  std::vector<PauliFactor> factors;
  for (int k = 0; k < n; ++k) factors.push_back({k, Axis::Y});
  return PauliString(std::move(factors));
}

SparseOperator build_U0(int n, const BasisPtr& basis) {
  if (basis->num_qubits() < n) throw BasisMismatch("U0 needs at least n qubits");
  return pauli_string_to_operator(U0_string(n), basis);
}

int u0_commutation_sign(int n, const PauliString& p) {
  int sign = 1;
  for (const auto& f : p.factors()) {
    if (f.site < n && f.axis != Axis::Y) sign = -sign;
  }
  return sign;
}

double particle_hole_residual(const SparseOperator& H, const SparseOperator& R) {
  return (R.adjoint() * H * R + H.conjugate()).max_abs();
}

bool verify_particle_hole(const ChainSpec& spec) {
  spec.validate();
  if (spec.n > 16) throw DimensionTooLarge("particle-hole check limited to n <= 16");
  auto basis = enumerate_sector(spec.n);
  const SparseOperator h = build_chain_hamiltonian(spec, basis);
  const SparseOperator r = build_R(spec.n, Leg::second, basis);
  return particle_hole_residual(h, r) < 1e-12;
}

PureState rung_singlet_state(int n, const BasisPtr& basis) {
  if (basis->num_qubits() != 2 * n) throw BasisMismatch("rung singlets need a 2n-qubit basis");
  const double amp = std::pow(0.5, 0.5 * n);
  Vec v = Vec::Zero(static_cast<Eigen::Index>(basis->dim()));
  const Bits count = Bits{1} << n;
  for (Bits a = 0; a < count; ++a) {
    // leg 2 holds the complement of leg 1; each down spin on leg 1 costs a sign
    const Bits b = ~a & (count - 1);
    const Bits bits = a | (b << n);
    const int downs = n - std::popcount(a);
    auto i = basis->index_of(bits);
    if (!i) continue;
    v[static_cast<Eigen::Index>(*i)] = (downs % 2 == 0) ? amp : -amp;
  }
  PureState state(basis, std::move(v));
  if (!state.is_normalized()) throw SectorViolation("basis does not contain the rung-singlet state");
  return state;
}

}  // namespace tfdotoc
