#pragma once

// Bit-string Hilbert-space machinery for spin-1/2 systems.
//
// Site k of a register maps to bit k of an unsigned integer; an up spin is a
// set bit. sigma^z is +1 on up. Sector labels are total magnetization
// 2*popcount - num_qubits, so each up spin counts +1 and each down spin -1.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tfdotoc {

using cplx = std::complex<double>;
using Bits = std::uint64_t;
using Vec = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr cplx kI{0.0, 1.0};

/// Total sigma^z of a bit string over the lowest `num_qubits` bits.
int magnetization(Bits bits, int num_qubits);

class SectorBasis {
 public:
  int num_qubits() const noexcept { return num_qubits_; }
  std::optional<int> sector() const noexcept { return sector_; }
  std::size_t dim() const noexcept { return states_.size(); }
  std::span<const Bits> states() const noexcept { return states_; }
  Bits state(std::size_t index) const { return states_[index]; }
  std::optional<std::size_t> index_of(Bits bits) const;
  bool contains(Bits bits) const { return index_of(bits).has_value(); }

  /// Structural equality; enumeration is deterministic so this is identity.
  bool same_as(const SectorBasis& other) const noexcept {
    return num_qubits_ == other.num_qubits_ && sector_ == other.sector_;
  }

 private:
  friend std::shared_ptr<const SectorBasis> enumerate_sector(int, std::optional<int>);
  SectorBasis() = default;

  int num_qubits_ = 0;
  std::optional<int> sector_;
  std::vector<Bits> states_;
  // Dense lookup for registers up to kDenseLookupQubits, hash map beyond.
  std::vector<std::uint32_t> dense_index_;
  std::unordered_map<Bits, std::size_t> sparse_index_;
};

using BasisPtr = std::shared_ptr<const SectorBasis>;

/// States in ascending bit-string order. `sector == nullopt` gives all 2^n.
BasisPtr enumerate_sector(int num_qubits, std::optional<int> sector = std::nullopt);

void require_same_basis(const SectorBasis& a, const SectorBasis& b, const char* context);

enum class Axis { X, Y, Z };

char axis_letter(Axis axis);

struct PauliFactor {
  int site = 0;
  Axis axis = Axis::Z;
};

/// Tensor product of single-site Pauli matrices times a phase. Empty means
/// identity (times the phase).
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::vector<PauliFactor> factors, cplx phase = 1.0);

  static PauliString single(int site, Axis axis) { return PauliString({{site, axis}}); }

  const std::vector<PauliFactor>& factors() const noexcept { return factors_; }
  cplx phase() const noexcept { return phase_; }
  bool is_identity() const noexcept { return factors_.empty(); }
  /// -1 for the identity string.
  int max_site() const noexcept;

  /// P|bits> = amplitude |image>.
  std::pair<Bits, cplx> act(Bits bits) const noexcept;
  Bits flip_mask() const noexcept { return flip_mask_; }

  PauliString operator*(const PauliString& rhs) const;
  PauliString adjoint() const;
  /// X^T = X, Y^T = -Y, Z^T = Z.
  PauliString transpose() const;
  PauliString shifted(int offset) const;
  PauliString with_phase(cplx phase) const;

  std::string to_string() const;

 private:
  void rebuild_masks();

  std::vector<PauliFactor> factors_;
  cplx phase_{1.0, 0.0};
  Bits flip_mask_ = 0;   // X or Y
  Bits sign_mask_ = 0;   // Y or Z: picks up -1 on a down spin
  int num_y_ = 0;
};

class SparseOperator {
 public:
  SparseOperator(BasisPtr basis, SparseMatrix matrix, bool hermitian_hint = false,
                 bool unitary_hint = false);
  /// Map between two bases (e.g. sector to sector).
  SparseOperator(BasisPtr domain, BasisPtr codomain, SparseMatrix matrix,
                 bool hermitian_hint, bool unitary_hint);

  const BasisPtr& basis() const noexcept { return domain_; }
  const BasisPtr& domain() const noexcept { return domain_; }
  const BasisPtr& codomain() const noexcept { return codomain_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  bool hermitian_hint() const noexcept { return hermitian_hint_; }
  bool unitary_hint() const noexcept { return unitary_hint_; }
  std::size_t dim() const noexcept { return domain_->dim(); }

  Vec apply(const Vec& v) const;

  SparseOperator adjoint() const;
  SparseOperator conjugate() const;
  SparseOperator operator+(const SparseOperator& rhs) const;
  SparseOperator operator-(const SparseOperator& rhs) const;
  SparseOperator operator*(const SparseOperator& rhs) const;
  SparseOperator scaled(cplx factor) const;

  double max_abs() const;
  DenseMatrix to_dense() const;
  bool is_hermitian(double tol = 1e-12) const;

 private:
  BasisPtr domain_;
  BasisPtr codomain_;
  SparseMatrix matrix_;
  bool hermitian_hint_;
  bool unitary_hint_;
};

SparseOperator operator*(cplx factor, const SparseOperator& op);

SparseOperator identity_operator(const BasisPtr& basis);

/// Throws SectorViolation if some basis state is mapped outside `basis`.
SparseOperator pauli_string_to_operator(const PauliString& p, const BasisPtr& basis);
/// Sector-to-sector map: images outside `codomain` are dropped.
SparseOperator pauli_string_to_operator(const PauliString& p, const BasisPtr& domain,
                                        const BasisPtr& codomain);

/// Total sigma^z as a diagonal operator.
SparseOperator sz_total_operator(const BasisPtr& basis);

class PureState {
 public:
  PureState(BasisPtr basis, Vec amplitudes);

  const BasisPtr& basis() const noexcept { return basis_; }
  const Vec& amplitudes() const noexcept { return amplitudes_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  double norm() const { return amplitudes_.norm(); }
  bool is_normalized(double tol = 1e-10) const { return std::abs(norm() - 1.0) < tol; }
  PureState normalized() const;

  cplx amplitude(Bits bits) const;

  /// Single computational basis state.
  static PureState basis_state(const BasisPtr& basis, Bits bits);

 private:
  BasisPtr basis_;
  Vec amplitudes_;
};

PureState apply(const SparseOperator& op, const PureState& state);
/// Throws SectorViolation if the result leaves the state's basis.
PureState apply(const PauliString& p, const PureState& state);
/// P|s> on the smallest basis holding it: one sector when the image has a
/// definite magnetization, the full register otherwise.
PureState apply_widening(const PauliString& p, const PureState& state);

/// Re-expresses a state on a single sector when its support allows.
PureState compact(const PureState& state);

cplx expectation(const SparseOperator& op, const PureState& state);
/// <s|P|s>. Images leaving the basis contribute nothing, which is exact.
cplx expectation(const PauliString& p, const PureState& state);

cplx inner(const PureState& bra, const PureState& ket);

/// Project onto a smaller basis; throws if the dropped weight exceeds tol.
PureState restrict_to(const PureState& state, const BasisPtr& target, double tol = 1e-10);
/// Embed into a larger basis with the same register width.
PureState embed(const PureState& state, const BasisPtr& target);

}  // namespace tfdotoc
