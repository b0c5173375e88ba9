#include "tfdotoc/hilbert.hpp"

#include "tfdotoc/errors.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <sstream>

namespace tfdotoc {

namespace {

constexpr int kDenseLookupQubits = 24;
constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

Bits low_mask(int num_qubits) {
  return num_qubits >= 64 ? ~Bits{0} : (Bits{1} << num_qubits) - 1;
}

// Next integer with the same popcount (Gosper).
Bits next_same_popcount(Bits v) {
  const Bits t = v | (v - 1);
  return (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
}

// Index 0 is identity.
int pauli_index(Axis a) {
  switch (a) {
    case Axis::X: return 1;
    case Axis::Y: return 2;
    case Axis::Z: return 3;
  }
  return 0;
}

Axis axis_from_index(int i) { return i == 1 ? Axis::X : (i == 2 ? Axis::Y : Axis::Z); }

// sigma_a sigma_b = phase * sigma_c
std::pair<int, cplx> single_site_product(int a, int b) {
  if (a == 0) return {b, 1.0};
  if (b == 0) return {a, 1.0};
  if (a == b) return {0, 1.0};
  const int c = 6 - a - b;
  // cyclic (X,Y,Z) order gives +i
  const bool cyclic = (a == 1 && b == 2) || (a == 2 && b == 3) || (a == 3 && b == 1);
  return {c, cyclic ? kI : -kI};
}

}  // namespace

int magnetization(Bits bits, int num_qubits) {
  return 2 * std::popcount(bits & low_mask(num_qubits)) - num_qubits;
}

std::optional<std::size_t> SectorBasis::index_of(Bits bits) const {
  if ((bits & ~low_mask(num_qubits_)) != 0) return std::nullopt;
  if (!sector_) return static_cast<std::size_t>(bits);
  if (!dense_index_.empty()) {
    const std::uint32_t i = dense_index_[bits];
    if (i == kAbsent) return std::nullopt;
    return i;
  }
  auto it = sparse_index_.find(bits);
  if (it == sparse_index_.end()) return std::nullopt;
  return it->second;
}

BasisPtr enumerate_sector(int num_qubits, std::optional<int> sector) {
  if (num_qubits < 1 || num_qubits > 62) {
    throw ValidationError("num_qubits must lie in [1, 62], got " + std::to_string(num_qubits));
  }
  auto basis = std::shared_ptr<SectorBasis>(new SectorBasis());
  basis->num_qubits_ = num_qubits;
  basis->sector_ = sector;
  if (!sector) {
    if (num_qubits > 30) throw DimensionTooLarge("full basis above 30 qubits");
    const std::size_t dim = std::size_t{1} << num_qubits;
    basis->states_.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) basis->states_[i] = i;
    return basis;
  }
  const int m = *sector;
  if (std::abs(m) > num_qubits || (m + num_qubits) % 2 != 0) {
    throw InvalidSector("sector " + std::to_string(m) + " incompatible with " +
                        std::to_string(num_qubits) + " qubits");
  }
  const int ups = (m + num_qubits) / 2;
  if (ups == 0) {
    basis->states_.push_back(0);
  } else {
    Bits v = low_mask(ups);
    const Bits end = Bits{1} << num_qubits;
    while (v < end) {
      basis->states_.push_back(v);
      if (ups == num_qubits) break;
      v = next_same_popcount(v);
    }
  }
  if (num_qubits <= kDenseLookupQubits) {
    basis->dense_index_.assign(std::size_t{1} << num_qubits, kAbsent);
    for (std::size_t i = 0; i < basis->states_.size(); ++i) {
      basis->dense_index_[basis->states_[i]] = static_cast<std::uint32_t>(i);
    }
  } else {
    basis->sparse_index_.reserve(basis->states_.size());
    for (std::size_t i = 0; i < basis->states_.size(); ++i) {
      basis->sparse_index_.emplace(basis->states_[i], i);
    }
  }
  return basis;
}

void require_same_basis(const SectorBasis& a, const SectorBasis& b, const char* context) {
  if (!a.same_as(b)) {
    throw BasisMismatch(std::string(context) + ": basis mismatch (" +
                        std::to_string(a.num_qubits()) + " vs " + std::to_string(b.num_qubits()) +
                        " qubits)");
  }
}

char axis_letter(Axis axis) {
  switch (axis) {
    case Axis::X: return 'X';
    case Axis::Y: return 'Y';
    case Axis::Z: return 'Z';
  }
  return '?';
}

// ---------------------------------------------------------------------------
// PauliString

PauliString::PauliString(std::vector<PauliFactor> factors, cplx phase)
    : factors_(std::move(factors)), phase_(phase) {
  std::sort(factors_.begin(), factors_.end(),
            [](const PauliFactor& a, const PauliFactor& b) { return a.site < b.site; });
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].site < 0 || factors_[i].site > 62) {
      throw ValidationError("Pauli site out of range: " + std::to_string(factors_[i].site));
    }
    if (i > 0 && factors_[i].site == factors_[i - 1].site) {
      throw ValidationError("duplicate site in Pauli string: " + std::to_string(factors_[i].site));
    }
  }
  rebuild_masks();
}

void PauliString::rebuild_masks() {
  flip_mask_ = 0;
  sign_mask_ = 0;
  num_y_ = 0;
  for (const auto& f : factors_) {
    const Bits bit = Bits{1} << f.site;
    if (f.axis != Axis::Z) flip_mask_ |= bit;
    if (f.axis != Axis::X) sign_mask_ |= bit;
    if (f.axis == Axis::Y) ++num_y_;
  }
}

int PauliString::max_site() const noexcept {
  return factors_.empty() ? -1 : factors_.back().site;
}

std::pair<Bits, cplx> PauliString::act(Bits bits) const noexcept {
  // Y|up> = i|down>, Y|down> = -i|up>, Z|down> = -|down>.
  static constexpr cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  cplx amp = phase_ * kIPow[num_y_ & 3];
  if (std::popcount(sign_mask_ & ~bits) & 1) amp = -amp;
  return {bits ^ flip_mask_, amp};
}

PauliString PauliString::operator*(const PauliString& rhs) const {
  std::vector<PauliFactor> out;
  cplx phase = phase_ * rhs.phase_;
  std::size_t i = 0, j = 0;
  while (i < factors_.size() || j < rhs.factors_.size()) {
    if (j == rhs.factors_.size() || (i < factors_.size() && factors_[i].site < rhs.factors_[j].site)) {
      out.push_back(factors_[i++]);
    } else if (i == factors_.size() || rhs.factors_[j].site < factors_[i].site) {
      out.push_back(rhs.factors_[j++]);
    } else {
      auto [c, ph] = single_site_product(pauli_index(factors_[i].axis), pauli_index(rhs.factors_[j].axis));
      phase *= ph;
      if (c != 0) out.push_back({factors_[i].site, axis_from_index(c)});
      ++i;
      ++j;
    }
  }
  return PauliString(std::move(out), phase);
}

PauliString PauliString::adjoint() const { return with_phase(std::conj(phase_)); }

PauliString PauliString::transpose() const {
  cplx phase = phase_;
  for (const auto& f : factors_) {
    if (f.axis == Axis::Y) phase = -phase;
  }
  return with_phase(phase);
}

PauliString PauliString::shifted(int offset) const {
  std::vector<PauliFactor> out = factors_;
  for (auto& f : out) f.site += offset;
  return PauliString(std::move(out), phase_);
}

PauliString PauliString::with_phase(cplx phase) const {
  PauliString copy = *this;
  copy.phase_ = phase;
  return copy;
}

std::string PauliString::to_string() const {
  std::ostringstream os;
  if (phase_ != cplx(1.0, 0.0)) os << "(" << phase_.real() << "," << phase_.imag() << ")*";
  if (factors_.empty()) os << "I";
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) os << ' ';
    os << axis_letter(factors_[i].axis) << factors_[i].site;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SparseOperator

SparseOperator::SparseOperator(BasisPtr basis, SparseMatrix matrix, bool hermitian_hint,
                               bool unitary_hint)
    : SparseOperator(basis, basis, std::move(matrix), hermitian_hint, unitary_hint) {}

SparseOperator::SparseOperator(BasisPtr domain, BasisPtr codomain, SparseMatrix matrix,
                               bool hermitian_hint, bool unitary_hint)
    : domain_(std::move(domain)),
      codomain_(std::move(codomain)),
      matrix_(std::move(matrix)),
      hermitian_hint_(hermitian_hint),
      unitary_hint_(unitary_hint) {
  if (static_cast<std::size_t>(matrix_.cols()) != domain_->dim() ||
      static_cast<std::size_t>(matrix_.rows()) != codomain_->dim()) {
    throw BasisMismatch("sparse matrix shape does not match its bases");
  }
  matrix_.makeCompressed();
}

Vec SparseOperator::apply(const Vec& v) const {
  if (static_cast<std::size_t>(v.size()) != domain_->dim()) {
    throw BasisMismatch("operator applied to a vector of the wrong dimension");
  }
  return matrix_ * v;
}

SparseOperator SparseOperator::adjoint() const {
  SparseMatrix m = matrix_.adjoint();
  return SparseOperator(codomain_, domain_, std::move(m), hermitian_hint_, unitary_hint_);
}

SparseOperator SparseOperator::conjugate() const {
  SparseMatrix m = matrix_.conjugate();
  return SparseOperator(domain_, codomain_, std::move(m), hermitian_hint_, unitary_hint_);
}

SparseOperator SparseOperator::operator+(const SparseOperator& rhs) const {
  require_same_basis(*domain_, *rhs.domain_, "operator+");
  require_same_basis(*codomain_, *rhs.codomain_, "operator+");
  SparseMatrix m = matrix_ + rhs.matrix_;
  return SparseOperator(domain_, codomain_, std::move(m), hermitian_hint_ && rhs.hermitian_hint_,
                        false);
}

SparseOperator SparseOperator::operator-(const SparseOperator& rhs) const {
  require_same_basis(*domain_, *rhs.domain_, "operator-");
  require_same_basis(*codomain_, *rhs.codomain_, "operator-");
  SparseMatrix m = matrix_ - rhs.matrix_;
  return SparseOperator(domain_, codomain_, std::move(m), hermitian_hint_ && rhs.hermitian_hint_,
                        false);
}

SparseOperator SparseOperator::operator*(const SparseOperator& rhs) const {
  require_same_basis(*domain_, *rhs.codomain_, "operator*");
  SparseMatrix m = (matrix_ * rhs.matrix_).pruned();
  return SparseOperator(rhs.domain_, codomain_, std::move(m), false,
                        unitary_hint_ && rhs.unitary_hint_);
}

SparseOperator SparseOperator::scaled(cplx factor) const {
  SparseMatrix m = matrix_ * factor;
  const bool real_factor = factor.imag() == 0.0;
  const bool unit_factor = std::abs(std::abs(factor) - 1.0) == 0.0;
  return SparseOperator(domain_, codomain_, std::move(m), hermitian_hint_ && real_factor,
                        unitary_hint_ && unit_factor);
}

SparseOperator operator*(cplx factor, const SparseOperator& op) { return op.scaled(factor); }

double SparseOperator::max_abs() const {
  double best = 0.0;
  for (int k = 0; k < matrix_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) best = std::max(best, std::abs(it.value()));
  }
  return best;
}

DenseMatrix SparseOperator::to_dense() const { return DenseMatrix(matrix_); }

bool SparseOperator::is_hermitian(double tol) const {
  if (!domain_->same_as(*codomain_)) return false;
  SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) > tol) return false;
    }
  }
  return true;
}

SparseOperator identity_operator(const BasisPtr& basis) {
  SparseMatrix m(basis->dim(), basis->dim());
  m.setIdentity();
  return SparseOperator(basis, std::move(m), true, true);
}

namespace {

SparseOperator build_pauli(const PauliString& p, const BasisPtr& domain, const BasisPtr& codomain,
                           bool strict) {
  if (p.max_site() >= domain->num_qubits() || domain->num_qubits() != codomain->num_qubits()) {
    throw ValidationError("Pauli string " + p.to_string() + " does not fit a " +
                          std::to_string(domain->num_qubits()) + "-qubit register");
  }
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(domain->dim());
  bool complete = true;
  for (std::size_t col = 0; col < domain->dim(); ++col) {
    auto [image, amp] = p.act(domain->state(col));
    auto row = codomain->index_of(image);
    if (!row) {
      if (strict) {
        throw SectorViolation("Pauli string " + p.to_string() + " leaves the sector basis");
      }
      complete = false;
      continue;
    }
    triplets.emplace_back(static_cast<int>(*row), static_cast<int>(col), amp);
  }
  SparseMatrix m(codomain->dim(), domain->dim());
  m.setFromTriplets(triplets.begin(), triplets.end());
  const bool square = domain->same_as(*codomain);
  const bool hermitian = square && p.phase().imag() == 0.0 && (p.phase().real() == 1.0 || p.phase().real() == -1.0);
  return SparseOperator(domain, codomain, std::move(m), hermitian, square && complete);
}

}  // namespace

SparseOperator pauli_string_to_operator(const PauliString& p, const BasisPtr& basis) {
  return build_pauli(p, basis, basis, true);
}

SparseOperator pauli_string_to_operator(const PauliString& p, const BasisPtr& domain,
                                        const BasisPtr& codomain) {
  return build_pauli(p, domain, codomain, false);
}

SparseOperator sz_total_operator(const BasisPtr& basis) {
  SparseMatrix m(basis->dim(), basis->dim());
  m.reserve(Eigen::VectorXi::Constant(static_cast<int>(basis->dim()), 1));
  for (std::size_t i = 0; i < basis->dim(); ++i) {
    const int mz = magnetization(basis->state(i), basis->num_qubits());
    if (mz != 0) m.insert(static_cast<int>(i), static_cast<int>(i)) = static_cast<double>(mz);
  }
  return SparseOperator(basis, std::move(m), true, false);
}

// ---------------------------------------------------------------------------
// PureState

PureState::PureState(BasisPtr basis, Vec amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != basis_->dim()) {
    throw BasisMismatch("amplitude vector does not match basis dimension");
  }
}

PureState PureState::normalized() const {
  const double n = norm();
  if (n == 0.0) throw ValidationError("cannot normalize the zero vector");
  return PureState(basis_, amplitudes_ / n);
}

cplx PureState::amplitude(Bits bits) const {
  auto i = basis_->index_of(bits);
  return i ? amplitudes_[static_cast<Eigen::Index>(*i)] : cplx{};
}

PureState PureState::basis_state(const BasisPtr& basis, Bits bits) {
  auto i = basis->index_of(bits);
  if (!i) throw SectorViolation("basis state outside the basis");
  Vec v = Vec::Zero(static_cast<Eigen::Index>(basis->dim()));
  v[static_cast<Eigen::Index>(*i)] = 1.0;
  return PureState(basis, std::move(v));
}

PureState apply(const SparseOperator& op, const PureState& state) {
  require_same_basis(*op.domain(), *state.basis(), "apply");
  return PureState(op.codomain(), op.apply(state.amplitudes()));
}

PureState apply(const PauliString& p, const PureState& state) {
  const auto& basis = state.basis();
  if (p.max_site() >= basis->num_qubits()) {
    throw ValidationError("Pauli string " + p.to_string() + " does not fit the register");
  }
  const Vec& in = state.amplitudes();
  Vec out = Vec::Zero(in.size());
  for (std::size_t k = 0; k < basis->dim(); ++k) {
    const cplx a = in[static_cast<Eigen::Index>(k)];
    if (a == cplx{}) continue;
    auto [image, amp] = p.act(basis->state(k));
    auto j = basis->index_of(image);
    if (!j) throw SectorViolation("Pauli string " + p.to_string() + " leaves the state's sector");
    out[static_cast<Eigen::Index>(*j)] += amp * a;
  }
  return PureState(basis, std::move(out));
}

cplx expectation(const SparseOperator& op, const PureState& state) {
  require_same_basis(*op.domain(), *state.basis(), "expectation");
  require_same_basis(*op.codomain(), *state.basis(), "expectation");
  return state.amplitudes().dot(op.apply(state.amplitudes()));
}

cplx expectation(const PauliString& p, const PureState& state) {
  const auto& basis = state.basis();
  if (p.max_site() >= basis->num_qubits()) {
    throw ValidationError("Pauli string " + p.to_string() + " does not fit the register");
  }
  const Vec& v = state.amplitudes();
  cplx acc{};
  if (p.flip_mask() == 0) {
    for (std::size_t k = 0; k < basis->dim(); ++k) {
      const cplx a = v[static_cast<Eigen::Index>(k)];
      acc += std::norm(a) * p.act(basis->state(k)).second;
    }
    return acc;
  }
  for (std::size_t k = 0; k < basis->dim(); ++k) {
    const cplx a = v[static_cast<Eigen::Index>(k)];
    if (a == cplx{}) continue;
    auto [image, amp] = p.act(basis->state(k));
    auto j = basis->index_of(image);
    if (j) acc += std::conj(v[static_cast<Eigen::Index>(*j)]) * amp * a;
  }
  return acc;
}

cplx inner(const PureState& bra, const PureState& ket) {
  require_same_basis(*bra.basis(), *ket.basis(), "inner");
  return bra.amplitudes().dot(ket.amplitudes());
}

PureState restrict_to(const PureState& state, const BasisPtr& target, double tol) {
  if (state.basis()->num_qubits() != target->num_qubits()) {
    throw BasisMismatch("restrict_to: register widths differ");
  }
  Vec out(static_cast<Eigen::Index>(target->dim()));
  double kept = 0.0;
  for (std::size_t i = 0; i < target->dim(); ++i) {
    const cplx a = state.amplitude(target->state(i));
    out[static_cast<Eigen::Index>(i)] = a;
    kept += std::norm(a);
  }
  const double dropped = state.amplitudes().squaredNorm() - kept;
  if (dropped > tol) {
    throw SectorViolation("restrict_to: state has weight " + std::to_string(dropped) +
                          " outside the target basis");
  }
  return PureState(target, std::move(out));
}

PureState embed(const PureState& state, const BasisPtr& target) {
  if (state.basis()->num_qubits() != target->num_qubits()) {
    throw BasisMismatch("embed: register widths differ");
  }
  Vec out = Vec::Zero(static_cast<Eigen::Index>(target->dim()));
  const auto& src = *state.basis();
  for (std::size_t i = 0; i < src.dim(); ++i) {
    auto j = target->index_of(src.state(i));
    if (!j) throw SectorViolation("embed: target basis does not contain the source basis");
    out[static_cast<Eigen::Index>(*j)] = state.amplitudes()[static_cast<Eigen::Index>(i)];
  }
  return PureState(target, std::move(out));
}

}  // namespace tfdotoc

namespace tfdotoc {

namespace {

// Sector shared by every populated state, or nullopt when mixed.
std::optional<int> common_sector(const std::vector<std::pair<Bits, cplx>>& terms, int num_qubits) {
  std::optional<int> sector;
  for (const auto& [bits, amp] : terms) {
    if (amp == cplx{}) continue;
    const int m = magnetization(bits, num_qubits);
    if (sector && *sector != m) return std::nullopt;
    sector = m;
  }
  return sector ? sector : std::optional<int>(num_qubits % 2);
}

PureState assemble(const std::vector<std::pair<Bits, cplx>>& terms, int num_qubits) {
  auto basis = enumerate_sector(num_qubits, common_sector(terms, num_qubits));
  Vec out = Vec::Zero(static_cast<Eigen::Index>(basis->dim()));
  for (const auto& [bits, amp] : terms) {
    if (amp == cplx{}) continue;
    out[static_cast<Eigen::Index>(*basis->index_of(bits))] += amp;
  }
  return PureState(basis, std::move(out));
}

}  // namespace

PureState apply_widening(const PauliString& p, const PureState& state) {
  const auto& basis = *state.basis();
  if (p.max_site() >= basis.num_qubits()) {
    throw ValidationError("Pauli string " + p.to_string() + " does not fit the register");
  }
  std::vector<std::pair<Bits, cplx>> terms;
  terms.reserve(basis.dim());
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    auto [image, amp] = p.act(basis.state(k));
    terms.emplace_back(image, amp * state.amplitudes()[static_cast<Eigen::Index>(k)]);
  }
  return assemble(terms, basis.num_qubits());
}

PureState compact(const PureState& state) {
  const auto& basis = *state.basis();
  if (basis.sector()) return state;
  std::vector<std::pair<Bits, cplx>> terms;
  terms.reserve(basis.dim());
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    terms.emplace_back(basis.state(k), state.amplitudes()[static_cast<Eigen::Index>(k)]);
  }
  if (!common_sector(terms, basis.num_qubits())) return state;
  return assemble(terms, basis.num_qubits());
}

}  // namespace tfdotoc
