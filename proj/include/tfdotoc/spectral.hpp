#pragma once

#include "tfdotoc/hilbert.hpp"
#include "tfdotoc/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tfdotoc {

inline constexpr std::size_t kMaxDenseDim = 4096;

/// Complete eigensystem, energies ascending, eigenvectors as columns.
struct Spectrum {
  std::vector<double> energies;
  DenseMatrix vectors;
  BasisPtr basis;

  std::size_t size() const noexcept { return energies.size(); }
  bool complete() const noexcept { return basis && energies.size() == basis->dim(); }
  PureState eigenstate(std::size_t i) const;
};

/// Dense Hermitian diagonalization; refuses dimensions above kMaxDenseDim.
Spectrum full_spectrum(const SparseOperator& H);

struct LanczosOptions {
  double tol = 1e-9;
  /// Krylov basis size before a thick restart; 0 picks one from the memory
  /// budget.
  std::size_t max_basis = 0;
  /// 0 means 10 * sqrt(dim) + 500.
  std::size_t max_matvecs = 0;
  std::uint64_t seed = 0x6a09e667f3bcc909ULL;
};

struct GroundResult {
  double energy = 0.0;
  PureState state;
  /// E_1 - E_0 within the operator's basis.
  double gap = 0.0;
  std::vector<double> energies;
  std::vector<PureState> states;
  std::vector<double> residuals;
  std::size_t matvecs = 0;
};

/// Lowest k eigenpairs of a Hermitian operator by block Lanczos with full
/// reorthogonalization and thick restarts. Converged when every residual
/// ||H v - E v|| < tol. Throws ConvergenceError past the matvec cap.
GroundResult ground_state(const SparseOperator& H, int k = 2, const LanczosOptions& options = {});

/// Rotates the first amplitude with |a| > 1e-8 onto the positive real axis.
void fix_phase(Vec& v);

enum class GapConvention { sector, absolute };

struct GapPoint {
  double lambda = 0.0;
  double gap = 0.0;
  double ground_energy = 0.0;
};

/// Gap of H_parent(lambda) per lambda. `sector` works in total S^z = 0;
/// `absolute` scans every sector and merges.
std::vector<GapPoint> gap_curve(const ChainSpec& spec, std::span<const double> lambdas,
                                GapConvention convention = GapConvention::sector,
                                unsigned threads = 0);

}  // namespace tfdotoc
