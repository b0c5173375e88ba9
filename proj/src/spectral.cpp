#include "tfdotoc/spectral.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace tfdotoc {

PureState Spectrum::eigenstate(std::size_t i) const {
  return PureState(basis, vectors.col(static_cast<Eigen::Index>(i)));
}

Spectrum full_spectrum(const SparseOperator& H) {
  if (H.dim() > kMaxDenseDim) {
    throw DimensionTooLarge("dense diagonalization limited to dimension " +
                            std::to_string(kMaxDenseDim) + " (got " + std::to_string(H.dim()) +
                            "); use ground_state for the iterative path");
  }
  require_same_basis(*H.domain(), *H.codomain(), "full_spectrum");
  DenseMatrix dense = H.to_dense();
  dense = 0.5 * (dense + dense.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(dense);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", NAN);
  Spectrum s;
  s.basis = H.basis();
  s.energies.assign(solver.eigenvalues().data(),
                    solver.eigenvalues().data() + solver.eigenvalues().size());
  s.vectors = solver.eigenvectors();
  return s;
}

void fix_phase(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > 1e-8) {
      v *= std::conj(v[i]) / mag;
      v[i] = cplx(mag, 0.0);
      return;
    }
  }
}

namespace {

class BlockKrylov {
 public:
  BlockKrylov(const SparseOperator& H, std::size_t max_basis)
      : H_(H),
        dim_(static_cast<Eigen::Index>(H.dim())),
        V_(dim_, static_cast<Eigen::Index>(max_basis)),
        HV_(dim_, static_cast<Eigen::Index>(max_basis)),
        T_(DenseMatrix::Zero(static_cast<Eigen::Index>(max_basis),
                             static_cast<Eigen::Index>(max_basis))) {}

  Eigen::Index cols() const { return cols_; }
  Eigen::Index capacity() const { return V_.cols(); }
  std::size_t matvecs() const { return matvecs_; }

  /// Orthogonalize against the basis (two Gram-Schmidt passes) and append.
  bool append(Vec w) {
    if (cols_ == capacity() || cols_ == dim_) return false;
    const double original = w.norm();
    if (original == 0.0) return false;
    for (int pass = 0; pass < 2 && cols_ > 0; ++pass) {
      const auto basis = V_.leftCols(cols_);
      w -= basis * (basis.adjoint() * w);
    }
    const double norm = w.norm();
    if (norm < 1e-10 * original) return false;
    const Eigen::Index c = cols_;
    V_.col(c) = w / norm;
    HV_.col(c) = H_.apply(V_.col(c));
    ++matvecs_;
    T_.col(c).head(c + 1) = V_.leftCols(c + 1).adjoint() * HV_.col(c);
    T_.row(c).head(c) = T_.col(c).head(c).adjoint();
    T_(c, c) = T_(c, c).real();
    ++cols_;
    return true;
  }

  Vec expansion_source(Eigen::Index i) const { return HV_.col(i); }

  struct Ritz {
    Eigen::VectorXd values;
    DenseMatrix vectors;  // in the Krylov coordinates
  };

  Ritz rayleigh_ritz() const {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(T_.topLeftCorner(cols_, cols_));
    return {solver.eigenvalues(), solver.eigenvectors()};
  }

  Vec lift(const Vec& y) const { return V_.leftCols(cols_) * y; }

  Vec residual(const Ritz& ritz, Eigen::Index i) const {
    const Vec y = ritz.vectors.col(i);
    return HV_.leftCols(cols_) * y - ritz.values[i] * (V_.leftCols(cols_) * y);
  }

  /// Keep the lowest `keep` Ritz vectors as the new basis.
  void restart(const Ritz& ritz, Eigen::Index keep) {
    const DenseMatrix Y = ritz.vectors.leftCols(keep);
    const DenseMatrix newV = V_.leftCols(cols_) * Y;
    const DenseMatrix newHV = HV_.leftCols(cols_) * Y;
    V_.leftCols(keep) = newV;
    HV_.leftCols(keep) = newHV;
    T_.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) T_(i, i) = ritz.values[i];
    cols_ = keep;
  }

 private:
  const SparseOperator& H_;
  Eigen::Index dim_;
  DenseMatrix V_;
  DenseMatrix HV_;
  DenseMatrix T_;
  Eigen::Index cols_ = 0;
  std::size_t matvecs_ = 0;
};

Vec random_vector(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = cplx(normal(rng), normal(rng));
  return v;
}

}  // namespace

GroundResult ground_state(const SparseOperator& H, int k, const LanczosOptions& options) {
  require_same_basis(*H.domain(), *H.codomain(), "ground_state");
  const std::size_t dim = H.dim();
  if (k < 1 || static_cast<std::size_t>(k) > dim) {
    throw ValidationError("ground_state: k must lie in [1, dim]");
  }
  const std::size_t cap = options.max_matvecs
                              ? options.max_matvecs
                              : static_cast<std::size_t>(10.0 * std::sqrt(double(dim)) + 500.0);
  std::size_t max_basis = options.max_basis;
  if (max_basis == 0) {
    constexpr double kBudgetBytes = 6e8;
    const auto by_memory = static_cast<std::size_t>(kBudgetBytes / (32.0 * double(dim)));
    max_basis = std::clamp<std::size_t>(by_memory, 4 * k + 8, 80);
  }
  max_basis = std::min(max_basis, dim);
  max_basis = std::max<std::size_t>(max_basis, std::min<std::size_t>(dim, 3 * k));

  BlockKrylov krylov(H, max_basis);
  std::mt19937_64 rng(options.seed);
  for (int i = 0; i < k; ++i) {
    while (!krylov.append(random_vector(static_cast<Eigen::Index>(dim), rng))) {
      if (krylov.cols() == static_cast<Eigen::Index>(dim)) break;
    }
  }

  const Eigen::Index kk = k;
  Eigen::Index source = 0;
  double best = INFINITY;
  for (;;) {
    const bool full = krylov.cols() == krylov.capacity();
    const bool exhausted = krylov.cols() == static_cast<Eigen::Index>(dim);
    const bool checkpoint = (krylov.cols() - kk) % kk == 0;
    if (full || exhausted || checkpoint) {
      auto ritz = krylov.rayleigh_ritz();
      std::vector<double> residuals(static_cast<std::size_t>(k));
      double worst = 0.0;
      for (Eigen::Index i = 0; i < kk; ++i) {
        residuals[static_cast<std::size_t>(i)] = krylov.residual(ritz, i).norm();
        worst = std::max(worst, residuals[static_cast<std::size_t>(i)]);
      }
      best = std::min(best, worst);
      if (worst < options.tol || exhausted) {
        if (worst >= options.tol && exhausted && worst > 1e-6) {
          throw ConvergenceError("ground_state: Krylov space exhausted without convergence", worst);
        }
        std::vector<PureState> states;
        std::vector<double> energies;
        for (Eigen::Index i = 0; i < kk; ++i) {
          Vec v = krylov.lift(ritz.vectors.col(i));
          v.normalize();
          fix_phase(v);
          states.emplace_back(H.basis(), std::move(v));
          energies.push_back(ritz.values[i]);
        }
        const double gap = k >= 2 ? std::max(0.0, energies[1] - energies[0]) : 0.0;
        return GroundResult{energies[0], states[0], gap, std::move(energies), std::move(states),
                            std::move(residuals), krylov.matvecs()};
      }
      if (krylov.matvecs() >= cap) {
        throw ConvergenceError("ground_state: no convergence after " +
                                   std::to_string(krylov.matvecs()) + " matvecs (best residual " +
                                   std::to_string(best) + ")",
                               best);
      }
      if (full) {
        const Eigen::Index keep =
            std::max<Eigen::Index>(kk, std::min<Eigen::Index>(krylov.capacity() / 3,
                                                              krylov.capacity() - 2 * kk));
        std::vector<Vec> residual_block;
        for (Eigen::Index i = 0; i < kk; ++i) residual_block.push_back(krylov.residual(ritz, i));
        krylov.restart(ritz, keep);
        source = keep;
        for (auto& r : residual_block) {
          if (!krylov.append(std::move(r))) {
            krylov.append(random_vector(static_cast<Eigen::Index>(dim), rng));
          }
        }
        continue;
      }
    }
    if (source >= krylov.cols()) source = krylov.cols() - 1;
    if (!krylov.append(krylov.expansion_source(source++))) {
      krylov.append(random_vector(static_cast<Eigen::Index>(dim), rng));
    }
  }
}

std::vector<GapPoint> gap_curve(const ChainSpec& spec, std::span<const double> lambdas,
                                GapConvention convention, unsigned threads) {
  spec.validate();
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("gap_curve: lambda must be finite and >= 0");
  }
  const int width = 2 * spec.n;
  std::vector<GapPoint> out(lambdas.size());
  parallel_for(lambdas.size(), threads, [&](std::size_t idx) {
    const LadderSpec ladder{spec, lambdas[idx]};
    if (convention == GapConvention::sector) {
      auto basis = enumerate_sector(width, 0);
      const auto h = build_parent_hamiltonian(ladder, basis);
      const auto g = ground_state(h.op, 2);
      out[idx] = {lambdas[idx], g.gap, g.energy};
      return;
    }
    std::vector<double> lowest;
    for (int m = -width; m <= width; m += 2) {
      auto basis = enumerate_sector(width, m);
      const auto h = build_parent_hamiltonian(ladder, basis);
      const int k = basis->dim() >= 2 ? 2 : 1;
      const auto g = ground_state(h.op, k);
      lowest.insert(lowest.end(), g.energies.begin(), g.energies.end());
    }
    std::sort(lowest.begin(), lowest.end());
    out[idx] = {lambdas[idx], lowest[1] - lowest[0], lowest[0]};
  });
  return out;
}

}  // namespace tfdotoc
