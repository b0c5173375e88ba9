#include "tfdotoc/dynamics.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace tfdotoc {

namespace {

// Lanczos basis for exp(-i H h) v. Grows one vector at a time so the caller
// can stop as soon as the error estimate allows.
class LanczosBasis {
 public:
  LanczosBasis(const SparseOperator& H, const Vec& v, int max_dim)
      : H_(H), V_(v.size(), max_dim), beta0_(v.norm()) {
    V_.col(0) = v / beta0_;
  }

  int size() const noexcept { return size_; }
  bool exhausted() const noexcept { return breakdown_; }
  double beta0() const noexcept { return beta0_; }

  /// Adds H v_{size-1}, orthogonalized, and updates the tridiagonal matrix.
  void extend() {
    const int j = size_ - 1;
    Vec u = H_.apply(V_.col(j));
    ++matvecs_;
    alpha_.push_back(V_.col(j).dot(u).real());
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass) {
      const auto basis = V_.leftCols(size_);
      u -= basis * (basis.adjoint() * u);
    }
    const double b = u.norm();
    beta_.push_back(b);
    if (b <= 1e-13 * std::max(1.0, std::abs(alpha_.back()))) {
      breakdown_ = true;
      return;
    }
    if (size_ < V_.cols()) {
      V_.col(size_) = u / b;
      ++size_;
    } else {
      full_ = true;
    }
  }

  bool full() const noexcept { return full_; }
  std::size_t matvecs() const noexcept { return matvecs_; }

  /// Diagonalizes the leading m x m tridiagonal block.
  void decompose(int m) {
    const Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha_.data(), m);
    const Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(beta_.data(), m - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    theta_ = solver.eigenvalues();
    Q_ = solver.eigenvectors();
    m_ = m;
  }

  /// exp(-i T h) e_1 in Krylov coordinates.
  Vec coefficients(double h) const {
    Vec c = Vec::Zero(m_);
    for (int k = 0; k < m_; ++k) {
      const cplx phase = std::exp(cplx(0.0, -h * theta_[k]));
      c += (phase * Q_(0, k)) * Q_.col(k).cast<cplx>();
    }
    return c;
  }

  /// Standard a-posteriori estimate beta0 * beta_m * |e_m^T exp(-i T h) e_1|.
  double error_estimate(double h) const {
    if (breakdown_ && m_ == int(alpha_.size())) return 0.0;
    return beta0_ * beta_[std::size_t(m_ - 1)] * std::abs(coefficients(h)[m_ - 1]);
  }

  Vec lift(const Vec& c) const { return beta0_ * (V_.leftCols(m_) * c); }

  /// Number of tridiagonal columns available.
  int tridiagonal_size() const noexcept { return int(alpha_.size()); }

 private:
  const SparseOperator& H_;
  DenseMatrix V_;
  double beta0_;
  int size_ = 1;
  bool breakdown_ = false;
  bool full_ = false;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::size_t matvecs_ = 0;
  Eigen::VectorXd theta_;
  Eigen::MatrixXd Q_;
  int m_ = 0;
};

void require_register(const PureState& state, const SparseOperator& generator) {
  require_same_basis(*state.basis(), *generator.domain(), "evolution");
  require_same_basis(*generator.domain(), *generator.codomain(), "evolution");
}

}  // namespace

Vec expm_krylov(const SparseOperator& H, const Vec& v, double t, const KrylovOptions& options,
                KrylovStats* stats) {
  if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
  if (options.max_dim < 2) throw ValidationError("Krylov dimension must be >= 2");
  Vec w = v;
  double done = 0.0;
  KrylovStats local;
  while (done < t && w.norm() > 0.0) {
    const double target = t - done;
    LanczosBasis lanczos(H, w, options.max_dim);
    double h = target;
    bool accepted = false;
    // Grow the basis until the whole remaining interval is within tolerance.
    while (!accepted) {
      lanczos.extend();
      const int m = lanczos.tridiagonal_size();
      lanczos.decompose(m);
      if (lanczos.exhausted() || lanczos.error_estimate(h) <= options.tol) {
        accepted = true;
      } else if (lanczos.full()) {
        break;
      }
    }
    // Out of basis: shrink the step until the estimate passes.
    while (!accepted) {
      const double err = lanczos.error_estimate(h);
      if (err <= options.tol) {
        accepted = true;
        break;
      }
      ++local.rejected;
      const double m = double(lanczos.tridiagonal_size());
      h *= std::clamp(0.9 * std::pow(options.tol / err, 1.0 / m), 0.1, 0.9);
      if (h < options.min_step) {
        throw ConvergenceError("Krylov step underflow at t = " + std::to_string(done), err);
      }
    }
    w = lanczos.lift(lanczos.coefficients(h));
    done = h == target ? t : done + h;
    local.matvecs += lanczos.matvecs();
    ++local.steps;
  }
  if (stats) {
    stats->matvecs += local.matvecs;
    stats->steps += local.steps;
    stats->rejected += local.rejected;
  }
  return w;
}

PureState evolve_ideal(const PureState& state, const SparseOperator& generator, double t,
                       const KrylovOptions& options) {
  require_register(state, generator);
  return PureState(state.basis(), expm_krylov(generator, state.amplitudes(), t, options));
}

namespace {

void guard_particle_hole(const LegOperators& legs, const SparseOperator& R2) {
  const double residual = particle_hole_residual(legs.H2, R2);
  if (residual > 1e-12) {
    throw SymmetryViolation("R conjugation requires R^dag H R = -H^*; residual " +
                            std::to_string(residual));
  }
}

}  // namespace

PureState evolve_via_R(const PureState& state, const LegOperators& legs, const SparseOperator& R2,
                       double t, const KrylovOptions& options) {
  guard_particle_hole(legs, R2);
  const auto forward = legs.forward_generator();
  require_register(state, forward);
  Vec v = R2.apply(state.amplitudes());
  v = expm_krylov(forward, v, t, options);
  return PureState(state.basis(), R2.adjoint().apply(v));
}

std::string to_string(EvolutionKind kind) {
  switch (kind) {
    case EvolutionKind::ideal_direct: return "ideal_direct";
    case EvolutionKind::ideal_via_R: return "ideal_via_R";
    case EvolutionKind::collective_dephasing: return "collective_dephasing";
    case EvolutionKind::depolarization: return "depolarization";
    case EvolutionKind::local_dephasing: return "local_dephasing";
    case EvolutionKind::remnant_coupling: return "remnant_coupling";
    case EvolutionKind::asymmetric_legs: return "asymmetric_legs";
  }
  return "unknown";
}

EvolutionKind parse_evolution_kind(const std::string& name) {
  for (auto kind : {EvolutionKind::ideal_direct, EvolutionKind::ideal_via_R,
                    EvolutionKind::collective_dephasing, EvolutionKind::depolarization,
                    EvolutionKind::local_dephasing, EvolutionKind::remnant_coupling,
                    EvolutionKind::asymmetric_legs}) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "ideal") return EvolutionKind::ideal_direct;
  throw ValidationError("unknown evolution kind '" + name + "'");
}

void EvolutionSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be finite and >= 0");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
  if (kind == EvolutionKind::local_dephasing && trajectories < 1) {
    throw ValidationError("local dephasing needs at least one trajectory");
  }
}

namespace {

double dephased_expectation(const DephasedState& s, const PauliString& p) {
  const auto& basis = *s.state.basis();
  const int width = basis.num_qubits();
  const Vec& psi = s.state.amplitudes();
  cplx acc{};
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const cplx a = psi[Eigen::Index(k)];
    if (a == cplx{}) continue;
    auto [image, amp] = p.act(basis.state(k));
    auto j = basis.index_of(image);
    if (!j) continue;
    const double dm = magnetization(image, width) - magnetization(basis.state(k), width);
    acc += std::conj(psi[Eigen::Index(*j)]) * amp * a * std::exp(-0.5 * s.exposure * dm * dm);
  }
  return acc.real();
}

}  // namespace

double expectation(const PropagatedState& state, const PauliString& p) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PureState>) {
          return expectation(p, s).real();
        } else if constexpr (std::is_same_v<T, DepolarizedState>) {
          const double mixed = p.is_identity() ? p.phase().real() : 0.0;
          return s.decay * expectation(p, s.state).real() + s.mixed_fraction() * mixed;
        } else if constexpr (std::is_same_v<T, DephasedState>) {
          return dephased_expectation(s, p);
        } else {
          double acc = 0.0;
          for (std::size_t i = 0; i < s.members.size(); ++i) {
            acc += s.weights[i] * expectation(p, s.members[i]).real();
          }
          return acc;
        }
      },
      state);
}

DepolarizedState evolve_depolarization(const PureState& state, const SparseOperator& generator,
                                       double t, double gamma, const KrylovOptions& options) {
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  return {evolve_ideal(state, generator, t, options), std::exp(-gamma * t)};
}

DephasedState evolve_collective_dephasing(const PureState& state, const SparseOperator& generator,
                                          double t, double gamma, const KrylovOptions& options) {
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  return {evolve_ideal(state, generator, t, options), gamma * t};
}

namespace {

// One trajectory of the local-dephasing unravelling. Each sigma^z_i jump is
// unitary, so the no-jump evolution is the ideal one and the total jump
// rate is width * gamma regardless of the state.
class DephasingTrajectory {
 public:
  DephasingTrajectory(const SparseOperator& generator, const PureState& start, double gamma,
                      std::mt19937_64 rng, const KrylovOptions& options)
      : generator_(generator),
        psi_(start.amplitudes()),
        basis_(start.basis()),
        width_(start.basis()->num_qubits()),
        rate_(gamma * width_),
        rng_(std::move(rng)),
        options_(options) {
    draw_next_jump();
  }

  void advance_to(double t) {
    while (next_jump_ <= t) {
      psi_ = expm_krylov(generator_, psi_, next_jump_ - now_, options_);
      now_ = next_jump_;
      jump();
      draw_next_jump();
    }
    psi_ = expm_krylov(generator_, psi_, t - now_, options_);
    now_ = t;
  }

  PureState state() const { return PureState(basis_, psi_); }

 private:
  void draw_next_jump() {
    if (rate_ <= 0.0) {
      next_jump_ = INFINITY;
      return;
    }
    std::exponential_distribution<double> wait(rate_);
    next_jump_ = now_ + wait(rng_);
  }

  void jump() {
    std::uniform_int_distribution<int> site(0, width_ - 1);
    const Bits bit = Bits{1} << site(rng_);
    for (std::size_t k = 0; k < basis_->dim(); ++k) {
      if (!(basis_->state(k) & bit)) psi_[Eigen::Index(k)] = -psi_[Eigen::Index(k)];
    }
  }

  const SparseOperator& generator_;
  Vec psi_;
  BasisPtr basis_;
  int width_;
  double rate_;
  std::mt19937_64 rng_;
  KrylovOptions options_;
  double now_ = 0.0;
  double next_jump_ = INFINITY;
};

}  // namespace

TrajectoryEnsemble evolve_local_dephasing(const PureState& state, const SparseOperator& generator,
                                          double t, double gamma, const EvolutionSpec& spec,
                                          unsigned threads, const KrylovOptions& options) {
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
  require_register(state, generator);
  const int count = gamma > 0.0 ? spec.trajectories : 1;
  if (count < 1) throw ValidationError("local dephasing needs at least one trajectory");
  std::vector<std::optional<PureState>> out(static_cast<std::size_t>(count));
  parallel_for(std::size_t(count), threads, [&](std::size_t i) {
    DephasingTrajectory traj(generator, state, gamma, make_stream(spec.seed, i), options);
    traj.advance_to(t);
    out[i] = traj.state();
  });
  TrajectoryEnsemble ensemble;
  for (auto& s : out) ensemble.members.push_back(std::move(*s));
  ensemble.weights.assign(std::size_t(count), 1.0 / count);
  return ensemble;
}

SparseOperator imperfect_generator(const LegOperators& legs, const EvolutionSpec& spec) {
  switch (spec.kind) {
    case EvolutionKind::remnant_coupling:
      return legs.ideal_generator() + legs.H12.scaled(spec.epsilon);
    case EvolutionKind::asymmetric_legs:
      return legs.H1.scaled(1.0 - spec.epsilon) - legs.H2.conjugate().scaled(1.0 + spec.epsilon);
    default:
      return legs.ideal_generator();
  }
}

PureState evolve_imperfect(const PureState& state, const LegOperators& legs, const EvolutionSpec& spec,
                           double t, const KrylovOptions& options) {
  if (spec.kind != EvolutionKind::remnant_coupling && spec.kind != EvolutionKind::asymmetric_legs) {
    throw ValidationError("evolve_imperfect handles remnant_coupling and asymmetric_legs only");
  }
  spec.validate();
  return evolve_ideal(state, imperfect_generator(legs, spec), t, options);
}

ExpectationSeries evolve_expectations(const PureState& initial, const ChainSpec& chain,
                                      const EvolutionSpec& spec, std::span<const double> times,
                                      std::span<const PauliString> observables, unsigned threads,
                                      const KrylovOptions& options) {
  spec.validate();
  chain.validate();
  if (initial.basis()->num_qubits() != 2 * chain.n) {
    throw BasisMismatch("evolve_expectations: state is not on the 2n-qubit ladder register");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || (i > 0 && times[i] < times[i - 1])) {
      throw ValidationError("time grid must be non-negative and sorted");
    }
  }
  const PureState state = compact(initial);
  const LegOperators legs = build_leg_operators(chain, state.basis());

  ExpectationSeries out;
  out.times.assign(times.begin(), times.end());
  const std::size_t nt = times.size();
  const std::size_t nk = observables.size();
  out.mean.assign(nt, std::vector<double>(nk, 0.0));
  out.trajectory_se.assign(nt, std::vector<double>(nk, 0.0));

  if (spec.stochastic()) {
    const SparseOperator generator = legs.ideal_generator();
    const auto count = std::size_t(spec.trajectories);
    // samples[traj][t * nk + k], reduced in trajectory order for determinism.
    std::vector<std::vector<double>> samples(count);
    parallel_for(count, threads, [&](std::size_t i) {
      DephasingTrajectory traj(generator, state, spec.gamma, make_stream(spec.seed, i), options);
      auto& row = samples[i];
      row.resize(nt * nk);
      for (std::size_t ti = 0; ti < nt; ++ti) {
        traj.advance_to(times[ti]);
        const PureState psi = traj.state();
        for (std::size_t k = 0; k < nk; ++k) row[ti * nk + k] = expectation(observables[k], psi).real();
      }
    });
    out.trajectories = spec.trajectories;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      for (std::size_t k = 0; k < nk; ++k) {
        double sum = 0.0, sq = 0.0;
        for (const auto& row : samples) {
          sum += row[ti * nk + k];
          sq += row[ti * nk + k] * row[ti * nk + k];
        }
        const double mean = sum / double(count);
        out.mean[ti][k] = mean;
        if (count > 1) {
          const double var = std::max(0.0, (sq - double(count) * mean * mean) / double(count - 1));
          out.trajectory_se[ti][k] = std::sqrt(var / double(count));
        }
      }
    }
    return out;
  }

  const bool via_R = spec.kind == EvolutionKind::ideal_via_R;
  std::optional<SparseOperator> R2;
  SparseOperator generator = via_R ? legs.forward_generator() : imperfect_generator(legs, spec);
  Vec psi = state.amplitudes();
  if (via_R) {
    R2 = build_R(chain.n, Leg::second, state.basis());
    guard_particle_hole(legs, *R2);
    psi = R2->apply(psi);
  }
  double now = 0.0;
  for (std::size_t ti = 0; ti < nt; ++ti) {
    psi = expm_krylov(generator, psi, times[ti] - now, options);
    now = times[ti];
    PureState current(state.basis(), via_R ? R2->adjoint().apply(psi) : psi);
    PropagatedState wrapped = current;
    if (spec.kind == EvolutionKind::depolarization) {
      wrapped = DepolarizedState{current, std::exp(-spec.gamma * now)};
    } else if (spec.kind == EvolutionKind::collective_dephasing) {
      wrapped = DephasedState{current, spec.gamma * now};
    }
    for (std::size_t k = 0; k < nk; ++k) out.mean[ti][k] = expectation(wrapped, observables[k]);
  }
  return out;
}

OutcomeDistribution outcome_distribution(double a, double b, double ab) {
  OutcomeDistribution p{(1 + a + b + ab) / 4, (1 + a - b - ab) / 4, (1 - a + b - ab) / 4,
                        (1 - a - b + ab) / 4};
  // Clip round-off so the entries remain a probability vector.
  double total = 0.0;
  for (double& v : p) {
    v = std::max(0.0, v);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

double correlator(const OutcomeDistribution& p) { return p[0] - p[1] - p[2] + p[3]; }

OutcomeDistribution apply_readout_error(const OutcomeDistribution& p, double x) {
  if (!(x >= 0.0 && x <= 0.5)) throw ValidationError("readout error must lie in [0, 1/2]");
  const double stay = (1 - x) * (1 - x), single = x * (1 - x), both = x * x;
  // Index bit 1 is the first outcome, bit 0 the second; flipping one bit is XOR.
  OutcomeDistribution out{};
  for (int i = 0; i < 4; ++i) {
    out[std::size_t(i)] = stay * p[std::size_t(i)] + single * (p[std::size_t(i ^ 1)] + p[std::size_t(i ^ 2)]) +
                          both * p[std::size_t(i ^ 3)];
  }
  return out;
}

}  // namespace tfdotoc
