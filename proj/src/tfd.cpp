#include "tfdotoc/tfd.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tfdotoc {

namespace {

// Energies within this window of E_0 count as ground manifold at beta = inf.
constexpr double kDegeneracyTol = 1e-9;

int chain_length(const Spectrum& chain) {
  if (!chain.complete()) throw ValidationError("thermofield double needs a complete spectrum");
  if (chain.basis->sector()) throw ValidationError("thermofield double needs a full chain basis");
  return chain.basis->num_qubits();
}

}  // namespace

std::vector<double> half_boltzmann_weights(std::span<const double> energies, double beta,
                                           double* log_z) {
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  const double e0 = *std::min_element(energies.begin(), energies.end());
  std::vector<double> w(energies.size());
  double z_shifted = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double de = energies[i] - e0;
    if (beta == kInfiniteBeta) {
      w[i] = de < kDegeneracyTol ? 1.0 : 0.0;
    } else {
      w[i] = std::exp(-0.5 * beta * de);
    }
    z_shifted += w[i] * w[i];
  }
  // At beta = inf the shifted partition function is the ground degeneracy.
  if (log_z) *log_z = std::log(z_shifted) - (beta == kInfiniteBeta ? 0.0 : beta * e0);
  return w;
}

TfdResult build_tfd(const Spectrum& chain, double beta) {
  const int n = chain_length(chain);
  double log_z = 0.0;
  const auto w = half_boltzmann_weights(chain.energies, beta, &log_z);
  // Amplitude on |a>|b> is sum_E w_E E_a conj(E_b), i.e. (V diag(w) V^dag)_{ab}.
  const Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));
  const DenseMatrix amp = chain.vectors * weights.asDiagonal() * chain.vectors.adjoint();
  const Eigen::Index d = amp.rows();
  auto basis = enumerate_sector(2 * n);
  Vec v(d * d);
  for (Eigen::Index b = 0; b < d; ++b) {
    for (Eigen::Index a = 0; a < d; ++a) v[a + (b << n)] = amp(a, b);
  }
  v /= v.norm();
  return {beta, log_z, PureState(basis, std::move(v))};
}

PureState build_phi(const TfdResult& tfd, const SparseOperator& U0) {
  return apply(U0, tfd.state);
}

double fidelity(const PureState& g, const PureState& phi) { return std::norm(inner(g, phi)); }

FidelityProfile::FidelityProfile(const Spectrum& chain, const PureState& ground)
    : energies_(chain.energies) {
  const int n = chain_length(chain);
  const auto& basis = *ground.basis();
  if (basis.num_qubits() != 2 * n) throw BasisMismatch("fidelity profile: ground state width != 2n");
  const Eigen::Index d = Eigen::Index{1} << n;
  const Bits leg_mask = (Bits{1} << n) - 1;
  DenseMatrix g_conj = DenseMatrix::Zero(d, d);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const Bits s = basis.state(i);
    g_conj(Eigen::Index(s & leg_mask), Eigen::Index(s >> n)) =
        std::conj(ground.amplitudes()[Eigen::Index(i)]);
  }
  // (U_0 V)[a, E] from the Pauli action of U_0 on each leg-1 basis state.
  const PauliString u0 = U0_string(n);
  DenseMatrix u0_v(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    auto [image, amp] = u0.act(Bits(a));
    u0_v.row(Eigen::Index(image)) = amp * chain.vectors.row(a);
  }
  const DenseMatrix m = g_conj * chain.vectors.conjugate();
  overlaps_.resize(std::size_t(d));
  for (Eigen::Index e = 0; e < d; ++e) {
    overlaps_[std::size_t(e)] = (u0_v.col(e).array() * m.col(e).array()).sum();
  }
}

double FidelityProfile::operator()(double beta) const {
  const auto w = half_boltzmann_weights(energies_, beta);
  cplx acc{};
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i] * overlaps_[i];
    z += w[i] * w[i];
  }
  return std::norm(acc) / z;
}

FidelityResult optimize_beta(const FidelityProfile& profile, double lambda,
                             const ScanOptions& options) {
  if (options.points < 3 || !(options.beta_min > 0.0) || !(options.beta_max > options.beta_min)) {
    throw ValidationError("optimize_beta: bad scan options");
  }
  const int points = options.points;
  const double log_lo = std::log(options.beta_min);
  const double log_hi = std::log(options.beta_max);
  const double step = (log_hi - log_lo) / (points - 1);

  FidelityResult result;
  result.lambda = lambda;
  result.scan.resize(std::size_t(points));
  parallel_for(std::size_t(points), options.threads, [&](std::size_t i) {
    const double beta = std::exp(log_lo + step * double(i));
    result.scan[i] = {beta, profile(beta)};
  });

  constexpr double kPeakTol = 1e-9;
  std::size_t best = 0;
  for (std::size_t i = 0; i < result.scan.size(); ++i) {
    const double f = result.scan[i].second;
    if (f > result.scan[best].second) best = i;
    const bool above_left = i == 0 || f > result.scan[i - 1].second + kPeakTol;
    const bool above_right = i + 1 == result.scan.size() || f > result.scan[i + 1].second + kPeakTol;
    if (above_left && above_right) result.maxima.push_back(result.scan[i]);
  }
  result.multimodal = result.maxima.size() > 1;

  // Golden-section refinement in log(beta) between the grid neighbours.
  double a = log_lo + step * double(best == 0 ? 0 : best - 1);
  double b = log_lo + step * double(std::min<std::size_t>(best + 1, std::size_t(points - 1)));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = profile(std::exp(c));
  double fd = profile(std::exp(d));
  while (b - a > options.rel_tol * 0.5) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile(std::exp(d));
    }
  }
  const double beta_ref = std::exp(0.5 * (a + b));
  const double f_ref = profile(beta_ref);
  if (f_ref >= result.scan[best].second) {
    result.beta0 = beta_ref;
    result.F = f_ref;
  } else {
    result.beta0 = result.scan[best].first;
    result.F = result.scan[best].second;
  }
  result.T0 = 1.0 / result.beta0;
  return result;
}

FidelityResult optimize_beta(const LadderSpec& spec, const ScanOptions& options) {
  spec.validate();
  if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) {
    throw ValidationError("optimize_beta needs a finite positive lambda; the limits are exact");
  }
  const Spectrum chain = full_spectrum(build_chain_hamiltonian(spec.chain, enumerate_sector(spec.chain.n)));
  auto sector = enumerate_sector(2 * spec.chain.n, 0);
  const auto ground = ground_state(build_parent_hamiltonian(spec, sector).op, 2);
  return optimize_beta(FidelityProfile(chain, ground.state), spec.lambda, options);
}

T0Fit extrapolate_T0(std::span<const std::pair<int, double>> points) {
  std::set<int> distinct;
  for (const auto& [n, t0] : points) {
    if (n <= 0) throw ValidationError("extrapolate_T0: n must be positive");
    distinct.insert(n);
  }
  if (distinct.size() < 3) throw ValidationError("extrapolate_T0 needs at least 3 distinct n");
  const double m = double(points.size());
  double sx = 0, sy = 0;
  for (const auto& [n, t0] : points) {
    sx += 1.0 / n;
    sy += t0;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (const auto& [n, t0] : points) {
    const double dx = 1.0 / n - mx;
    sxx += dx * dx;
    sxy += dx * (t0 - my);
  }
  T0Fit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.t0_infinity = fit.intercept;
  if (points.size() > 2) {
    double ssr = 0;
    for (const auto& [n, t0] : points) {
      const double r = t0 - (fit.slope / n + fit.intercept);
      ssr += r * r;
    }
    const double s2 = ssr / (m - 2.0);
    fit.slope_se = std::sqrt(s2 / sxx);
    fit.intercept_se = std::sqrt(s2 * (1.0 / m + mx * mx / sxx));
  }
  return fit;
}

}  // namespace tfdotoc
