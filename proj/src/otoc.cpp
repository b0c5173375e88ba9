#include "tfdotoc/otoc.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/model.hpp"
#include "tfdotoc/parallel.hpp"
#include "tfdotoc/tfd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tfdotoc {

ObservablePair::ObservablePair(int n, std::optional<PauliFactor> W, PauliFactor V)
    : n_(n), W_(W), V_(V) {
  if (n < 1) throw ValidationError("observable pair needs n >= 1");
  auto check = [n](const PauliFactor& f, const char* which) {
    if (f.site < 0 || f.site >= n) {
      throw ValidationError(std::string(which) + " site " + std::to_string(f.site + 1) +
                            " is outside leg 1 (1.." + std::to_string(n) + ")");
    }
  };
  if (W_) check(*W_, "W");
  check(V_, "V");
}

PauliString ObservablePair::W() const { return W_ ? PauliString({*W_}) : PauliString(); }
PauliString ObservablePair::V() const { return PauliString({V_}); }
PauliString ObservablePair::measured_first() const { return V().adjoint(); }
PauliString ObservablePair::measured_second() const { return V().transpose().shifted(n_); }
PauliString ObservablePair::measured() const { return measured_first() * measured_second(); }

std::string ObservablePair::label() const {
  return format_site_operator(W_) + "," + format_site_operator(V_);
}

std::optional<PauliFactor> parse_site_operator(const std::string& text, int n) {
  if (text == "I" || text == "i") return std::nullopt;
  const auto at = text.find('@');
  if (at != 1 || text.size() < 3) {
    throw ValidationError("operator '" + text + "' must look like <axis>@<site>, e.g. Z@5");
  }
  const char axis = char(std::toupper(static_cast<unsigned char>(text[0])));
  int site = 0;
  try {
    std::size_t used = 0;
    site = std::stoi(text.substr(2), &used);
    if (used != text.size() - 2) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ValidationError("operator '" + text + "' has a malformed site");
  }
  if (site < 1 || site > n) {
    throw ValidationError("operator '" + text + "' site must lie in 1.." + std::to_string(n));
  }
  switch (axis) {
    case 'X': return PauliFactor{site - 1, Axis::X};
    case 'Y': return PauliFactor{site - 1, Axis::Y};
    case 'Z': return PauliFactor{site - 1, Axis::Z};
    case 'I': return std::nullopt;
    default: throw ValidationError("operator '" + text + "' axis must be one of X, Y, Z, I");
  }
}

std::string format_site_operator(const std::optional<PauliFactor>& f) {
  if (!f) return "I";
  return std::string(1, axis_letter(f->axis)) + "@" + std::to_string(f->site + 1);
}

std::string to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::O1: return "O1";
    case VariantKind::O2: return "O2";
    case VariantKind::O3: return "O3";
    case VariantKind::Oth: return "Oth";
  }
  return "?";
}

ThermalOtoc::ThermalOtoc(const Spectrum& chain, const ObservablePair& pair) : energies_(chain.energies) {
  if (!chain.complete() || chain.basis->sector() || chain.basis->num_qubits() != pair.n()) {
    throw ValidationError("thermal OTOC needs the complete spectrum of the n-site chain");
  }
  if (chain.size() > kMaxDenseDim) throw DimensionTooLarge("thermal OTOC limited to n <= 12");
  const auto& Q = chain.vectors;
  W_ = Q.adjoint() * pauli_string_to_operator(pair.W(), chain.basis).to_dense() * Q;
  V_ = Q.adjoint() * pauli_string_to_operator(pair.V(), chain.basis).to_dense() * Q;
}

cplx ThermalOtoc::value(double beta, double t, VariantKind kind) const {
  const double ts[] = {t};
  return series(beta, ts, kind).front();
}

std::vector<cplx> ThermalOtoc::series(double beta, std::span<const double> times, VariantKind kind) const {
  const auto w = half_boltzmann_weights(energies_, beta);
  const Eigen::Index d = Eigen::Index(w.size());
  // y = e^{-beta (H - E0) / 4} = sqrt(w); Z = sum y^4.
  Eigen::VectorXd y(d);
  double z = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    y[i] = std::sqrt(w[std::size_t(i)]);
    z += w[std::size_t(i)] * w[std::size_t(i)];
  }
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(d);
  const Eigen::VectorXd y2 = y.cwiseProduct(y);
  const Eigen::VectorXd y4 = y2.cwiseProduct(y2);
  // tr(D1 W^dag D2 V^dag(t) D3 W D4 V(t)) for each placement of the y factors.
  Eigen::VectorXd D1 = one, D2 = one, D3 = one, D4 = one;
  switch (kind) {
    case VariantKind::Oth: D1 = y2; D4 = y2; break;
    case VariantKind::O1: D1 = y2; D3 = y2; break;
    case VariantKind::O2: D1 = y4; break;
    case VariantKind::O3: D1 = D2 = D3 = D4 = y; break;
  }
  const DenseMatrix left_fixed = D1.asDiagonal() * W_.adjoint() * D2.asDiagonal();
  const DenseMatrix right_fixed = D3.asDiagonal() * W_ * D4.asDiagonal();
  std::vector<cplx> out;
  out.reserve(times.size());
  for (double t : times) {
    // V(t)_{ab} = e^{i (E_a - E_b) t} V_{ab}
    Eigen::VectorXcd phase(d);
    for (Eigen::Index a = 0; a < d; ++a) phase[a] = std::exp(cplx(0.0, energies_[std::size_t(a)] * t));
    const DenseMatrix Vt = phase.asDiagonal() * V_ * phase.conjugate().asDiagonal();
    const DenseMatrix left = left_fixed * Vt.adjoint();
    const DenseMatrix right = right_fixed * Vt;
    out.push_back(left.cwiseProduct(right.transpose()).sum() / z);
  }
  return out;
}

namespace {

double checked_real(cplx v, VariantKind kind) {
  if ((kind == VariantKind::Oth || kind == VariantKind::O3) && std::abs(v.imag()) > 1e-9) {
    throw Error(to_string(kind) + " has imaginary part " + std::to_string(v.imag()));
  }
  return v.real();
}

}  // namespace

double otoc_exact(const Spectrum& chain, const ObservablePair& pair, double beta, double t,
                  VariantKind kind) {
  return checked_real(ThermalOtoc(chain, pair).value(beta, t, kind), kind);
}

std::vector<double> otoc_exact_series(const Spectrum& chain, const ObservablePair& pair, double beta,
                                      std::span<const double> times, VariantKind kind) {
  const auto values = ThermalOtoc(chain, pair).series(beta, times, kind);
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(checked_real(v, kind));
  return out;
}

OutcomeDistribution measured_outcomes(const PropagatedState& state, const ObservablePair& pair) {
  return outcome_distribution(expectation(state, pair.measured_first()),
                              expectation(state, pair.measured_second()),
                              expectation(state, pair.measured()));
}

CircuitSeries otoc_circuit(const PureState& initial, const ObservablePair& pair, const ChainSpec& chain,
                           const EvolutionSpec& evo, std::span<const double> times, Frame frame,
                           unsigned threads) {
  if (chain.n != pair.n() || initial.basis()->num_qubits() != 2 * chain.n) {
    throw BasisMismatch("otoc_circuit: initial state must live on the 2n-qubit ladder of the pair");
  }
  const PauliString observables[] = {pair.measured_first(), pair.measured_second(), pair.measured()};
  CircuitSeries out;
  out.times.assign(times.begin(), times.end());
  out.frame_sign = frame == Frame::rotated ? u0_commutation_sign(chain.n, pair.measured()) : 1;

  auto run_branch = [&](const PureState& start, std::vector<double>& value, std::vector<double>& se,
                        std::vector<OutcomeDistribution>& outcomes) {
    const auto series = evolve_expectations(start, chain, evo, times, observables, threads);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto& m = series.mean[i];
      outcomes.push_back(outcome_distribution(m[0], m[1], m[2]));
      value.push_back(out.frame_sign * m[2]);
      se.push_back(series.trajectory_se[i][2]);
    }
  };
  run_branch(apply_widening(pair.W(), initial), out.O, out.O_noise_se, out.O_outcomes);
  run_branch(initial, out.N, out.N_noise_se, out.N_outcomes);
  return out;
}

ShotEstimate sample_shots(const OutcomeDistribution& p, int shots, double x_readout, std::mt19937_64& rng) {
  if (shots < 1) throw ValidationError("shots must be >= 1");
  const auto noisy = apply_readout_error(p, x_readout);
  // sigma_1 sigma_2 = +1 on (+,+) and (-,-).
  const double p_plus = std::clamp(noisy[0] + noisy[3], 0.0, 1.0);
  std::binomial_distribution<long long> draw(shots, p_plus);
  const double k = double(draw(rng));
  const double m = shots;
  const double mean = (2.0 * k - m) / m;
  double sigma = 0.0;
  if (shots > 1) sigma = std::sqrt(std::max(0.0, (1.0 - mean * mean) * m / (m - 1.0)) / m);
  return {mean, sigma};
}

ShotEstimate sample_shots(const PropagatedState& state, const ObservablePair& pair, int shots,
                          double x_readout, std::uint64_t seed) {
  auto rng = make_stream(seed, 0);
  return sample_shots(measured_outcomes(state, pair), shots, x_readout, rng);
}

namespace {

constexpr double kRatioFloor = 1e-9;

void check_aligned(std::size_t size, std::span<const double> other, const char* what) {
  if (!other.empty() && other.size() != size) {
    throw ValidationError(std::string("correct: ") + what + " is not aligned with the time grid");
  }
}

}  // namespace

CorrectedSeries correct(std::span<const double> O, std::span<const double> N,
                        std::span<const double> sigma_O, std::span<const double> sigma_N) {
  if (O.size() != N.size()) throw ValidationError("correct: O and N series differ in length");
  check_aligned(O.size(), sigma_O, "sigma_O");
  check_aligned(O.size(), sigma_N, "sigma_N");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CorrectedSeries out;
  for (std::size_t i = 0; i < O.size(); ++i) {
    if (std::abs(N[i]) < kRatioFloor) {
      out.value.push_back(nan);
      out.sigma.push_back(nan);
      out.defined.push_back(false);
      continue;
    }
    const double sO = sigma_O.empty() ? 0.0 : sigma_O[i];
    const double sN = sigma_N.empty() ? 0.0 : sigma_N[i];
    const double a = sO / N[i];
    const double b = O[i] * sN / (N[i] * N[i]);
    out.value.push_back(O[i] / N[i]);
    out.sigma.push_back(std::sqrt(a * a + b * b));
    out.defined.push_back(true);
  }
  return out;
}

CorrectedSeries correct_resampled(std::span<const double> O, std::span<const double> N,
                                  std::span<const double> sigma_O, std::span<const double> sigma_N,
                                  int samples, std::uint64_t seed) {
  if (samples < 2) throw ValidationError("correct_resampled needs at least two samples");
  CorrectedSeries out = correct(O, N, sigma_O, sigma_N);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < O.size(); ++i) {
    if (!out.defined[i]) continue;
    auto rng = make_stream(seed, i);
    const double sO = sigma_O.empty() ? 0.0 : sigma_O[i];
    const double sN = sigma_N.empty() ? 0.0 : sigma_N[i];
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double r = (O[i] + sO * normal(rng)) / (N[i] + sN * normal(rng));
      sum += r;
      sq += r * r;
    }
    const double mean = sum / samples;
    out.sigma[i] = std::sqrt(std::max(0.0, (sq - samples * mean * mean) / (samples - 1)));
  }
  return out;
}

double error_bound(const ObservablePair& pair, double F) {
  if (!(F >= 0.0 && F <= 1.0)) throw ValidationError("fidelity must lie in [0, 1]");
  const double v_norm = std::abs(pair.V().phase());
  return 2.0 * v_norm * v_norm * std::sqrt(1.0 - F);
}

std::vector<double> normalized(std::span<const double> series) {
  if (series.empty()) return {};
  if (series.front() == 0.0) throw ValidationError("cannot normalize a series that starts at zero");
  std::vector<double> out(series.begin(), series.end());
  for (double& v : out) v /= series.front();
  return out;
}

KappaResult extract_kappa(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 5) {
    throw ValidationError("extract_kappa needs aligned series with at least 5 points");
  }
  std::size_t cross = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i - 1] >= 0.5 && values[i] < 0.5) {
      cross = i;
      break;
    }
  }
  if (cross == 0) {
    throw NoCrossing("series never drops below 0.5",
                     *std::min_element(values.begin(), values.end()));
  }
  const double f = (values[cross - 1] - 0.5) / (values[cross - 1] - values[cross]);
  const double t_cross = times[cross - 1] + f * (times[cross] - times[cross - 1]);
  const std::size_t nearest = f < 0.5 ? cross - 1 : cross;
  const std::size_t lo = std::clamp<std::size_t>(nearest < 2 ? 0 : nearest - 2, 0, times.size() - 5);
  double mt = 0, mv = 0;
  for (std::size_t i = lo; i < lo + 5; ++i) {
    mt += times[i];
    mv += values[i];
  }
  mt /= 5;
  mv /= 5;
  double stt = 0, stv = 0;
  for (std::size_t i = lo; i < lo + 5; ++i) {
    stt += (times[i] - mt) * (times[i] - mt);
    stv += (times[i] - mt) * (values[i] - mv);
  }
  return {std::abs(stv / stt), t_cross};
}

}  // namespace tfdotoc
