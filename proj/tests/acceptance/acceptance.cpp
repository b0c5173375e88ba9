// Acceptance suite: one PASS/FAIL line per criterion with its wall time.
// Pass `--long` to add the n = 10, 11 fidelity sizes.

#include "oracles.hpp"

#include "tfdotoc/experiment.hpp"
#include "tfdotoc/otoc.hpp"
#include "tfdotoc/parallel.hpp"
#include "tfdotoc/presets.hpp"
#include "tfdotoc/spectral.hpp"
#include "tfdotoc/tfd.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace tfdotoc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Spectrum chain_spectrum(int n) { return full_spectrum(build_chain_hamiltonian({n, 1.0}, enumerate_sector(n))); }

ObservablePair make_pair(int n, const std::string& W, const std::string& V) {
  return ObservablePair(n, parse_site_operator(W, n), *parse_site_operator(V, n));
}

std::vector<double> grid(double stop, double step) { return TimeGrid{0.0, stop, step}.points(); }

// tr(y^2 W^dag V^dag(t) W y^2 V(t)) / tr(y^4) with y = exp(-beta H / 4), densely.
double dense_oth(const oracle::Mat& H, const oracle::Mat& W, const oracle::Mat& V, double beta, double t) {
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(H);
  const double e0 = es.eigenvalues()[0];
  oracle::Vec y2(H.rows());
  for (Eigen::Index i = 0; i < H.rows(); ++i) y2[i] = std::exp(-beta * (es.eigenvalues()[i] - e0) / 2);
  const oracle::Mat rho_half = es.eigenvectors() * y2.asDiagonal() * es.eigenvectors().adjoint();
  const oracle::Mat U = oracle::expm_hermitian(H, t);
  const oracle::Mat Vt = U.adjoint() * V * U;
  const double Z = (rho_half * rho_half).trace().real();
  return (rho_half * W.adjoint() * Vt.adjoint() * W * rho_half * Vt).trace().real() / Z;
}

std::map<std::pair<int, double>, double> g_fidelity;  // criterion 4 -> criterion 7

Outcome c1_protocol_identity() {
  const int n = 4;
  const auto spectrum = chain_spectrum(n);
  const auto pair = make_pair(n, "Z@3", "X@2");
  const auto times = grid(3.0, 0.1);
  const auto H = oracle::chain(n, 1.0, 0, n);
  const auto W = oracle::site_pauli('Z', 2, n), V = oracle::site_pauli('X', 1, n);
  double worst = 0.0, worst_exact = 0.0;
  for (double beta : {0.0, 0.5, 1.0, 4.0}) {
    const auto tfd = build_tfd(spectrum, beta);
    const auto circuit = otoc_circuit(tfd.state, pair, {n, 1.0}, {}, times, Frame::tfd);
    const auto exact = otoc_exact_series(spectrum, pair, beta, times, VariantKind::Oth);
    for (std::size_t i = 0; i < times.size(); ++i) {
      worst = std::max(worst, std::abs(circuit.O[i] - dense_oth(H, W, V, beta, times[i])));
      worst_exact = std::max(worst_exact, std::abs(circuit.O[i] - exact[i]));
    }
  }
  return {worst < 1e-10 && worst_exact < 1e-10,
          "max |O_tfd - O_th| dense " + fmt("%.2e", worst) + ", spectral " + fmt("%.2e", worst_exact)};
}

Outcome c2_closed_form() {
  const int n = 2;
  double worst = 0.0, worst_F = 1.0;
  for (double lambda : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const auto r = optimize_beta(LadderSpec{{n, 1.0}, lambda});
    worst = std::max(worst, std::abs(lambda * std::sinh(r.beta0) - 1.0));
    worst_F = std::min(worst_F, r.F);
  }
  return {worst < 1e-5 && worst_F > 1 - 1e-9,
          "max |lambda sinh(beta0) - 1| " + fmt("%.2e", worst) + ", min F " + fmt("%.12f", worst_F)};
}

Outcome c3_limits() {
  double worst = 0.0;
  for (int n : {2, 4, 6, 8}) {
    const auto spectrum = chain_spectrum(n);
    const auto sector = enumerate_sector(2 * n, 0);
    const FidelityProfile singlets(spectrum, rung_singlet_state(n, sector));
    worst = std::max(worst, std::abs(1.0 - singlets(0.0)));
    const auto g = ground_state(build_parent_hamiltonian({{n, 1.0}, 0.0}, sector).op, 2);
    const FidelityProfile decoupled(spectrum, g.state);
    worst = std::max(worst, std::abs(1.0 - decoupled(kInfiniteBeta)));
  }
  return {worst < 1e-9, "max |1 - F| " + fmt("%.2e", worst)};
}

Outcome c4_fidelity_floor(bool long_run) {
  std::vector<int> ns{4, 6, 8};
  if (long_run) ns.insert(ns.end(), {10, 11});
  const auto rows = fidelity_table(ns, {0.5, 1, 2, 4, 8});
  double worst = 1.0;
  std::string where;
  for (const auto& r : rows) {
    g_fidelity[{r.n, r.result.lambda}] = r.result.F;
    if (r.result.F < worst) {
      worst = r.result.F;
      where = "n=" + std::to_string(r.n) + " lambda=" + fmt("%g", r.result.lambda);
    }
  }
  return {worst >= 0.88, "min F " + fmt("%.4f", worst) + " at " + where};
}

Outcome c5_particle_hole() {
  double residual = 0.0, dense_residual = 0.0;
  for (int n = 2; n <= 8; ++n) {
    const auto basis = enumerate_sector(2 * n, 0);
    const auto legs = build_leg_operators({n, 1.0}, basis);
    residual = std::max(residual, particle_hole_residual(legs.H2, build_R(n, Leg::second, basis)));
    if (n <= 4) {
      // R^dag H R + H^* on the dense leg-2 chain.
      const int N = 2 * n;
      oracle::Mat R = oracle::Mat::Identity(Eigen::Index(1) << N, Eigen::Index(1) << N);
      for (int k = n; k < N; ++k)
        if ((k + 1) % 2 == 0) R = R * oracle::site_pauli('Z', k, N);
      const auto H = oracle::chain(n, 1.0, n, N);
      dense_residual = std::max(dense_residual, (R.adjoint() * H * R + H.conjugate()).cwiseAbs().maxCoeff());
    }
  }
  const int n = 4;
  const auto full = enumerate_sector(2 * n);
  const auto legs = build_leg_operators({n, 1.0}, full);
  const PureState psi(full, oracle::random_state(Eigen::Index(full->dim()), 11));
  const auto a = evolve_ideal(psi, legs.ideal_generator(), 1.0);
  const auto b = evolve_via_R(psi, legs, build_R(n, Leg::second, full), 1.0);
  const double dev = (a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff();
  return {residual < 1e-12 && dense_residual < 1e-12 && dev < 1e-9,
          "residual " + fmt("%.1e", residual) + " (dense " + fmt("%.1e", dense_residual) + "), via-R deviation " +
              fmt("%.1e", dev)};
}

Outcome c6_normalization_constant() {
  const int n = 4;
  const auto spectrum = chain_spectrum(n);
  const auto phi = build_phi(build_tfd(spectrum, 1.0), build_U0(n, enumerate_sector(2 * n)));
  const auto times = grid(3.0, 0.02);
  const auto c = otoc_circuit(phi, make_pair(n, "Z@3", "X@2"), {n, 1.0}, {}, times, Frame::rotated);
  const auto [lo, hi] = std::minmax_element(c.N.begin(), c.N.end());
  return {*hi - *lo < 1e-10, "max N - min N " + fmt("%.2e", *hi - *lo)};
}

ExperimentSpec n8_spec(double lambda, const std::string& W, const std::string& V) {
  ExperimentSpec s;
  s.n = 8;
  s.lambda = lambda;
  s.W = W;
  s.V = V;
  s.times = {0.0, 3.0, 0.02};
  return s;
}

Outcome c7_error_bound() {
  bool ok = true;
  std::string detail;
  for (double lambda : {1.0, 4.0}) {
    auto it = g_fidelity.find({8, lambda});
    const auto r = run(n8_spec(lambda, "Z@5", "X@4"));
    const double F = it != g_fidelity.end() ? it->second : r.fidelity;
    double worst = 0.0;
    for (const auto& row : r.rows) worst = std::max(worst, std::abs(row.O_g - row.O_th));
    const double bound = error_bound(make_pair(8, "Z@5", "X@4"), F);
    ok = ok && worst <= bound;
    detail += "lambda=" + fmt("%g", lambda) + ": " + fmt("%.4f", worst) + " <= " + fmt("%.4f", bound) + "  ";
  }
  return {ok, detail};
}

Outcome c8_correction() {
  bool ok = true;
  std::string detail;
  for (auto [W, V] : {std::pair{"Z@5", "X@4"}, {"Z@6", "X@3"}, {"Z@6", "X@2"}}) {
    const auto r = run(n8_spec(1.0, W, V));
    double err_g = 0.0, err_c = 0.0;
    for (const auto& row : r.rows) {
      err_g += std::abs(row.O_g_norm - row.O_th_norm);
      err_c += std::abs(row.O_corr - row.O_th_norm);
    }
    err_g /= double(r.rows.size());
    err_c /= double(r.rows.size());
    ok = ok && err_c < err_g;
    detail += std::string(W) + "," + V + ": corr " + fmt("%.5f", err_c) + (err_c < err_g ? " < " : " >= ") + "g " +
              fmt("%.5f", err_g) + "  ";
  }
  return {ok, detail};
}

Outcome c9_depolarization() {
  auto clean = n8_spec(kInf, "Z@5", "X@4");
  auto noisy = clean;
  noisy.evolution.kind = EvolutionKind::depolarization;
  noisy.evolution.gamma = 1.0;
  const auto a = run(clean), b = run(noisy);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) worst = std::max(worst, std::abs(a.rows[i].O_corr - b.rows[i].O_corr));
  // The raw signal must actually have decayed for the check to mean anything.
  const double shrink = b.rows.back().N_g / a.rows.back().N_g;
  return {worst < 1e-10 && std::abs(shrink - std::exp(-3.0)) < 1e-9,
          "max |dO_corr| " + fmt("%.2e", worst) + ", N_g(3) ratio " + fmt("%.5f", shrink)};
}

Outcome c10_readout() {
  auto base = n8_spec(kInf, "Z@5", "X@4");
  base.times = {0.0, 3.0, 0.5};
  const auto clean = run(base);
  double worst_scale = 0.0, worst_corr = 0.0, worst_dist = 0.0;
  for (double x : {0.05, 0.1, 0.2}) {
    auto s = base;
    s.readout_x = x;
    const auto r = run(s);
    const double c = (1 - 2 * x) * (1 - 2 * x);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      worst_scale = std::max({worst_scale, std::abs(r.rows[i].O_g - c * clean.rows[i].O_g),
                              std::abs(r.rows[i].N_g - c * clean.rows[i].N_g)});
      worst_corr = std::max(worst_corr, std::abs(r.rows[i].O_corr - clean.rows[i].O_corr));
    }
    // Same statement at the level of outcome probabilities.
    const auto p = outcome_distribution(0.31, -0.12, 0.47);
    worst_dist = std::max(worst_dist, std::abs(correlator(apply_readout_error(p, x)) - c * correlator(p)));
  }
  auto sampled_spec = base;
  sampled_spec.readout_x = 0.1;
  sampled_spec.shots = 10000;
  sampled_spec.seed = 2024;
  const auto sampled = run(sampled_spec);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < sampled.rows.size(); ++i) {
    worst_z = std::max(worst_z, std::abs(sampled.rows[i].O_corr - clean.rows[i].O_corr) / sampled.rows[i].sigma_corr);
  }
  return {worst_scale < 1e-12 && worst_corr < 1e-12 && worst_dist < 1e-12 && worst_z <= 3.0,
          "scaling " + fmt("%.1e", std::max(worst_scale, worst_dist)) + ", O_corr " + fmt("%.1e", worst_corr) +
              ", sampled max |z| " + fmt("%.2f", worst_z) + " over " + std::to_string(sampled.rows.size()) +
              " times"};
}

Outcome c11_local_dephasing() {
  const int n = 3, N = 2 * n;
  const double gamma = 0.25;
  const auto sector = enumerate_sector(N, 0);
  const auto g = ground_state(build_parent_hamiltonian({{n, 1.0}, 1.0}, sector).op, 2).state;
  const auto pair = make_pair(n, "Z@2", "X@1");
  const auto start = apply(pair.W(), g);
  EvolutionSpec spec{EvolutionKind::local_dephasing, gamma, 0.0, 2000, 17};
  std::vector<double> times;
  for (int i = 1; i <= 10; ++i) times.push_back(0.3 * i);
  const PauliString observable = pair.measured();
  const std::vector<PauliString> observables{observable};
  const auto series = evolve_expectations(start, {n, 1.0}, spec, times, observables);

  // Dense master equation with L_k = sqrt(gamma) sigma^z_k.
  oracle::Lindblad L;
  L.G = oracle::chain(n, 1.0, 0, N) - oracle::chain(n, 1.0, n, N).conjugate();
  for (int k = 0; k < N; ++k) {
    oracle::Vec d(Eigen::Index(1) << N);
    for (Eigen::Index b = 0; b < d.size(); ++b) d[b] = std::sqrt(gamma) * ((b >> k) & 1 ? 1.0 : -1.0);
    L.diagonal_jumps.push_back(d);
  }
  const oracle::Vec psi0 = embed(start, enumerate_sector(N)).amplitudes();
  oracle::Mat rho = psi0 * psi0.adjoint();
  oracle::Mat O = oracle::Mat::Identity(Eigen::Index(1) << N, Eigen::Index(1) << N);
  for (const auto& f : observable.factors()) O = O * oracle::site_pauli(axis_letter(f.axis), f.site, N);
  O *= observable.phase();
  double prev = 0.0, worst_z = 0.0;
  int agree = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    rho = L.evolve(rho, times[i] - prev, 200);
    prev = times[i];
    const double exact = (O * rho).trace().real();
    const double diff = std::abs(series.mean[i][0] - exact);
    const double se = series.trajectory_se[i][0];
    if (diff <= 3 * se + 1e-12) ++agree;
    worst_z = std::max(worst_z, diff / se);
  }
  return {agree == int(times.size()),
          std::to_string(agree) + "/10 within 3 SE, max |z| " + fmt("%.2f", worst_z)};
}

Outcome c12_kappa_trend() {
  const std::vector<double> lambdas{1, 2, 4, 10, kInf};
  std::vector<double> kth, kg;
  for (double lambda : lambdas) {
    const auto r = run(n8_spec(lambda, "Z@5", "X@4"));
    std::vector<double> t, th, g;
    for (const auto& row : r.rows) {
      t.push_back(row.t);
      th.push_back(row.O_th_norm);
      g.push_back(row.O_g_norm);
    }
    kth.push_back(extract_kappa(t, th).kappa);
    kg.push_back(extract_kappa(t, g).kappa);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < kth.size(); ++i) monotone = monotone && kth[i] >= kth[i - 1];
  const double saturation = kth[3] / kth[4];
  std::string detail = "kappa_th";
  for (double k : kth) detail += " " + fmt("%.3f", k);
  detail += " (kappa_g";
  for (double k : kg) detail += " " + fmt("%.3f", k);
  detail += "), k(10)/k(inf) " + fmt("%.3f", saturation);

  const int n = 8;
  const auto spectrum = chain_spectrum(n);
  const auto k = variant_kappas(spectrum, make_pair(n, "Z@5", "X@4"), {0.125, 1.0, 8.0}, grid(6.0, 0.02));
  auto increasing = [](const std::vector<double>& v) { return v[0] < v[1] && v[1] < v[2]; };
  auto decreasing = [](const std::vector<double>& v) { return v[0] > v[1] && v[1] > v[2]; };
  const auto& o2 = k.kappa[1];
  const double o2_spread = (*std::max_element(o2.begin(), o2.end()) - *std::min_element(o2.begin(), o2.end())) /
                           *std::min_element(o2.begin(), o2.end());
  const bool variants = increasing(k.kappa[3]) && increasing(k.kappa[2]) && decreasing(k.kappa[0]) &&
                        o2_spread < 0.25;
  const char* names[] = {"O1", "O2", "O3", "Oth"};
  detail += "; T=1/8,1,8:";
  for (int v = 0; v < 4; ++v) {
    detail += std::string(" ") + names[v];
    for (double x : k.kappa[std::size_t(v)]) detail += " " + fmt("%.3f", x);
  }
  detail += ", O2 spread " + fmt("%.3f", o2_spread);
  return {monotone && saturation >= 0.9 && saturation <= 1.1 && variants, detail};
}

Outcome c13_variants() {
  const int n = 4;
  const auto spectrum = chain_spectrum(n);
  const auto pair = make_pair(n, "Z@3", "X@2");
  const auto times = grid(3.0, 0.02);
  const ThermalOtoc thermal(spectrum, pair);
  const auto th = thermal.series(0.0, times, VariantKind::Oth);
  double worst = 0.0;
  for (auto kind : {VariantKind::O1, VariantKind::O2, VariantKind::O3}) {
    const auto v = thermal.series(0.0, times, kind);
    for (std::size_t i = 0; i < times.size(); ++i) worst = std::max(worst, std::abs(v[i] - th[i]));
  }
  return {worst < 1e-10, "max |O_k - O_th| " + fmt("%.2e", worst)};
}

Outcome c14_determinism() {
  ExperimentSpec s;
  s.n = 3;
  s.lambda = 1.0;
  s.W = "Z@2";
  s.V = "X@1";
  s.times = {0.0, 2.0, 0.1};
  s.evolution.kind = EvolutionKind::local_dephasing;
  s.evolution.gamma = 0.25;
  s.evolution.trajectories = 64;
  s.shots = 1000;
  s.seed = 42;
  std::ostringstream a, b, c;
  write_csv(a, run(s, 1));
  write_csv(b, run(s, 1));
  write_csv(c, run(s, 4));
  return {a.str() == b.str() && a.str() == c.str(),
          std::string("repeat ") + (a.str() == b.str() ? "identical" : "differs") + ", 4 threads " +
              (a.str() == c.str() ? "identical" : "differs") + " (" + std::to_string(a.str().size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  bool long_run = false;
  for (int i = 1; i < argc; ++i) long_run = long_run || std::strcmp(argv[i], "--long") == 0;

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {1, "protocol identity", 10, c1_protocol_identity},
      {2, "two-site closed form", 5, c2_closed_form},
      {3, "limiting fidelities", 60, c3_limits},
      {4, "fidelity floor", 600, [&] { return c4_fidelity_floor(long_run); }},
      {5, "particle-hole identity", 30, c5_particle_hole},
      {6, "N constancy", 10, c6_normalization_constant},
      {7, "error bound", 300, c7_error_bound},
      {8, "correction efficacy", 600, c8_correction},
      {9, "depolarization robustness", 120, c9_depolarization},
      {10, "readout robustness", 120, c10_readout},
      {11, "local dephasing oracle", 300, c11_local_dephasing},
      {12, "kappa trends", 900, c12_kappa_trend},
      {13, "variant convergence", 60, c13_variants},
      {14, "determinism", 60, c14_determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // --long adds sizes outside the budget of criterion 4.
    const bool in_time = secs < c.budget_s || (c.id == 4 && long_run);
    const bool passed = out.passed && in_time;
    if (!passed) ++failed;
    std::printf("%s [%2d] %-26s %8.2fs  %s%s\n", passed ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.c_str(),
                in_time ? "" : "  (over time budget)");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
