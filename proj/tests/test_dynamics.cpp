#include "doctest.h"
#include "oracles.hpp"

#include "tfdotoc/dynamics.hpp"
#include "tfdotoc/errors.hpp"
#include "tfdotoc/spectral.hpp"

using namespace tfdotoc;

namespace {

oracle::Mat dense_generator(int n) {
  // H_1 - H_2^*; the chain is real so H_2^* = H_2.
  return oracle::chain(n, 1.0, 0, 2 * n) - oracle::chain(n, 1.0, n, 2 * n);
}

PureState random_full_state(int N, unsigned seed) {
  const auto full = enumerate_sector(N);
  return PureState(full, oracle::random_state(Eigen::Index(full->dim()), seed));
}

double dense_expectation(const oracle::Mat& rho, const oracle::Mat& op) { return (rho * op).trace().real(); }

}  // namespace

TEST_CASE("Krylov propagation matches the dense exponential") {
  for (int n : {2, 3}) {
    const auto psi = random_full_state(2 * n, 11);
    const auto legs = build_leg_operators({n, 1.0}, psi.basis());
    const auto G = legs.ideal_generator();
    for (double t : {0.0, 0.4, 1.7, 3.0}) {
      const auto out = evolve_ideal(psi, G, t);
      const oracle::Vec expected = oracle::expm_hermitian(dense_generator(n), t) * psi.amplitudes();
      CHECK((out.amplitudes() - expected).norm() < 1e-8);
      CHECK(std::abs(out.norm() - 1.0) < 1e-9);
    }
  }
  // 2n = 12 in the zero sector
  const int n = 6;
  const auto sector = enumerate_sector(2 * n, 0);
  const PureState psi(sector, oracle::random_state(Eigen::Index(sector->dim()), 5));
  const auto G = build_leg_operators({n, 1.0}, sector).ideal_generator();
  const oracle::Mat dense = G.to_dense();
  for (double t : {1.0, 3.0}) {
    const oracle::Vec expected = oracle::expm_hermitian(dense, t) * psi.amplitudes();
    CHECK((evolve_ideal(psi, G, t).amplitudes() - expected).norm() < 1e-8);
  }
}

TEST_CASE("propagation conserves the generator and magnetization") {
  const int n = 4;
  const auto psi = random_full_state(2 * n, 2);
  const auto G = build_leg_operators({n, 1.0}, psi.basis()).ideal_generator();
  const auto sz = sz_total_operator(psi.basis());
  const double e0 = expectation(G, psi).real();
  const double m0 = expectation(sz, psi).real();
  PureState s = psi;
  for (int step = 0; step < 5; ++step) {
    s = evolve_ideal(s, G, 0.6);
    CHECK(std::abs(expectation(G, s).real() - e0) < 1e-9);
    CHECK(std::abs(expectation(sz, s).real() - m0) < 1e-9);
    CHECK(std::abs(s.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("small Krylov spaces fall back to shorter steps") {
  const auto psi = random_full_state(6, 4);
  const auto G = build_leg_operators({3, 1.0}, psi.basis()).ideal_generator();
  KrylovOptions small;
  small.max_dim = 4;
  KrylovStats stats;
  const Vec out = expm_krylov(G, psi.amplitudes(), 3.0, small, &stats);
  const oracle::Vec expected = oracle::expm_hermitian(dense_generator(3), 3.0) * psi.amplitudes();
  CHECK((out - expected).norm() < 1e-8);
  CHECK(stats.steps > 1);
  CHECK_THROWS_AS(expm_krylov(G, psi.amplitudes(), -1.0), ValidationError);
}

TEST_CASE("R conjugation reproduces the ideal evolution") {
  const int n = 4;
  const auto sector = enumerate_sector(2 * n, 0);
  const PureState psi(sector, oracle::random_state(Eigen::Index(sector->dim()), 9));
  const auto legs = build_leg_operators({n, 1.0}, sector);
  const auto R2 = build_R(n, Leg::second, sector);
  for (double t : {0.0, 1.0, 2.5}) {
    const auto a = evolve_ideal(psi, legs.ideal_generator(), t);
    const auto b = evolve_via_R(psi, legs, R2, t);
    CHECK((a.amplitudes() - b.amplitudes()).norm() < 1e-9);
  }
  LegOperators broken = legs;
  broken.H2 = legs.H2 + pauli_string_to_operator(PauliString::single(n + 1, Axis::Z), sector).scaled(0.5);
  CHECK_THROWS_AS(evolve_via_R(psi, broken, R2, 1.0), SymmetryViolation);
}

TEST_CASE("collective dephasing damps sector coherences like the Lindblad equation") {
  const int n = 2, N = 4;
  const double gamma = 0.3, t = 0.9;
  // Equal superposition of sectors 0 and 2.
  Vec v = Vec::Zero(16);
  v[0b0011] = std::sqrt(0.5);
  v[0b0111] = std::sqrt(0.5);
  const PureState psi(enumerate_sector(N), v);
  const auto G = build_leg_operators({n, 1.0}, psi.basis()).ideal_generator();
  const auto out = evolve_collective_dephasing(psi, G, t, gamma);

  oracle::Mat sz = oracle::Mat::Zero(16, 16);
  for (int k = 0; k < N; ++k) sz += oracle::site_pauli('Z', k, N);
  oracle::Lindblad lb{dense_generator(n), {std::sqrt(gamma) * sz}};
  const oracle::Mat rho = lb.evolve(v * v.adjoint(), t, 2000);
  // Coherence between sectors 0 and 2 decays as e^{-gamma t (Delta m)^2 / 2} = e^{-2 gamma t}.
  const oracle::Mat rho_ideal = [&] {
    const oracle::Vec u = oracle::expm_hermitian(dense_generator(n), t) * v;
    return oracle::Mat(u * u.adjoint());
  }();
  CHECK(std::abs(rho(0b0111, 0b0011)) == doctest::Approx(std::abs(rho_ideal(0b0111, 0b0011)) * std::exp(-2 * gamma * t)).epsilon(1e-8));
  for (const auto& p : {PauliString::single(0, Axis::X), PauliString({{0, Axis::X}, {2, Axis::X}}),
                        PauliString({{1, Axis::Y}, {3, Axis::Z}}), PauliString::single(2, Axis::Z)}) {
    const auto M = pauli_string_to_operator(p, psi.basis()).to_dense();
    CHECK(expectation(PropagatedState(out), p) == doctest::Approx(dense_expectation(rho, M)).epsilon(1e-8));
  }
  // Single-sector inputs are untouched.
  const auto sector = enumerate_sector(N, 0);
  const PureState s0(sector, oracle::random_state(6, 1));
  const auto G0 = build_leg_operators({n, 1.0}, sector).ideal_generator();
  const auto noisy = evolve_collective_dephasing(s0, G0, t, 5.0);
  const auto ideal = evolve_ideal(s0, G0, t);
  const auto XX = PauliString({{0, Axis::X}, {2, Axis::X}});
  CHECK(expectation(PropagatedState(noisy), XX) == doctest::Approx(expectation(XX, ideal).real()).epsilon(1e-14));
}

TEST_CASE("depolarization scales traceless expectations by e^{-gamma t}") {
  const int n = 2, N = 4;
  const double gamma = 1.0, t = 0.7;
  const auto psi = random_full_state(N, 6);
  const auto G = build_leg_operators({n, 1.0}, psi.basis()).ideal_generator();
  const auto out = evolve_depolarization(psi, G, t, gamma);
  CHECK(out.decay == doctest::Approx(std::exp(-gamma * t)));
  oracle::Lindblad lb{dense_generator(n), {}, gamma};
  const oracle::Mat rho = lb.evolve(psi.amplitudes() * psi.amplitudes().adjoint(), t, 2000);
  for (const auto& p : {PauliString::single(1, Axis::X), PauliString({{0, Axis::Y}, {3, Axis::Y}})}) {
    const auto M = pauli_string_to_operator(p, psi.basis()).to_dense();
    CHECK(expectation(PropagatedState(out), p) == doctest::Approx(dense_expectation(rho, M)).epsilon(1e-9));
  }
  CHECK(expectation(PropagatedState(out), PauliString()) == doctest::Approx(1.0));
}

TEST_CASE("local dephasing trajectories estimate the Lindblad expectation") {
  const int n = 3, N = 6;
  const double gamma = 0.25;
  const auto sector = enumerate_sector(N, 0);
  const auto g = ground_state(build_parent_hamiltonian({{n, 1.0}, 1.0}, sector).op, 1).state;
  const PauliString observables[] = {PauliString::single(0, Axis::Z),
                                     PauliString({{1, Axis::X}, {1 + n, Axis::X}}),
                                     PauliString({{0, Axis::Y}, {n, Axis::Y}})};
  const double times[] = {0.0, 0.5, 1.0, 2.0};
  EvolutionSpec spec{EvolutionKind::local_dephasing, gamma, 0.0, 2000, 42};
  // Start from sigma^z_1 |g> so single-site expectations are not all zero.
  const PureState start = apply(PauliString({{0, Axis::X}, {n, Axis::X}}), embed(g, enumerate_sector(N))).normalized();
  const auto series = evolve_expectations(start, {n, 1.0}, spec, times, observables);

  oracle::Lindblad lb{dense_generator(n), {}};
  for (int k = 0; k < N; ++k) lb.diagonal_jumps.push_back(std::sqrt(gamma) * oracle::site_pauli('Z', k, N).diagonal());
  const oracle::Vec v = start.amplitudes();
  int within = 0, total = 0;
  oracle::Mat rho = v * v.adjoint();
  for (std::size_t ti = 0; ti < 4; ++ti) {
    if (ti > 0) rho = lb.evolve(rho, times[ti] - times[ti - 1], 100);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto M = pauli_string_to_operator(observables[k], start.basis()).to_dense();
      const double exact = dense_expectation(rho, M);
      const double se = series.trajectory_se[ti][k];
      ++total;
      if (std::abs(series.mean[ti][k] - exact) <= 3 * se + 1e-12) ++within;
    }
  }
  CHECK(within >= total - 1);
  CHECK(series.trajectories == 2000);
}

TEST_CASE("trajectory ensembles are reproducible and conserve magnetization") {
  const int n = 2, N = 4;
  const auto psi = random_full_state(N, 8);
  const auto G = build_leg_operators({n, 1.0}, psi.basis()).ideal_generator();
  EvolutionSpec spec{EvolutionKind::local_dephasing, 0.5, 0.0, 20, 7};
  const auto a = evolve_local_dephasing(psi, G, 1.5, 0.5, spec, 1);
  const auto b = evolve_local_dephasing(psi, G, 1.5, 0.5, spec, 4);
  REQUIRE(a.members.size() == 20);
  const auto sz = sz_total_operator(psi.basis());
  const double m0 = expectation(sz, psi).real();
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK((a.members[i].amplitudes() - b.members[i].amplitudes()).norm() < 1e-15);
    CHECK(expectation(sz, a.members[i]).real() == doctest::Approx(m0).epsilon(1e-9));
  }
  const auto single = evolve_local_dephasing(psi, G, 1.5, 0.0, spec);
  CHECK(single.members.size() == 1);
  CHECK((single.members[0].amplitudes() - evolve_ideal(psi, G, 1.5).amplitudes()).norm() < 1e-14);
}

TEST_CASE("coherent imperfections") {
  const int n = 3;
  const auto sector = enumerate_sector(2 * n, 0);
  const PureState psi(sector, oracle::random_state(Eigen::Index(sector->dim()), 12));
  const auto legs = build_leg_operators({n, 1.0}, sector);
  const auto ideal = evolve_ideal(psi, legs.ideal_generator(), 1.2);
  EvolutionSpec remnant{EvolutionKind::remnant_coupling, 0.0, 0.0};
  CHECK((evolve_imperfect(psi, legs, remnant, 1.2).amplitudes() - ideal.amplitudes()).norm() < 1e-12);
  remnant.epsilon = 0.5;
  const auto H12 = oracle::rung(n, 1.0);
  (void)H12;
  const oracle::Mat Gr = legs.ideal_generator().to_dense() + 0.5 * legs.H12.to_dense();
  CHECK((evolve_imperfect(psi, legs, remnant, 1.2).amplitudes() - oracle::expm_hermitian(Gr, 1.2) * psi.amplitudes()).norm() < 1e-8);
  EvolutionSpec asym{EvolutionKind::asymmetric_legs, 0.0, 0.2};
  const auto G = imperfect_generator(legs, asym);
  CHECK(G.is_hermitian());
  CHECK(std::abs(evolve_imperfect(psi, legs, asym, 2.0).norm() - 1.0) < 1e-9);
  CHECK_THROWS_AS(evolve_imperfect(psi, legs, EvolutionSpec{}, 1.0), ValidationError);
  CHECK_THROWS_AS((EvolutionSpec{EvolutionKind::asymmetric_legs, 0.0, 1.0}.validate()), ValidationError);
}

TEST_CASE("readout errors") {
  const auto p = outcome_distribution(0.3, -0.2, 0.4);
  double total = 0;
  for (double v : p) total += v;
  CHECK(total == doctest::Approx(1.0));
  CHECK(correlator(p) == doctest::Approx(0.4));
  const auto same = apply_readout_error(p, 0.0);
  for (int i = 0; i < 4; ++i) CHECK(same[std::size_t(i)] == doctest::Approx(p[std::size_t(i)]));
  for (double x : {0.05, 0.1, 0.3}) {
    CHECK(correlator(apply_readout_error(p, x)) == doctest::Approx((1 - 2 * x) * (1 - 2 * x) * 0.4).epsilon(1e-14));
  }
  CHECK(std::abs(correlator(apply_readout_error(p, 0.5))) < 1e-15);
  CHECK_THROWS_AS(apply_readout_error(p, 0.6), ValidationError);
}
