#include "doctest.h"
#include "oracles.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/model.hpp"

using namespace tfdotoc;

TEST_CASE("chain bonds couple opposite-parity sites only") {
  const auto bonds = chain_bonds({6, 2.0});
  CHECK(bonds.size() == 9);
  for (const auto& b : bonds) {
    CHECK((b.j - b.i) % 2 == 1);
    CHECK(b.coupling == doctest::Approx(2.0 / std::pow(b.j - b.i, 3)));
  }
}

TEST_CASE("chain and ladder Hamiltonians match the dense construction") {
  for (int n : {2, 3, 4}) {
    const ChainSpec chain{n, 0.7};
    const auto full = enumerate_sector(n);
    CHECK((build_chain_hamiltonian(chain, full).to_dense() - oracle::chain(n, 0.7, 0, n)).norm() < 1e-13);

    const auto ladder_basis = enumerate_sector(2 * n);
    const double lambda = 1.3;
    const oracle::Mat expected =
        oracle::chain(n, 0.7, 0, 2 * n) + oracle::chain(n, 0.7, n, 2 * n) + lambda * oracle::rung(n, 0.7);
    const auto H = build_parent_hamiltonian({chain, lambda}, ladder_basis);
    CHECK_FALSE(H.rung_only);
    CHECK((H.op.to_dense() - expected).norm() < 1e-12);

    const auto inf = build_parent_hamiltonian({chain, kInfiniteCoupling}, ladder_basis);
    CHECK(inf.rung_only);
    CHECK((inf.op.to_dense() - oracle::rung(n, 0.7)).norm() < 1e-12);
  }
}

TEST_CASE("sector Hamiltonians are the restriction of the full one") {
  const int n = 3;
  const auto full = enumerate_sector(2 * n);
  const auto sector = enumerate_sector(2 * n, 0);
  const auto Hf = build_parent_hamiltonian({{n, 1.0}, 2.0}, full).op.to_dense();
  const auto Hs = build_parent_hamiltonian({{n, 1.0}, 2.0}, sector).op.to_dense();
  for (std::size_t i = 0; i < sector->dim(); ++i) {
    for (std::size_t j = 0; j < sector->dim(); ++j) {
      const auto a = Eigen::Index(sector->state(i)), b = Eigen::Index(sector->state(j));
      CHECK(std::abs(Hs(Eigen::Index(i), Eigen::Index(j)) - Hf(a, b)) < 1e-14);
    }
  }
}

TEST_CASE("particle-hole operator R flips the sign of H") {
  for (int n : {2, 3, 4, 5, 6, 8}) CHECK(verify_particle_hole({n, 1.0}));
  const int n = 3;
  const auto basis = enumerate_sector(2 * n, 0);
  const auto legs = build_leg_operators({n, 1.0}, basis);
  const auto R2 = build_R(n, Leg::second, basis);
  CHECK(particle_hole_residual(legs.H2, R2) < 1e-14);
  // R_2 conjugation maps H_1 + H_2 to the ideal generator.
  CHECK(((R2.adjoint() * legs.forward_generator() * R2) - legs.ideal_generator()).max_abs() < 1e-14);
  // A local field on leg 2 breaks the identity.
  const auto field = legs.H2 + pauli_string_to_operator(PauliString::single(n, Axis::Z), basis).scaled(0.3);
  CHECK(particle_hole_residual(field, R2) > 0.1);
}

TEST_CASE("U0 is a symmetry of the chain and ladder") {
  for (int n : {2, 3, 4}) {
    const auto full = enumerate_sector(n);
    const auto U = build_U0(n, full).to_dense();
    const auto H = oracle::chain(n, 1.0, 0, n);
    CHECK((U * H * U.adjoint() - H).norm() < 1e-13);
    CHECK((U * U.adjoint() - oracle::Mat::Identity(U.rows(), U.cols())).norm() < 1e-14);
  }
}

TEST_CASE("U0 commutation sign matches dense conjugation") {
  const int n = 3;
  const int N = 2 * n;
  const auto full = enumerate_sector(N);
  const auto U = build_U0(n, full).to_dense();
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    const PauliString v({{1, a}});
    const PauliString measured = v.adjoint() * v.transpose().shifted(n);
    const auto M = pauli_string_to_operator(measured, full).to_dense();
    const int s = u0_commutation_sign(n, measured);
    CHECK((U * M * U.adjoint() - double(s) * M).norm() < 1e-13);
    CHECK(s == (a == Axis::Y ? 1 : -1));
  }
}

TEST_CASE("rung singlets are the lambda = infinity ground state") {
  const int n = 3;
  const auto basis = enumerate_sector(2 * n, 0);
  const auto psi = rung_singlet_state(n, basis);
  CHECK(psi.is_normalized());
  const auto H12 = build_rung_coupling({n, 1.0}, basis);
  const Vec Hpsi = H12.apply(psi.amplitudes());
  CHECK((Hpsi + 2.0 * n * psi.amplitudes()).norm() < 1e-13);
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(H12.to_dense());
  CHECK(es.eigenvalues()[0] == doctest::Approx(-2.0 * n));
  CHECK(es.eigenvalues()[1] > -2.0 * n + 1.0);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(ChainSpec({0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(ChainSpec({3, -1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(LadderSpec({{3, 1.0}, -0.5}).validate(), ValidationError);
  CHECK_NOTHROW(LadderSpec({{3, 1.0}, kInfiniteCoupling}).validate());
}
