#include "doctest.h"
#include "oracles.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/spectral.hpp"

using namespace tfdotoc;

TEST_CASE("dense spectrum matches the oracle") {
  const int n = 5;
  const auto s = full_spectrum(build_chain_hamiltonian({n, 1.0}, enumerate_sector(n)));
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::chain(n, 1.0, 0, n));
  REQUIRE(s.size() == 32);
  CHECK(s.complete());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.energies[i] == doctest::Approx(es.eigenvalues()[Eigen::Index(i)]).epsilon(1e-12));
  // Eigenvectors satisfy H v = E v.
  const auto H = oracle::chain(n, 1.0, 0, n);
  CHECK((H * s.vectors - s.vectors * Eigen::VectorXd::Map(s.energies.data(), 32).asDiagonal()).norm() < 1e-11);
}

TEST_CASE("dense diagonalization refuses large dimensions") {
  CHECK_THROWS_AS(full_spectrum(build_chain_hamiltonian({13, 1.0}, enumerate_sector(13))), DimensionTooLarge);
}

TEST_CASE("Lanczos ground state agrees with dense diagonalization") {
  for (double lambda : {0.3, 1.0, 4.0}) {
    const int n = 4;
    const auto basis = enumerate_sector(2 * n, 0);
    const auto H = build_parent_hamiltonian({{n, 1.0}, lambda}, basis).op;
    const auto g = ground_state(H, 2);
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(H.to_dense());
    CHECK(g.energy == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-10));
    CHECK(g.gap == doctest::Approx(es.eigenvalues()[1] - es.eigenvalues()[0]).epsilon(1e-8));
    CHECK(std::abs(std::abs(es.eigenvectors().col(0).dot(g.state.amplitudes())) - 1.0) < 1e-9);
    for (double r : g.residuals) CHECK(r < 1e-9);
    CHECK(g.state.is_normalized());
  }
}

TEST_CASE("Lanczos with restarts on a larger sector") {
  const int n = 6;
  const auto basis = enumerate_sector(2 * n, 0);
  const auto H = build_parent_hamiltonian({{n, 1.0}, 1.0}, basis).op;
  LanczosOptions tight;
  tight.max_basis = 24;
  const auto g = ground_state(H, 2, tight);
  const auto reference = ground_state(H, 2);
  CHECK(g.energy == doctest::Approx(reference.energy).epsilon(1e-11));
  CHECK(g.gap == doctest::Approx(reference.gap).epsilon(1e-7));
  const Vec r = H.apply(g.state.amplitudes()) - g.energy * g.state.amplitudes();
  CHECK(r.norm() < 1e-9);
}

TEST_CASE("Lanczos reports non-convergence") {
  const auto basis = enumerate_sector(12, 0);
  const auto H = build_parent_hamiltonian({{6, 1.0}, 1.0}, basis).op;
  LanczosOptions starved;
  starved.max_matvecs = 10;
  starved.max_basis = 8;
  CHECK_THROWS_AS(ground_state(H, 2, starved), ConvergenceError);
}

TEST_CASE("phase fixing") {
  Vec v(3);
  v << 0.0, cplx(0, -2.0), cplx(1.0, 1.0);
  fix_phase(v);
  CHECK(v[1].imag() == doctest::Approx(0.0));
  CHECK(v[1].real() == doctest::Approx(2.0));
  CHECK(std::abs(v[2]) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("gap conventions") {
  const double lambdas[] = {0.5, 2.0};
  const auto sector = gap_curve({3, 1.0}, lambdas, GapConvention::sector);
  const auto absolute = gap_curve({3, 1.0}, lambdas, GapConvention::absolute);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto H = build_parent_hamiltonian({{3, 1.0}, lambdas[i]}, enumerate_sector(6)).op;
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(H.to_dense());
    CHECK(absolute[i].gap == doctest::Approx(es.eigenvalues()[1] - es.eigenvalues()[0]).epsilon(1e-8));
    CHECK(absolute[i].ground_energy == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-10));
    CHECK(sector[i].gap >= absolute[i].gap - 1e-9);
  }
  const double bad[] = {kInfiniteCoupling};
  CHECK_THROWS_AS(gap_curve({3, 1.0}, bad), ValidationError);
}
