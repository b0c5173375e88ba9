#include "doctest.h"
#include "oracles.hpp"

#include "tfdotoc/errors.hpp"
#include "tfdotoc/hilbert.hpp"

#include <bit>

using namespace tfdotoc;

namespace {

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

oracle::Mat dense_pauli(const PauliString& p, int N) {
  oracle::Mat m = oracle::Mat::Identity(Eigen::Index(1) << N, Eigen::Index(1) << N);
  for (const auto& f : p.factors()) m = m * oracle::site_pauli(axis_letter(f.axis), f.site, N);
  return p.phase() * m;
}

}  // namespace

TEST_CASE("sector dimensions are binomial coefficients") {
  for (int N : {1, 2, 5, 8, 12}) {
    CHECK(enumerate_sector(N)->dim() == (std::size_t(1) << N));
    for (int up = 0; up <= N; ++up) {
      const auto basis = enumerate_sector(N, 2 * up - N);
      CHECK(basis->dim() == std::size_t(binomial(N, up)));
      for (std::size_t i = 0; i < basis->dim(); ++i) {
        CHECK(std::popcount(basis->state(i)) == up);
        CHECK(basis->index_of(basis->state(i)) == i);
        if (i > 0) CHECK(basis->state(i - 1) < basis->state(i));
      }
    }
  }
  CHECK(enumerate_sector(16, 0)->dim() == 12870);
}

TEST_CASE("sector parity is validated") {
  CHECK_THROWS_AS(enumerate_sector(4, 1), InvalidSector);
  CHECK_THROWS_AS(enumerate_sector(4, 6), InvalidSector);
  CHECK_FALSE(enumerate_sector(4, 0)->contains(0b0111));
}

TEST_CASE("Pauli strings match Kronecker products") {
  const int N = 4;
  const PauliString strings[] = {
      PauliString::single(0, Axis::X), PauliString::single(2, Axis::Y), PauliString::single(3, Axis::Z),
      PauliString({{0, Axis::Y}, {1, Axis::Z}, {3, Axis::X}}, cplx(0, 1)),
      PauliString({{1, Axis::Y}, {2, Axis::Y}}, -1.0)};
  const auto full = enumerate_sector(N);
  for (const auto& p : strings) {
    const auto dense = dense_pauli(p, N);
    CHECK((pauli_string_to_operator(p, full).to_dense() - dense).norm() < 1e-14);
    CHECK((pauli_string_to_operator(p.adjoint(), full).to_dense() - dense.adjoint()).norm() < 1e-14);
    CHECK((pauli_string_to_operator(p.transpose(), full).to_dense() - dense.transpose()).norm() < 1e-14);
    for (const auto& q : strings) {
      CHECK((dense_pauli(p * q, N) - dense * dense_pauli(q, N)).norm() < 1e-14);
    }
  }
}

TEST_CASE("sigma^y convention") {
  const auto y = PauliString::single(0, Axis::Y);
  auto [up_image, up_amp] = y.act(1);
  CHECK(up_image == 0);
  CHECK(std::abs(up_amp - cplx(0, 1)) < 1e-15);
  auto [down_image, down_amp] = y.act(0);
  CHECK(down_image == 1);
  CHECK(std::abs(down_amp - cplx(0, -1)) < 1e-15);
  CHECK(PauliString::single(0, Axis::Z).act(1).second == cplx(1.0));
}

TEST_CASE("strict Pauli operators refuse to leave a sector") {
  const auto sector = enumerate_sector(4, 0);
  CHECK_THROWS_AS(pauli_string_to_operator(PauliString::single(1, Axis::X), sector), SectorViolation);
  CHECK_NOTHROW(pauli_string_to_operator(PauliString({{0, Axis::Z}, {3, Axis::Z}}), sector));
  const auto psi = PureState::basis_state(sector, 0b0011);
  CHECK_THROWS_AS(apply(PauliString::single(0, Axis::X), psi), SectorViolation);
}

TEST_CASE("expectations agree with dense algebra on sector states") {
  const int N = 6;
  const auto sector = enumerate_sector(N, 0);
  const auto full = enumerate_sector(N);
  oracle::Vec v = oracle::random_state(Eigen::Index(sector->dim()), 7);
  const PureState psi(sector, v);
  const PureState wide = embed(psi, full);
  const PauliString p({{0, Axis::X}, {3, Axis::X}, {4, Axis::Z}});
  const cplx dense = wide.amplitudes().dot(dense_pauli(p, N) * wide.amplitudes());
  CHECK(std::abs(expectation(p, psi) - dense) < 1e-13);
  CHECK(std::abs(expectation(PauliString::single(2, Axis::X), psi)) < 1e-15);
  CHECK(std::abs(inner(wide, wide) - 1.0) < 1e-13);
  CHECK((restrict_to(wide, sector).amplitudes() - v).norm() < 1e-15);
}

TEST_CASE("widening application picks the smallest basis") {
  const int N = 4;
  const auto sector = enumerate_sector(N, 0);
  const auto psi = PureState::basis_state(sector, 0b0101);
  const auto flipped = apply_widening(PauliString::single(1, Axis::X), psi);
  REQUIRE(flipped.basis()->sector() == 2);
  CHECK(std::abs(flipped.amplitude(0b0111) - 1.0) < 1e-15);
  // A generic sector state is spread over two sectors after one flip.
  const PureState generic(sector, oracle::random_state(Eigen::Index(sector->dim()), 3));
  const auto spread = apply_widening(PauliString::single(1, Axis::X), generic);
  CHECK_FALSE(spread.basis()->sector().has_value());
  CHECK(spread.norm() == doctest::Approx(1.0));

  Vec mixed = Vec::Zero(16);
  mixed[0b0011] = std::sqrt(0.5);
  mixed[0b0111] = std::sqrt(0.5);
  const PureState sup(enumerate_sector(N), mixed);
  CHECK_FALSE(compact(sup).basis()->sector().has_value());
  const auto single = compact(PureState(enumerate_sector(N), oracle::Vec::Unit(16, 0b0101)));
  CHECK(single.basis()->sector() == 0);
  CHECK(std::abs(single.amplitude(0b0101) - 1.0) < 1e-15);
}

TEST_CASE("operator algebra") {
  const auto full = enumerate_sector(3);
  const auto x0 = pauli_string_to_operator(PauliString::single(0, Axis::X), full);
  const auto y0 = pauli_string_to_operator(PauliString::single(0, Axis::Y), full);
  const auto z0 = pauli_string_to_operator(PauliString::single(0, Axis::Z), full);
  CHECK(((x0 * y0) - z0.scaled(cplx(0, 1))).max_abs() < 1e-15);
  CHECK((y0.conjugate() + y0).max_abs() < 1e-15);
  CHECK(y0.is_hermitian());
  CHECK_FALSE((x0 * y0).is_hermitian());
  const auto sz = sz_total_operator(full);
  CHECK(std::abs(sz.to_dense()(7, 7).real() - 3.0) < 1e-15);
  CHECK(std::abs(sz.to_dense()(0, 0).real() + 3.0) < 1e-15);
}
