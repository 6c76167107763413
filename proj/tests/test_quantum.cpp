#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qdnn/error.hpp"
#include "qdnn/quantum.hpp"
#include "support.hpp"

using namespace qdnn;
using qdnn::test::random_density;

namespace {

CMatrix bell_phi_plus() {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 0.5;
  return m;
}

Errc code_of(const CMatrix& m) {
  try {
    validate_density_matrix(m);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("matrix was accepted");
  return Errc::ParseError;
}

}  // namespace

TEST_SUITE("quantum") {

TEST_CASE("validation rejects each invariant separately") {
  CMatrix m = CMatrix::Identity(4, 4) / 4.0;
  CHECK_NOTHROW(validate_density_matrix(m));

  CMatrix asym = m;
  asym(0, 1) = Complex(0.1, 0.0);
  CHECK(code_of(asym) == Errc::NotHermitian);

  CHECK(code_of(m * 1.01) == Errc::TraceNotOne);

  CMatrix neg = CMatrix::Zero(2, 2);
  neg(0, 0) = 1.2;
  neg(1, 1) = -0.2;
  CHECK(code_of(neg) == Errc::NotPositive);

  CMatrix odd = CMatrix::Identity(3, 3) / 3.0;
  CHECK_THROWS_AS(validate_density_matrix(odd), Error);
}

TEST_CASE("validation tolerates rounding-level asymmetry and negativity") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = Complex(0.0, 5e-13);
  const auto rho = validate_density_matrix(m);
  CHECK(rho(0, 1) == std::conj(rho(1, 0)));  // symmetrized to exactly Hermitian
  CHECK(von_neumann_entropy(rho) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("entropy of known spectra") {
  const double uniform[4] = {0.25, 0.25, 0.25, 0.25};
  CHECK(entropy_of_spectrum(uniform, 4) == doctest::Approx(2.0).epsilon(1e-15));
  const double pure[2] = {0.0, 1.0};
  CHECK(entropy_of_spectrum(pure, 2) == 0.0);
  const double noisy[2] = {-5e-11, 1.0};
  CHECK(entropy_of_spectrum(noisy, 2) == 0.0);
  const double bad[2] = {-1e-6, 1.0};
  CHECK_THROWS_AS(entropy_of_spectrum(bad, 2), Error);

  const double p[3] = {0.5, 0.3, 0.2};
  CHECK(entropy_of_spectrum(p, 3) == doctest::Approx(test::shannon({0.5, 0.3, 0.2})));
}

TEST_CASE("partial traces of a product state return the factors") {
  CounterRng rng(11);
  for (int k = 0; k < 20; ++k) {
    const CMatrix a = random_density(rng, 2), b = random_density(rng, 2);
    const auto rho = validate_density_matrix(kron(a, b));
    CHECK((partial_trace(rho, Subsystem::A).matrix() - a).norm() < 1e-14);
    CHECK((partial_trace(rho, Subsystem::B).matrix() - b).norm() < 1e-14);
  }
}

TEST_CASE("index convention: |a b> at row 2a + b") {
  CMatrix m = CMatrix::Zero(4, 4);
  m(1, 1) = 1.0;  // |0 1>
  const auto rho = validate_density_matrix(m);
  CHECK(std::abs(partial_trace(rho, Subsystem::A)(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(partial_trace(rho, Subsystem::B)(1, 1) - 1.0) < 1e-15);
}

TEST_CASE("projector pairs are complete orthogonal rank-one projectors") {
  CounterRng rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto dir = test::random_direction(rng);
    const auto p = measurement_projectors(dir);
    CHECK((p.plus + p.minus - CMatrix2::Identity()).norm() < 1e-15);
    CHECK((p.plus * p.plus - p.plus).norm() < 1e-15);
    CHECK((p.plus * p.minus).norm() < 1e-15);
    CHECK(std::abs(p.plus.trace() - 1.0) < 1e-15);
  }
}

TEST_CASE("Bloch angle canonicalization") {
  const auto d = BlochDirection::canonical(-0.3, 7.0);
  CHECK(d.theta >= 0.0);
  CHECK(d.theta <= std::numbers::pi);
  CHECK(d.phi >= 0.0);
  CHECK(d.phi < 2.0 * std::numbers::pi);
  const auto raw = Eigen::Vector3d(std::sin(-0.3) * std::cos(7.0), std::sin(-0.3) * std::sin(7.0),
                                   std::cos(-0.3));
  CHECK((d.unit_vector() - raw).norm() < 1e-14);
  CHECK((d.antipode().unit_vector() + raw).norm() < 1e-14);
}

TEST_CASE("measurement ensemble: probabilities sum to one, states are valid") {
  CounterRng rng(21);
  for (int k = 0; k < 50; ++k) {
    const auto rho = validate_density_matrix(random_density(rng, 4));
    const auto ens = measure_B(rho, test::random_direction(rng));
    const double p = ens.outcomes[0].probability + ens.outcomes[1].probability;
    CHECK(p == doctest::Approx(1.0).epsilon(1e-13));
    for (const auto& o : ens.outcomes) {
      REQUIRE(o.state.has_value());
      CHECK(o.state->dim() == 4);
    }
  }
}

TEST_CASE("null outcome carries no state") {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = 1.0;  // |00>
  const auto ens = measure_B(validate_density_matrix(m), BlochDirection::z());
  CHECK(ens.outcomes[0].probability == doctest::Approx(1.0));
  CHECK(ens.outcomes[1].probability == 0.0);
  CHECK_FALSE(ens.outcomes[1].state.has_value());
}

TEST_CASE("conditional entropy is symmetric under the antipodal direction") {
  CounterRng rng(8);
  for (int k = 0; k < 30; ++k) {
    const auto rho = validate_density_matrix(random_density(rng, 4));
    const auto dir = test::random_direction(rng);
    CHECK(conditional_entropy(rho, dir) ==
          doctest::Approx(conditional_entropy(rho, dir.antipode())).epsilon(1e-12));
  }
}

TEST_CASE("closed-form discords") {
  const auto bell = validate_density_matrix(bell_phi_plus());
  CHECK(quantum_discord(bell) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(minimize_conditional_entropy(bell).c_min == doctest::Approx(0.0).epsilon(1e-9));

  CMatrix cl = CMatrix::Zero(4, 4);
  cl(0, 0) = cl(3, 3) = 0.5;
  CHECK(std::abs(quantum_discord(validate_density_matrix(cl))) < 1e-6);

  CounterRng rng(3);
  for (int k = 0; k < 10; ++k) {
    const CMatrix a = random_density(rng, 2), b = random_density(rng, 2);
    const auto rho = validate_density_matrix(kron(a, b));
    CHECK(std::abs(quantum_discord(rho)) < 1e-6);
    // Measuring B leaves A untouched, so c = S(rho_A).
    CHECK(minimize_conditional_entropy(rho).c_min ==
          doctest::Approx(von_neumann_entropy(validate_density_matrix(a))).epsilon(1e-6));
  }
}

TEST_CASE("Werner states match the known discord curve") {
  for (double p : {0.1, 0.3, 0.5, 0.8, 1.0}) {
    const auto rho = validate_density_matrix(test::werner_state(p));
    CHECK(quantum_discord(rho) == doctest::Approx(test::werner_discord(p)).epsilon(1e-6));
  }
}

TEST_CASE("maximally mixed state: conditional entropy is one everywhere") {
  const auto rho = validate_density_matrix(CMatrix::Identity(4, 4) / 4.0);
  CounterRng rng(4);
  for (int k = 0; k < 50; ++k)
    CHECK(conditional_entropy(rho, test::random_direction(rng)) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("property: c_min is invariant under local unitaries on A") {
  CounterRng rng(31);
  for (int k = 0; k < 10; ++k) {
    const CMatrix m = random_density(rng, 4);
    const CMatrix u = kron(test::random_unitary(rng, 2), CMatrix::Identity(2, 2));
    const double c0 = minimize_conditional_entropy(validate_density_matrix(m)).c_min;
    const double c1 =
        minimize_conditional_entropy(validate_density_matrix(u * m * u.adjoint())).c_min;
    CHECK(c0 == doctest::Approx(c1).epsilon(1e-6));
  }
}

TEST_CASE("property: c_min bounded by every sampled direction, discord non-negative") {
  CounterRng rng(41);
  for (int k = 0; k < 15; ++k) {
    const auto rho = validate_density_matrix(k % 3 ? random_density(rng, 4)
                                                   : test::random_pure(rng, 4));
    const auto report = analyze_discord(rho);
    const double c = report.optimization.c_min;
    CHECK(conditional_entropy(rho, report.optimization.argmin) ==
          doctest::Approx(c).epsilon(1e-12));
    for (int j = 0; j < 20; ++j)
      CHECK(c <= conditional_entropy(rho, test::random_direction(rng)) + 1e-9);
    CHECK(report.discord >= -1e-9);
    CHECK(report.classical_correlation <= report.mutual_information + 1e-9);
    CHECK(report.mutual_information ==
          doctest::Approx(report.entropy_a + report.entropy_b - report.entropy_ab));
  }
}

TEST_CASE("optimizer configuration is validated") {
  OptimizerConfig cfg;
  cfg.theta_points = 3;
  CHECK_THROWS_AS(cfg.validate(), Error);
  const auto rho = validate_density_matrix(CMatrix::Identity(4, 4) / 4.0);
  CHECK_THROWS_AS(minimize_conditional_entropy(rho, cfg), Error);
}

}  // TEST_SUITE
