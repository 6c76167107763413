#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qdnn/datagen.hpp"
#include "qdnn/error.hpp"
#include "support.hpp"

using namespace qdnn;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::IoError;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("family names and dimensions") {
  CHECK(parse_family("xstate") == StateFamily::XState);
  CHECK(parse_family("real") == StateFamily::Real);
  CHECK_FALSE(parse_family("X").has_value());
  CHECK(family_dimension(StateFamily::XState) == 7);
  CHECK(family_dimension(StateFamily::Real) == 9);
}

TEST_CASE("X-state samples are always valid and inside both coherence bounds") {
  CounterRng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const auto p = sample_xstate(rng);
    CHECK_NOTHROW(check_xstate_constraints(p));
    REQUIRE(std::norm(p.rho14()) <= p.rho11() * p.rho44());
    REQUIRE(std::norm(p.rho23()) <= p.rho22() * p.rho33());
    const auto rho = validate_density_matrix(xstate_matrix(p));
    REQUIRE(rho.dim() == 4);
  }
}

TEST_CASE("real-state samples are positive with unit trace; acceptance is recorded") {
  SamplerConfig cfg;
  cfg.family = StateFamily::Real;
  cfg.seed = 3;
  StateSampler sampler(cfg);
  for (int k = 0; k < 2000; ++k) {
    const auto x = sampler.next();
    RealStateParams p;
    std::copy(x.begin(), x.end(), p.x.begin());
    const CMatrix4 m = real_state_matrix(p);
    CHECK(std::abs(m.trace().real() - 1.0) < 1e-12);
    CHECK(hermitian_eigenvalues(m)(0) >= -kPsdTol);
    for (const auto& [i, j] : {std::pair{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})
      CHECK(std::norm(m(i, j)) <= m(i, i).real() * m(j, j).real());
  }
  const auto& st = sampler.stats();
  CHECK(st.accepted == 2000);
  CHECK(st.attempts >= st.accepted);
  CHECK(st.acceptance_rate() > 0.0);
  CHECK(st.acceptance_rate() < 1.0);
}

TEST_CASE("rejection budget is enforced") {
  SamplerConfig cfg;
  cfg.family = StateFamily::Real;
  cfg.max_rejections = 1;
  CounterRng rng(5);
  bool raised = false;
  for (int k = 0; k < 200 && !raised; ++k) {
    try {
      sample_real_state(cfg, rng);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::RejectionBudgetExhausted);
      raised = true;
    }
  }
  CHECK(raised);
  cfg.max_rejections = 0;
  CHECK(code_of([&] { cfg.validate(); }) == Errc::ConfigInvalid);
}

TEST_CASE("samplers are deterministic per seed and differ across seeds") {
  for (auto f : {StateFamily::XState, StateFamily::Real}) {
    SamplerConfig a{f, 11}, b{f, 11}, c{f, 12};
    StateSampler sa(a), sb(b), sc(c);
    bool differs = false;
    for (int k = 0; k < 100; ++k) {
      const auto x = sa.next();
      CHECK(x == sb.next());
      if (x != sc.next()) differs = true;
    }
    CHECK(differs);
  }
}

TEST_CASE("parameter vectors round-trip through matrices") {
  for (auto f : {StateFamily::XState, StateFamily::Real}) {
    StateSampler s({f, 21});
    for (int k = 0; k < 50; ++k) {
      const auto x = s.next();
      const auto rho = state_from_params(f, x);
      CHECK(params_from_state(f, rho.matrix()) == x);
    }
  }
  CHECK(code_of([] { state_from_params(StateFamily::Real, std::vector<double>(7, 0.1)); }) ==
        Errc::ShapeMismatch);
  CounterRng rng(2);
  const CMatrix generic = test::random_density(rng, 4);
  CHECK(code_of([&] { params_from_state(StateFamily::XState, generic); }) ==
        Errc::FamilyMismatch);
  CHECK(code_of([&] { params_from_state(StateFamily::Real, generic); }) == Errc::FamilyMismatch);
}

TEST_CASE("labels: X-states in [0, 1], independent of the thread count, reproducible") {
  SamplerConfig cfg{StateFamily::XState, 8};
  const auto one = build_dataset(cfg, 24, {}, 1);
  const auto many = build_dataset(cfg, 24, {}, 4);
  CHECK(one.params == many.params);
  CHECK(one.labels == many.labels);
  for (double c : one.labels) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0 + 1e-12);
  }
  const auto again = label_states(StateFamily::XState, one.params, {}, 2);
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(std::abs(again[i] - one.labels[i]) < 1e-6);
  CHECK(test_set_seed(8) != 8);
}

TEST_CASE("product-state label equals the entropy of qubit A") {
  // diag(p, 1-p) x diag(q, 1-q) is both an X-state and a real state.
  const double p = 0.3, q = 0.8;
  const std::vector<double> x = {p * q, p * (1 - q), (1 - p) * q, 0, 0, 0, 0};
  const std::vector<std::vector<double>> one = {x};
  const auto c = label_states(StateFamily::XState, one, {}, 1);
  CHECK(c[0] == doctest::Approx(test::shannon({p, 1 - p})).epsilon(1e-6));
}

TEST_CASE("dataset text format round-trips exactly") {
  SamplerConfig cfg{StateFamily::Real, 4};
  const auto ds = build_dataset(cfg, 5, {}, 1);
  std::stringstream ss;
  write_dataset(ss, ds);
  const auto back = read_dataset(ss);
  CHECK(back.family == ds.family);
  CHECK(back.seed == ds.seed);
  CHECK(back.params == ds.params);
  CHECK(back.labels == ds.labels);
  CHECK(back.sampling.attempts == ds.sampling.attempts);
  CHECK(back.oracle.theta_points == ds.oracle.theta_points);

  std::string text = ss.str();
  std::stringstream bad(text.replace(text.find("qdnn-dataset 1"), 14, "qdnn-dataset 9"));
  CHECK(code_of([&] { read_dataset(bad); }) == Errc::FormatVersionUnsupported);
  std::stringstream cut(ss.str().substr(0, ss.str().size() / 2));
  CHECK(code_of([&] { read_dataset(cut); }) == Errc::ParseError);
}

TEST_CASE("state files round-trip and validate") {
  CounterRng rng(6);
  const CMatrix m = test::random_density(rng, 4);
  std::stringstream ss;
  write_state(ss, m);
  CHECK(read_state_matrix(ss) == m);
  std::stringstream junk("dim 4\n1 0\n");
  CHECK(code_of([&] { read_state_matrix(junk); }) == Errc::ParseError);
}

TEST_CASE("17-digit formatting reads back bit-exactly") {
  CounterRng rng(10);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform(-60, 60)));
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(format_double(0.1)) == 0.1);
  CHECK(code_of([] { parse_double("1.5x"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_double(""); }) == Errc::ParseError);
}

}  // TEST_SUITE
