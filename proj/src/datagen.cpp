#include "qdnn/datagen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qdnn/error.hpp"
#include "qdnn/parallel.hpp"

namespace qdnn {

namespace {

constexpr std::string_view kDatasetMagic = "qdnn-dataset";
constexpr int kDatasetVersion = 1;

// Index pairs of the real-state off-diagonals x4 .. x9.
constexpr std::array<std::array<int, 2>, 6> kRealOffDiagonal = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// Uniform point on the 3-simplex from the spacings of three sorted uniforms.
std::array<double, 4> simplex_point(CounterRng& rng) {
  std::array<double, 3> u = {rng.uniform(), rng.uniform(), rng.uniform()};
  std::sort(u.begin(), u.end());
  return {u[0], u[1] - u[0], u[2] - u[1], 1.0 - u[2]};
}

Complex polar_draw(CounterRng& rng, double bound) {
  const double r = rng.uniform() * bound;
  const double phase = rng.uniform() * 2.0 * std::numbers::pi;
  return std::polar(r, phase);
}

std::string next_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(Errc::ParseError, "unexpected end of input before " + std::string(what));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t j = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > j) out.push_back(s.substr(j, i - j));
  }
  return out;
}

// "key v1 v2 ..." with exactly `count` values.
std::vector<std::string> keyed(const std::string& line, std::string_view key, std::size_t count) {
  const auto tok = split_ws(line);
  if (tok.empty() || tok[0] != key || tok.size() != count + 1)
    throw Error(Errc::ParseError, "expected '" + std::string(key) + "' with " +
                                      std::to_string(count) + " value(s), got '" + line + "'");
  return {tok.begin() + 1, tok.end()};
}

template <class T>
T parse_integer(std::string_view token) {
  T v{};
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size())
    throw Error(Errc::ParseError, "not an integer: '" + std::string(token) + "'");
  return v;
}

}  // namespace

std::string_view family_name(StateFamily f) noexcept {
  return f == StateFamily::XState ? "xstate" : "real";
}

std::optional<StateFamily> parse_family(std::string_view name) noexcept {
  if (name == "xstate") return StateFamily::XState;
  if (name == "real") return StateFamily::Real;
  return std::nullopt;
}

int family_dimension(StateFamily f) noexcept { return f == StateFamily::XState ? 7 : 9; }

CMatrix4 real_state_matrix(const RealStateParams& p) {
  CMatrix4 m = CMatrix4::Zero();
  m(0, 0) = p.x[0];
  m(1, 1) = p.x[1];
  m(2, 2) = p.x[2];
  m(3, 3) = 1.0 - p.x[0] - p.x[1] - p.x[2];
  for (std::size_t k = 0; k < kRealOffDiagonal.size(); ++k) {
    const auto [i, j] = kRealOffDiagonal[k];
    m(i, j) = m(j, i) = p.x[3 + k];
  }
  return m;
}

DensityMatrix state_from_params(StateFamily f, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(family_dimension(f)))
    throw Error(Errc::ShapeMismatch, std::string(family_name(f)) + " parameters need " +
                                         std::to_string(family_dimension(f)) + " values, got " +
                                         std::to_string(x.size()));
  if (f == StateFamily::XState) {
    XStateParams p;
    std::copy(x.begin(), x.end(), p.x.begin());
    return xstate_from_params(p);
  }
  RealStateParams p;
  std::copy(x.begin(), x.end(), p.x.begin());
  for (double v : p.x)
    if (!std::isfinite(v)) throw Error(Errc::ConstraintViolated, "real-state parameter is not finite");
  return validate_density_matrix(real_state_matrix(p));
}

std::vector<double> params_from_state(StateFamily f, const CMatrix& m, double tol) {
  if (f == StateFamily::XState) {
    const auto p = xstate_params_from_matrix(m, tol);
    return {p.x.begin(), p.x.end()};
  }
  if (m.rows() != 4 || m.cols() != 4)
    throw Error(Errc::FamilyMismatch, "real-state parameters need a 4x4 matrix");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (std::abs(m(i, j).imag()) > tol)
        throw Error(Errc::FamilyMismatch, "matrix has imaginary entries");
  std::vector<double> x = {m(0, 0).real(), m(1, 1).real(), m(2, 2).real()};
  for (const auto& [i, j] : kRealOffDiagonal) x.push_back(m(i, j).real());
  return x;
}

void SamplerConfig::validate() const {
  if (max_rejections == 0) throw Error(Errc::ConfigInvalid, "max_rejections must be positive");
}

XStateParams sample_xstate(CounterRng& rng) {
  const auto d = simplex_point(rng);
  const Complex r14 = polar_draw(rng, std::sqrt(d[0] * d[3]));
  const Complex r23 = polar_draw(rng, std::sqrt(d[1] * d[2]));
  XStateParams p;
  p.x = {d[0], d[1], d[2], r14.real(), r14.imag(), r23.real(), r23.imag()};
  // The bound sqrt(ab) can round so that |rho|^2 exceeds ab by an ulp;
  // pull such draws back inside.
  auto clamp = [](double& re, double& im, double bound2) {
    const double n2 = re * re + im * im;
    if (n2 > bound2) {
      const double s = std::sqrt(bound2 / n2);
      re *= s;
      im *= s;
    }
  };
  clamp(p.x[3], p.x[4], d[0] * p.rho44());
  clamp(p.x[5], p.x[6], d[1] * d[2]);
  return p;
}

RealStateParams sample_real_state(const SamplerConfig& cfg, CounterRng& rng, RejectionStats* stats) {
  cfg.validate();
  for (std::size_t misses = 0;; ++misses) {
    if (misses >= cfg.max_rejections)
      throw Error(Errc::RejectionBudgetExhausted,
                  "no positive real state after " + std::to_string(misses) + " draws");
    const auto d = simplex_point(rng);
    RealStateParams p;
    p.x[0] = d[0];
    p.x[1] = d[1];
    p.x[2] = d[2];
    for (std::size_t k = 0; k < kRealOffDiagonal.size(); ++k) {
      const auto [i, j] = kRealOffDiagonal[k];
      const double bound = std::sqrt(d[i] * d[j]);
      p.x[3 + k] = rng.uniform(-bound, bound);
    }
    if (stats) ++stats->attempts;

    const Eigen::Matrix4d m = real_state_matrix(p).real();
    const double lowest =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lowest >= -kPsdTol) {
      if (stats) ++stats->accepted;
      return p;
    }
  }
}

StateSampler::StateSampler(const SamplerConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

std::vector<double> StateSampler::next() {
  if (cfg_.family == StateFamily::XState) {
    const auto p = sample_xstate(rng_);
    ++stats_.attempts;
    ++stats_.accepted;
    return {p.x.begin(), p.x.end()};
  }
  const auto p = sample_real_state(cfg_, rng_, &stats_);
  return {p.x.begin(), p.x.end()};
}

std::vector<double> label_states(StateFamily f, std::span<const std::vector<double>> params,
                                 const OptimizerConfig& oracle, unsigned threads) {
  oracle.validate();
  std::vector<double> labels(params.size());
  parallel_for(params.size(), threads, [&](std::size_t i) {
    labels[i] = minimize_conditional_entropy(state_from_params(f, params[i]), oracle).c_min;
  });
  return labels;
}

Dataset build_dataset(const SamplerConfig& sampler, std::size_t m, const OptimizerConfig& oracle,
                      unsigned threads) {
  if (m == 0) throw Error(Errc::ConfigInvalid, "dataset size must be at least 1");
  StateSampler s(sampler);
  Dataset ds;
  ds.family = sampler.family;
  ds.seed = sampler.seed;
  ds.oracle = oracle;
  ds.params.reserve(m);
  for (std::size_t i = 0; i < m; ++i) ds.params.push_back(s.next());
  ds.sampling = s.stats();
  ds.labels = label_states(ds.family, ds.params, oracle, threads);
  return ds;
}

std::uint64_t test_set_seed(std::uint64_t seed) noexcept { return derive_seed(seed, 0x7e57); }

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

double parse_double(std::string_view token) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size())
    throw Error(Errc::ParseError, "not a number: '" + std::string(token) + "'");
  return v;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  out << kDatasetMagic << ' ' << kDatasetVersion << '\n';
  out << "family " << family_name(ds.family) << '\n';
  out << "n " << ds.n() << '\n';
  out << "size " << ds.size() << '\n';
  out << "seed " << ds.seed << '\n';
  out << "oracle " << ds.oracle.theta_points << ' ' << ds.oracle.phi_points << ' '
      << ds.oracle.starts << ' ' << format_double(ds.oracle.tol) << ' '
      << ds.oracle.max_iterations << '\n';
  out << "sampling " << ds.sampling.attempts << ' ' << ds.sampling.accepted << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.params[i]) out << format_double(v) << ' ';
    out << format_double(ds.labels[i]) << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  {
    const auto tok = split_ws(next_line(in, "header"));
    if (tok.size() != 2 || tok[0] != kDatasetMagic)
      throw Error(Errc::ParseError, "not a dataset file");
    if (tok[1] != std::to_string(kDatasetVersion))
      throw Error(Errc::FormatVersionUnsupported,
                  "dataset format version " + std::string(tok[1]) + " is not supported");
  }
  Dataset ds;
  const auto fam = keyed(next_line(in, "family"), "family", 1)[0];
  const auto family = parse_family(fam);
  if (!family) throw Error(Errc::ParseError, "unknown family '" + std::string(fam) + "'");
  ds.family = *family;
  const int n = parse_integer<int>(keyed(next_line(in, "n"), "n", 1)[0]);
  if (n != ds.n())
    throw Error(Errc::FamilyMismatch, "n = " + std::to_string(n) + " does not match family " +
                                          std::string(fam));
  const auto size = parse_integer<std::size_t>(keyed(next_line(in, "size"), "size", 1)[0]);
  ds.seed = parse_integer<std::uint64_t>(keyed(next_line(in, "seed"), "seed", 1)[0]);
  const auto oracle = keyed(next_line(in, "oracle"), "oracle", 5);
  ds.oracle.theta_points = parse_integer<int>(oracle[0]);
  ds.oracle.phi_points = parse_integer<int>(oracle[1]);
  ds.oracle.starts = parse_integer<int>(oracle[2]);
  ds.oracle.tol = parse_double(oracle[3]);
  ds.oracle.max_iterations = parse_integer<int>(oracle[4]);
  const auto sampling = keyed(next_line(in, "sampling"), "sampling", 2);
  ds.sampling.attempts = parse_integer<std::uint64_t>(sampling[0]);
  ds.sampling.accepted = parse_integer<std::uint64_t>(sampling[1]);

  ds.params.reserve(size);
  ds.labels.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::string line = next_line(in, "record " + std::to_string(i + 1));
    const auto tok = split_ws(line);
    if (tok.size() != static_cast<std::size_t>(n) + 1)
      throw Error(Errc::ParseError, "record " + std::to_string(i + 1) + " has " +
                                        std::to_string(tok.size()) + " fields, expected " +
                                        std::to_string(n + 1));
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[k] = parse_double(tok[k]);
    state_from_params(ds.family, x);  // every record must be a valid state
    ds.params.push_back(std::move(x));
    ds.labels.push_back(parse_double(tok[n]));
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  write_dataset(out, ds);
  if (!out) throw Error(Errc::IoError, "write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return read_dataset(in);
}

void write_state(std::ostream& out, const CMatrix& m) {
  out << "dim " << m.rows() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << format_double(m(i, j).real()) << ' ' << format_double(m(i, j).imag()) << '\n';
}

CMatrix read_state_matrix(std::istream& in) {
  const int dim = parse_integer<int>(keyed(next_line(in, "dim"), "dim", 1)[0]);
  if (dim != 2 && dim != 4) throw Error(Errc::ParseError, "state dimension must be 2 or 4");
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const std::string line = next_line(in, "matrix entry");
      const auto tok = split_ws(line);
      if (tok.size() != 2) throw Error(Errc::ParseError, "expected 're im', got '" + line + "'");
      m(i, j) = Complex(parse_double(tok[0]), parse_double(tok[1]));
    }
  return m;
}

DensityMatrix load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return validate_density_matrix(read_state_matrix(in));
}

}  // namespace qdnn
