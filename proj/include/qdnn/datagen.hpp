#pragma once

// Random valid two-qubit states of the X and all-real families, oracle
// labeling, and the dataset / state file formats.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdnn/quantum.hpp"
#include "qdnn/rng.hpp"
#include "qdnn/xstate.hpp"

namespace qdnn {

enum class StateFamily { XState, Real };

std::string_view family_name(StateFamily f) noexcept;  // "xstate", "real"
std::optional<StateFamily> parse_family(std::string_view name) noexcept;

/// Length of the raw parameter vector: 7 for X-states, 9 for real states.
int family_dimension(StateFamily f) noexcept;

/// rho11 = x1, rho22 = x2, rho33 = x3, rho44 = 1 - x1 - x2 - x3; the
/// off-diagonals x4 .. x9 are rho12, rho13, rho14, rho23, rho24, rho34.
struct RealStateParams {
  std::array<double, 9> x{};
};

/// Unchecked assembly of the symmetric 4x4 matrix.
CMatrix4 real_state_matrix(const RealStateParams& p);

/// Validated state from a raw parameter vector of either family. Throws
/// ShapeMismatch on a wrong length, ConstraintViolated or the validation
/// errors otherwise.
DensityMatrix state_from_params(StateFamily f, std::span<const double> x);

/// Raw parameters of a state in family f. Throws FamilyMismatch when the
/// matrix has entries the family cannot represent (beyond `tol`).
std::vector<double> params_from_state(StateFamily f, const CMatrix& m, double tol = 1e-12);

struct SamplerConfig {
  StateFamily family = StateFamily::XState;
  std::uint64_t seed = 0;
  std::size_t max_rejections = 10000;  // per accepted real state

  /// Throws ConfigInvalid.
  void validate() const;
};

struct RejectionStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;

  double acceptance_rate() const noexcept {
    return attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0;
  }
};

/// Diagonal uniform on the 3-simplex, |rho14| uniform on [0, sqrt(rho11 rho44)]
/// and |rho23| on [0, sqrt(rho22 rho33)], each with a uniform phase.
XStateParams sample_xstate(CounterRng& rng);

/// Diagonal uniform on the 3-simplex, each off-diagonal uniform within
/// +-sqrt(rho_ii rho_jj); draws with an eigenvalue below -kPsdTol are
/// discarded. Throws RejectionBudgetExhausted after max_rejections misses.
RealStateParams sample_real_state(const SamplerConfig& cfg, CounterRng& rng,
                                  RejectionStats* stats = nullptr);

/// Draws raw parameter vectors sequentially from cfg.seed.
class StateSampler {
 public:
  explicit StateSampler(const SamplerConfig& cfg);

  std::vector<double> next();
  const RejectionStats& stats() const noexcept { return stats_; }
  const SamplerConfig& config() const noexcept { return cfg_; }

 private:
  SamplerConfig cfg_;
  CounterRng rng_;
  RejectionStats stats_;
};

struct Dataset {
  StateFamily family = StateFamily::XState;
  std::uint64_t seed = 0;
  OptimizerConfig oracle;
  std::vector<std::vector<double>> params;  // raw parameter vectors
  std::vector<double> labels;               // c in bits
  RejectionStats sampling;

  std::size_t size() const noexcept { return labels.size(); }
  int n() const noexcept { return family_dimension(family); }
};

/// Samples m states from `sampler` and labels each with the oracle c_min.
/// Labeling runs on up to `threads` workers (0 = all cores); the result is
/// independent of the thread count.
Dataset build_dataset(const SamplerConfig& sampler, std::size_t m, const OptimizerConfig& oracle,
                      unsigned threads = 0);

/// Oracle labels for existing parameter vectors, in input order.
std::vector<double> label_states(StateFamily f, std::span<const std::vector<double>> params,
                                 const OptimizerConfig& oracle, unsigned threads = 0);

/// Seed of the test set drawn alongside a training set with seed `seed`.
std::uint64_t test_set_seed(std::uint64_t seed) noexcept;

inline constexpr std::size_t kDefaultTrainSize = 6000;
inline constexpr std::size_t kDefaultTestSize = 2000;

/// Text format: a "qdnn-dataset 1" line, header lines (family, n, size,
/// seed, oracle, sampling), then one record per line with the parameters
/// and the label at 17 significant digits.
void write_dataset(std::ostream& out, const Dataset& ds);
/// Throws ParseError, FormatVersionUnsupported, or a validation error for a
/// record that is not a state of the family.
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// State file: "dim N" then N*N lines "re im", row-major, 17 significant
/// digits. Reading validates the matrix.
void write_state(std::ostream& out, const CMatrix& m);
CMatrix read_state_matrix(std::istream& in);
DensityMatrix load_state(const std::string& path);

/// v at 17 significant digits, which reads back exactly.
std::string format_double(double v);
/// Throws ParseError unless the whole token is a number.
double parse_double(std::string_view token);

}  // namespace qdnn
