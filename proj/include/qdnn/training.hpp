#pragma once

// Gradient-descent training with a staircase learning-rate schedule,
// replicate experiments and checkpoints.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qdnn/datagen.hpp"
#include "qdnn/error.hpp"
#include "qdnn/models.hpp"

namespace qdnn {

struct TrainConfig {
  std::size_t steps = 300000;
  double lr0 = 0.2;
  double decay_factor = 0.98;  // 0.96 for real states
  std::size_t decay_interval = 3000;
  std::size_t hidden = 16;
  int degree = 6;
  std::size_t batch = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  ModelKind kind = ModelKind::DBNN;
  std::size_t log_interval = 1000;

  /// Throws ConfigInvalid.
  void validate() const;
};

/// Decay factor used for a family by default.
double default_decay(StateFamily f) noexcept;

/// lr0 * decay_factor^floor(step / decay_interval).
double lr_at_step(const TrainConfig& cfg, std::size_t step);

struct LossPoint {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;  // training loss of the weights before this step's update
};

struct RunRecord {
  std::uint64_t seed = 0;
  double train_loss = 0.0;  // of the final weights on the whole training set
  double test_loss = 0.0;   // NaN when no test set was given
  std::size_t steps = 0;    // updates applied
  bool diverged = false;
  bool dead_start = false;  // entropy branch inactive at initialization
  double seconds = 0.0;
  std::vector<LossPoint> trajectory;
};

struct TrainResult {
  RunRecord record;
  ModelWeights weights;
};

/// Thrown when the training loss stops being finite.
class DivergedError : public Error {
 public:
  DivergedError(std::size_t step, double loss);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Features and targets of a dataset, computed once and shared by runs.
struct PreparedData {
  StateFamily family = StateFamily::XState;
  int degree = 0;
  Matrix features;  // one row per sample
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
};

PreparedData prepare(const Dataset& ds, int degree);

/// Runs cfg.steps updates w <- w - lr_at_step(t) grad from
/// init_weights(cfg.kind, cfg.hidden, D, cfg.seed). cfg.steps = 0 is accepted
/// and yields the initial weights. Throws DivergedError.
TrainResult train(const TrainConfig& cfg, const PreparedData& data);
TrainResult train(const TrainConfig& cfg, const Dataset& ds);

/// Full-batch runs on one training set trained side by side, one shared
/// gradient pass per step. Each result is bitwise equal to train(cfgs[k]);
/// a run that diverges comes back with record.diverged set rather than
/// throwing. Throws ConfigInvalid for mini-batch configs.
std::vector<TrainResult> train_together(std::span<const TrainConfig> cfgs,
                                        const PreparedData& data);

struct Evaluation {
  double loss = 0.0;
  std::vector<double> truth;
  std::vector<double> prediction;
};

/// Throws ShapeMismatch when the model does not fit the data.
Evaluation evaluate(const ModelWeights& w, const PreparedData& data);
Evaluation evaluate(const ModelWeights& w, const Dataset& ds, int degree);

struct ReplicateReport {
  ModelKind kind = ModelKind::DBNN;
  std::vector<RunRecord> runs;
  std::size_t completed = 0;  // runs that did not diverge
  double mean_train_loss = 0.0;  // over completed runs, NaN if none
  double mean_test_loss = 0.0;
};

/// Seed of replicate `run` under base seed `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t run) noexcept;

/// `runs` independent trainings on one training set, seeds from
/// replicate_seed(cfg.seed, r), run on up to `threads` workers. Diverged runs
/// stay in the report with NaN losses and are left out of the means.
/// replicate_experiment for several configs at once, one report each.
/// Full-batch runs are trained together in one group per worker; the
/// grouping does not change any result.
std::vector<ReplicateReport> replicate_experiments(std::span<const TrainConfig> cfgs,
                                                   const PreparedData& train_set,
                                                   const PreparedData& test_set, std::size_t runs,
                                                   unsigned threads = 1);
ReplicateReport replicate_experiment(const TrainConfig& cfg, const PreparedData& train_set,
                                     const PreparedData& test_set, std::size_t runs,
                                     unsigned threads = 1);

/// "model,run,train_loss_1e-3,test_loss_1e-3" rows and a final "mean" row.
void write_report(std::ostream& out, const ReplicateReport& report);
/// "step,lr,train_loss" rows.
void write_trajectory(std::ostream& out, const RunRecord& run);

struct Checkpoint {
  TrainConfig config;
  StateFamily family = StateFamily::XState;
  std::size_t steps_done = 0;
  ModelWeights weights;
};

/// Text format: a "qdnn-checkpoint 1" line, header lines, every weight at
/// 17 significant digits in row-major order, and an FNV-1a checksum of all
/// preceding bytes.
void write_checkpoint(std::ostream& out, const Checkpoint& ck);
/// Throws FormatVersionUnsupported, CorruptChecksum or ParseError.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace qdnn
