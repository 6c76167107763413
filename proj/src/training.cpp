#include "qdnn/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qdnn/features.hpp"
#include "qdnn/parallel.hpp"

namespace qdnn {

namespace {

constexpr std::string_view kCheckpointMagic = "qdnn-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Rows `order[first, first + count)` of the data.
void gather(const PreparedData& data, const std::vector<std::size_t>& order, std::size_t first,
            std::size_t count, Matrix& rows, std::vector<double>& targets) {
  const Matrix& all = data.features;
  if (rows.rows() != count || rows.cols() != all.cols()) rows = Matrix(count, all.cols());
  targets.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = all.row(order[first + i]);
    std::copy(src.begin(), src.end(), rows.row(i).begin());
    targets[i] = data.targets[order[first + i]];
  }
}

// Fisher-Yates shuffle of 0 .. m-1 from a counter stream.
void shuffle(std::vector<std::size_t>& order, std::uint64_t stream) {
  CounterRng rng(stream);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
}

double mean_of(const std::vector<RunRecord>& runs, double RunRecord::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs)
    if (!r.diverged) {
      sum += r.*field;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : kNaN;
}

std::string loss_e3(double v) { return std::isfinite(v) ? format_double(v * 1e3) : "nan"; }

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw Error(Errc::ConfigInvalid, "steps must be >= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw Error(Errc::ConfigInvalid, "lr0 must be > 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0))
    throw Error(Errc::ConfigInvalid, "decay factor must lie in (0, 1]");
  if (decay_interval < 1) throw Error(Errc::ConfigInvalid, "decay interval must be >= 1");
  if (hidden < 1 || hidden > kMaxFusedHidden)
    throw Error(Errc::ConfigInvalid,
                "hidden width must lie in [1, " + std::to_string(kMaxFusedHidden) + "]");
  if (degree < 0) throw Error(Errc::ConfigInvalid, "degree must be >= 0");
  if (log_interval < 1) throw Error(Errc::ConfigInvalid, "log interval must be >= 1");
}

double default_decay(StateFamily f) noexcept { return f == StateFamily::XState ? 0.98 : 0.96; }

double lr_at_step(const TrainConfig& cfg, std::size_t step) {
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(step / cfg.decay_interval));
}

DivergedError::DivergedError(std::size_t step, double loss)
    : Error(Errc::Diverged,
            "training loss became " + format_double(loss) + " at step " + std::to_string(step)),
      step_(step) {}

PreparedData prepare(const Dataset& ds, int degree) {
  if (ds.size() == 0) throw Error(Errc::EmptyBatch, "dataset is empty");
  PreparedData p;
  p.family = ds.family;
  p.degree = degree;
  p.features = FeatureBasis(ds.n(), degree).evaluate_rows(ds.params);
  p.targets = ds.labels;
  return p;
}

namespace {

void validate_allowing_zero_steps(const TrainConfig& cfg) {
  // A zero-step run is allowed here; it returns the initial weights.
  TrainConfig check = cfg;
  check.steps = std::max<std::size_t>(check.steps, 1);
  check.validate();
}

bool full_batch(const TrainConfig& cfg, const PreparedData& data) {
  return cfg.batch == 0 || cfg.batch >= data.size();
}

struct Run {
  TrainResult result;
  double bad_loss = 0.0;  // the non-finite loss of a diverged run
};

TrainResult start_run(const TrainConfig& cfg, const PreparedData& data) {
  TrainResult out;
  out.record.seed = cfg.seed;
  out.record.test_loss = kNaN;
  out.weights = init_weights(cfg.kind, cfg.hidden, data.features.cols(), cfg.seed);
  out.record.dead_start = entropy_branch_dead(out.weights, forward(out.weights, data.features));
  return out;
}

void finish_run(const TrainConfig& cfg, const PreparedData& data, Run& run) {
  RunRecord& rec = run.result.record;
  rec.steps = cfg.steps;
  rec.train_loss = evaluate(run.result.weights, data).loss;
  if (!std::isfinite(rec.train_loss)) {
    rec.diverged = true;
    run.bad_loss = rec.train_loss;
    return;
  }
  rec.trajectory.push_back({cfg.steps, lr_at_step(cfg, cfg.steps), rec.train_loss});
}

// Full-batch runs advanced step by step together, sharing each gradient
// pass. Runs that finish or diverge leave the stack.
std::vector<Run> train_lockstep(std::span<const TrainConfig> cfgs, const PreparedData& data) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Run> runs(cfgs.size());
  for (std::size_t k = 0; k < cfgs.size(); ++k) runs[k].result = start_run(cfgs[k], data);

  std::vector<std::size_t> active;
  std::vector<const ModelWeights*> models;
  std::vector<ModelWeights> grads;
  std::vector<double> losses;
  GradientWorkspace ws;
  for (std::size_t t = 0;; ++t) {
    active.clear();
    models.clear();
    for (std::size_t k = 0; k < cfgs.size(); ++k)
      if (!runs[k].result.record.diverged && t < cfgs[k].steps) {
        active.push_back(k);
        models.push_back(&runs[k].result.weights);
      }
    if (active.empty()) break;
    grads.resize(active.size());
    losses.resize(active.size());
    loss_and_gradient(models, data.features, data.targets, grads, losses, ws);

    for (std::size_t j = 0; j < active.size(); ++j) {
      const TrainConfig& cfg = cfgs[active[j]];
      Run& run = runs[active[j]];
      if (!std::isfinite(losses[j])) {
        run.result.record.diverged = true;
        run.result.record.steps = t;
        run.bad_loss = losses[j];
        continue;
      }
      const double lr = lr_at_step(cfg, t);
      if (t % cfg.log_interval == 0) run.result.record.trajectory.push_back({t, lr, losses[j]});
      run.result.weights.add_scaled(grads[j], -lr);
    }
  }

  for (std::size_t k = 0; k < cfgs.size(); ++k)
    if (!runs[k].result.record.diverged) finish_run(cfgs[k], data, runs[k]);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (auto& run : runs) run.result.record.seconds = seconds;
  return runs;
}

Run train_minibatch(const TrainConfig& cfg, const PreparedData& data) {
  const auto start = std::chrono::steady_clock::now();
  Run run;
  run.result = start_run(cfg, data);
  ModelWeights& w = run.result.weights;
  RunRecord& rec = run.result.record;

  const std::size_t m = data.size();
  std::vector<std::size_t> order(m);
  std::vector<double> batch_targets;
  Matrix batch_rows;
  std::size_t cursor = m, epoch = 0;
  ModelWeights grad;
  GradientWorkspace ws;

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    if (cursor + cfg.batch > m) {
      shuffle(order, derive_seed(derive_seed(cfg.seed, 4), epoch++));
      cursor = 0;
    }
    gather(data, order, cursor, cfg.batch, batch_rows, batch_targets);
    cursor += cfg.batch;

    const double loss = loss_and_gradient(w, batch_rows, batch_targets, grad, ws);
    if (!std::isfinite(loss)) {
      rec.diverged = true;
      rec.steps = t;
      run.bad_loss = loss;
      return run;
    }
    const double lr = lr_at_step(cfg, t);
    if (t % cfg.log_interval == 0) rec.trajectory.push_back({t, lr, loss});
    w.add_scaled(grad, -lr);
  }
  finish_run(cfg, data, run);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const PreparedData& data) {
  validate_allowing_zero_steps(cfg);
  if (data.size() == 0) throw Error(Errc::EmptyBatch, "training set is empty");
  Run run = full_batch(cfg, data) ? std::move(train_lockstep({&cfg, 1}, data)[0])
                                  : train_minibatch(cfg, data);
  if (run.result.record.diverged) throw DivergedError(run.result.record.steps, run.bad_loss);
  return std::move(run.result);
}

std::vector<TrainResult> train_together(std::span<const TrainConfig> cfgs,
                                        const PreparedData& data) {
  for (const auto& cfg : cfgs) {
    validate_allowing_zero_steps(cfg);
    if (!full_batch(cfg, data))
      throw Error(Errc::ConfigInvalid, "runs trained together must use the full batch");
  }
  if (data.size() == 0) throw Error(Errc::EmptyBatch, "training set is empty");
  std::vector<TrainResult> out;
  for (auto& run : train_lockstep(cfgs, data)) out.push_back(std::move(run.result));
  return out;
}

TrainResult train(const TrainConfig& cfg, const Dataset& ds) {
  return train(cfg, prepare(ds, cfg.degree));
}

Evaluation evaluate(const ModelWeights& w, const PreparedData& data) {
  Evaluation e;
  e.prediction = predict(w, data.features);
  e.truth = data.targets;
  e.loss = quadratic_loss(e.prediction, e.truth);
  return e;
}

Evaluation evaluate(const ModelWeights& w, const Dataset& ds, int degree) {
  return evaluate(w, prepare(ds, degree));
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t run) noexcept {
  return derive_seed(seed, 100 + run);
}

std::vector<ReplicateReport> replicate_experiments(std::span<const TrainConfig> cfgs,
                                                   const PreparedData& train_set,
                                                   const PreparedData& test_set, std::size_t runs,
                                                   unsigned threads) {
  for (const auto& cfg : cfgs) cfg.validate();
  if (runs < 1) throw Error(Errc::ConfigInvalid, "replicate count must be >= 1");
  if (train_set.size() == 0) throw Error(Errc::EmptyBatch, "training set is empty");
  if (test_set.features.cols() != train_set.features.cols())
    throw Error(Errc::ShapeMismatch, "training and test features differ");

  // Jobs are (config, run) pairs. Full-batch jobs are split into one
  // lockstep group per worker; mini-batch jobs run alone.
  struct Job {
    std::size_t report, run;
    TrainConfig cfg;
  };
  std::vector<Job> stacked, single;
  for (std::size_t c = 0; c < cfgs.size(); ++c)
    for (std::size_t r = 0; r < runs; ++r) {
      Job job{c, r, cfgs[c]};
      job.cfg.seed = replicate_seed(cfgs[c].seed, r);
      (full_batch(job.cfg, train_set) ? stacked : single).push_back(job);
    }
  const std::size_t groups = std::min<std::size_t>(
      stacked.size(), worker_count(threads, stacked.size() + single.size()));

  std::vector<ReplicateReport> reports(cfgs.size());
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    reports[c].kind = cfgs[c].kind;
    reports[c].runs.resize(runs);
  }
  auto store = [&](const Job& job, Run& run) {
    RunRecord& rec = reports[job.report].runs[job.run];
    rec = std::move(run.result.record);
    if (rec.diverged) {
      rec.trajectory.clear();
      rec.train_loss = rec.test_loss = kNaN;
    } else {
      rec.test_loss = evaluate(run.result.weights, test_set).loss;
    }
  };
  parallel_for(groups + single.size(), threads, [&](std::size_t i) {
    if (i >= groups) {
      const Job& job = single[i - groups];
      Run run = train_minibatch(job.cfg, train_set);
      store(job, run);
      return;
    }
    // Contiguous share of the stacked jobs.
    const std::size_t first = i * stacked.size() / groups;
    const std::size_t last = (i + 1) * stacked.size() / groups;
    std::vector<TrainConfig> group;
    for (std::size_t j = first; j < last; ++j) group.push_back(stacked[j].cfg);
    auto done = train_lockstep(group, train_set);
    for (std::size_t j = first; j < last; ++j) store(stacked[j], done[j - first]);
  });

  for (auto& report : reports) {
    for (const auto& r : report.runs) report.completed += r.diverged ? 0 : 1;
    report.mean_train_loss = mean_of(report.runs, &RunRecord::train_loss);
    report.mean_test_loss = mean_of(report.runs, &RunRecord::test_loss);
  }
  return reports;
}

ReplicateReport replicate_experiment(const TrainConfig& cfg, const PreparedData& train_set,
                                     const PreparedData& test_set, std::size_t runs,
                                     unsigned threads) {
  return std::move(replicate_experiments({&cfg, 1}, train_set, test_set, runs, threads)[0]);
}

void write_report(std::ostream& out, const ReplicateReport& report) {
  const std::string_view name = model_kind_name(report.kind);
  out << "model,run,train_loss_1e-3,test_loss_1e-3\n";
  for (std::size_t r = 0; r < report.runs.size(); ++r)
    out << name << ',' << r + 1 << ',' << loss_e3(report.runs[r].train_loss) << ','
        << loss_e3(report.runs[r].test_loss) << '\n';
  out << name << ",mean," << loss_e3(report.mean_train_loss) << ','
      << loss_e3(report.mean_test_loss) << '\n';
}

void write_trajectory(std::ostream& out, const RunRecord& run) {
  out << "step,lr,train_loss\n";
  for (const auto& p : run.trajectory)
    out << p.step << ',' << format_double(p.lr) << ',' << format_double(p.loss) << '\n';
}

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  const ModelWeights& w = ck.weights;
  std::ostringstream body;
  body << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  body << "kind " << model_kind_name(w.kind()) << '\n';
  body << "hidden " << w.hidden() << '\n';
  body << "features " << w.features() << '\n';
  body << "family " << family_name(ck.family) << '\n';
  body << "n " << family_dimension(ck.family) << '\n';
  body << "degree " << ck.config.degree << '\n';
  body << "seed " << ck.config.seed << '\n';
  body << "steps " << ck.steps_done << '\n';
  body << "lr0 " << format_double(ck.config.lr0) << '\n';
  body << "decay " << format_double(ck.config.decay_factor) << '\n';
  body << "decay_interval " << ck.config.decay_interval << '\n';
  body << "batch " << ck.config.batch << '\n';
  body << "input " << w.input().rows() << ' ' << w.input().cols() << '\n';
  for (std::size_t r = 0; r < w.input().rows(); ++r) {
    const auto row = w.input().row(r);
    for (std::size_t c = 0; c < row.size(); ++c)
      body << (c ? " " : "") << format_double(row[c]);
    body << '\n';
  }
  body << "output " << w.hidden() << '\n';
  for (std::size_t f = 0; f < w.hidden(); ++f)
    body << (f ? " " : "") << format_double(w.w2()[f]);
  body << '\n';
  const std::string text = body.str();
  out << text << "checksum " << hex64(fnv1a(text)) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  std::istringstream head(text);
  std::string magic, version;
  head >> magic >> version;
  if (magic != kCheckpointMagic) throw Error(Errc::ParseError, "not a checkpoint file");
  if (version != std::to_string(kCheckpointVersion))
    throw Error(Errc::FormatVersionUnsupported,
                "checkpoint format version " + version + " is not supported");

  const std::string_view key = "checksum ";
  const auto pos = text.rfind(key);
  if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n'))
    throw Error(Errc::CorruptChecksum, "checkpoint has no checksum line");
  std::string stored = text.substr(pos + key.size());
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (stored != hex64(fnv1a(std::string_view(text).substr(0, pos))))
    throw Error(Errc::CorruptChecksum, "checkpoint checksum does not match its contents");

  std::istringstream is(text.substr(0, pos));
  std::string line;
  std::getline(is, line);
  auto field = [&](std::string_view name) {
    std::string k, v;
    if (!(is >> k >> v) || k != name)
      throw Error(Errc::ParseError, "expected checkpoint field '" + std::string(name) + "'");
    return v;
  };
  auto number = [](const std::string& v) { return parse_double(v); };
  auto count = [](const std::string& v) -> std::size_t {
    const double d = parse_double(v);
    if (!(d >= 0.0) || d != std::floor(d)) throw Error(Errc::ParseError, "bad count '" + v + "'");
    return static_cast<std::size_t>(d);
  };

  Checkpoint ck;
  const std::string kind_name = field("kind");
  const auto kind = parse_model_kind(kind_name);
  if (!kind) throw Error(Errc::ParseError, "unknown model kind '" + kind_name + "'");
  ck.config.kind = *kind;
  ck.config.hidden = count(field("hidden"));
  const std::size_t features = count(field("features"));
  const std::string fam = field("family");
  const auto family = parse_family(fam);
  if (!family) throw Error(Errc::ParseError, "unknown family '" + fam + "'");
  ck.family = *family;
  if (count(field("n")) != static_cast<std::size_t>(family_dimension(ck.family)))
    throw Error(Errc::FamilyMismatch, "checkpoint n does not match its family");
  ck.config.degree = static_cast<int>(count(field("degree")));
  {
    const std::string s = field("seed");
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), ck.config.seed);
    if (ec != std::errc() || p != s.data() + s.size())
      throw Error(Errc::ParseError, "bad seed '" + s + "'");
  }
  ck.steps_done = count(field("steps"));
  ck.config.steps = std::max<std::size_t>(1, ck.steps_done);
  ck.config.lr0 = number(field("lr0"));
  ck.config.decay_factor = number(field("decay"));
  ck.config.decay_interval = count(field("decay_interval"));
  ck.config.batch = count(field("batch"));
  if (feature_dim(family_dimension(ck.family), ck.config.degree) != features)
    throw Error(Errc::FamilyMismatch, "feature dimension does not match n and degree");

  ck.weights = ModelWeights(ck.config.kind, ck.config.hidden, features);
  std::string rows_s = field("input"), cols_s;
  is >> cols_s;
  if (count(rows_s) != ck.weights.input().rows() || count(cols_s) != features)
    throw Error(Errc::ParseError, "input layer shape does not match the header");
  std::string tok;
  for (std::size_t r = 0; r < ck.weights.input().rows(); ++r)
    for (std::size_t c = 0; c < features; ++c) {
      if (!(is >> tok)) throw Error(Errc::ParseError, "checkpoint ends inside the input layer");
      ck.weights.input()(r, c) = parse_double(tok);
    }
  if (count(field("output")) != ck.config.hidden)
    throw Error(Errc::ParseError, "output layer size does not match the header");
  for (std::size_t f = 0; f < ck.config.hidden; ++f) {
    if (!(is >> tok)) throw Error(Errc::ParseError, "checkpoint ends inside the output layer");
    ck.weights.w2()[f] = parse_double(tok);
  }
  if (is >> tok) throw Error(Errc::ParseError, "unexpected data after the output layer");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  write_checkpoint(out, ck);
  if (!out) throw Error(Errc::IoError, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return read_checkpoint(in);
}

}  // namespace qdnn
