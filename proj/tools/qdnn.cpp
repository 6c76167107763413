// qdnn: discord oracle, dataset generation and network training from the
// command line. Tabular output is comma-separated; lines starting with '#'
// echo the resolved configuration.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdnn/datagen.hpp"
#include "qdnn/features.hpp"
#include "qdnn/kernels.hpp"
#include "qdnn/training.hpp"
#include "qdnn/xstate.hpp"

using namespace qdnn;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string family = "xstate";
  std::string model = "dbnn";
  std::string models = "nn,pknn,dbnn";
  std::size_t steps = 300000;
  double lr0 = 0.2;
  std::optional<double> decay;
  std::size_t decay_interval = 3000;
  int degree = 6;
  std::size_t hidden = kDefaultHidden;
  std::size_t train_size = kDefaultTrainSize;
  std::size_t test_size = kDefaultTestSize;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;

  std::size_t batch = 0;
  std::size_t runs = 5;
  std::size_t log_interval = 1000;
  std::string data, test_data, checkpoint, state, log;
  std::vector<double> params;
  bool oracle = false;
  double a_min = 0.0, a_max = 1.0;
};

StateFamily family_of(const Options& o) { return *parse_family(o.family); }

double decay_of(const Options& o) { return o.decay ? *o.decay : default_decay(family_of(o)); }

// Prints "# key = value" for every setting that shaped the result.
class Echo {
 public:
  explicit Echo(std::string command) : command_(std::move(command)) {}
  template <class T>
  Echo& operator()(const std::string& key, const T& value) {
    std::ostringstream os;
    os << value;
    items_.emplace_back(key, os.str());
    return *this;
  }
  // Shortest text that reads back to the same double.
  Echo& operator()(const std::string& key, double value) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    items_.emplace_back(key, std::string(buf, r.ptr));
    return *this;
  }
  void print(std::ostream& out) const {
    out << "# qdnn " << command_ << '\n';
    for (const auto& [k, v] : items_) out << "# " << k << " = " << v << '\n';
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> items_;
};

void echo_training(Echo& e, const Options& o, const std::string& models) {
  e("family", o.family)("model", models)("steps", o.steps)("lr0", o.lr0)("decay", decay_of(o))(
      "decay_interval", o.decay_interval)("degree", o.degree)("hidden", o.hidden)(
      "batch", o.batch == 0 ? std::string("full") : std::to_string(o.batch))("seed", o.seed)(
      "threads", o.threads)("isa", kernels::isa_name(kernels::active_isa()));
}

TrainConfig config_of(const Options& o, ModelKind kind) {
  TrainConfig cfg;
  cfg.steps = o.steps;
  cfg.lr0 = o.lr0;
  cfg.decay_factor = decay_of(o);
  cfg.decay_interval = o.decay_interval;
  cfg.hidden = o.hidden;
  cfg.degree = o.degree;
  cfg.batch = o.batch;
  cfg.seed = o.seed;
  cfg.kind = kind;
  cfg.log_interval = o.log_interval;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot write " + path);
  return f;
}

void log_sampling(const Dataset& ds, const char* what) {
  std::cerr << what << ": " << ds.size() << " " << family_name(ds.family) << " states, seed "
            << ds.seed << ", " << ds.sampling.accepted << " accepted of " << ds.sampling.attempts
            << " draws (acceptance " << ds.sampling.acceptance_rate() << ")\n";
}

// Loaded from --data / --test-data, or sampled from the seed.
Dataset training_set(const Options& o) {
  if (!o.data.empty()) {
    auto ds = load_dataset(o.data);
    if (ds.family != family_of(o))
      throw Error(Errc::FamilyMismatch, o.data + " holds " + std::string(family_name(ds.family)) +
                                            " states, --family is " + o.family);
    return ds;
  }
  auto ds = build_dataset({family_of(o), o.seed}, o.train_size, {}, o.threads);
  log_sampling(ds, "training set");
  return ds;
}

Dataset test_set(const Options& o) {
  if (!o.test_data.empty()) {
    auto ds = load_dataset(o.test_data);
    if (ds.family != family_of(o))
      throw Error(Errc::FamilyMismatch, o.test_data + " does not hold " + o.family + " states");
    return ds;
  }
  auto ds = build_dataset({family_of(o), test_set_seed(o.seed)}, o.test_size, {}, o.threads);
  log_sampling(ds, "test set");
  return ds;
}

std::vector<ModelKind> model_list(const std::string& s) {
  std::vector<ModelKind> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(*parse_model_kind(item));
  return out;
}

// Parameter vector from --params or --state for the given family.
std::vector<double> input_params(const Options& o, StateFamily f) {
  if (!o.params.empty()) {
    if (o.params.size() != static_cast<std::size_t>(family_dimension(f)))
      throw Error(Errc::FamilyMismatch, std::to_string(o.params.size()) +
                                            " parameters given, the model expects n = " +
                                            std::to_string(family_dimension(f)));
    state_from_params(f, o.params);
    return o.params;
  }
  return params_from_state(f, load_state(o.state).matrix());
}

DensityMatrix input_state(const Options& o) {
  if (!o.params.empty()) return state_from_params(family_of(o), o.params);
  return load_state(o.state);
}

// Commands --------------------------------------------------------------

int cmd_feature_dim(const Options& o, bool degree_given) {
  std::cout << "n,degree,dim\n";
  const int n = family_dimension(family_of(o));
  const int lo = degree_given ? o.degree : 1, hi = degree_given ? o.degree : 9;
  for (int l = lo; l <= hi; ++l) std::cout << n << ',' << l << ',' << feature_dim(n, l) << '\n';
  return 0;
}

int cmd_gen_data(const Options& o) {
  if (o.out.empty()) throw Error(Errc::ConfigInvalid, "gen-data needs --out PREFIX");
  Echo e("gen-data");
  e("family", o.family)("train_size", o.train_size)("test_size", o.test_size)("seed", o.seed)(
      "test_seed", test_set_seed(o.seed))("threads", o.threads)("out", o.out);
  e.print(std::cout);
  const auto train = training_set(o);
  save_dataset(o.out + ".train", train);
  std::cout << "train," << o.out << ".train," << train.size() << ',' << train.sampling.attempts
            << ',' << train.sampling.accepted << '\n';
  if (o.test_size > 0) {
    const auto test = test_set(o);
    save_dataset(o.out + ".test", test);
    std::cout << "test," << o.out << ".test," << test.size() << ',' << test.sampling.attempts
              << ',' << test.sampling.accepted << '\n';
  }
  return 0;
}

int cmd_discord(const Options& o) {
  const DensityMatrix rho = input_state(o);
  const auto r = analyze_discord(rho);
  Echo e("discord");
  e("input", o.params.empty() ? o.state : "params")("family", o.family);
  e.print(std::cout);
  std::cout << "quantity,value\n"
            << "S_A," << format_double(r.entropy_a) << '\n'
            << "S_B," << format_double(r.entropy_b) << '\n'
            << "S_AB," << format_double(r.entropy_ab) << '\n'
            << "mutual_information," << format_double(r.mutual_information) << '\n'
            << "classical_correlation," << format_double(r.classical_correlation) << '\n'
            << "c_min," << format_double(r.optimization.c_min) << '\n'
            << "discord," << format_double(r.discord) << '\n'
            << "theta," << format_double(r.optimization.argmin.theta) << '\n'
            << "phi," << format_double(r.optimization.argmin.phi) << '\n'
            << "evaluations," << r.optimization.evaluations << '\n';
  try {
    const auto p = xstate_params_from_matrix(rho.matrix());
    const auto c = pauli_candidates(p);
    std::cout << "candidate_z," << format_double(c.s_z) << '\n'
              << "candidate_x," << format_double(c.s_x) << '\n'
              << "candidate_y," << format_double(c.s_y) << '\n'
              << "analytic_c," << format_double(c.min()) << '\n';
  } catch (const Error&) {
    // Not an X-state: no closed form.
  }
  return 0;
}

int cmd_train(const Options& o) {
  const auto kinds = model_list(o.model);
  if (kinds.size() != 1) throw Error(Errc::ConfigInvalid, "train takes a single --model");
  const TrainConfig cfg = config_of(o, kinds[0]);
  Echo e("train");
  echo_training(e, o, o.model);
  e("train_size", o.data.empty() ? std::to_string(o.train_size) : o.data)(
      "test_size", o.test_data.empty() ? std::to_string(o.test_size) : o.test_data)(
      "out", o.out.empty() ? "-" : o.out);
  e.print(std::cout);

  const auto train_ds = training_set(o);
  const auto train_data = prepare(train_ds, cfg.degree);
  const auto result = train(cfg, train_data);
  double test_loss = std::nan("");
  if (o.test_size > 0 || !o.test_data.empty())
    test_loss = evaluate(result.weights, prepare(test_set(o), cfg.degree)).loss;

  write_trajectory(std::cout, result.record);
  std::cout << "# dead_start = " << (result.record.dead_start ? "yes" : "no") << '\n'
            << "# seconds = " << result.record.seconds << '\n'
            << "result,train_loss," << format_double(result.record.train_loss) << '\n'
            << "result,test_loss," << format_double(test_loss) << '\n';
  if (!o.log.empty()) {
    auto f = open_out(o.log);
    write_trajectory(f, result.record);
  }
  if (!o.out.empty())
    save_checkpoint(o.out, {cfg, train_ds.family, result.record.steps, result.weights});
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty()) throw Error(Errc::ConfigInvalid, "eval needs --checkpoint");
  const auto ck = load_checkpoint(o.checkpoint);
  Options eo = o;
  eo.family = std::string(family_name(ck.family));
  Echo e("eval");
  e("checkpoint", o.checkpoint)("family", eo.family)("degree", ck.config.degree)(
      "data", o.test_data.empty() ? "sampled" : o.test_data)("test_size", o.test_size)(
      "seed", o.seed)("out", o.out.empty() ? "-" : o.out);
  e.print(std::cout);
  const auto ds = test_set(eo);
  const auto ev = evaluate(ck.weights, ds, ck.config.degree);
  std::cout << "result,loss," << format_double(ev.loss) << '\n';
  if (!o.out.empty()) {
    auto f = open_out(o.out);
    f << "truth,prediction\n";
    for (std::size_t i = 0; i < ev.truth.size(); ++i)
      f << format_double(ev.truth[i]) << ',' << format_double(ev.prediction[i]) << '\n';
  }
  return 0;
}

int cmd_replicate(const Options& o) {
  const auto kinds = model_list(o.models);
  Echo e("replicate");
  echo_training(e, o, o.models);
  e("runs", o.runs)("train_size", o.data.empty() ? std::to_string(o.train_size) : o.data)(
      "test_size", o.test_data.empty() ? std::to_string(o.test_size) : o.test_data)(
      "out", o.out.empty() ? "-" : o.out);
  e.print(std::cout);

  const auto train_data = prepare(training_set(o), o.degree);
  const auto test_data = prepare(test_set(o), o.degree);
  std::ostringstream table;
  std::vector<TrainConfig> cfgs;
  for (auto kind : kinds) cfgs.push_back(config_of(o, kind));
  const auto reports = replicate_experiments(cfgs, train_data, test_data, o.runs, o.threads);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto& rep = reports[k];
    std::ostringstream one;
    write_report(one, rep);
    std::string text = one.str();
    if (k > 0) text.erase(0, text.find('\n') + 1);  // one header for the whole table
    table << text;
    for (std::size_t r = 0; r < rep.runs.size(); ++r)
      if (rep.runs[r].diverged)
        std::cerr << model_kind_name(kinds[k]) << " run " << r + 1 << " diverged at step "
                  << rep.runs[r].steps << '\n';
  }
  std::cout << table.str();
  if (!o.out.empty()) open_out(o.out) << table.str();
  return 0;
}

int cmd_sweep_example(const Options& o, bool rows_given) {
  const std::size_t rows = rows_given ? o.steps : 101;
  if (!(o.a_min < o.a_max)) throw Error(Errc::ConfigInvalid, "--a-min must be below --a-max");
  if (rows < 2) throw Error(Errc::ConfigInvalid, "sweep needs at least 2 rows");
  std::optional<Checkpoint> ck;
  if (!o.checkpoint.empty()) ck = load_checkpoint(o.checkpoint);
  std::optional<FeatureBasis> basis;
  if (ck) basis.emplace(family_dimension(ck->family), ck->config.degree);

  Echo e("sweep-example");
  e("a_min", o.a_min)("a_max", o.a_max)("rows", rows)("checkpoint",
                                                      ck ? o.checkpoint : std::string("-"))(
      "out", o.out.empty() ? "-" : o.out);
  e.print(std::cout);
  const auto iv = example_valid_interval();
  std::cout << "# valid_interval = [" << format_double(iv.lo) << ", " << format_double(iv.hi)
            << "]\n";

  std::ostringstream table;
  table << "a,valid,curve_z,curve_theta3,curve_theta4,analytic_min,oracle_c"
        << (ck ? ",prediction" : "") << ",note\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const double a = o.a_min + (o.a_max - o.a_min) * static_cast<double>(i) /
                                   static_cast<double>(rows - 1);
    std::string curves = ",,,", oracle, prediction, note;
    bool valid = example_state_valid(a);
    try {
      const auto s = example_analytic_c(a);
      curves = format_double(s.curve_z) + ',' + format_double(s.curve_theta3) + ',' +
               format_double(s.curve_theta4) + ',' + format_double(s.c);
    } catch (const Error& err) {
      valid = false;
      note = std::string(errc_name(err.code()));
    }
    if (example_state_valid(a)) {
      const auto rho = validate_density_matrix(normalized_example_state(a));
      oracle = format_double(minimize_conditional_entropy(rho).c_min);
      if (ck) {
        const auto x = params_from_state(ck->family, rho.matrix());
        Matrix row(1, basis->dim());
        basis->evaluate(x, row.row(0));
        prediction = format_double(predict(ck->weights, row)[0]);
      }
    } else if (note.empty()) {
      note = "DomainError";
    }
    table << format_double(a) << ',' << (valid ? 1 : 0) << ',' << curves << ',' << oracle
          << (ck ? "," + prediction : "") << ',' << note << '\n';
  }
  std::cout << table.str();
  if (!o.out.empty()) open_out(o.out) << table.str();
  return 0;
}

int cmd_predict(const Options& o, bool family_given) {
  if (o.checkpoint.empty()) throw Error(Errc::ConfigInvalid, "predict needs --checkpoint");
  const auto ck = load_checkpoint(o.checkpoint);
  if (family_given && family_of(o) != ck.family)
    throw Error(Errc::FamilyMismatch, "checkpoint was trained on " +
                                          std::string(family_name(ck.family)) + " states");
  const auto x = input_params(o, ck.family);
  const FeatureBasis basis(family_dimension(ck.family), ck.config.degree);
  if (basis.dim() != ck.weights.features())
    throw Error(Errc::FamilyMismatch, "checkpoint does not match its (n, L)");
  Matrix row(1, basis.dim());
  basis.evaluate(x, row.row(0));
  const double y = predict(ck.weights, row)[0];

  Echo e("predict");
  e("checkpoint", o.checkpoint)("family", family_name(ck.family))("degree", ck.config.degree)(
      "input", o.params.empty() ? o.state : "params")("oracle", o.oracle ? "yes" : "no");
  e.print(std::cout);
  std::cout << "prediction" << (o.oracle ? ",oracle,abs_error" : "") << '\n'
            << format_double(y);
  if (o.oracle) {
    const double c = minimize_conditional_entropy(state_from_params(ck.family, x)).c_min;
    std::cout << ',' << format_double(c) << ',' << format_double(std::abs(y - c));
  }
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum discord oracle and neural-network regressors for its optimization term"};
  app.require_subcommand(1);
  Options o;

  const auto family_check = CLI::IsMember({"xstate", "real"});
  auto add_family = [&](CLI::App* s) {
    return s->add_option("--family", o.family, "State family")
        ->check(family_check)
        ->capture_default_str();
  };
  auto add_seed_threads = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
    s->add_option("--threads", o.threads, "Worker cap, 0 = all cores")->capture_default_str();
  };
  auto add_sizes = [&](CLI::App* s) {
    s->add_option("--train-size", o.train_size, "Training samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--test-size", o.test_size, "Test samples")->capture_default_str();
  };
  auto add_training = [&](CLI::App* s, std::string& model, bool many_models) {
    add_family(s);
    s->add_option("--model", model,
                  many_models ? "Comma-separated subset of nn,pknn,dbnn" : "nn, pknn or dbnn")
        ->check([many_models](const std::string& v) -> std::string {
          std::stringstream ss(v);
          std::string item;
          int count = 0;
          while (std::getline(ss, item, ',')) {
            if (!parse_model_kind(item)) return "unknown model '" + item + "'";
            ++count;
          }
          if (count == 0 || (!many_models && count > 1)) return "expected one model";
          return {};
        })
        ->capture_default_str();
    s->add_option("--steps", o.steps, "Gradient steps")->capture_default_str();
    s->add_option("--lr0", o.lr0, "Initial learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--decay", o.decay, "Decay factor per interval (default 0.98 xstate, 0.96 real)")
        ->check(CLI::Range(0.0, 1.0));
    s->add_option("--decay-interval", o.decay_interval, "Steps between decays")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--degree", o.degree, "Maximum monomial degree L")
        ->check(CLI::Range(1, 20))
        ->capture_default_str();
    s->add_option("--hidden", o.hidden, "Hidden width F")
        ->check(CLI::Range(std::size_t{1}, kMaxFusedHidden))
        ->capture_default_str();
    s->add_option("--batch", o.batch, "Mini-batch size, 0 = full batch")->capture_default_str();
    s->add_option("--log-interval", o.log_interval, "Steps between logged losses")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_sizes(s);
    add_seed_threads(s);
    s->add_option("--data", o.data, "Training set file instead of sampling")
        ->check(CLI::ExistingFile);
    s->add_option("--test-data", o.test_data, "Test set file instead of sampling")
        ->check(CLI::ExistingFile);
  };
  auto add_input = [&](CLI::App* s) {
    auto* st = s->add_option("--state", o.state, "State file (\"dim 4\" then 16 \"re im\" lines)")
                   ->check(CLI::ExistingFile);
    auto* pa = s->add_option("--params", o.params, "Raw parameter vector of the family");
    st->excludes(pa);
    pa->excludes(st);
    s->callback([st, pa] {
      if (st->count() + pa->count() == 0)
        throw CLI::RequiredError("one of --state or --params");
    });
  };

  auto* fd = app.add_subcommand("feature-dim", "Feature dimension C(n+L, n) for a family");
  add_family(fd);
  auto* fd_degree = fd->add_option("--degree", o.degree, "Single degree instead of 1..9")
                        ->check(CLI::Range(1, 60));

  auto* gen = app.add_subcommand("gen-data", "Sample and label training and test sets");
  add_family(gen);
  add_sizes(gen);
  add_seed_threads(gen);
  gen->add_option("--out", o.out, "Output prefix; writes PREFIX.train and PREFIX.test")
      ->required();

  auto* disc = app.add_subcommand("discord", "Discord and its optimization term for one state");
  add_family(disc);
  add_input(disc);

  auto* tr = app.add_subcommand("train", "Train one model and report its losses");
  add_training(tr, o.model, false);
  tr->add_option("--out", o.out, "Checkpoint path");
  tr->add_option("--log", o.log, "Loss trajectory CSV path");

  auto* ev = app.add_subcommand("eval", "Test loss and scatter data of a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--test-data", o.test_data, "Dataset file instead of sampling")
      ->check(CLI::ExistingFile);
  ev->add_option("--test-size", o.test_size, "Samples when sampling")->capture_default_str();
  add_seed_threads(ev);
  ev->add_option("--out", o.out, "Scatter CSV path (truth,prediction)");

  auto* rep = app.add_subcommand("replicate", "Independent runs per model on one dataset");
  add_training(rep, o.models, true);
  rep->add_option("--runs", o.runs, "Runs per model")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  rep->add_option("--out", o.out, "Report CSV path");

  auto* sweep = app.add_subcommand("sweep-example", "Closed-form curves of the example family");
  sweep->add_option("--a-min", o.a_min, "First a")->capture_default_str();
  sweep->add_option("--a-max", o.a_max, "Last a")->capture_default_str();
  auto* sweep_rows = sweep->add_option("--steps", o.steps, "Number of rows (default 101)");
  sweep->add_option("--checkpoint", o.checkpoint, "Add model predictions")
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out, "CSV path");

  auto* pr = app.add_subcommand("predict", "Model prediction for one state");
  pr->add_option("--checkpoint", o.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* pr_family = add_family(pr);
  add_input(pr);
  pr->add_flag("--oracle", o.oracle, "Also print the oracle value and the absolute error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (fd->parsed()) return cmd_feature_dim(o, fd_degree->count() > 0);
    if (gen->parsed()) return cmd_gen_data(o);
    if (disc->parsed()) return cmd_discord(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (rep->parsed()) return cmd_replicate(o);
    if (sweep->parsed()) return cmd_sweep_example(o, sweep_rows->count() > 0);
    if (pr->parsed()) return cmd_predict(o, pr_family->count() > 0);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
