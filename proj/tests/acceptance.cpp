// Acceptance suite: one PASS/FAIL line per criterion, with timings.
//
//   qdnn_acceptance            all criteria
//   qdnn_acceptance 1 3 8      a subset

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "qdnn/datagen.hpp"
#include "qdnn/features.hpp"
#include "qdnn/kernels.hpp"
#include "qdnn/training.hpp"
#include "qdnn/xstate.hpp"
#include "support.hpp"

using namespace qdnn;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<void(Outcome&)> body;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void feature_table(Outcome& o) {
  const std::uint64_t n7[] = {8, 36, 120, 330, 792, 1716, 3432, 6435, 11440};
  const std::uint64_t n9[] = {10, 55, 220, 715, 2002, 5005, 11440, 24310, 48620};
  int good = 0;
  for (int l = 1; l <= 9; ++l) {
    good += feature_dim(7, l) == n7[l - 1];
    good += feature_dim(9, l) == n9[l - 1];
  }
  o.detail << good << "/18 entries match; L=6: " << feature_dim(7, 6) << ", " << feature_dim(9, 6);
  o.require(good == 18, "table mismatch");
}

void closed_form_states(Outcome& o) {
  CMatrix bell = CMatrix::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  const double qb = quantum_discord(validate_density_matrix(bell));
  o.require(std::abs(qb - 1.0) <= 1e-4, "Bell discord");

  CounterRng rng(20240601);
  double worst_product = 0.0;
  for (int k = 0; k < 20; ++k) {
    const CMatrix a = test::random_density(rng, 2), b = test::random_density(rng, 2);
    worst_product = std::max(worst_product,
                             std::abs(quantum_discord(validate_density_matrix(kron(a, b)))));
  }
  o.require(worst_product <= 1e-6, "product discord");

  CMatrix cl = CMatrix::Zero(4, 4);
  cl(0, 0) = cl(3, 3) = 0.5;
  const double qc = std::abs(quantum_discord(validate_density_matrix(cl)));
  o.require(qc <= 1e-6, "classical-state discord");

  const auto mixed = validate_density_matrix(CMatrix::Identity(4, 4) / 4.0);
  double worst_mixed = 0.0;
  for (int k = 0; k < 50; ++k)
    worst_mixed = std::max(worst_mixed,
                           std::abs(conditional_entropy(mixed, test::random_direction(rng)) - 1.0));
  o.require(worst_mixed <= 1e-9, "I/4 conditional entropy");

  o.detail << "Bell " << sci(qb) << ", max |product| " << sci(worst_product) << ", classical "
           << sci(qc) << ", max |S(I/4) - 1| " << sci(worst_mixed);
}

void xstate_cross_check(Outcome& o) {
  CounterRng rng(31337);
  double worst_axis = 0.0, worst_below = 0.0;
  int equal = 0;
  const int total = 200;
  for (int k = 0; k < total; ++k) {
    const auto p = sample_xstate(rng);
    const auto rho = xstate_from_params(p);
    const auto c = pauli_candidates(p);
    worst_axis = std::max({worst_axis, std::abs(c.s_z - conditional_entropy(rho, c.axis_z)),
                           std::abs(c.s_x - conditional_entropy(rho, c.axis_x)),
                           std::abs(c.s_y - conditional_entropy(rho, c.axis_y))});
    const double oracle = minimize_conditional_entropy(rho).c_min;
    worst_below = std::max(worst_below, oracle - c.min());
    equal += std::abs(c.min() - oracle) <= 1e-4;
  }
  o.require(worst_axis <= 1e-10, "candidate vs numeric entropy at its axis");
  o.require(worst_below <= 1e-6, "analytic c below oracle");
  o.require(equal * 100 >= total * 95, "equality rate");
  o.detail << "max axis error " << sci(worst_axis) << ", max (oracle - analytic) "
           << sci(worst_below) << ", equal within 1e-4 on " << equal << "/" << total;
}

void example_family(Outcome& o) {
  const auto s0 = example_analytic_c(0.0);
  const double oracle = minimize_conditional_entropy(validate_density_matrix(example_state(0.0))).c_min;
  o.require(std::abs(s0.c - oracle) <= 1e-4, "a=0 analytic vs oracle");
  o.require(std::abs(s0.theta[0] - 0.15 / 0.55) <= 1e-12, "theta1(0)");

  const auto iv = example_valid_interval();
  int rows = 0, flagged = 0, dominated = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double a = iv.lo + (iv.hi - iv.lo) * i / 1000.0;
    try {
      const auto s = example_analytic_c(a);
      ++rows;
      dominated += s.curve_z >= s.c && s.curve_theta3 >= s.c && s.curve_theta4 >= s.c;
    } catch (const Error&) {
      ++flagged;
    }
  }
  o.require(dominated == rows, "curve below its min");
  o.detail << "c(0) analytic " << s0.c << " oracle " << oracle << ", theta1(0) error "
           << sci(std::abs(s0.theta[0] - 0.15 / 0.55)) << ", valid a in [" << iv.lo << ", "
           << iv.hi << "], " << dominated << "/" << rows << " rows dominated, " << flagged
           << " flagged";
}

void gradient_checks(Outcome& o) {
  double worst = 0.0;
  std::size_t coords = 0;
  for (auto kind : {ModelKind::NN, ModelKind::PKNN, ModelKind::DBNN}) {
    double worst_kind = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto p = test::gradient_problem(kind, seed);
      ModelWeights grad;
      GradientWorkspace ws;
      loss_and_gradient(p.weights, p.features, p.targets, grad, ws);
      const auto c = test::check_gradient(p, grad, seed);
      worst_kind = std::max(worst_kind, c.worst_relative);
      coords += c.coordinates;
    }
    o.detail << model_kind_name(kind) << " " << sci(worst_kind) << ", ";
    worst = std::max(worst, worst_kind);
  }
  o.require(worst <= 1e-5, "relative error above 1e-5");
  o.detail << coords << " coordinates";
}

void print_report(const ReplicateReport& r) {
  std::ostringstream os;
  write_report(os, r);
  std::cout << os.str();
  for (const auto& run : r.runs)
    std::cout << "#   " << model_kind_name(r.kind) << " seed " << run.seed << ": "
              << run.seconds << " s" << (run.diverged ? " diverged" : "")
              << (run.dead_start ? " dead start" : "") << '\n';
  std::cout.flush();
}

void desk_scale_training(Outcome& o) {
  const std::uint64_t seed = 2024;
  const auto train_ds = build_dataset({StateFamily::XState, seed}, 6000, {}, 0);
  const auto test_ds = build_dataset({StateFamily::XState, test_set_seed(seed)}, 2000, {}, 0);
  const auto train_set = prepare(train_ds, 6);
  const auto test_set = prepare(test_ds, 6);
  std::cout << "# X-state set: 6000 train / 2000 test, D = " << train_set.features.cols()
            << ", isa " << kernels::isa_name(kernels::active_isa()) << std::endl;

  TrainConfig cfg;
  cfg.steps = 30000;
  cfg.degree = 6;
  cfg.hidden = 16;
  cfg.decay_factor = default_decay(StateFamily::XState);
  cfg.seed = 1;
  std::vector<TrainConfig> cfgs(2, cfg);
  cfgs[0].kind = ModelKind::NN;
  cfgs[1].kind = ModelKind::DBNN;
  const auto reports = replicate_experiments(cfgs, train_set, test_set, 3, 0);
  const auto& nn = reports[0];
  const auto& db = reports[1];
  print_report(nn);
  print_report(db);

  o.require(db.completed == 3 && nn.completed == 3, "diverged replicate");
  o.require(db.mean_test_loss < nn.mean_test_loss, "DBNN not below NN");
  o.require(db.mean_test_loss <= 5e-3, "DBNN mean test loss above 5e-3");
  o.detail << "mean test loss NN " << sci(nn.mean_test_loss) << ", DBNN "
           << sci(db.mean_test_loss);
}

void real_state_pipeline(Outcome& o) {
  const std::uint64_t seed = 7;
  const auto train_ds = build_dataset({StateFamily::Real, seed}, 6000, {}, 0);
  const auto test_ds = build_dataset({StateFamily::Real, test_set_seed(seed)}, 2000, {}, 0);
  std::size_t valid = 0;
  for (const auto& x : train_ds.params) {
    try {
      state_from_params(StateFamily::Real, x);
      ++valid;
    } catch (const Error&) {
    }
  }
  std::cout << "# real-state sampling: " << train_ds.sampling.accepted << " accepted of "
            << train_ds.sampling.attempts << " draws, acceptance "
            << train_ds.sampling.acceptance_rate() << '\n';
  std::cout.flush();
  o.require(valid == train_ds.size() && valid == 6000, "invalid sampled state");

  TrainConfig cfg;
  cfg.steps = 10000;
  cfg.degree = 6;
  cfg.hidden = 16;
  cfg.decay_factor = default_decay(StateFamily::Real);
  cfg.seed = 1;
  cfg.kind = ModelKind::DBNN;
  const auto train_set = prepare(train_ds, cfg.degree);
  const auto test_set = prepare(test_ds, cfg.degree);
  double test_loss = std::nan("");
  try {
    const auto r = train(cfg, train_set);
    test_loss = evaluate(r.weights, test_set).loss;
    std::cout << "# real DBNN: train " << sci(r.record.train_loss) << ", test " << sci(test_loss)
              << ", " << r.record.seconds << " s\n";
  } catch (const DivergedError& e) {
    o.require(false, e.what());
  }
  o.require(test_loss <= 1e-2, "test loss above 1e-2");
  o.detail << valid << "/6000 valid, acceptance " << train_ds.sampling.acceptance_rate()
           << ", D = " << train_set.features.cols() << ", DBNN test loss " << sci(test_loss);
}

void determinism(Outcome& o) {
  const auto ds = build_dataset({StateFamily::XState, 99}, 200, {}, 0);
  const auto data = prepare(ds, 3);
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.degree = 3;
  cfg.seed = 12;
  cfg.kind = ModelKind::DBNN;
  auto text = [&](const TrainResult& r) {
    std::ostringstream os;
    write_checkpoint(os, {cfg, StateFamily::XState, r.record.steps, r.weights});
    return os.str();
  };
  const auto a = train(cfg, data), b = train(cfg, data);
  o.require(text(a) == text(b), "checkpoints differ");

  const auto path = std::filesystem::temp_directory_path() / "qdnn_acceptance.ck";
  save_checkpoint(path.string(), {cfg, StateFamily::XState, a.record.steps, a.weights});
  const auto back = load_checkpoint(path.string());
  std::filesystem::remove(path);
  o.require(back.weights == a.weights, "save/load not exact");

  const auto rep = replicate_experiment(cfg, data, data, 3, 0);
  double tr = 0.0, te = 0.0;
  for (const auto& r : rep.runs) {
    tr += r.train_loss;
    te += r.test_loss;
  }
  const double err = std::max(std::abs(rep.mean_train_loss - tr / 3.0),
                              std::abs(rep.mean_test_loss - te / 3.0));
  o.require(err <= 1e-15, "report mean differs from row mean");
  o.detail << "checkpoints identical, save/load exact, mean error " << sci(err);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "feature dimensions", 1.0, feature_table},
      {2, "oracle on closed-form states", 30.0, closed_form_states},
      {3, "analytic vs oracle on 200 X-states", 300.0, xstate_cross_check},
      {4, "example family", 60.0, example_family},
      {5, "gradient checks", 120.0, gradient_checks},
      {6, "desk-scale X-state training", 3600.0, desk_scale_training},
      {7, "real-state pipeline", 5400.0, real_state_pipeline},
      {8, "determinism and persistence", 300.0, determinism},
  };
  std::set<int> chosen;
  for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!chosen.empty() && !chosen.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (s > c.limit_seconds) {
      o.pass = false;
      o.detail << " [failed: runtime " << s << " s over the " << c.limit_seconds << " s limit]";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", "
              << std::round(s * 100.0) / 100.0 << " s of " << c.limit_seconds
              << " s): " << o.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
