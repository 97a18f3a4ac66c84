#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "autohyper/error.hpp"
#include "autohyper/search.hpp"
#include "mock_evaluators.hpp"
#include "oracles.hpp"

using namespace autohyper;
using mock::SurfaceEvaluator;

namespace {

std::shared_ptr<const LatticeSpec> lr_lattice(double anchor = 1e-3) {
  return std::make_shared<const LatticeSpec>(std::vector<std::string>{"lr"}, std::vector<double>{anchor},
                                             std::vector<double>{1.5});
}

double lr_sigmoid(const HpPoint& p) { return oracle::sigmoid_surface(mock::value(p, "lr"), -3.5); }

// Checks the structural laws every step log must satisfy.
void expect_log_laws(const SearchRun& run, const SearchOptions& opts) {
  std::set<Exponents> seen;
  bool descended = false;
  std::size_t descent_steps = 0;
  for (std::size_t j = 0; j < run.steps.size(); ++j) {
    const auto& s = run.steps[j];
    std::size_t fresh = 0;
    for (const auto& m : s.members) {
      for (std::size_t i = 0; i < m.exponents.size(); ++i)
        EXPECT_DOUBLE_EQ(m.values[i], run.lattice->value(i, m.exponents[i]));
      fresh += seen.insert(m.exponents).second;
    }
    EXPECT_EQ(fresh, s.new_evaluations);
    EXPECT_EQ(s.epoch_budget, run.epochs_per_trial * seen.size());
    if (descended) {
      EXPECT_EQ(s.phase, Phase::descent) << "re-entered bootstrap at step " << j;
    }
    if (s.phase == Phase::descent) {
      descended = true;
      ++descent_steps;
      for (const auto& m : s.members) EXPECT_LE(s.members[s.chosen].z, m.z);
    } else {
      for (const auto& m : s.members) {
        EXPECT_LT(m.z, opts.bootstrap_threshold);
        EXPECT_GE(s.members[s.chosen].z, m.z);
      }
    }
    if (j > 0 && s.members.size() == 3) {
      std::size_t hits = 0;
      for (const auto& m : s.members) hits += m.cached;
      EXPECT_GE(hits, 1u);  // at least the previous center is shared
    }
  }
  EXPECT_EQ(run.rank_history.size(), descent_steps);
  EXPECT_EQ(run.epoch_budget, run.epochs_per_trial * run.evaluations.size());
}

}  // namespace

TEST(Cache, SecondPassOverRegionTrainsNothing) {
  SurfaceEvaluator ev(lr_sigmoid);
  CachedEvaluator cached(ev, 1);
  const auto region = trust_region(HpConfig(lr_lattice(), {0}));
  const auto first = cached.evaluate_all(region.members, 1);
  EXPECT_EQ(ev.calls(), 3u);
  EXPECT_EQ(cached.epoch_budget(), 15u);
  const auto second = cached.evaluate_all(region.members, 1);
  EXPECT_EQ(ev.calls(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_FALSE(first[i].hit);
    EXPECT_TRUE(second[i].hit);
    EXPECT_EQ(first[i].evaluation.z, second[i].evaluation.z);
  }
}

TEST(Cache, ConstantMockPassesThrough) {
  SurfaceEvaluator ev([](const HpPoint&) { return 0.5; });
  CachedEvaluator cached(ev, 1);
  for (const auto& m : trust_region(HpConfig(lr_lattice(), {2})).members) EXPECT_EQ(cached.evaluate(m).evaluation.z, 0.5);
}

TEST(Cache, ConcurrentRequestsForOneKeyComputeOnce) {
  SurfaceEvaluator ev([](const HpPoint&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return 0.3;
  });
  CachedEvaluator cached(ev, 1);
  const std::vector<HpConfig> same(16, HpConfig(lr_lattice(), {1}));
  const auto out = cached.evaluate_all(same, 8);
  EXPECT_EQ(ev.calls(), 1u);
  std::size_t misses = 0;
  for (const auto& l : out) misses += !l.hit;
  EXPECT_EQ(misses, 1u);
  EXPECT_EQ(cached.epoch_budget(), 5u);
}

TEST(Cache, DivergenceScoresOneAndIsLogged) {
  class Diverging final : public Evaluator {
   public:
    std::size_t epochs_per_trial() const override { return 5; }
    Evaluation evaluate(const HpPoint& p, std::uint64_t) const override {
      if (*p.find("lr") > 2e-3) throw NumericalError("loss is NaN");
      Evaluation e;
      e.z = 0.2;
      return e;
    }
  } ev;
  CachedEvaluator cached(ev, 1);
  const auto out = cached.evaluate(HpConfig(lr_lattice(), {3})).evaluation;
  EXPECT_TRUE(out.divergent);
  EXPECT_EQ(out.z, 1.0);
  ASSERT_EQ(cached.divergence_log().size(), 1u);
  EXPECT_NE(cached.divergence_log()[0].find("lr_+3"), std::string::npos);
  EXPECT_EQ(cached.evaluate(HpConfig(lr_lattice(), {0})).evaluation.z, 0.2);
}

TEST(Search, ZeroSurfaceConvergesImmediately) {
  SurfaceEvaluator ev([](const HpPoint&) { return 0.0; });
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1);
  EXPECT_EQ(run.verdict, Verdict::converged);
  ASSERT_EQ(run.steps.size(), 1u);
  EXPECT_EQ(run.steps[0].phase, Phase::descent);
  EXPECT_EQ(run.rank_history.values(), std::vector<double>{0.0});
  EXPECT_EQ(run.rank_history.stabilized(), std::vector<double>{0.0});
  EXPECT_EQ(run.selected->exponents(), Exponents{0});
  EXPECT_EQ(run.epoch_budget, 15u);
}

TEST(Search, ConstantHighSurfaceFollowsClosedForm) {
  // c_j = 0.95^(0.8 (j+1)); the plateau predicate arms on the first change >= eps and fires on
  // the first later change below it.
  const double eps = 0.01;
  std::size_t expected_step = 0;
  bool armed = false;
  for (std::size_t j = 1; j < 200; ++j) {
    const double change = std::pow(0.95, 0.8 * static_cast<double>(j)) - std::pow(0.95, 0.8 * static_cast<double>(j + 1));
    if (change >= eps) armed = true;
    else if (armed) {
      expected_step = j;
      break;
    }
  }
  ASSERT_EQ(expected_step, 34u);

  SurfaceEvaluator ev([](const HpPoint&) { return 0.95; });
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1);
  EXPECT_EQ(run.verdict, Verdict::converged);
  EXPECT_EQ(run.steps.size(), expected_step + 1);
  EXPECT_EQ(run.rank_history.size(), expected_step + 1);
  EXPECT_EQ(run.selected->exponents(), Exponents{0});  // ties keep the center
  EXPECT_EQ(ev.calls(), 3u);
}

TEST(Search, StepCapGivesBudgetExhausted) {
  SurfaceEvaluator ev([](const HpPoint&) { return 0.95; });
  SearchOptions opts;
  opts.max_steps = 3;
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1, opts);
  EXPECT_EQ(run.verdict, Verdict::budget_exhausted);
  EXPECT_EQ(run.steps.size(), 3u);
  EXPECT_EQ(run.selected->exponents(), Exponents{0});
}

TEST(Search, LowSurfaceNeverBootstraps) {
  SurfaceEvaluator ev([](const HpPoint&) { return 0.5; });
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1);
  EXPECT_EQ(run.verdict, Verdict::no_bootstrap);
  EXPECT_EQ(run.steps.size(), 50u);
  EXPECT_TRUE(run.rank_history.empty());
}

TEST(Search, TiesPreferSmallestThenLexicographicDelta) {
  // Equal Z at both neighbours and lower than the center: the -1 step wins.
  SurfaceEvaluator ev([](const HpPoint& p) {
    const double k = std::round(std::log(mock::value(p, "lr") / 1e-3) / std::log(1.5));
    return k == 0 ? 0.95 : 0.92;
  });
  SearchOptions opts;
  opts.max_steps = 1;
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1, opts);
  EXPECT_EQ(run.steps[0].members[run.steps[0].chosen].delta, Exponents{-1});
  EXPECT_TRUE(delta_precedes({0, 0}, {-1, 0}));
  EXPECT_TRUE(delta_precedes({-1, 0}, {0, 1}));
  EXPECT_TRUE(delta_precedes({-1, 1}, {1, -1}));
  EXPECT_FALSE(delta_precedes({1, 1}, {1, 0}));
}

TEST(Search, BootstrapClimbsThenDescends) {
  SurfaceEvaluator ev(lr_sigmoid);
  SearchOptions opts;
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(0.1), {0}), ev, 1, opts);
  ASSERT_FALSE(run.steps.empty());
  EXPECT_EQ(run.steps.front().phase, Phase::bootstrap);
  EXPECT_EQ(run.verdict, Verdict::converged);
  expect_log_laws(run, opts);
}

TEST(Search, SigmoidSurfaceLandsNearPlateauInception) {
  const auto lattice = lr_lattice();
  std::vector<double> z;
  std::vector<int> ks;
  for (int k = -30; k <= 30; ++k) {
    ks.push_back(k);
    z.push_back(oracle::sigmoid_surface(lattice->value(0, k), -3.5));
  }
  const auto plateau = oracle::plateau_region(z, 0.01);
  const int inception = ks[plateau.inception];
  for (int start : {-17, -11, 0, 11, 17}) {
    SurfaceEvaluator ev(lr_sigmoid);
    SearchOptions opts;
    const auto run = autohyper::autohyper(HpConfig(lattice, {start}), ev, 1, opts);
    EXPECT_EQ(run.verdict, Verdict::converged) << start;
    EXPECT_LE(std::abs(run.selected->exponents()[0] - inception), 2) << "start " << start;
    expect_log_laws(run, opts);
  }
}

TEST(Search, ThreadedMembersGiveIdenticalRuns) {
  const auto lattice = std::make_shared<const LatticeSpec>(std::vector<std::string>{"lr", "weight_decay"},
                                                           std::vector<double>{1e-3, 1e-5},
                                                           std::vector<double>{1.5, 1.5});
  const auto surface = [](const HpPoint& p) {
    return oracle::sigmoid_surface(mock::value(p, "lr"), -3.5) * oracle::sigmoid_surface(mock::value(p, "weight_decay"), -4.0);
  };
  SurfaceEvaluator a(surface), b(surface);
  SearchOptions serial, threaded;
  threaded.threads = 4;
  const auto ra = autohyper::autohyper(HpConfig(lattice, {0, 0}), a, 7, serial);
  const auto rb = autohyper::autohyper(HpConfig(lattice, {0, 0}), b, 7, threaded);
  std::ostringstream la, lb;
  write_step_log(la, ra);
  write_step_log(lb, rb);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_EQ(a.calls(), b.calls());
  expect_log_laws(rb, threaded);
}

TEST(Search, RejectsBadOptions) {
  SurfaceEvaluator ev(lr_sigmoid);
  SearchOptions opts;
  opts.max_steps = 0;
  EXPECT_THROW(autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1, opts), ValidationError);
  opts.max_steps = 5;
  opts.epsilon_plateau = 0;
  EXPECT_THROW(autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 1, opts), ValidationError);
}

TEST(StepLog, OneJsonObjectPerStepWithRequiredFields) {
  SurfaceEvaluator ev(lr_sigmoid);
  const auto run = autohyper::autohyper(HpConfig(lr_lattice(), {0}), ev, 3);
  std::ostringstream out;
  write_step_log(out, run);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"step", "phase", "center_exponents", "member_Z_values", "chosen",
                            "rank_history_tail", "stabilized_tail", "epoch_budget"})
      EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["step"].get<std::size_t>(), n);
    EXPECT_EQ(j["epoch_budget"].get<std::size_t>(), run.steps[n].epoch_budget);
    EXPECT_LE(j["rank_history_tail"].size(), kStepLogTail);
    ++n;
  }
  EXPECT_EQ(n, run.steps.size());
}

TEST(Sweeps, CountsRowsAndDistinctBudget) {
  SurfaceEvaluator ev(lr_sigmoid);
  CachedEvaluator cached(ev, 1);
  const auto grid = lattice_grid(lr_lattice(), {{-10, 9}});
  const auto table = sweep(grid, cached);
  EXPECT_EQ(table.rows.size(), 20u);
  EXPECT_EQ(table.epoch_budget, 100u);

  std::vector<HpConfig> dup(grid.begin(), grid.begin() + 5);
  dup.insert(dup.end(), grid.begin(), grid.begin() + 5);
  SurfaceEvaluator ev2(lr_sigmoid);
  CachedEvaluator cached2(ev2, 1);
  const auto dup_table = sweep(dup, cached2);
  EXPECT_EQ(dup_table.rows.size(), 10u);
  EXPECT_EQ(dup_table.epoch_budget, 25u);
  EXPECT_EQ(ev2.calls(), 5u);

  EXPECT_THROW(sweep(std::vector<HpConfig>{}, cached), ValidationError);
}

TEST(Sweeps, TwoDimensionalGridCsv) {
  const auto lattice = std::make_shared<const LatticeSpec>(std::vector<std::string>{"lr", "weight_decay"},
                                                           std::vector<double>{1e-3, 1e-5},
                                                           std::vector<double>{1.5, 1.5});
  SurfaceEvaluator ev([](const HpPoint&) { return 0.4; });
  CachedEvaluator cached(ev, 9);
  const auto table = sweep(lattice_grid(lattice, {{0, 9}, {-5, 4}}), cached, 3);
  EXPECT_EQ(table.rows.size(), 100u);
  std::ostringstream out;
  write_sweep_csv_header(out, *lattice, 5);
  write_sweep_csv_rows(out, table);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "seed,config_id,lr_exponent,weight_decay_exponent,lr,weight_decay,Z,Z_t1,Z_t2,Z_t3,Z_t4,Z_t5,divergent");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 100u);
}
