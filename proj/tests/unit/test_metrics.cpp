#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "autohyper/error.hpp"
#include "autohyper/metrics.hpp"
#include "oracles.hpp"

using namespace autohyper;

namespace {

FactorizationResult with_spectrum(std::vector<double> shrunk) {
  FactorizationResult f;
  f.rank = shrunk.size();
  f.shrunk_singular_values = std::move(shrunk);
  return f;
}

RankProbe random_probe(std::size_t layers, std::size_t epochs, Rng& rng) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < layers; ++l) names.push_back("conv" + std::to_string(l + 1));
  RankProbe p(names, epochs);
  for (std::size_t t = 0; t < epochs; ++t)
    for (std::size_t l = 0; l < layers; ++l)
      for (int mode : {3, 4}) p.set(l, mode, t, rng.uniform() < 0.4 ? 0.0 : rng.uniform());
  return p;
}

}  // namespace

TEST(StableRank, RankZeroIsExactlyZero) {
  EXPECT_EQ(stable_rank(with_spectrum({}), 16), 0.0);
}

TEST(StableRank, HandExample) {
  EXPECT_DOUBLE_EQ(stable_rank(with_spectrum({2, 1, 1}), 3), 2.0 / 3.0);
}

TEST(StableRank, FlatFullRankSpectrumIsOne) {
  EXPECT_EQ(stable_rank(with_spectrum({0.7, 0.7, 0.7, 0.7}), 4), 1.0);
}

TEST(StableRank, RejectsImpossibleGeometry) {
  EXPECT_THROW(stable_rank(with_spectrum({3, 2, 1}), 2), ValidationError);
}

TEST(StableRank, ZeroIffEvbmfRankZero) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double signal = static_cast<double>(seed % 8) * 4.0;
    const std::vector<double> planted{signal + 1e-9, signal * 0.5 + 1e-9};
    const auto m = oracle::planted(8, 72, planted, 1.0, seed);
    const auto f = evbmf(m);
    const double g = stable_rank(f, 8);
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 1.0);
    EXPECT_EQ(g == 0.0, f.rank == 0) << "seed " << seed;
  }
}

TEST(ZeroRankFraction, HandExample) {
  RankProbe p({"a", "b"}, 1);
  p.set(0, 3, 0, 0.0);
  p.set(0, 4, 0, 0.5);
  p.set(1, 3, 0, 0.0);
  p.set(1, 4, 0, 0.0);
  EXPECT_DOUBLE_EQ(zero_rank_fraction(p, 0), 0.75);
}

TEST(ZeroRankFraction, Boundaries) {
  RankProbe all_positive({"a", "b"}, 1), all_zero({"a", "b"}, 1);
  for (std::size_t l = 0; l < 2; ++l)
    for (int mode : {3, 4}) {
      all_positive.set(l, mode, 0, 0.2);
      all_zero.set(l, mode, 0, 0.0);
    }
  EXPECT_EQ(zero_rank_fraction(all_positive, 0), 0.0);
  EXPECT_EQ(zero_rank_fraction(all_zero, 0), 1.0);
}

TEST(ZeroRankFraction, IncompleteProbeIsRejected) {
  RankProbe p({"a"}, 2);
  p.set(0, 3, 0, 0.1);
  EXPECT_THROW(zero_rank_fraction(p, 0), IncompleteProbeError);
  EXPECT_THROW(global_stable_rank(p), IncompleteProbeError);
  EXPECT_FALSE(p.complete());
  p.set(0, 4, 0, 0.1);
  EXPECT_TRUE(p.complete_at(0));
  EXPECT_FALSE(p.complete_at(1));
}

TEST(RankProbeCells, RejectOutOfRangeValuesAndModes) {
  RankProbe p({"a"}, 1);
  EXPECT_THROW(p.set(0, 3, 0, 1.5), ValidationError);
  EXPECT_THROW(p.set(0, 3, 0, -0.1), ValidationError);
  EXPECT_THROW(p.set(0, 2, 0, 0.1), DomainError);
  EXPECT_THROW(p.set(1, 3, 0, 0.1), ValidationError);
}

TEST(GlobalStableRank, MeanOfPerEpochFractions) {
  // Five epochs with 0.8, 0.6, 0.5, 0.5, 0.5 zero-rank fractions over 10 cells.
  const int zeros[] = {8, 6, 5, 5, 5};
  std::vector<std::string> names{"a", "b", "c", "d", "e"};
  RankProbe p(names, 5);
  for (std::size_t t = 0; t < 5; ++t) {
    int placed = 0;
    for (std::size_t l = 0; l < 5; ++l)
      for (int mode : {3, 4}) p.set(l, mode, t, placed++ < zeros[t] ? 0.0 : 0.3);
  }
  EXPECT_NEAR(global_stable_rank(p), 0.58, 1e-15);
}

TEST(GlobalStableRank, RejectsZeroEpochs) {
  RankProbe p({"a"}, 0);
  EXPECT_THROW(global_stable_rank(p), ValidationError);
}

TEST(GlobalStableRank, AveragingLawOnRandomProbes) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_probe(1 + rng.below(6), 1 + rng.below(7), rng);
    const auto zt = zero_rank_fractions(p);
    double sum = 0;
    for (double z : zt) sum += z;
    const double z = global_stable_rank(p);
    EXPECT_NEAR(z, sum / static_cast<double>(zt.size()), 1e-15);
    EXPECT_GE(z, 0.0);
    EXPECT_LE(z, 1.0);
  }
}

TEST(Stabilize, MatchesHighPrecisionClosedForm) {
  const std::vector<double> v{0.95, 0.9, 0.4, 0.05, 0.01};
  const auto c = stabilize(v);
  const auto expected = oracle::stabilize(v);
  ASSERT_EQ(c.size(), expected.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], expected[i], 1e-12);
  // Published approximations of the same sequence (the fourth is rounded loosely: 0.03858).
  const double approx[] = {0.9598, 0.8822, 0.4240, 0.0387, 0.00096};
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], approx[i], 0.01 * approx[i]);
}

TEST(Stabilize, SingleElement) {
  EXPECT_NEAR(stabilize(std::vector<double>{0.37})[0], std::pow(0.37, 0.8), 1e-15);
}

TEST(Stabilize, ZeroIsAbsorbing) {
  const auto c = stabilize(std::vector<double>{0.9, 0.8, 0.0, 0.7, 0.99});
  EXPECT_GT(c[1], 0.0);
  for (std::size_t j = 2; j < c.size(); ++j) EXPECT_EQ(c[j], 0.0);
}

TEST(Stabilize, RejectsValuesOutsideUnitInterval) {
  EXPECT_THROW(stabilize(std::vector<double>{0.5, 1.01}), ValidationError);
  EXPECT_THROW(stabilize(std::vector<double>{-0.1}), ValidationError);
  EXPECT_THROW(stabilize(std::vector<double>{std::nan("")}), ValidationError);
}

TEST(Stabilize, RecurrenceAndMonotonicityOnRandomSequences) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.below(40));
    for (auto& x : v) x = rng.uniform();
    const auto c = stabilize(v);
    const auto expected = oracle::stabilize(v);
    EXPECT_NEAR(c[0], std::pow(v[0], 0.8), 1e-15);
    for (std::size_t j = 0; j < c.size(); ++j) {
      EXPECT_NEAR(c[j], expected[j], 1e-12);
      if (j > 0) {
        EXPECT_LT(c[j], c[j - 1]);
        EXPECT_NEAR(c[j], c[j - 1] * std::pow(v[j], 0.8), 1e-12);
      }
    }
  }
}

TEST(RankHistory, TracksStabilizedSequence) {
  RankHistory h;
  for (double z : {0.95, 0.9, 0.4}) h.append(z);
  const auto expected = oracle::stabilize(h.values());
  ASSERT_EQ(h.stabilized().size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(h.stabilized()[i], expected[i], 1e-12);
  EXPECT_THROW(h.append(1.2), ValidationError);
}

TEST(Probe, UntrainedNoiseLayersAreRankDeficient) {
  // Pure noise tensors: no structure above the noise floor, so every cell is rank 0.
  Rng rng(5);
  std::vector<double> data(3 * 3 * 16 * 16);
  for (auto& v : data) v = rng.normal() * 0.1;
  const WeightTensor4D t("conv", Dims4{{3, 3, 16, 16}}, data);
  EXPECT_EQ(probe_stable_rank(t, 3), 0.0);
  EXPECT_EQ(probe_stable_rank(t, 4), 0.0);
}

TEST(Probe, WeightSetsMustAgreeOnLayers) {
  const WeightTensor4D a("a", Dims4{{1, 1, 2, 2}}, {1, 2, 3, 4});
  const WeightTensor4D b("b", Dims4{{1, 1, 2, 2}}, {1, 2, 3, 4});
  std::vector<WeightSet> epochs{{a}, {b}};
  EXPECT_THROW(probe_weight_sets(epochs), ValidationError);
  EXPECT_THROW(probe_weight_sets(std::vector<WeightSet>{}), ValidationError);
}

TEST(Probe, CsvHasOneRowPerCell) {
  Rng rng(3);
  const auto p = random_probe(3, 2, rng);
  std::ostringstream out;
  write_probe_csv_header(out);
  write_probe_csv_rows(out, p, "lr_+0");
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "config_id,layer,mode,epoch,G,Z_t,Z");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("lr_+0,conv", 0), 0u);
    ++rows;
  }
  EXPECT_EQ(rows, 3 * 2 * 2);
}
