#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "qwsearch/rtn.hpp"

using namespace qws;

namespace {

std::vector<LinkTrajectory> sample_links(double rate, double horizon, std::size_t m, std::uint64_t seed) {
  std::vector<LinkTrajectory> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(sample_link(rate, horizon, substream_key(seed, i)));
  return out;
}

LinkTrajectory fixed(int sign, std::vector<double> switches, double horizon = 5.0) {
  return {sign, std::move(switches), horizon};
}

}  // namespace

TEST(Rtn, ZeroRateFreezesEveryLink) {
  const Graph g = complete_graph(6);
  const NoiseRealization r = sample_realization(g, 0.0, 10.0, 3);
  ASSERT_EQ(r.link_count(), g.link_count());
  for (const auto& tr : r.trajectories) {
    EXPECT_TRUE(tr.switch_times.empty());
    EXPECT_EQ(tr.value_at(0.0), tr.value_at(9.999));
  }
}

TEST(Rtn, MeanSwitchCountMatchesPoissonRate) {
  const auto links = sample_links(10.0, 5.0, 10000, 11);
  double total = 0;
  for (const auto& tr : links) total += double(tr.switch_times.size());
  const double mean = total / 1e4;
  EXPECT_NEAR(mean, 50.0, 3.0 * std::sqrt(50.0 / 1e4));
}

TEST(Rtn, SwitchTimesAreSortedAndInsideHorizon) {
  for (const auto& tr : sample_links(3.0, 2.0, 500, 5)) {
    for (std::size_t k = 0; k < tr.switch_times.size(); ++k) {
      EXPECT_GT(tr.switch_times[k], 0.0);
      EXPECT_LT(tr.switch_times[k], 2.0);
      if (k) EXPECT_LT(tr.switch_times[k - 1], tr.switch_times[k]);
    }
  }
}

TEST(Rtn, SamplingIsDeterministicPerSeedAndLink) {
  const Graph g = complete_graph(8);
  const NoiseRealization a = sample_realization(g, 2.0, 4.0, 99);
  const NoiseRealization b = sample_realization(g, 2.0, 4.0, 99);
  const NoiseRealization c = sample_realization(g, 2.0, 4.0, 100);
  bool differs = false;
  for (std::size_t l = 0; l < a.link_count(); ++l) {
    EXPECT_EQ(a.trajectories[l].initial_sign, b.trajectories[l].initial_sign);
    EXPECT_EQ(a.trajectories[l].switch_times, b.trajectories[l].switch_times);
    differs = differs || a.trajectories[l].switch_times != c.trajectories[l].switch_times;
  }
  EXPECT_TRUE(differs);

  // Link l depends only on (seed, l): regenerate in reverse order.
  for (std::size_t l = a.link_count(); l-- > 0;) {
    const LinkTrajectory again = sample_link(2.0, 4.0, substream_key(99, l));
    EXPECT_EQ(again.switch_times, a.trajectories[l].switch_times);
  }
}

TEST(Rtn, RejectsNonFiniteParameters) {
  const Graph g = complete_graph(3);
  EXPECT_THROW(sample_realization(g, std::numeric_limits<double>::infinity(), 1.0, 0), ConfigError);
  EXPECT_THROW(sample_realization(g, 1.0, std::nan(""), 0), ConfigError);
  EXPECT_THROW(sample_realization(g, -1.0, 1.0, 0), ConfigError);
  EXPECT_THROW(sample_realization(g, 1.0, 0.0, 0), ConfigError);
}

TEST(ValueAt, ParityAndRightContinuity) {
  EXPECT_EQ(value_at(fixed(+1, {1.0}), 0.5), +1);
  EXPECT_EQ(value_at(fixed(+1, {1.0}), 1.0), -1);
  EXPECT_EQ(value_at(fixed(-1, {0.3, 0.7}), 0.9), -1);
  EXPECT_EQ(value_at(fixed(-1, {0.3, 0.7}), 0.5), +1);
  EXPECT_THROW(value_at(fixed(+1, {}), -0.1), RangeError);
  EXPECT_THROW(value_at(fixed(+1, {}), 5.0), RangeError);
}

TEST(MergedBreakpoints, UnionWithEndpoints) {
  NoiseRealization r;
  r.horizon = 5.0;
  r.trajectories = {fixed(1, {1.0}), fixed(-1, {2.0})};
  EXPECT_EQ(merged_breakpoints(r), (std::vector<double>{0.0, 1.0, 2.0, 5.0}));

  r.trajectories = {fixed(1, {}), fixed(1, {})};
  EXPECT_EQ(merged_breakpoints(r), (std::vector<double>{0.0, 5.0}));

  r.trajectories = {fixed(1, {1.0}), fixed(1, {1.0 + 5e-13, 3.0}), fixed(1, {5.0 - 1e-13})};
  EXPECT_EQ(merged_breakpoints(r), (std::vector<double>{0.0, 1.0, 3.0, 5.0}));
}

TEST(Autocorrelation, ZeroLagIsExactlyOne) {
  const auto links = sample_links(1.0, 5.0, 1000, 2);
  EXPECT_EQ(autocorrelation_estimate(links, 0.0, 1.3), 1.0);
}

TEST(Autocorrelation, MatchesExponentialDecay) {
  const std::size_t m = 100000;
  const auto links = sample_links(1.0, 5.0, m, 21);
  for (double tau : {0.1, 0.5, 1.0}) {
    const double expected = std::exp(-2.0 * tau);
    EXPECT_NEAR(autocorrelation_estimate(links, tau, 1.0), expected,
                3.0 * autocorrelation_std_error(expected, m))
        << "tau=" << tau;
  }
  EXPECT_NEAR(autocorrelation_estimate(links, 0.5, 1.0), std::exp(-1.0), 3.0 / std::sqrt(double(m)));
}

TEST(Autocorrelation, FrozenProcessIsFullyCorrelated) {
  const auto links = sample_links(0.0, 5.0, 200, 4);
  EXPECT_EQ(autocorrelation_estimate(links, 3.0, 1.0), 1.0);
}

TEST(Autocorrelation, ValidatesSampleAndWindow) {
  const auto small = sample_links(1.0, 5.0, 99, 4);
  EXPECT_THROW(autocorrelation_estimate(small, 0.1, 1.0), ConfigError);
  const auto links = sample_links(1.0, 5.0, 100, 4);
  EXPECT_THROW(autocorrelation_estimate(links, 4.5, 1.0), RangeError);
}

TEST(Rtn, InitialSignsAreBalanced) {
  const std::size_t m = 40000;
  double sum = 0;
  for (const auto& tr : sample_links(1.0, 1.0, m, 8)) sum += tr.initial_sign;
  EXPECT_LT(std::abs(sum / double(m)), 3.0 / std::sqrt(double(m)));
}

TEST(PoissonTest, AcceptsSampledCounts) {
  for (double rate : {0.3, 1.0, 4.0}) {
    const auto links = sample_links(rate, 2.5, 10000, 31);
    const PoissonTest t = poisson_switch_count_test(links, rate);
    EXPECT_GT(t.dof, 0);
    EXPECT_GT(t.p_value, 1e-3) << "rate=" << rate << " chi2=" << t.chi_square;
  }
}

TEST(PoissonTest, RejectsRegularCounts) {
  // Every link switches exactly twice: far too little dispersion.
  std::vector<LinkTrajectory> links(5000, fixed(1, {1.0, 2.0}, 4.0));
  const PoissonTest t = poisson_switch_count_test(links, 0.5);
  EXPECT_LT(t.p_value, 1e-10);
}

TEST(PoissonTest, WrongRateIsDetected) {
  const auto links = sample_links(1.0, 3.0, 10000, 31);
  EXPECT_LT(poisson_switch_count_test(links, 1.1).p_value, 1e-3);
}

TEST(RealizationCsv, OneRowPerSwitch) {
  NoiseRealization r;
  r.horizon = 5.0;
  r.trajectories = {fixed(1, {1.5, 2.5}), fixed(-1, {})};
  std::ostringstream out;
  write_realization_csv(out, r);
  EXPECT_EQ(out.str(), "link,initial_sign,switch_time\n0,1,1.5\n0,1,2.5\n1,-1,\n");
}
