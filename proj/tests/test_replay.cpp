#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "rer/errors.hpp"
#include "rer/replay.hpp"

using namespace rer;

namespace {

// Chain-consistent episode whose transition t has reward base + t.
Episode make_episode(int start, int length, double base = 0.0) {
  std::vector<Transition> t;
  for (int i = 0; i < length; ++i) t.push_back({start + i, 0, base + i, start + i + 1});
  return Episode(std::move(t));
}

double chi_square(const std::map<int, int>& counts, int cells, double expected) {
  double chi = 0.0;
  for (int c = 0; c < cells; ++c) {
    const auto it = counts.find(c);
    const double o = it == counts.end() ? 0.0 : it->second;
    chi += (o - expected) * (o - expected) / expected;
  }
  return chi;
}

}  // namespace

TEST(Episode, ChainBreakRejected) {
  EXPECT_THROW(Episode({{0, 0, 0.0, 1}, {2, 0, 0.0, 3}}), ValidationError);
  EXPECT_EQ(first_chain_break({{0, 0, 0.0, 1}, {1, 0, 0.0, 3}, {4, 0, 0.0, 0}}), 2u);
  EXPECT_NO_THROW(make_episode(0, 5));
}

TEST(Buffer, FifoEviction) {
  ReplayBuffer b(10);
  b.append_episode(make_episode(0, 4, 100));
  b.append_episode(make_episode(0, 4, 200));
  EXPECT_EQ(b.num_transitions(), 8u);
  b.append_episode(make_episode(0, 4, 300));
  EXPECT_EQ(b.num_episodes(), 2u);
  EXPECT_EQ(b.num_transitions(), 8u);
  EXPECT_EQ(b.episodes().front()[0].reward, 200.0);
}

TEST(Buffer, RejectsBadEpisodes) {
  ReplayBuffer b(3);
  EXPECT_THROW(b.append_episode(Episode()), ValidationError);
  EXPECT_THROW(b.append_episode(make_episode(0, 4)), ValidationError);
  EXPECT_THROW(ReplayBuffer(0), PreconditionError);
}

TEST(Window, InsufficientData) {
  ReplayBuffer b(100);
  Rng rng = make_rng(1);
  EXPECT_THROW(b.sample_window(2, rng), InsufficientData);
  b.append_episode(make_episode(0, 3));
  EXPECT_THROW(b.sample_window(4, rng), InsufficientData);
  EXPECT_THROW(b.sample_uniform(0, rng), PreconditionError);
  EXPECT_THROW(b.sample_window(0, rng), PreconditionError);
}

TEST(Window, ConsecutiveWithinOneEpisode) {
  ReplayBuffer b(1000);
  for (int e = 0; e < 5; ++e) b.append_episode(make_episode(0, 6 + e, 100.0 * e));
  Rng rng = make_rng(2);
  for (int t = 0; t < 500; ++t) {
    const auto w = b.sample_window(4, rng);
    ASSERT_EQ(w.size(), 4u);
    const double episode = std::floor(w[0].reward / 100.0);
    for (std::size_t i = 1; i < w.size(); ++i) {
      EXPECT_EQ(w[i - 1].next_state, w[i].state);
      EXPECT_EQ(w[i].reward, w[i - 1].reward + 1.0);
      EXPECT_EQ(std::floor(w[i].reward / 100.0), episode);
    }
  }
}

TEST(Window, SkipsShortEpisodes) {
  ReplayBuffer b(1000);
  b.append_episode(make_episode(0, 2, 0));
  b.append_episode(make_episode(0, 5, 100));
  Rng rng = make_rng(3);
  for (int t = 0; t < 100; ++t) EXPECT_GE(b.sample_window(3, rng)[0].reward, 100.0);
}

TEST(Window, MostRecentSource) {
  ReplayBuffer b(1000);
  b.append_episode(make_episode(0, 5, 0));
  b.append_episode(make_episode(0, 5, 100));
  Rng rng = make_rng(4);
  for (int t = 0; t < 100; ++t) EXPECT_GE(b.sample_window(5, rng, WindowSource::MostRecent)[0].reward, 100.0);
  b.append_episode(make_episode(0, 2, 200));
  EXPECT_THROW(b.sample_window(3, rng, WindowSource::MostRecent), InsufficientData);
}

TEST(Window, OffsetAndEpisodeAreUniform) {
  // 3 episodes of length 10, L = 3: 8 offsets each, 24 equally likely windows.
  ReplayBuffer b(1000);
  for (int e = 0; e < 3; ++e) b.append_episode(make_episode(0, 10, 100.0 * e));
  Rng rng = make_rng(5);
  std::map<int, int> counts;
  const int draws = 24000;
  for (int t = 0; t < draws; ++t) {
    const auto w = b.sample_window(3, rng);
    const int e = static_cast<int>(w[0].reward / 100.0);
    const int offset = static_cast<int>(w[0].reward) % 100;
    ++counts[e * 8 + offset];
  }
  // 23 degrees of freedom; 49.73 is the 0.999 quantile.
  EXPECT_LT(chi_square(counts, 24, draws / 24.0), 49.73);
}

TEST(Uniform, FrequenciesAreUniform) {
  ReplayBuffer b(1000);
  b.append_episode(make_episode(0, 3, 0));
  b.append_episode(make_episode(0, 7, 10));
  Rng rng = make_rng(6);
  std::map<int, int> counts;
  const auto draws = b.sample_uniform(20000, rng);
  for (const auto& t : draws) ++counts[t.reward < 10 ? static_cast<int>(t.reward) : 3 + static_cast<int>(t.reward) - 10];
  // 9 degrees of freedom; 27.88 is the 0.999 quantile.
  EXPECT_LT(chi_square(counts, 10, 2000.0), 27.88);
}

TEST(Sampling, DeterministicPerSeed) {
  ReplayBuffer b(1000);
  for (int e = 0; e < 4; ++e) b.append_episode(make_episode(0, 9, 10.0 * e));
  Rng r1 = make_rng(8), r2 = make_rng(8);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(b.sample_window(4, r1), b.sample_window(4, r2));
  EXPECT_EQ(b.sample_uniform(30, r1), b.sample_uniform(30, r2));
}

TEST(Serialization, RoundTripAndErrors) {
  std::vector<Episode> eps{make_episode(0, 3, 0.1), make_episode(5, 2, 1.0 / 3.0)};
  std::stringstream ss;
  write_episodes(ss, eps);
  const auto back = read_episodes(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].transitions(), eps[0].transitions());
  EXPECT_EQ(back[1].transitions(), eps[1].transitions());

  std::istringstream bad("0 0 0.5\n");
  EXPECT_THROW(read_episodes(bad), ValidationError);
  std::istringstream trailing("0 0 0.5 1 9\n");
  EXPECT_THROW(read_episodes(trailing), ValidationError);
  std::istringstream broken("0 0 0.5 1\n2 0 0.5 3\n");
  EXPECT_THROW(read_episodes(broken), ValidationError);
}
