#include <gtest/gtest.h>

#include <set>

#include "hifinet/error.hpp"
#include "hifinet/pipeline.hpp"

using namespace hifinet;

namespace {

// block of a sample, and that block's rank among training blocks
std::size_t block(std::size_t s) { return s / 48; }
std::size_t train_rank(std::size_t b) { return b - b / 4; }

}  // namespace

TEST(WindowIndex, SplitsWithoutHoldout) {
  ExperimentConfig cfg;
  cfg.window.stride = 3;
  const auto idx = index_windows(cfg, 720);
  EXPECT_TRUE(idx.holdout.empty());
  for (std::size_t s : idx.train) {
    EXPECT_EQ(s % 3, 0u);
    EXPECT_NE(block(s) % 4, 3u);
    EXPECT_NE(block(s + 23) % 4, 3u);
  }
  for (std::size_t s : idx.test) {
    EXPECT_EQ(block(s) % 4, 3u);
    EXPECT_EQ(block(s), block(s + 23));  // neighbours of a test block are train blocks
  }
  // one tradeoff window per w samples
  for (std::size_t s : idx.tradeoff) EXPECT_EQ(s % 24, 0u);
}

TEST(WindowIndex, HoldoutBlocksAreDisjointFromTraining) {
  ExperimentConfig cfg;
  cfg.window.holdout_every = 3;
  const auto idx = index_windows(cfg, 2000);
  ASSERT_FALSE(idx.holdout.empty());
  std::set<std::size_t> held_blocks;
  for (std::size_t s : idx.holdout) {
    EXPECT_EQ(train_rank(block(s)) % 3, 2u);
    EXPECT_EQ(train_rank(block(s + 23)) % 3, 2u);
    EXPECT_NE(block(s + 23) % 4, 3u);
    held_blocks.insert(block(s));
  }
  for (std::size_t s : idx.train) {
    EXPECT_EQ(held_blocks.count(block(s)), 0u);
    EXPECT_EQ(held_blocks.count(block(s + 23)), 0u);
  }
  // same total as without holdout, minus windows crossing into a held block
  ExperimentConfig plain;
  EXPECT_LE(idx.train.size() + idx.holdout.size(), index_windows(plain, 2000).train.size());
}

TEST(WindowIndex, TooShortPanels) {
  ExperimentConfig cfg;
  EXPECT_THROW(index_windows(cfg, 10), ConfigError);
  EXPECT_THROW(index_windows(cfg, 100), DataError);  // no test block yet
}
