#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "crosatfl/links.hpp"

namespace {

using namespace crosatfl::links;

LinkParams table_one() {
  LinkParams p;
  p.gs_rate_bps = 16e6;
  p.lisl_rate_bps = 16e6;
  p.gs_latency_s = 0.005;
  p.lisl_latency_s = 0.005;
  return p;
}

TEST(LinkDelay, SixteenMegabitsAtSixteenMbps) {
  const auto p = table_one();
  for (auto kind : {LinkKind::IntraClusterLISL, LinkKind::InterClusterLISL, LinkKind::GroundStation}) {
    const Delay d = link_delay(16e6, kind, p, true);
    ASSERT_TRUE(d.has_value());
    EXPECT_DOUBLE_EQ(*d, 1.005);
  }
}

TEST(LinkDelay, DisconnectedIsUnreachable) {
  EXPECT_FALSE(link_delay(16e6, LinkKind::GroundStation, table_one(), false).has_value());
}

TEST(LinkDelay, OneBitWithoutLatency) {
  auto p = table_one();
  p.gs_latency_s = 0.0;
  EXPECT_DOUBLE_EQ(*link_delay(1.0, LinkKind::GroundStation, p, true), 6.25e-8);
}

TEST(LinkDelay, NonPositivePayloadIsRejected) {
  EXPECT_THROW(link_delay(0.0, LinkKind::GroundStation, table_one(), true), std::invalid_argument);
  EXPECT_THROW(link_delay(-1.0, LinkKind::IntraClusterLISL, table_one(), true), std::invalid_argument);
}

TEST(LinkDelay, ExplicitLatencyReplacesTheDefault) {
  const auto p = table_one();
  EXPECT_DOUBLE_EQ(*link_delay_with_latency(16e6, LinkKind::InterClusterLISL, p, true, 0.0), 1.0);
  EXPECT_FALSE(link_delay_with_latency(16e6, LinkKind::InterClusterLISL, p, false, 0.0).has_value());
}

TEST(LinkEnergy, PowerTimesDelay) {
  const auto p = table_one();
  EXPECT_DOUBLE_EQ(link_energy(1.005, LinkKind::IntraClusterLISL, p), 40.2);
  EXPECT_DOUBLE_EQ(link_energy(0.0, LinkKind::InterClusterLISL, p), 0.0);
  EXPECT_DOUBLE_EQ(link_energy(1.0, LinkKind::GroundStation, p), 40.0);
}

TEST(LinkEnergy, UnreachableAndInvalidDelaysAreRejected) {
  const auto p = table_one();
  EXPECT_THROW(link_energy(Delay{}, LinkKind::GroundStation, p), std::invalid_argument);
  EXPECT_THROW(link_energy(-1.0, LinkKind::GroundStation, p), std::invalid_argument);
  EXPECT_THROW(link_energy(std::numeric_limits<double>::infinity(), LinkKind::GroundStation, p),
               std::invalid_argument);
}

TEST(LinkParams, Validation) {
  LinkParams p;
  EXPECT_NO_THROW(p.validate());
  p.gs_rate_bps = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.p_lisl_w = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.lisl_latency_s = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(LinkParams, DefaultsFavourLasersOverTheGroundLink) {
  const LinkParams p;
  EXPECT_DOUBLE_EQ(p.rate_for(LinkKind::GroundStation), 16e6);
  EXPECT_GT(p.rate_for(LinkKind::IntraClusterLISL), p.rate_for(LinkKind::GroundStation));
  EXPECT_DOUBLE_EQ(p.power_for(LinkKind::GroundStation), p.power_for(LinkKind::InterClusterLISL));
  EXPECT_EQ(to_string(LinkKind::GroundStation), "gs");
}

}  // namespace
