#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <tuple>
#include <vector>

#include "vanetsim/radio.hpp"

using namespace vanetsim;

namespace {

struct World {
  Scheduler sched;
  MobilityModel mob{FieldConfig{}, sched};
  RadioMedium<int> radio{RadioConfig{}, mob, sched};
  std::vector<std::pair<NodeId, SimTime>> received;
  std::vector<LossReason> losses;
  std::vector<Frame<int>> failures;

  World() {
    radio.set_receiver([this](NodeId r, const Frame<int>&) { received.emplace_back(r, sched.now()); });
    radio.set_promiscuous_tap({nullptr, [this](const Frame<int>&, SimTime, LossReason why) { losses.push_back(why); }});
    radio.set_unicast_failure_handler([this](const Frame<int>& f) { failures.push_back(f); });
  }

  void send(NodeId src, NodeId dst, std::uint32_t size) {
    Frame<int> f;
    f.src = src;
    f.dst = dst;
    f.size = size;
    radio.transmit(f);
  }
};

}  // namespace

TEST(Radio, TransmissionDelayOf512ByteFrame) {
  World w;
  EXPECT_DOUBLE_EQ(w.radio.transmission_delay(512), 512 * 8 / 1e7);
  EXPECT_NEAR(w.radio.transmission_delay(512), 409.6e-6, 1e-15);
  EXPECT_DOUBLE_EQ(w.radio.hop_delay(512), 409.6e-6 + 20e-6);
}

TEST(Radio, DeliveryTimeIsSendPlusHopDelay) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({100, 0});
  w.sched.run_until(1.0);
  w.send(0, 1, 512);
  w.sched.run_until(2.0);
  ASSERT_EQ(w.received.size(), 1u);
  EXPECT_EQ(w.received[0].first, 1u);
  EXPECT_DOUBLE_EQ(w.received[0].second, 1.0 + w.radio.hop_delay(512));
}

TEST(Radio, BroadcastWithoutNeighborsIsOneLoss) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({1000, 0});
  w.send(0, kBroadcast, 24);
  w.sched.run_until(1.0);
  EXPECT_TRUE(w.received.empty());
  ASSERT_EQ(w.losses.size(), 1u);
  EXPECT_EQ(w.losses[0], LossReason::kNoNeighbors);
}

TEST(Radio, ClosedDiskBoundary) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({250, 0});
  w.mob.add_node({500.0001, 0});
  w.send(0, 1, 100);
  w.send(1, 2, 100);
  w.sched.run_until(1.0);
  ASSERT_EQ(w.received.size(), 1u);
  EXPECT_EQ(w.received[0].first, 1u);
  ASSERT_EQ(w.failures.size(), 1u);
  EXPECT_EQ(w.failures[0].dst, 2u);
  EXPECT_EQ(w.losses, std::vector<LossReason>{LossReason::kOutOfRange});
}

TEST(Radio, BroadcastReachesExactlyTheNeighbors) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({200, 0});
  w.mob.add_node({0, 249});
  w.mob.add_node({300, 0});
  w.send(0, kBroadcast, 24);
  w.sched.run_until(1.0);
  std::vector<NodeId> got;
  for (const auto& r : w.received) got.push_back(r.first);
  EXPECT_EQ(got, (std::vector<NodeId>{1, 2}));
}

TEST(Radio, PerNodeFifoSerialization) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({100, 0});
  w.send(0, 1, 512);
  w.send(0, 1, 512);
  w.sched.run_until(1.0);
  ASSERT_EQ(w.received.size(), 2u);
  EXPECT_DOUBLE_EQ(w.received[1].second - w.received[0].second, w.radio.transmission_delay(512));
}

TEST(Radio, NeighborsOfIsolatedNodeIsEmpty) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({2000, 0});
  EXPECT_TRUE(w.radio.neighbors(0, 0.0).empty());
}

TEST(Radio, RejectsBadConfigAndFrames) {
  Scheduler s;
  MobilityModel m(FieldConfig{}, s);
  EXPECT_THROW((RadioMedium<int>(RadioConfig{0.0, 1e7, 0.0}, m, s)), std::invalid_argument);
  EXPECT_THROW((RadioMedium<int>(RadioConfig{250.0, 0.0, 0.0}, m, s)), std::invalid_argument);
  World w;
  w.mob.add_node({0, 0});
  EXPECT_THROW(w.send(0, kBroadcast, 0), std::invalid_argument);
  EXPECT_THROW(w.send(3, kBroadcast, 10), std::out_of_range);
}

// Node 0 reaches node 15's start at t=12 while node 15 recedes at 12.97 m/s.
TEST(LinkBreak, LongDistanceGeometry) {
  World w;
  const Position p15{290, 320};
  w.mob.add_node({140, 320});
  w.mob.add_node(p15);
  w.mob.set_motion(0, p15, 75.0, 10.0);
  w.mob.set_motion(1, {290 + 2648, 320}, 12.97, 10.0);
  const auto neighbors12 = w.radio.neighbors(0, 12.0);
  EXPECT_NE(std::find(neighbors12.begin(), neighbors12.end(), 1u), neighbors12.end());
  EXPECT_TRUE(w.radio.neighbors(0, 35.0).empty());

  const auto brk = w.radio.link_break_time(0, 1, 12.0);
  ASSERT_TRUE(brk.has_value());
  EXPECT_NEAR(*brk, 12.0 + (250.0 - 25.94) / 12.97, 1e-9);
  EXPECT_NEAR(*brk, 29.27, 0.01);
}

TEST(LinkBreak, StationaryPairNeverBreaks) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({50, 0});
  EXPECT_FALSE(w.radio.link_break_time(0, 1, 0.0).has_value());
}

TEST(LinkBreak, ApproachingNodeNeverBreaks) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({240, 0});
  w.mob.set_motion(1, {10, 0}, 3.0, 1.0);
  EXPECT_FALSE(w.radio.link_break_time(0, 1, 0.0).has_value());
}

TEST(LinkBreak, AlreadyApartBreaksImmediately) {
  World w;
  w.mob.add_node({0, 0});
  w.mob.add_node({400, 0});
  EXPECT_DOUBLE_EQ(*w.radio.link_break_time(0, 1, 3.0), 3.0);
}

// The analytic break time agrees with a sampled oracle: in range at every
// sample before it, out of range just after it.
TEST(LinkBreakProperty, AgreesWithSampledDistance) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    World w;
    Rng rng(seed);
    const Position a{rng.uniform(1000, 2000), rng.uniform(500, 1100)};
    const Position b{a.x + rng.uniform(-150, 150), a.y + rng.uniform(-150, 150)};
    w.mob.add_node(a);
    w.mob.add_node(b);
    for (NodeId n : {0u, 1u}) {
      double t = 0.0;
      for (int leg = 0; leg < 3; ++leg) {
        t += rng.uniform(0.0, 20.0);
        const Position dest{rng.uniform(0, 3000), rng.uniform(0, 1600)};
        t = w.mob.set_motion(n, dest, rng.uniform(1.0, 40.0), t);
      }
    }
    const auto brk = w.radio.link_break_time(0, 1, 0.0);
    const double horizon = brk ? *brk : 2000.0;
    for (double t = 0.0; t < horizon; t += 0.05) {
      ASSERT_LE(distance(w.mob.position_at(0, t), w.mob.position_at(1, t)), 250.0 + 1e-6) << "seed " << seed;
    }
    if (brk) {
      EXPECT_GT(distance(w.mob.position_at(0, *brk + 1e-6), w.mob.position_at(1, *brk + 1e-6)), 250.0)
          << "seed " << seed;
      EXPECT_NEAR(distance(w.mob.position_at(0, *brk), w.mob.position_at(1, *brk)), 250.0, 1e-6);
    }
  }
}

TEST(RadioProperty, NeighborSymmetryAndNoFarDelivery) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    World w;
    Rng rng(seed);
    for (int i = 0; i < 25; ++i) w.mob.add_node({rng.uniform(0, 1000), rng.uniform(0, 1000)});
    for (NodeId a = 0; a < 25; ++a) {
      for (NodeId b : w.radio.neighbors(a, 0.0)) {
        const auto back = w.radio.neighbors(b, 0.0);
        ASSERT_NE(std::find(back.begin(), back.end(), a), back.end());
      }
    }
    std::vector<std::tuple<NodeId, NodeId, SimTime, SimTime>> deliveries;
    w.radio.set_promiscuous_tap({[&](NodeId r, const Frame<int>& f, SimTime at) {
                                   deliveries.emplace_back(f.src, r, f.sent_at, at);
                                 },
                                 nullptr});
    for (NodeId a = 0; a < 25; ++a) w.send(a, kBroadcast, 100 + a);
    w.sched.run_until(1.0);
    for (const auto& [src, r, sent, at] : deliveries) {
      ASSERT_LE(distance(w.mob.position_at(src, sent), w.mob.position_at(r, sent)), 250.0);
      ASSERT_GT(at - sent, 0.0);
      ASSERT_DOUBLE_EQ(at - sent, w.radio.hop_delay(100 + src));
    }
  }
}

TEST(RadioProperty, TapIsObservational) {
  auto run = [](bool tap) {
    Scheduler s;
    std::ostringstream log;
    s.set_event_log(&log);
    MobilityModel m(FieldConfig{}, s);
    RadioMedium<int> r(RadioConfig{}, m, s);
    Rng rng(9);
    for (int i = 0; i < 20; ++i) m.add_node({rng.uniform(0, 800), rng.uniform(0, 800)});
    std::size_t n = 0;
    if (tap) r.set_promiscuous_tap({[&](NodeId, const Frame<int>&, SimTime) { ++n; }, nullptr});
    for (NodeId a = 0; a < 20; ++a) {
      Frame<int> f;
      f.src = a;
      f.dst = (a + 3) % 20;
      f.size = 64;
      r.transmit(f);
    }
    s.run_until(1.0);
    return log.str();
  };
  EXPECT_EQ(run(true), run(false));
}
