#include "lrfhss/aloha.hpp"

#include <gtest/gtest.h>

using namespace lrfhss;

namespace {

AlohaScenario scenario(AlohaMode m, int channels = 1, long packets = 100000)
{
    AlohaScenario sc;
    sc.mode = m;
    sc.n_channels = channels;
    sc.min_packets = packets;
    sc.rng_seed = 11;
    return sc;
}

} // namespace

TEST(Aloha, DefaultScenario)
{
    AlohaScenario sc;
    EXPECT_EQ(sc.n_devices, 1500);
    EXPECT_EQ(sc.connection_time, 1200.0);
    EXPECT_EQ(sc.packet_len, 20);
    EXPECT_EQ(sc.beacon_interval, 120.0);
    // 3 headers and 12 fragments at r = 1/3
    EXPECT_EQ(sc.headers(), 3);
    EXPECT_EQ(sc.fragments(), 12);
    EXPECT_NEAR(sc.packet_time(), 942 / kSymbolRate, 1e-12);
}

TEST(Aloha, SlottedPeakAtUnitLoad)
{
    auto p = simulate_throughput(scenario(AlohaMode::Slotted), {1.0});
    EXPECT_NEAR(p[0].s_packet, std::exp(-1.0), 0.01);
    EXPECT_LT(p[0].ci_packet, 0.01);
}

TEST(Aloha, UnslottedPeakAtHalfLoad)
{
    auto p = simulate_throughput(scenario(AlohaMode::Unslotted), {0.5});
    EXPECT_NEAR(p[0].s_packet, 0.5 * std::exp(-1.0), 0.01);
    EXPECT_LT(p[0].ci_packet, 0.01);
}

TEST(Aloha, LightLoadIsCollisionFree)
{
    for (auto m : {AlohaMode::Slotted, AlohaMode::Unslotted}) {
        auto p = simulate_throughput(scenario(m, 1, 20000), {0.01});
        EXPECT_NEAR(p[0].s_packet / 0.01, 1.0, 0.04) << to_string(m);
        EXPECT_NEAR(p[0].s_block / (0.01 * p[0].payload_fraction), 1.0, 0.04) << to_string(m);
    }
}

TEST(Aloha, MatchesClassicalCurves)
{
    for (auto m : {AlohaMode::Slotted, AlohaMode::Unslotted})
        for (int c : {1, 3}) {
            const auto g = load_grid(0.25 * c, 1.5 * c, 0.25 * c);
            auto pts = simulate_throughput(scenario(m, c, 30000), g);
            for (const auto& p : pts) EXPECT_NEAR(p.s_packet, aloha_theory(m, p.offered_load, c), 4 * p.ci_packet + 0.003);
        }
}

TEST(Aloha, SlottedNeverBelowUnslotted)
{
    for (int c : {1, 2, 3}) {
        const auto g = load_grid(0.2 * c, 2.0 * c, 0.2 * c);
        auto s = simulate_throughput(scenario(AlohaMode::Slotted, c, 30000), g);
        auto u = simulate_throughput(scenario(AlohaMode::Unslotted, c, 30000), g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            EXPECT_GE(s[i].s_packet, u[i].s_packet) << c << " " << g[i];
            EXPECT_GE(s[i].s_block, u[i].s_block) << c << " " << g[i];
        }
    }
}

TEST(Aloha, BlockRuleToleratesPartialOverlap)
{
    // slotted packets overlap completely, so both rules count the same packets
    auto s = simulate_throughput(scenario(AlohaMode::Slotted, 1, 30000), {1.0});
    EXPECT_NEAR(s[0].s_block, s[0].s_packet * s[0].payload_fraction, 1e-12);
    // unslotted: a clean header and at most 40% hit fragments survive a partial overlap
    auto u = simulate_throughput(scenario(AlohaMode::Unslotted, 1, 30000), {1.0});
    EXPECT_GT(u[0].s_block, u[0].s_packet * u[0].payload_fraction + 5 * u[0].ci_block);
    EXPECT_EQ(collided_fragment_tolerance(CodingRate::R1_3), 0.40);
    EXPECT_EQ(collided_fragment_tolerance(CodingRate::R2_3), 0.12);
}

TEST(Aloha, TighterCodeLosesMoreUnderPartialOverlap)
{
    auto a = scenario(AlohaMode::Unslotted, 1, 30000);
    auto b = a;
    b.coding_rate = CodingRate::R2_3;
    auto pa = simulate_throughput(a, {1.0}), pb = simulate_throughput(b, {1.0});
    // success probability of the block rule, normalised by the payload share
    EXPECT_GT(pa[0].s_block / pa[0].payload_fraction, pb[0].s_block / pb[0].payload_fraction);
}

TEST(Aloha, DeterministicAcrossWorkerCounts)
{
    auto sc = scenario(AlohaMode::Unslotted, 3, 20000);
    const std::vector<double> g{0.5, 1.5, 2.5};
    auto a = simulate_throughput(sc, g, 1);
    auto b = simulate_throughput(sc, g, 4);
    auto c = simulate_throughput(sc, g, 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(a[i].s_packet, b[i].s_packet);
        EXPECT_EQ(a[i].s_block, b[i].s_block);
        EXPECT_EQ(a[i].s_packet, c[i].s_packet);
        EXPECT_EQ(a[i].packets, b[i].packets);
    }
    sc.rng_seed = 12;
    auto d = simulate_throughput(sc, g, 1);
    EXPECT_NE(a[1].s_packet, d[1].s_packet);
}

TEST(Aloha, MultichannelSplitsTraffic)
{
    auto sc = scenario(AlohaMode::Slotted, 1, 30000);
    auto cs = simulate_multichannel(sc, {1, 3}, {3.0});
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[1].n_channels, 3);
    EXPECT_NEAR(cs[1].points[0].s_packet, 3 * std::exp(-1.0), 0.02);
    EXPECT_GT(cs[1].points[0].s_packet, 2 * cs[0].points[0].s_packet);
}

TEST(Aloha, RejectsBadScenario)
{
    AlohaScenario sc;
    sc.n_channels = 0;
    EXPECT_THROW(simulate_throughput(sc, {1.0}), Error);
    sc = AlohaScenario{};
    sc.beacon_interval = 1.0;
    EXPECT_THROW(simulate_throughput(sc, {1.0}), Error);
    EXPECT_THROW(parse_aloha_mode("pure"), Error);
}
