#include "lrfhss/channel.hpp"
#include "lrfhss/detector.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lrfhss;

namespace {

constexpr int kOsr = 128;
constexpr int kHop = 64;

// one header block on `channel`, preceded by `lead` lane samples of silence
IqBuffer header_signal(int channel, long lead, long total_lane = 600, std::uint32_t seed = 1)
{
    PacketConfig cfg;
    std::vector<std::uint8_t> pl(8, static_cast<std::uint8_t>(seed));
    auto pkt = build_packet(cfg, pl);
    std::vector<BitBlock> blocks{pkt.blocks[0]};
    HopPlan plan;
    plan.channel_indices = {channel};
    GmskParams gp;
    gp.osr = kOsr;
    auto h = synthesize_packet(blocks, plan, gp, cfg.ocw_hz);
    IqBuffer x;
    x.sample_rate = h.sample_rate;
    x.samples.assign(total_lane * kHop, cf64{});
    // carrier continues on the absolute clock
    const double w = kTwoPi * plan.channel_freq(channel) / x.sample_rate;
    for (std::size_t n = 0; n < h.size(); ++n) {
        const std::size_t k = lead * kHop + n;
        if (k < x.size()) x.samples[k] = h.samples[n] * std::polar(1.0, w * double(lead * kHop));
    }
    return x;
}

IqBuffer add(IqBuffer a, const IqBuffer& b)
{
    for (std::size_t n = 0; n < a.size(); ++n) a.samples[n] += b.samples[n];
    return a;
}

} // namespace

TEST(Channelizer, ToneAtBinCentre)
{
    ChannelizerConfig cfg;
    IqBuffer x;
    x.sample_rate = kOsr * kSymbolRate;
    const int ch = 45;
    const double f = (ch - 40) * kSymbolRate;
    for (int n = 0; n < 64 * 400; ++n) x.samples.push_back(std::polar(1.0, kTwoPi * f * n / x.sample_rate));
    auto s = channelize(x, cfg);
    EXPECT_EQ(s.n_lanes(), 88);
    const auto h = channelizer_prototype(cfg);
    for (long m = 50; m < 350; ++m) {
        EXPECT_NEAR(std::abs(s.lane(ch)[m]), 1.0, 1e-9);
        // lane is mixed to baseband on the absolute clock
        EXPECT_NEAR(std::abs(s.lane(ch)[m] - cf64(1, 0)), 0.0, 1e-9);
        EXPECT_NEAR(std::abs(s.lane(ch + 1)[m]), prototype_response(h, kOsr, 1.0), 1e-9);
        EXPECT_LT(std::abs(s.lane(ch + 3)[m]), 1e-3);
    }
    // -6 dB near the cutoff, about 60 dB down two bins past it
    EXPECT_NEAR(20 * std::log10(prototype_response(h, kOsr, cfg.cutoff_bins)), -6.0, 0.3);
    EXPECT_LT(20 * std::log10(prototype_response(h, kOsr, 2.5)), -60.0);
}

TEST(Channelizer, ZeroInputAndLinearity)
{
    ChannelizerConfig cfg;
    IqBuffer z;
    z.sample_rate = kOsr * kSymbolRate;
    z.samples.assign(64 * 100, cf64{});
    auto s0 = channelize(z, cfg);
    for (int c = s0.first_channel(); c <= s0.last_channel(); ++c)
        for (auto v : s0.lane(c)) EXPECT_EQ(v, cf64{});

    auto a = apply_awgn(header_signal(10, 20, 400), 3.0, 1);
    auto b = apply_awgn(header_signal(60, 50, 400), 3.0, 2);
    auto sa = channelize(a, cfg), sb = channelize(b, cfg), sab = channelize(add(a, b), cfg);
    double err = 0;
    for (int c = sa.first_channel(); c <= sa.last_channel(); ++c)
        for (std::size_t m = 0; m < sa.lane_length(); ++m)
            err = std::max(err, std::abs(sab.lane(c)[m] - sa.lane(c)[m] - sb.lane(c)[m]));
    EXPECT_LT(err, 1e-9);

    IqBuffer bad;
    bad.sample_rate = 40000;
    bad.samples.resize(10);
    EXPECT_THROW(channelize(bad, cfg), Error);
}

TEST(Detector, CleanHeaderAtKnownOffset)
{
    auto x = header_signal(23, 100);
    auto s = channelize(x);
    auto d = detect_headers(s);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].channel, 23);
    EXPECT_NEAR(d[0].start_sample, 100, 1);
    EXPECT_GT(d[0].corr_peak, 0.95);
    EXPECT_NEAR(d[0].coarse_cfo, 0.0, coarse_cfo_step(s, 2048) / 2);
}

TEST(Detector, ShiftEquivariant)
{
    for (int d = 1; d < 9; d += 3) {
        auto a = detect_headers(channelize(header_signal(31, 100)));
        auto b = detect_headers(channelize(header_signal(31, 100 + d)));
        ASSERT_EQ(a.size(), 1u);
        ASSERT_EQ(b.size(), 1u);
        EXPECT_EQ(b[0].start_sample - a[0].start_sample, d);
    }
}

TEST(Detector, TwoOverlappingHeadersOnDifferentChannels)
{
    auto x = add(header_signal(5, 80, 600, 1), header_signal(70, 150, 600, 2));
    auto d = detect_headers(channelize(apply_awgn(x, 8.0, 3)));
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].channel, 5);
    EXPECT_NEAR(d[0].start_sample, 80, 1);
    EXPECT_EQ(d[1].channel, 70);
    EXPECT_NEAR(d[1].start_sample, 150, 1);
}

TEST(Detector, FalseAlarmRateOnNoise)
{
    // noise only; count detections per lane per header duration
    long durations = 0, alarms = 0;
    for (int t = 0; t < 40; ++t) {
        IqBuffer z;
        z.sample_rate = kOsr * kSymbolRate;
        z.samples.assign(64 * 2500, cf64{});
        auto s = channelize(apply_awgn(z, 0.0, 1000 + t));
        alarms += static_cast<long>(detect_headers(s).size());
        durations += s.n_lanes() * static_cast<long>(s.lane_length()) / (2 * kHeaderSymbols);
    }
    RecordProperty("alarms", std::to_string(alarms));
    RecordProperty("durations", std::to_string(durations));
    EXPECT_LE(double(alarms), 2e-4 * durations + 2);
}

TEST(Detector, MissRateAtFiveDb)
{
    std::mt19937_64 g(5);
    int miss = 0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
        const int ch = static_cast<int>(g() % 80);
        const long lead = 40 + static_cast<long>(g() % 200);
        auto x = apply_awgn(header_signal(ch, lead, 600, static_cast<std::uint32_t>(t)), 5.0, derive_seed(9, t));
        auto d = detect_headers(channelize(x));
        bool hit = false;
        for (auto& r : d)
            if (r.channel == ch && std::abs(r.start_sample - lead) <= 1) hit = true;
        miss += !hit;
    }
    RecordProperty("misses", std::to_string(miss));
    EXPECT_LE(miss, trials / 100);
}

TEST(Detector, CoarseCfoResolutionAndAccuracy)
{
    auto s0 = channelize(header_signal(40, 100));
    const double step = coarse_cfo_step(s0, 2048);
    EXPECT_NEAR(step, 976.5625 / 2048, 1e-12);
    for (double f : {0.0, 3 * step, 0.3 * kSymbolRate, -0.45 * kSymbolRate}) {
        auto x = apply_cfo_phase(header_signal(40, 100), f, 20.0);
        auto d = detect_headers(channelize(x));
        ASSERT_EQ(d.size(), 1u) << f;
        EXPECT_EQ(d[0].channel, 40);
        EXPECT_NEAR(d[0].coarse_cfo, f, step / 2 + 1e-9) << f;
    }
    // at 5 dB the estimate is limited by the 30-symbol window, not by the grid
    std::vector<double> res;
    for (int t = 0; t < 101; ++t) {
        const double f = 0.1 * kSymbolRate;
        auto x = apply_awgn(apply_cfo_phase(header_signal(40, 100), f, 0.0), 5.0, derive_seed(11, t));
        auto d = detect_headers(channelize(x));
        ASSERT_FALSE(d.empty());
        res.push_back(std::abs(d[0].coarse_cfo - f));
    }
    std::nth_element(res.begin(), res.begin() + 50, res.end());
    RecordProperty("median_residual_hz", std::to_string(res[50]));
    EXPECT_LT(res[50], 1.0);
}
