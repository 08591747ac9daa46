#include "lrfhss/iq_io.hpp"
#include "lrfhss/sweep.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <unistd.h>

using namespace lrfhss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto d = fs::temp_directory_path() / ("lrfhss_harness_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d / name;
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string expect_error(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "no error";
}

SweepSpec small_spec()
{
    SweepSpec s;
    s.esno_db = {20};
    s.sto = {0, 0.25};
    s.packets = 6;
    s.payload_lens = {8};
    s.seed = 42;
    return s;
}

} // namespace

TEST(Config, KeysListsAndFractions)
{
    auto c = Config::parse("esno_db = 1, 2.5, inf  # comment\nsto = 0, 1/8, 1/4\ncoding_rate = 2/3\npackets=10\n");
    EXPECT_EQ(c.list("esno_db", {}), (std::vector<double>{1, 2.5, std::numeric_limits<double>::infinity()}));
    EXPECT_EQ(c.list("sto", {}), (std::vector<double>{0, 0.125, 0.25}));
    EXPECT_EQ(c.strings("coding_rate", {}), std::vector<std::string>{"2/3"});
    EXPECT_EQ(c.integer("packets", 0), 10);
    EXPECT_EQ(c.num("absent", 7.0), 7.0);
    EXPECT_NO_THROW(c.reject_unused());
}

TEST(Config, IncludeIsRelativeAndLaterEntriesWin)
{
    put(scratch("base.cfg"), "esno_db = 1\npackets = 5\n");
    fs::create_directories(scratch("sub"));
    put(scratch("sub/top.cfg"), "include ../base.cfg\npackets = 9\n");
    auto c = Config::load(scratch("sub/top.cfg").string());
    EXPECT_EQ(c.num("esno_db", 0), 1.0);
    EXPECT_EQ(c.integer("packets", 0), 9);
    EXPECT_NE(c.where("esno_db").find("base.cfg:1"), std::string::npos);
}

TEST(Config, ErrorsNameFileAndLine)
{
    put(scratch("bad1.cfg"), "esno_db = 1\n\nthis line has no equals\n");
    EXPECT_NE(expect_error([] { Config::load(scratch("bad1.cfg").string()); }).find("bad1.cfg:3"), std::string::npos);

    put(scratch("bad2.cfg"), "# header\nesno_db = 1, x\n");
    auto c = Config::load(scratch("bad2.cfg").string());
    auto e = expect_error([&] { c.list("esno_db", {}); });
    EXPECT_NE(e.find("bad2.cfg:2"), std::string::npos) << e;
    EXPECT_NE(e.find("'x'"), std::string::npos) << e;

    put(scratch("bad3.cfg"), "esno_db = 1\nesnodb = 2\n");
    auto d = Config::load(scratch("bad3.cfg").string());
    d.list("esno_db", {});
    e = expect_error([&] { d.reject_unused(); });
    EXPECT_NE(e.find("bad3.cfg:2"), std::string::npos) << e;
    EXPECT_NE(e.find("unknown key"), std::string::npos) << e;

    put(scratch("cyc_a.cfg"), "include cyc_b.cfg\n");
    put(scratch("cyc_b.cfg"), "x = 1\ninclude cyc_a.cfg\n");
    e = expect_error([] { Config::load(scratch("cyc_a.cfg").string()); });
    EXPECT_NE(e.find("include cycle"), std::string::npos) << e;
    EXPECT_NE(e.find("cyc_b.cfg:2"), std::string::npos) << e;

    e = expect_error([] { Config::load(scratch("missing.cfg").string()); });
    EXPECT_NE(e.find("cannot open"), std::string::npos);
}

TEST(Config, SweepSpecValuesAreRangeChecked)
{
    auto ok = sweep_from(Config::parse("coding_rate = 1/3, 2/3\nsto = 0, 1/8, 1/4\nesno_db = 0, 1\n"));
    EXPECT_EQ(expand_grid(ok).size(), 12u);
    EXPECT_EQ(ok.rates[1], CodingRate::R2_3);
    EXPECT_THROW(sweep_from(Config::parse("sto = 0, 2\n")), Error);
    EXPECT_THROW(sweep_from(Config::parse("coding_rate = 3/4\n")), Error);
    EXPECT_THROW(sweep_from(Config::parse("n_channels = 60\n")), Error);
    auto e = expect_error([] { sweep_from(Config::parse("packets = 2.5\n", "p.cfg")); });
    EXPECT_NE(e.find("p.cfg:1"), std::string::npos) << e;
}

TEST(IqIo, RoundTripIsBitExact)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<float> nd;
    IqBuffer b;
    b.sample_rate = 62500;
    b.t0 = 0.1234567890123;
    for (int i = 0; i < 1000; ++i) b.samples.emplace_back(nd(rng), nd(rng));
    const auto p = scratch("rt.iq").string();
    write_iq(p, b);
    auto r = read_iq(p);
    EXPECT_EQ(r.sample_rate, b.sample_rate);
    EXPECT_EQ(r.t0, b.t0);
    ASSERT_EQ(r.size(), b.size());
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(r.samples[i], b.samples[i]);
    EXPECT_EQ(iq_encode(r), slurp(p));
}

TEST(IqIo, EmptyBufferIsHeaderOnly)
{
    IqBuffer b;
    b.sample_rate = 1000;
    const auto s = iq_encode(b);
    EXPECT_EQ(s.size(), kIqHeaderSize);
    auto r = iq_decode(s);
    EXPECT_EQ(r.size(), 0u);
    EXPECT_EQ(r.sample_rate, 1000.0);
}

TEST(IqIo, MatchesGoldenHexDump)
{
    std::ifstream f(std::string(LRFHSS_TEST_DATA) + "/iq_golden.hex");
    ASSERT_TRUE(f);
    std::string hex, line;
    while (std::getline(f, line)) hex += line;
    IqBuffer b;
    b.sample_rate = 62500;
    b.t0 = 0.25;
    b.samples = {{1.0, -1.0}, {0.5, 0.25}, {-0.125, 3.0}, {0.0, -0.0}};
    const auto enc = iq_encode(b);
    std::string got;
    char t[3];
    for (unsigned char ch : enc) {
        std::snprintf(t, sizeof t, "%02x", ch);
        got += t;
    }
    EXPECT_EQ(got, hex);
    auto r = iq_decode(enc);
    EXPECT_TRUE(std::signbit(r.samples[3].imag()));
}

TEST(IqIo, RejectsMalformedAndTruncatedFiles)
{
    IqBuffer b;
    b.sample_rate = 62500;
    b.samples.assign(4, cf64{1, 2});
    auto s = iq_encode(b);
    auto cut = s.substr(0, s.size() - 3);
    EXPECT_NE(expect_error([&] { iq_decode(cut); }).find("iq-truncated"), std::string::npos);
    auto bad = s;
    bad[0] = 'X';
    EXPECT_NE(expect_error([&] { iq_decode(bad); }).find("iq-header"), std::string::npos);
    EXPECT_THROW(iq_decode(s.substr(0, 20)), Error);
    auto extra = s + "abcdefgh";
    EXPECT_THROW(iq_decode(extra), Error);
}

TEST(Sweep, CleanLinkHasZeroPer)
{
    auto s = small_spec();
    auto rows = run_per_sweep(s, 2);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.packets_sent, 6);
        EXPECT_EQ(r.packets_failed, 0);
        EXPECT_EQ(r.per, 0.0);
    }
}

TEST(Sweep, CsvIsIdenticalAcrossRunsAndWorkerCounts)
{
    auto s = small_spec();
    s.esno_db = {-2, 0};
    s.sto = {0};
    s.packets = 8;
    s.output = scratch("w1.csv").string();
    run_per_sweep(s, 1);
    auto a = slurp(s.output);
    s.output = scratch("w3.csv").string();
    run_per_sweep(s, 3);
    EXPECT_EQ(a, slurp(s.output));
    fs::remove(s.output);
    fs::remove(s.output + ".fingerprint");
    run_per_sweep(s, 2);
    EXPECT_EQ(a, slurp(s.output));
    EXPECT_EQ(a.substr(0, a.find('\n')), csv_header());
}

TEST(Sweep, ResumeSkipsFinishedPoints)
{
    auto s = small_spec();
    s.output = scratch("resume.csv").string();
    fs::remove(s.output);
    run_per_sweep(s, 2);
    const auto full = slurp(s.output);
    // keep the first row and half of the second
    const auto first = full.find('\n', full.find('\n') + 1) + 1;
    put(s.output, full.substr(0, first + 6));
    int resumed = 0, ran = 0;
    run_per_sweep(s, 2, [&](const ResultRow&, std::size_t, std::size_t, bool r) { (r ? resumed : ran)++; });
    EXPECT_EQ(resumed, 1);
    EXPECT_EQ(ran, 1);
    EXPECT_EQ(slurp(s.output), full);
    // a different spec starts over
    s.packets = 5;
    resumed = 0;
    run_per_sweep(s, 2, [&](const ResultRow&, std::size_t, std::size_t, bool r) { resumed += r; });
    EXPECT_EQ(resumed, 0);
}

TEST(Sweep, PerCrossingIsLogLinear)
{
    auto row = [](double es, long fail) {
        ResultRow r;
        r.point.prof.esno_db = es;
        r.packets_sent = 1000;
        r.packets_failed = fail;
        r.per = fail / 1000.0;
        return r;
    };
    auto x = esno_at_per({row(3, 1), row(1, 100), row(2, 10)});
    ASSERT_TRUE(x);
    EXPECT_NEAR(*x, 2.0, 1e-12);
    x = esno_at_per({row(1, 100), row(2, 1)});
    EXPECT_NEAR(*x, 1.5, 1e-12);
    // zero failures count as half a failure
    x = esno_at_per({row(1, 50), row(2, 0)});
    EXPECT_NEAR(*x, 1 + (std::log10(0.05) + 2) / (std::log10(0.05) - std::log10(5e-4)), 1e-12);
    EXPECT_FALSE(esno_at_per({row(1, 5), row(2, 1)}));
}

TEST(Sweep, TrialsShareRandomNumbersAcrossPoints)
{
    // the same trial seed gives the same payload at every grid point
    PacketConfig pc;
    pc.payload_len = 8;
    ImpairmentProfile a, b;
    b.esno_db = 30;
    b.doppler_rate = 200;
    EXPECT_TRUE(simulate_link(pc, a, derive_seed(7, 3)).delivered);
    EXPECT_TRUE(simulate_link(pc, b, derive_seed(7, 3)).delivered);
}
