#pragma once

#include "lrfhss/config.hpp"
#include "lrfhss/link.hpp"
#include "lrfhss/parallel.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

namespace lrfhss {

struct SweepSpec {
    PacketConfig packet{};
    std::vector<CodingRate> rates{CodingRate::R1_3};
    std::vector<int> payload_lens{32};
    std::vector<double> esno_db{0, 1, 2, 3, 4, 5, 6};
    std::vector<double> sto{0};
    std::vector<double> sfo_ppm{0};
    std::vector<double> cfo_frac{0};
    std::vector<double> doppler_rate{0};
    std::vector<double> cci_ratio{0};
    double phase_deg = 0.0;
    double cci_power_db = 0.0;
    long packets = 1000;
    std::uint64_t seed = 1;
    std::string output;
    RxConfig rx{};
};

struct GridPoint {
    CodingRate rate = CodingRate::R1_3;
    int payload_len = 32;
    ImpairmentProfile prof;
};

struct ResultRow {
    GridPoint point;
    long packets_sent = 0;
    long packets_failed = 0;
    double per = 0.0;
    double wall_time = 0.0;   // s, kept out of the CSV
};

// esno varies fastest, then cci, doppler, cfo, sfo, sto, length, rate
inline std::vector<GridPoint> expand_grid(const SweepSpec& s)
{
    std::vector<GridPoint> g;
    for (auto r : s.rates)
        for (int L : s.payload_lens)
            for (double sto : s.sto)
                for (double sfo : s.sfo_ppm)
                    for (double cfo : s.cfo_frac)
                        for (double dr : s.doppler_rate)
                            for (double cci : s.cci_ratio)
                                for (double es : s.esno_db) {
                                    GridPoint p;
                                    p.rate = r;
                                    p.payload_len = L;
                                    p.prof.initial_sto = sto;
                                    p.prof.sfo_ppm = sfo;
                                    p.prof.cfo_frac = cfo;
                                    p.prof.doppler_rate = dr;
                                    p.prof.cci_ratio = cci;
                                    p.prof.esno_db = es;
                                    p.prof.initial_phase = s.phase_deg;
                                    p.prof.cci_power_db = s.cci_power_db;
                                    g.push_back(p);
                                }
    return g;
}

inline void validate(const SweepSpec& s)
{
    if (s.packets < 1) throw Error("bad-sweep", "packets per point must be positive");
    if (s.rates.empty() || s.payload_lens.empty() || s.esno_db.empty() || s.sto.empty() || s.sfo_ppm.empty() ||
        s.cfo_frac.empty() || s.doppler_rate.empty() || s.cci_ratio.empty())
        throw Error("bad-sweep", "every axis needs at least one value");
    for (const auto& p : expand_grid(s)) {
        p.prof.validate();
        PacketConfig c = s.packet;
        c.coding_rate = p.rate;
        c.payload_len = p.payload_len;
        c.n_headers = default_header_count(p.rate);
        c.validate();
    }
}

inline PacketConfig packet_for(const SweepSpec& s, const GridPoint& p)
{
    PacketConfig c = s.packet;
    c.coding_rate = p.rate;
    c.payload_len = p.payload_len;
    c.n_headers = default_header_count(p.rate);
    return c;
}

// trial t uses the same payload, hop seed and noise at every grid point
inline ResultRow run_point(const SweepSpec& s, const GridPoint& p, int workers = 0)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<char> ok(static_cast<std::size_t>(s.packets));
    const PacketConfig pc = packet_for(s, p);
    parallel_for(
        ok.size(), [&](std::size_t t) { ok[t] = simulate_link(pc, p.prof, derive_seed(s.seed, t), s.rx).delivered; },
        workers);
    ResultRow r;
    r.point = p;
    r.packets_sent = s.packets;
    for (char v : ok) r.packets_failed += !v;
    r.per = double(r.packets_failed) / double(r.packets_sent);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string csv_header()
{
    return "coding_rate,payload_len,esno_db,sto,sfo_ppm,cfo_frac,doppler_rate,cci_ratio,packets_sent,packets_failed,per";
}

inline std::string fmt_num(double v)
{
    char b[40];
    std::snprintf(b, sizeof b, "%.10g", v);
    return b;
}

inline std::string csv_key(const GridPoint& p)
{
    const auto& q = p.prof;
    return std::string(to_string(p.rate)) + "," + std::to_string(p.payload_len) + "," + fmt_num(q.esno_db) + "," +
           fmt_num(q.initial_sto) + "," + fmt_num(q.sfo_ppm) + "," + fmt_num(q.cfo_frac) + "," + fmt_num(q.doppler_rate) +
           "," + fmt_num(q.cci_ratio);
}

inline std::string csv_row(const ResultRow& r)
{
    return csv_key(r.point) + "," + std::to_string(r.packets_sent) + "," + std::to_string(r.packets_failed) + "," +
           fmt_num(r.per);
}

inline std::optional<ResultRow> parse_csv_row(const std::string& line, const GridPoint& expect)
{
    const std::string key = csv_key(expect) + ",";
    if (line.rfind(key, 0) != 0) return std::nullopt;
    std::istringstream in(line.substr(key.size()));
    std::string a, b, c;
    if (!std::getline(in, a, ',') || !std::getline(in, b, ',') || !std::getline(in, c)) return std::nullopt;
    ResultRow r;
    r.point = expect;
    try {
        r.packets_sent = std::stol(a);
        r.packets_failed = std::stol(b);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    r.per = double(r.packets_failed) / double(r.packets_sent);
    if (csv_row(r) != line) return std::nullopt;
    return r;
}

// identifies the spec for resume; the output path and worker count are excluded
inline std::string sweep_fingerprint(const SweepSpec& s)
{
    std::string t;
    for (const auto& p : expand_grid(s)) t += csv_key(p) + ";";
    t += std::to_string(s.packets) + ";" + std::to_string(s.seed) + ";" + fmt_num(s.phase_deg) + ";" + fmt_num(s.cci_power_db);
    const auto& c = s.packet;
    t += ";" + fmt_num(c.ocw_hz) + ";" + fmt_num(c.grid_hz) + ";" + std::to_string(c.n_channels) + ";" +
         std::to_string(c.n_channels_per_ed);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : t) h = (h ^ ch) * 1099511628211ull;
    char b[20];
    std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(h));
    return b;
}

using SweepProgress = std::function<void(const ResultRow&, std::size_t done, std::size_t total, bool resumed)>;

// Rows are appended to s.output as each point finishes. An existing file with the same fingerprint is resumed
// from its last complete row; the finished file is the same either way.
inline std::vector<ResultRow> run_per_sweep(const SweepSpec& s, int workers = 0, const SweepProgress& progress = {})
{
    validate(s);
    const auto grid = expand_grid(s);
    std::vector<ResultRow> rows;
    const bool to_file = !s.output.empty();
    const std::string fp_path = s.output + ".fingerprint";
    const std::string timing_path = s.output + ".timing";
    const std::string fp = sweep_fingerprint(s);

    if (to_file && std::filesystem::exists(s.output)) {
        std::ifstream fin(fp_path);
        std::string old;
        std::getline(fin, old);
        if (old == fp) {
            std::ifstream in(s.output);
            std::string line;
            std::getline(in, line);
            if (line == csv_header())
                while (rows.size() < grid.size() && std::getline(in, line)) {
                    auto r = parse_csv_row(line, grid[rows.size()]);
                    if (!r) break;
                    rows.push_back(*r);
                    if (progress) progress(rows.back(), rows.size(), grid.size(), true);
                }
        }
    }
    std::ofstream out, tout;
    if (to_file) {
        // rewrite the valid prefix so a torn last line is dropped
        out.open(s.output, std::ios::trunc);
        if (!out) throw Error("io", s.output + ": cannot open for writing");
        out << csv_header() << "\n";
        for (const auto& r : rows) out << csv_row(r) << "\n";
        out.flush();
        std::ofstream(fp_path, std::ios::trunc) << fp << "\n";
        tout.open(timing_path, std::ios::app);
    }
    for (std::size_t i = rows.size(); i < grid.size(); ++i) {
        rows.push_back(run_point(s, grid[i], workers));
        if (to_file) {
            out << csv_row(rows.back()) << "\n";
            out.flush();
            tout << csv_key(grid[i]) << "," << fmt_num(rows.back().wall_time) << "\n";
            tout.flush();
        }
        if (progress) progress(rows.back(), i + 1, grid.size(), false);
    }
    return rows;
}

// Es/No where PER crosses `target`, log-linear between the bracketing points; rows must share all other axes.
// A zero-failure point counts as half a failure.
inline std::optional<double> esno_at_per(std::vector<ResultRow> rows, double target = 1e-2)
{
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.point.prof.esno_db < b.point.prof.esno_db; });
    auto lp = [](const ResultRow& r) {
        return std::log10(std::max(r.per, 0.5 / double(r.packets_sent)));
    };
    const double lt = std::log10(target);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double a = lp(rows[i]), b = lp(rows[i + 1]);
        if (a >= lt && b <= lt) {
            const double x0 = rows[i].point.prof.esno_db, x1 = rows[i + 1].point.prof.esno_db;
            if (a == b) return x0;
            return x0 + (a - lt) / (a - b) * (x1 - x0);
        }
    }
    return std::nullopt;
}

inline std::vector<CodingRate> parse_rates(const std::vector<std::string>& v)
{
    std::vector<CodingRate> r;
    for (const auto& s : v) r.push_back(parse_rate(s));
    return r;
}

// network keys shared by tx, rx and sweep
inline PacketConfig packet_from(const Config& c, PacketConfig p = {})
{
    p.ocw_hz = c.num("ocw_hz", p.ocw_hz);
    p.grid_hz = c.num("grid_hz", p.grid_hz);
    p.n_channels = static_cast<int>(c.integer("n_channels", p.n_channels));
    p.n_channels_per_ed = static_cast<int>(c.integer("n_channels_per_ed", p.n_channels_per_ed));
    // the channelizer bins are one symbol rate apart
    if (std::abs(p.channel_spacing_hz() - kSymbolRate) > 1e-6)
        c.fail(c.has("ocw_hz") ? "ocw_hz" : "n_channels", "ocw_hz / n_channels must equal the symbol rate " + fmt_num(kSymbolRate));
    if (p.n_channels + 8 > 128) c.fail("n_channels", "at most 120 channels fit the channelizer");
    try {
        p.validate();
    } catch (const Error& e) {
        c.fail(c.has("grid_hz") ? "grid_hz" : "n_channels_per_ed", e.what());
    }
    return p;
}

inline SweepSpec sweep_from(const Config& c)
{
    SweepSpec s;
    s.packet = packet_from(c);
    s.rates = parse_rates(c.strings("coding_rate", {"1/3"}));
    s.payload_lens.clear();
    for (long v : c.integers("payload_len", {32})) s.payload_lens.push_back(static_cast<int>(v));
    s.esno_db = c.list("esno_db", s.esno_db);
    s.sto = c.list("sto", s.sto);
    s.sfo_ppm = c.list("sfo_ppm", s.sfo_ppm);
    s.cfo_frac = c.list("cfo_frac", s.cfo_frac);
    s.doppler_rate = c.list("doppler_rate", s.doppler_rate);
    s.cci_ratio = c.list("cci_ratio", s.cci_ratio);
    s.phase_deg = c.num("phase_deg", s.phase_deg);
    s.cci_power_db = c.num("cci_power_db", s.cci_power_db);
    s.packets = c.integer("packets", s.packets);
    s.output = c.str("output", "");
    const long seed = c.integer("seed", 1);
    if (seed < 0) c.fail("seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.rx.channelizer.n_channels = s.packet.n_channels;
    try {
        validate(s);
    } catch (const Error& e) {
        throw Error("config", std::string(e.what()));
    }
    return s;
}

} // namespace lrfhss
