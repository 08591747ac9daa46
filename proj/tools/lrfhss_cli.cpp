#include "lrfhss/aloha.hpp"
#include "lrfhss/iq_io.hpp"
#include "lrfhss/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace lrfhss;
using json = nlohmann::json;

namespace {

const std::vector<std::string> kNetworkKeys{"ocw_hz", "grid_hz", "n_channels", "n_channels_per_ed"};
const std::vector<std::string> kImpairmentKeys{"sto", "sfo_ppm", "cfo_frac", "doppler_rate", "phase_deg",
                                               "esno_db", "cci_ratio", "cci_power_db"};

// config file plus one --key flag per config key; flags win
struct KeyedCommand {
    CLI::App* app = nullptr;
    std::string config_path;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    std::vector<std::string> keys;

    KeyedCommand(CLI::App& parent, const std::string& name, const std::string& desc, std::vector<std::string> k)
        : keys(std::move(k))
    {
        app = parent.add_subcommand(name, desc);
        app->add_option("--config", config_path, "key = value file")->check(CLI::ExistingFile);
        app->add_option("--set", sets, "extra key=value, repeatable");
        for (const auto& key : keys) app->add_option("--" + key, flags[key], "config key " + key);
    }

    Config config() const
    {
        Config c = config_path.empty() ? Config{} : Config::load(config_path);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw Error("config", "--set expects key=value, got '" + s + "'");
            c.set(Config::trim(s.substr(0, eq)), s.substr(eq + 1), "--set");
        }
        for (const auto& key : keys)
            if (app->count("--" + key)) c.set(key, flags.at(key), "--" + key);
        return c;
    }
};

std::string hex(std::span<const std::uint8_t> b)
{
    std::string s;
    char t[3];
    for (auto v : b) {
        std::snprintf(t, sizeof t, "%02x", v);
        s += t;
    }
    return s;
}

std::vector<std::uint8_t> unhex(const std::string& s)
{
    if (s.size() % 2) throw Error("bad-payload", "hex payload has odd length");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 2) {
        const std::string b = s.substr(i, 2);
        if (b.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) throw Error("bad-payload", "not hex: " + b);
        out.push_back(static_cast<std::uint8_t>(std::stoul(b, nullptr, 16)));
    }
    return out;
}

ImpairmentProfile profile_from(const Config& c)
{
    ImpairmentProfile p;
    p.initial_sto = c.num("sto", 0);
    p.sfo_ppm = c.num("sfo_ppm", 0);
    p.cfo_frac = c.num("cfo_frac", 0);
    p.doppler_rate = c.num("doppler_rate", 0);
    p.initial_phase = c.num("phase_deg", 0);
    p.esno_db = c.num("esno_db", std::numeric_limits<double>::infinity());
    p.cci_ratio = c.num("cci_ratio", 0);
    p.cci_power_db = c.num("cci_power_db", 0);
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error("config", e.what());
    }
    return p;
}

json layout_json(const std::vector<BlockSpan>& l)
{
    json a = json::array();
    for (const auto& b : l)
        a.push_back({{"role", b.role == BlockRole::Header ? "header" : "payload"},
                     {"index", b.index},
                     {"start", b.start},
                     {"length", b.length},
                     {"channel", b.channel},
                     {"freq_hz", b.freq_hz}});
    return a;
}

std::vector<BlockSpan> layout_from(const json& a)
{
    std::vector<BlockSpan> out;
    for (const auto& j : a) {
        BlockSpan b;
        b.role = j.at("role") == "header" ? BlockRole::Header : BlockRole::Payload;
        b.index = j.at("index");
        b.start = j.at("start");
        b.length = j.at("length");
        b.channel = j.at("channel");
        b.freq_hz = j.at("freq_hz");
        out.push_back(b);
    }
    return out;
}

json read_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw Error("io", path + ": cannot open");
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error("manifest", path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("io", path + ": cannot open for writing");
    f << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"LR-FHSS link and access simulator"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;

    // tx
    std::vector<std::string> tx_keys{"coding_rate", "payload_len", "n_headers", "hop_seed", "payload", "lead", "tail"};
    tx_keys.insert(tx_keys.end(), kNetworkKeys.begin(), kNetworkKeys.end());
    KeyedCommand tx(app, "tx", "packet to IQ file", tx_keys);
    std::string tx_out, tx_manifest;
    tx.app->add_option("--seed", seed, "payload and hop seed source")->required();
    tx.app->add_option("--out", tx_out, "IQ file")->required();
    tx.app->add_option("--manifest", tx_manifest, "JSON manifest (default: <out>.json)");

    // chan
    KeyedCommand chan(app, "chan", "apply channel impairments to an IQ file", kImpairmentKeys);
    std::string ch_in, ch_out, ch_manifest;
    chan.app->add_option("--seed", seed, "noise and interference seed")->required();
    chan.app->add_option("--in", ch_in, "input IQ file")->required()->check(CLI::ExistingFile);
    chan.app->add_option("--out", ch_out, "output IQ file")->required();
    chan.app->add_option("--manifest", ch_manifest, "tx manifest, needed for cci_ratio > 0");

    // rx
    std::vector<std::string> rx_keys = kNetworkKeys;
    rx_keys.push_back("detector_threshold");
    KeyedCommand rx(app, "rx", "decode packets from an IQ file", rx_keys);
    std::string rx_in, rx_expect;
    rx.app->add_option("--in", rx_in, "IQ file")->required()->check(CLI::ExistingFile);
    rx.app->add_option("--expect", rx_expect, "tx manifest; exit status 3 unless its payload is delivered");

    // sweep
    std::vector<std::string> sw_keys{"coding_rate", "payload_len", "esno_db", "sto", "sfo_ppm", "cfo_frac",
                                     "doppler_rate", "cci_ratio", "phase_deg", "cci_power_db", "packets", "output"};
    sw_keys.insert(sw_keys.end(), kNetworkKeys.begin(), kNetworkKeys.end());
    KeyedCommand sweep(app, "sweep", "PER sweep to CSV", sw_keys);
    bool dry = false, quiet = false;
    sweep.app->add_option("--seed", seed, "trial seed")->required();
    sweep.app->add_flag("--dry-run", dry, "print the grid and exit");
    sweep.app->add_flag("--quiet", quiet, "no progress on stderr");

    // aloha
    KeyedCommand aloha(app, "aloha", "Aloha throughput curves to CSV",
                       {"mode", "channels", "n_devices", "connection_time", "packet_len", "beacon_interval", "coding_rate",
                        "load_min", "load_max", "load_step", "min_packets", "output"});
    aloha.app->add_option("--seed", seed, "simulation seed")->required();

    // timing
    KeyedCommand timing(app, "timing", "header timing error statistics to CSV",
                        {"esno_db", "doppler_rate", "sto", "trials", "output"});
    timing.app->add_option("--seed", seed, "trial seed")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*tx.app) {
            auto c = tx.config();
            PacketConfig pc = packet_from(c);
            pc.coding_rate = parse_rate(c.str("coding_rate", "1/3"));
            pc.n_headers = static_cast<int>(c.integer("n_headers", default_header_count(pc.coding_rate)));
            std::vector<std::uint8_t> payload;
            if (c.has("payload")) {
                payload = unhex(c.str("payload", ""));
                pc.payload_len = static_cast<int>(c.integer("payload_len", static_cast<long>(payload.size())));
                if (static_cast<int>(payload.size()) != pc.payload_len) c.fail("payload_len", "does not match the payload");
            } else {
                pc.payload_len = static_cast<int>(c.integer("payload_len", 32));
                if (pc.payload_len < 1 || pc.payload_len > 255) c.fail("payload_len", "must be 1..255");
                payload = random_bytes(derive_seed(seed, 0), pc.payload_len);
            }
            const long hs = c.integer("hop_seed", static_cast<long>(derive_seed(seed, 1) & 0xFFFu));
            if (hs < 0 || hs > 0xFFF) c.fail("hop_seed", "must be 0..4095");
            pc.hop_seed = static_cast<std::uint32_t>(hs);
            const double lead = c.num("lead", 50), tail = c.num("tail", 30);
            if (lead < 0 || tail < 0) c.fail(lead < 0 ? "lead" : "tail", "must be non-negative");
            c.reject_unused();
            auto sig = transmit(pc, payload, lead, tail);
            write_iq(tx_out, sig.iq);
            json m{{"iq", tx_out},
                   {"sample_rate", sig.iq.sample_rate},
                   {"samples", sig.iq.size()},
                   {"seed", seed},
                   {"packet",
                    {{"coding_rate", to_string(pc.coding_rate)},
                     {"payload_len", pc.payload_len},
                     {"n_headers", pc.n_headers},
                     {"hop_seed", pc.hop_seed},
                     {"ocw_hz", pc.ocw_hz},
                     {"grid_hz", pc.grid_hz},
                     {"n_channels", pc.n_channels},
                     {"n_channels_per_ed", pc.n_channels_per_ed}}},
                   {"payload", hex(payload)},
                   {"n_fragments", sig.pkt.n_fragments},
                   {"time_on_air", time_on_air(pc.n_headers, sig.pkt.n_fragments)},
                   {"blocks", layout_json(sig.layout)}};
            write_text(tx_manifest.empty() ? tx_out + ".json" : tx_manifest, m.dump(2) + "\n");
            return 0;
        }
        if (*chan.app) {
            auto c = chan.config();
            auto prof = profile_from(c);
            c.reject_unused();
            prof.rng_seed = seed;
            std::vector<BlockSpan> layout;
            if (!ch_manifest.empty()) layout = layout_from(read_json(ch_manifest).at("blocks"));
            if (prof.cci_ratio > 0 && layout.empty()) throw Error("config", "cci_ratio > 0 needs --manifest");
            auto out = apply_channel(read_iq(ch_in), prof, layout);
            write_iq(ch_out, out.iq);
            if (!out.cci_blocks.empty()) {
                std::cerr << "cci blocks:";
                for (int b : out.cci_blocks) std::cerr << " " << b;
                std::cerr << "\n";
            }
            return 0;
        }
        if (*rx.app) {
            auto c = rx.config();
            RxConfig rc;
            rc.packet = packet_from(c);
            rc.channelizer.n_channels = rc.packet.n_channels;
            rc.detector.threshold = c.num("detector_threshold", rc.detector.threshold);
            c.reject_unused();
            auto res = receive(read_iq(rx_in), rc);
            for (const auto& p : res.packets)
                std::cout << json{{"t_start", p.t_start},
                                  {"crc_ok", p.crc_ok},
                                  {"coding_rate", to_string(p.info.coding_rate)},
                                  {"payload_len", p.info.payload_len},
                                  {"hop_seed", p.info.hop_seed},
                                  {"headers_used", p.headers_used},
                                  {"payload", hex(p.payload)}}
                                 .dump()
                          << "\n";
            const auto& s = res.stats;
            std::cerr << "detections " << s.detections << ", headers ok " << s.headers_ok << ", headers failed "
                      << s.headers_failed << ", packets ok " << s.packets_ok << ", packets failed " << s.packets_failed << "\n";
            if (!rx_expect.empty()) {
                const bool ok = delivered(res, unhex(read_json(rx_expect).at("payload").get<std::string>()));
                std::cerr << (ok ? "expected payload delivered\n" : "expected payload NOT delivered\n");
                return ok ? 0 : 3;
            }
            return 0;
        }
        if (*sweep.app) {
            auto c = sweep.config();
            c.set("seed", std::to_string(seed), "--seed");
            auto spec = sweep_from(c);
            c.reject_unused();
            const auto grid = expand_grid(spec);
            if (dry) {
                std::cout << "# " << grid.size() << " points x " << spec.packets << " packets, fingerprint "
                          << sweep_fingerprint(spec) << "\n";
                std::cout << "coding_rate,payload_len,esno_db,sto,sfo_ppm,cfo_frac,doppler_rate,cci_ratio\n";
                for (const auto& p : grid) std::cout << csv_key(p) << "\n";
                return 0;
            }
            auto prog = [&](const ResultRow& r, std::size_t done, std::size_t total, bool resumed) {
                if (quiet) return;
                std::cerr << "[" << done << "/" << total << "] " << csv_row(r) << (resumed ? " (resumed)" : "") << "\n";
            };
            auto rows = run_per_sweep(spec, 0, prog);
            if (spec.output.empty()) {
                std::cout << csv_header() << "\n";
                for (const auto& r : rows) std::cout << csv_row(r) << "\n";
            }
            return 0;
        }
        if (*aloha.app) {
            auto c = aloha.config();
            AlohaScenario sc;
            sc.mode = parse_aloha_mode(c.str("mode", "unslotted"));
            sc.n_devices = static_cast<int>(c.integer("n_devices", sc.n_devices));
            sc.connection_time = c.num("connection_time", sc.connection_time);
            sc.packet_len = static_cast<int>(c.integer("packet_len", sc.packet_len));
            sc.beacon_interval = c.num("beacon_interval", sc.beacon_interval);
            sc.coding_rate = parse_rate(c.str("coding_rate", "1/3"));
            sc.min_packets = c.integer("min_packets", sc.min_packets);
            sc.rng_seed = seed;
            std::vector<int> chans;
            for (long v : c.integers("channels", {1})) chans.push_back(static_cast<int>(v));
            // loads per channel; G = channels x load
            const double lo = c.num("load_min", 0.1), hi = c.num("load_max", 2.0), st = c.num("load_step", 0.1);
            if (!(st > 0) || hi < lo || lo < 0) c.fail("load_step", "need 0 <= load_min <= load_max and load_step > 0");
            const std::string out = c.str("output", "");
            c.reject_unused();
            std::string text = "mode,n_channels,offered_load,s_packet,ci_packet,s_packet_payload,s_block,ci_block,theory,"
                               "peak_packet,peak_block\n";
            for (int ch : chans) {
                std::vector<double> g;
                for (double x : load_grid(lo, hi, st)) g.push_back(x * ch);
                AlohaScenario s = sc;
                s.n_channels = ch;
                auto pts = simulate_throughput(s, g);
                std::size_t pp = 0, pb = 0;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    if (pts[i].s_packet > pts[pp].s_packet) pp = i;
                    if (pts[i].s_block > pts[pb].s_block) pb = i;
                }
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    const auto& p = pts[i];
                    char b[256];
                    std::snprintf(b, sizeof b, "%s,%d,%.4f,%.5f,%.5f,%.5f,%.5f,%.5f,%.5f,%d,%d\n", to_string(sc.mode), ch,
                                  p.offered_load, p.s_packet, p.ci_packet, p.s_packet * p.payload_fraction, p.s_block,
                                  p.ci_block, aloha_theory(sc.mode, p.offered_load, ch), i == pp ? 1 : 0, i == pb ? 1 : 0);
                    text += b;
                }
            }
            write_text(out, text);
            return 0;
        }
        if (*timing.app) {
            auto c = timing.config();
            const auto esno = c.list("esno_db", {0, 1, 2, 3, 4, 5, 6, 7, 8});
            const auto dop = c.list("doppler_rate", {0, 400});
            const double sto = c.num("sto", 0.125);
            const long trials = c.integer("trials", 500);
            const std::string out = c.str("output", "");
            if (trials < 2) c.fail("trials", "need at least 2");
            c.reject_unused();
            std::string text = "esno_db,doppler_rate,sto,trials,std_subset,std_full,mean_subset,mean_full\n";
            PacketConfig pc;
            for (double d : dop)
                for (double es : esno) {
                    ImpairmentProfile prof;
                    prof.esno_db = es;
                    prof.doppler_rate = d;
                    prof.initial_sto = sto;
                    prof.validate();
                    std::vector<double> a(static_cast<std::size_t>(trials)), b(a.size());
                    std::vector<char> okv(a.size());
                    parallel_for(a.size(), [&](std::size_t t) {
                        HeaderRxConfig sub, full;
                        full.timing_subset = false;
                        const auto s1 = derive_seed(seed, t);
                        auto x = header_timing_error(pc, prof, s1, sub), y = header_timing_error(pc, prof, s1, full);
                        okv[t] = x && y;
                        if (okv[t]) a[t] = *x, b[t] = *y;
                    });
                    double m1 = 0, m2 = 0, q1 = 0, q2 = 0;
                    long n = 0;
                    for (std::size_t t = 0; t < a.size(); ++t)
                        if (okv[t]) {
                            ++n;
                            m1 += a[t], m2 += b[t], q1 += a[t] * a[t], q2 += b[t] * b[t];
                        }
                    m1 /= n, m2 /= n;
                    char line[200];
                    std::snprintf(line, sizeof line, "%s,%s,%s,%ld,%.5f,%.5f,%.5f,%.5f\n", fmt_num(es).c_str(),
                                  fmt_num(d).c_str(), fmt_num(sto).c_str(), n, std::sqrt(std::max(0.0, q1 / n - m1 * m1)),
                                  std::sqrt(std::max(0.0, q2 / n - m2 * m2)), m1, m2);
                    text += line;
                }
            write_text(out, text);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
