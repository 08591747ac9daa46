#pragma once

#include "lrfhss/common.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace lrfhss {

// Key-value configuration text.
//   key = value            one entry; later entries override earlier ones
//   key = 1, 2, 3          lists are comma separated
//   include other.cfg      path relative to the including file
//   # comment
class Config {
public:
    struct Entry {
        std::string value;
        std::string file;
        int line = 0;
    };

    static Config load(const std::string& path)
    {
        Config c;
        std::vector<std::string> stack;
        c.load_file(path, stack);
        return c;
    }

    static Config parse(const std::string& text, const std::string& name = "<string>")
    {
        Config c;
        std::vector<std::string> stack;
        std::istringstream in(text);
        c.parse_stream(in, name, std::filesystem::current_path(), stack);
        return c;
    }

    void set(const std::string& key, const std::string& value, const std::string& file = "<command line>", int line = 0)
    {
        entries_[key] = {trim(value), file, line};
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    std::string where(const std::string& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end()) return "<default>";
        return it->second.line > 0 ? it->second.file + ":" + std::to_string(it->second.line) : it->second.file;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const
    {
        throw Error("config", where(key) + ": " + key + ": " + msg);
    }

    std::string str(const std::string& key, const std::string& def) const
    {
        used_.insert(key);
        auto it = entries_.find(key);
        return it == entries_.end() ? def : it->second.value;
    }

    double num(const std::string& key, double def) const
    {
        auto l = list(key, {def});
        if (l.size() != 1) fail(key, "expected one value");
        return l[0];
    }

    long integer(const std::string& key, long def) const
    {
        const double v = num(key, double(def));
        if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(key, "'" + str(key, "") + "' is not an integer");
        return static_cast<long>(v);
    }

    std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& def) const
    {
        used_.insert(key);
        auto it = entries_.find(key);
        if (it == entries_.end()) return def;
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(it->second.value);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) fail(key, "empty list element");
            out.push_back(item);
        }
        if (out.empty()) fail(key, "no value");
        return out;
    }

    // numbers, fractions like 1/8, and inf
    std::vector<double> list(const std::string& key, const std::vector<double>& def) const
    {
        if (!has(key)) {
            used_.insert(key);
            return def;
        }
        std::vector<double> out;
        for (const auto& s : strings(key, {})) {
            auto v = parse_number(s);
            if (!v) fail(key, "'" + s + "' is not a number");
            out.push_back(*v);
        }
        return out;
    }

    std::vector<long> integers(const std::string& key, const std::vector<long>& def) const
    {
        std::vector<double> d(def.begin(), def.end());
        std::vector<long> out;
        for (double v : list(key, d)) {
            if (v != std::floor(v)) fail(key, "expected integers");
            out.push_back(static_cast<long>(v));
        }
        return out;
    }

    // every key in the file must have been read by someone
    void reject_unused() const
    {
        for (const auto& [k, e] : entries_)
            if (!used_.count(k)) fail(k, "unknown key");
    }

    static std::optional<double> parse_number(const std::string& s)
    {
        const std::string t = trim(s);
        if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
        if (t == "-inf") return -std::numeric_limits<double>::infinity();
        const auto slash = t.find('/');
        if (slash != std::string::npos) {
            auto a = parse_number(t.substr(0, slash)), b = parse_number(t.substr(slash + 1));
            if (!a || !b || *b == 0) return std::nullopt;
            return *a / *b;
        }
        if (t.empty()) return std::nullopt;
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            return std::nullopt;
        }
        if (pos != t.size() || std::isnan(v)) return std::nullopt;
        return v;
    }

    static std::string trim(const std::string& s)
    {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return {};
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

private:
    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;

    void load_file(const std::string& path, std::vector<std::string>& stack)
    {
        namespace fs = std::filesystem;
        std::error_code ec;
        const auto canon = fs::weakly_canonical(fs::path(path), ec).string();
        for (const auto& s : stack)
            if (s == canon) throw Error("config", path + ": include cycle");
        if (stack.size() > 16) throw Error("config", path + ": includes nested too deeply");
        std::ifstream in(path);
        if (!in) throw Error("config", path + ": cannot open");
        stack.push_back(canon);
        parse_stream(in, path, fs::path(path).parent_path(), stack);
        stack.pop_back();
    }

    void parse_stream(std::istream& in, const std::string& name, const std::filesystem::path& dir,
                      std::vector<std::string>& stack)
    {
        std::string raw;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (s.empty()) continue;
            auto err = [&](const std::string& m) { return Error("config", name + ":" + std::to_string(line) + ": " + m); };
            if (s.rfind("include", 0) == 0 && (s.size() == 7 || s[7] == ' ' || s[7] == '\t')) {
                std::string p = trim(s.substr(7));
                if (p.size() >= 2 && p.front() == '"' && p.back() == '"') p = p.substr(1, p.size() - 2);
                if (p.empty()) throw err("include needs a path");
                const auto full = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : dir / p;
                try {
                    load_file(full.string(), stack);
                } catch (const Error& e) {
                    throw err(std::string("in include: ") + e.what());
                }
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw err("expected 'key = value'");
            const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
            if (key.empty()) throw err("missing key");
            for (char ch : key)
                if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) throw err("bad key '" + key + "'");
            if (value.empty()) throw err("missing value for '" + key + "'");
            entries_[key] = {value, name, line};
        }
    }
};

} // namespace lrfhss
