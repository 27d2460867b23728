#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace softbed {

/// Parsed scenario text: named sections of ordered key/value pairs.
/// Format: `[section name]` headers, `key = value` lines, `#` comments.
class ConfigMap {
public:
    using Section = std::vector<std::pair<std::string, std::string>>;

    static ConfigMap parse(std::istream& in) {
        ConfigMap cfg;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                cfg.sections_.try_emplace(section);
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
            cfg.sections_[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    static ConfigMap parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open scenario file: " + path);
        return parse(f);
    }

    static ConfigMap parse_string(const std::string& text) {
        std::istringstream ss(text);
        return parse(ss);
    }

    /// Dotted override `a.b.key=value`: last component is the key, the
    /// rest (joined with spaces) names the section.
    void apply_override(const std::string& dotted) {
        auto eq = dotted.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("override must be key=value: " + dotted);
        std::string path = trim(dotted.substr(0, eq));
        std::string value = trim(dotted.substr(eq + 1));
        auto last_dot = path.rfind('.');
        std::string section, key;
        if (last_dot == std::string::npos) {
            key = path;
        } else {
            section = path.substr(0, last_dot);
            key = path.substr(last_dot + 1);
            for (auto& c : section)
                if (c == '.') c = ' ';
        }
        auto& sec = sections_[section];
        for (auto& [k, v] : sec) {
            if (k == key) { v = value; return; }
        }
        sec.emplace_back(key, value);
    }

    bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
    const std::map<std::string, Section>& sections() const { return sections_; }

    /// Canonical text form (sorted sections, original key order) used for
    /// hashing and for the run manifest.
    std::string canonical() const {
        std::ostringstream out;
        for (const auto& [name, sec] : sections_) {
            out << '[' << name << "]\n";
            for (const auto& [k, v] : sec) out << k << " = " << v << '\n';
        }
        return out.str();
    }

    /// FNV-1a 64-bit of the canonical form; stable across runs and platforms.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, Section> sections_;
};

/// Typed accessor over one section; tracks which keys were consumed so the
/// caller can reject unknown ones.
class SectionReader {
public:
    SectionReader(const ConfigMap::Section& sec, std::string name)
        : sec_(sec), name_(std::move(name)), used_(sec.size(), false) {}

    bool has(const std::string& key) const { return find(key) >= 0; }

    std::string str(const std::string& key) {
        int i = find(key);
        if (i < 0) throw std::runtime_error("[" + name_ + "] missing key: " + key);
        used_[std::size_t(i)] = true;
        return sec_[std::size_t(i)].second;
    }

    std::string str(const std::string& key, const std::string& def) {
        return has(key) ? str(key) : def;
    }

    double num(const std::string& key) { return to_num(key, str(key)); }
    double num(const std::string& key, double def) { return has(key) ? num(key) : def; }

    long integer(const std::string& key) { return std::lround(num(key)); }
    long integer(const std::string& key, long def) { return has(key) ? integer(key) : def; }

    std::vector<double> num_list(const std::string& key) {
        std::istringstream ss(str(key));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) out.push_back(to_num(key, tok));
        return out;
    }

    void finish() const {
        for (std::size_t i = 0; i < sec_.size(); ++i)
            if (!used_[i])
                throw std::runtime_error("[" + name_ + "] unknown key: " + sec_[i].first);
    }

private:
    int find(const std::string& key) const {
        for (std::size_t i = 0; i < sec_.size(); ++i)
            if (sec_[i].first == key) return int(i);
        return -1;
    }

    double to_num(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw std::runtime_error("[" + name_ + "] " + key + ": not a number: " + v);
        }
    }

    const ConfigMap::Section& sec_;
    std::string name_;
    std::vector<bool> used_;
};

} // namespace softbed
