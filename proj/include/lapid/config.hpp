#pragma once

// Flat INI-style experiment configs: [section] headers, key = value lines,
// '#' comments. Values keep full precision; lists are space-separated.

#include "lapid/core.hpp"
#include "lapid/library.hpp"
#include "lapid/sim.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace lapid {

class IniFile {
public:
    static IniFile parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_string(ss.str(), path);
    }

    static IniFile parse_string(const std::string& text, const std::string& origin = "<string>") {
        IniFile ini;
        std::istringstream in(text);
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
            ini.values_[section + "." + key] = val;
        }
        return ini;
    }

    bool has(const std::string& dotted) const { return values_.count(dotted) > 0; }

    std::string get(const std::string& dotted) const {
        auto it = values_.find(dotted);
        if (it == values_.end()) throw ConfigError("missing config key: " + dotted);
        return it->second;
    }
    std::string get_or(const std::string& dotted, const std::string& fallback) const {
        auto it = values_.find(dotted);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& dotted) const { return to_double(dotted, get(dotted)); }
    double get_double_or(const std::string& dotted, double fallback) const {
        auto it = values_.find(dotted);
        return it == values_.end() ? fallback : to_double(dotted, it->second);
    }
    long get_int(const std::string& dotted) const { return to_int(dotted, get(dotted)); }
    long get_int_or(const std::string& dotted, long fallback) const {
        auto it = values_.find(dotted);
        return it == values_.end() ? fallback : to_int(dotted, it->second);
    }
    bool get_bool_or(const std::string& dotted, bool fallback) const {
        auto it = values_.find(dotted);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("bad boolean for " + dotted + ": " + it->second);
    }
    std::vector<double> get_list_or(const std::string& dotted) const {
        auto it = values_.find(dotted);
        std::vector<double> out;
        if (it == values_.end()) return out;
        std::istringstream ss(it->second);
        std::string tok;
        while (ss >> tok) out.push_back(to_double(dotted, tok));
        return out;
    }
    std::vector<std::string> get_words_or(const std::string& dotted) const {
        auto it = values_.find(dotted);
        std::vector<std::string> out;
        if (it == values_.end()) return out;
        std::istringstream ss(it->second);
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }
    void set(const std::string& dotted, const std::string& value) { values_[dotted] = value; }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;

    static std::string trim(const std::string& s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return {};
        std::size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("bad number for " + key + ": '" + v + "'");
        }
    }
    static long to_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const long x = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("bad integer for " + key + ": '" + v + "'");
        }
    }
};

/// Special-factor spec syntax used in configs: "delta@0.5", "H@0.5" (location) and
/// "sin~3", "cos~1", "sinh~2", "cosh~2" (angular frequency).
inline Factor parse_special_spec(const std::string& word) {
    auto at = word.find('@');
    auto tilde = word.find('~');
    if (at != std::string::npos) {
        const std::string head = word.substr(0, at);
        const double t0 = std::stod(word.substr(at + 1));
        if (head == "delta") return Factor::special_at(SpecialKind::delta, t0);
        if (head == "H" || head == "step") return Factor::special_at(SpecialKind::step, t0);
        throw ConfigError("unknown special '" + word + "'");
    }
    if (tilde != std::string::npos) {
        const std::string head = word.substr(0, tilde);
        const double om = std::stod(word.substr(tilde + 1));
        if (head == "sin") return Factor::special_omega(SpecialKind::sine, om);
        if (head == "cos") return Factor::special_omega(SpecialKind::cosine, om);
        if (head == "sinh") return Factor::special_omega(SpecialKind::hsinh, om);
        if (head == "cosh") return Factor::special_omega(SpecialKind::hcosh, om);
        throw ConfigError("unknown special '" + word + "'");
    }
    throw ConfigError("special spec needs '@t0' or '~omega': " + word);
}

}  // namespace lapid
