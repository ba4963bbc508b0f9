#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "ctlstop/error.hpp"

namespace ctlstop {

/// Flat `key = value` configuration with `[section]` headers. Keys before the
/// first header belong to [run]. Values are kept as text and typed on access;
/// numeric keys are checked to be finite reals when set.
class RunConfig {
public:
    static const std::map<std::string, std::set<std::string>>& text_keys() {
        static const std::map<std::string, std::set<std::string>> k = {
            {"run", {"subcommand", "flavor", "generator", "audit"}},
            {"model", {"case", "payoff"}},
            {"numeric", {}},
            {"output", {"format", "path"}},
        };
        return k;
    }
    static const std::map<std::string, std::set<std::string>>& number_keys() {
        static const std::map<std::string, std::set<std::string>> k = {
            {"run", {}},
            {"model", {"delta", "kappa", "lambda", "mu", "b0", "b1", "sigma"}},
            {"numeric", {"dt", "n_paths", "grid_step", "extent", "seed", "tol", "x0", "nodes", "threads",
                         "horizon", "export_paths", "points", "samples", "delta_min", "delta_max", "kappa_min",
                         "kappa_max", "lambda_min", "lambda_max", "mu_min", "mu_max"}},
            {"output", {}},
        };
        return k;
    }

    static RunConfig parse(std::istream& in, const std::string& origin = "config") {
        RunConfig c;
        std::string line, section = "run";
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto where = origin + ":" + std::to_string(lineno) + ": ";
            if (line.front() == '[') {
                if (line.back() != ']') throw Error(Errc::InvalidConfig, where + "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (!text_keys().count(section)) throw Error(Errc::InvalidConfig, where + "unknown section [" + section + "]");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw Error(Errc::InvalidConfig, where + "expected key = value");
            try {
                c.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            } catch (const Error& e) {
                throw Error(Errc::InvalidConfig, where + e.what());
            }
        }
        return c;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw Error(Errc::InvalidConfig, "cannot read config " + path);
        return parse(f, path);
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        const bool text = text_keys().count(section) && text_keys().at(section).count(key);
        const bool number = number_keys().count(section) && number_keys().at(section).count(key);
        if (!text && !number) throw Error(Errc::InvalidConfig, "unknown key " + section + "." + key);
        if (number) to_real(value, section + "." + key);
        values_[section + "." + key] = value;
    }
    void set(const std::string& section, const std::string& key, double value) {
        std::ostringstream os;
        os.precision(17);
        os << value;
        set(section, key, os.str());
    }

    /// Copies every key present in `other`.
    void override_with(const RunConfig& other) {
        for (const auto& [k, v] : other.values_) values_[k] = v;
    }

    bool has(const std::string& dotted) const { return values_.count(dotted) > 0; }

    std::optional<double> real(const std::string& dotted) const {
        auto it = values_.find(dotted);
        if (it == values_.end()) return std::nullopt;
        return to_real(it->second, dotted);
    }
    double real(const std::string& dotted, double fallback) const { return real(dotted).value_or(fallback); }

    long integer(const std::string& dotted, long fallback) const {
        const auto v = real(dotted);
        if (!v) return fallback;
        if (*v != std::floor(*v) || std::abs(*v) > 9e15) throw Error(Errc::InvalidConfig, dotted + " must be an integer");
        return static_cast<long>(*v);
    }

    std::string text(const std::string& dotted, const std::string& fallback = "") const {
        auto it = values_.find(dotted);
        return it == values_.end() ? fallback : it->second;
    }

    bool flag(const std::string& dotted) const {
        const auto t = text(dotted, "false");
        if (t == "true" || t == "1" || t == "yes") return true;
        if (t == "false" || t == "0" || t == "no") return false;
        throw Error(Errc::InvalidConfig, dotted + " must be true or false");
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static double to_real(const std::string& s, const std::string& what) {
        double v = 0.0;
        const char* first = s.data();
        const char* last = s.data() + s.size();
        if (first != last && *first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v))
            throw Error(Errc::InvalidConfig, what + " = '" + s + "' is not a finite real");
        return v;
    }

    std::map<std::string, std::string> values_;
};

}  // namespace ctlstop
