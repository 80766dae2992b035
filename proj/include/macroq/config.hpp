#ifndef MACROQ_CONFIG_HPP
#define MACROQ_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "macroq/finite_n.hpp"
#include "macroq/qubit.hpp"

namespace macroq {

/// Raised on malformed or invalid configuration; maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

}  // namespace detail

/// Flat-section key-value file: `[section]` headers, `key = value` lines,
/// `#` comments. Diff-friendly experiment provenance.
class IniFile {
  public:
    static IniFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static IniFile parse(const std::string& text) {
        IniFile f;
        std::stringstream ss(text);
        std::string line, section;
        int line_no = 0;
        while (std::getline(ss, line)) {
            ++line_no;
            std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ConfigError("config line " + std::to_string(line_no) + ": bad section");
                section = detail::trim(t.substr(1, t.size() - 2));
                continue;
            }
            size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            std::string key = detail::trim(t.substr(0, eq));
            std::string value = detail::trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
            f.values_[section + "." + key] = value;
        }
        return f;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key: " + key);
        consumed_.insert(key);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key) const { return parse_double(key, get(key)); }
    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    long get_long(const std::string& key) const { return parse_long(key, get(key)); }
    long get_long_or(const std::string& key, long fallback) const {
        return has(key) ? get_long(key) : fallback;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& s : detail::split(get(key), ','))
            out.push_back(parse_double(key, s));
        return out;
    }
    std::vector<long> get_longs(const std::string& key) const {
        std::vector<long> out;
        for (const std::string& s : detail::split(get(key), ',')) out.push_back(parse_long(key, s));
        return out;
    }

    /// Unknown keys are configuration mistakes, not extensions.
    void reject_unconsumed() const {
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key)) throw ConfigError("unknown config key: " + key);
    }

  private:
    static double parse_double(const std::string& key, const std::string& s) {
        try {
            size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("config key " + key + ": not a number: '" + s + "'");
        }
    }
    static long parse_long(const std::string& key, const std::string& s) {
        try {
            size_t pos = 0;
            long v = std::stol(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError("config key " + key + ": not an integer: '" + s + "'");
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

enum class ExperimentKind { convergence, identities, lg_chsh, bell_chsh, density };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::identities: return "identities";
        case ExperimentKind::lg_chsh: return "lg-chsh";
        case ExperimentKind::bell_chsh: return "bell-chsh";
        case ExperimentKind::density: return "density";
    }
    return "?";
}

/// Complete description of one batch run, parsed and validated before any
/// computation starts.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::density;

    // state: pure coefficients over |N,k> / |k>, entries "re" or "re:im"
    std::vector<cplx> state_c = {cplx(1.0)};
    ChannelSpec channel;
    double sigma = 1.0;
    std::string observable = "sigma_x";  // sigma_x | sigma_y | xy:<radians>
    std::vector<long> n_values = {50, 200, 800};
    long n_particles = 50;  // density experiment
    bool has_grid = false;
    GridSpec grid;
    std::uint64_t identity_seed = 12345;

    // chsh experiments
    bool reproduce_paper = false;
    int chsh_d = 3;
    double width_min = 0.05, width_max = 2.0;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    int max_iter = 800;

    std::string prefix = "run";

    QubitObservable make_observable() const {
        if (observable == "sigma_x") return eig_decompose(pauli_x());
        if (observable == "sigma_y") return eig_decompose(pauli_y());
        if (observable.rfind("xy:", 0) == 0) {
            double angle = 0.0;
            try {
                angle = std::stod(observable.substr(3));
            } catch (...) {
                throw ConfigError("measurement.observable: bad angle in '" + observable + "'");
            }
            return eig_decompose(xy_observable(angle));
        }
        throw ConfigError("measurement.observable: expected sigma_x, sigma_y or xy:<radians>");
    }

    static cplx parse_coeff(const std::string& s) {
        size_t colon = s.find(':');
        try {
            if (colon == std::string::npos) return cplx(std::stod(s), 0.0);
            return cplx(std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
        } catch (...) {
            throw ConfigError("state.c: bad coefficient '" + s + "'");
        }
    }

    static ExperimentConfig from_ini(const IniFile& f) {
        ExperimentConfig c;
        std::string type = f.get("experiment.type");
        if (type == "convergence")
            c.kind = ExperimentKind::convergence;
        else if (type == "identities")
            c.kind = ExperimentKind::identities;
        else if (type == "lg-chsh")
            c.kind = ExperimentKind::lg_chsh;
        else if (type == "bell-chsh")
            c.kind = ExperimentKind::bell_chsh;
        else if (type == "density")
            c.kind = ExperimentKind::density;
        else
            throw ConfigError("experiment.type: unknown experiment '" + type + "'");

        if (f.has("state.c")) {
            c.state_c.clear();
            for (const std::string& s : detail::split(f.get("state.c"), ','))
                c.state_c.push_back(parse_coeff(s));
            double n2 = 0.0;
            for (const cplx& v : c.state_c) n2 += std::norm(v);
            if (std::abs(n2 - 1.0) > 1e-6)
                throw ConfigError("state.c: coefficients are not normalized (|c|^2 = " +
                                  format_double(n2) + ")");
            // renormalize the residual rounding so downstream validation at
            // 1e-10 is met by exactly-typed inputs
            for (cplx& v : c.state_c) v /= std::sqrt(n2);
        }

        std::string kind = f.get_or("channel.kind", "identity");
        if (kind == "identity")
            c.channel.kind = ChannelKind::identity;
        else if (kind == "dephasing")
            c.channel.kind = ChannelKind::dephasing;
        else if (kind == "depolarizing")
            c.channel.kind = ChannelKind::depolarizing;
        else
            throw ConfigError("channel.kind: unknown channel '" + kind + "'");
        c.channel.strength = f.get_double_or("channel.strength", 0.0);
        c.channel.loss_p = f.get_double_or("channel.loss_p", 1.0);
        c.channel.validate();

        c.sigma = f.get_double_or("measurement.sigma", 1.0);
        if (!(c.sigma > 0.0)) throw ConfigError("measurement.sigma must be positive");
        c.observable = f.get_or("measurement.observable", "sigma_x");
        c.make_observable();  // validate now

        if (f.has("convergence.n_values")) c.n_values = f.get_longs("convergence.n_values");
        for (long n : c.n_values)
            if (n < 1) throw ConfigError("convergence.n_values: N must be >= 1");
        c.n_particles = f.get_long_or("density.n", 50);
        if (c.n_particles < 1) throw ConfigError("density.n must be >= 1");

        if (f.has("grid.x_min") || f.has("grid.x_max") || f.has("grid.points")) {
            c.has_grid = true;
            c.grid.x_min = f.get_double_or("grid.x_min", -12.0);
            c.grid.x_max = f.get_double_or("grid.x_max", 12.0);
            c.grid.n = int(f.get_long_or("grid.points", 2001));
            c.grid.validate();
        }

        c.identity_seed = std::uint64_t(f.get_long_or("identities.seed", 12345));

        std::string mode = f.get_or("chsh.mode", "optimize");
        if (mode == "reproduce-paper")
            c.reproduce_paper = true;
        else if (mode != "optimize")
            throw ConfigError("chsh.mode: expected optimize or reproduce-paper");
        c.chsh_d = int(f.get_long_or("chsh.d", 3));
        if (c.chsh_d < 1 || c.chsh_d > 3) throw ConfigError("chsh.d must lie in [1, 3]");
        c.width_min = f.get_double_or("chsh.width_min", 0.05);
        c.width_max = f.get_double_or("chsh.width_max", 2.0);
        if (!(c.width_min > 0.0 && c.width_max > c.width_min))
            throw ConfigError("chsh.width range invalid");
        if (f.has("chsh.seeds")) {
            c.seeds.clear();
            for (long s : f.get_longs("chsh.seeds")) c.seeds.push_back(std::uint64_t(s));
            if (c.seeds.empty()) throw ConfigError("chsh.seeds: need at least one seed");
        }
        c.max_iter = int(f.get_long_or("chsh.max_iter", 800));
        if (c.max_iter < 1) throw ConfigError("chsh.max_iter must be >= 1");

        c.prefix = f.get_or("output.prefix", "run");

        f.reject_unconsumed();
        return c;
    }
};

}  // namespace macroq

#endif
