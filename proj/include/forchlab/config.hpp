#pragma once

/**
 * @file config.hpp
 * @brief Run configuration: a TOML-compatible subset (sections, scalars,
 *        one-level arrays, arrays of arrays) parsed into RunConfig with
 *        defaults filled, validated, and re-serializable byte-stably.
 */

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forchlab/medium.hpp"

namespace forchlab {

struct ConfigError : std::runtime_error {
    int line = 0, column = 0;
    ConfigError(const std::string& msg, int l = 0, int c = 0)
        : std::runtime_error(l > 0 ? msg + " (line " + std::to_string(l) + ", column " +
                                         std::to_string(c) + ")"
                                   : msg),
          line(l), column(c) {}
};

namespace toml {

struct Value {
    enum class Kind { string, number, boolean, array } kind = Kind::number;
    std::string s;
    double num = 0.0;
    bool b = false;
    std::vector<Value> arr;
};

using Table = std::map<std::string, Value>;  // flat, dotted keys

namespace detail {

inline void skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline Value parse_value(const std::string& s, size_t& i, int line);

inline Value parse_array(const std::string& s, size_t& i, int line) {
    Value v;
    v.kind = Value::Kind::array;
    ++i;  // '['
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
        ++i;
        return v;
    }
    for (;;) {
        skip_ws(s, i);
        v.arr.push_back(parse_value(s, i, line));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            continue;
        }
        if (i < s.size() && s[i] == ']') {
            ++i;
            return v;
        }
        throw ConfigError("expected ',' or ']' in array", line, int(i) + 1);
    }
}

inline Value parse_value(const std::string& s, size_t& i, int line) {
    skip_ws(s, i);
    if (i >= s.size()) throw ConfigError("missing value", line, int(i) + 1);
    Value v;
    const char c = s[i];
    if (c == '"') {
        v.kind = Value::Kind::string;
        ++i;
        while (i < s.size() && s[i] != '"') v.s.push_back(s[i++]);
        if (i >= s.size()) throw ConfigError("unterminated string", line, int(i) + 1);
        ++i;
        return v;
    }
    if (c == '[') return parse_array(s, i, line);
    if (s.compare(i, 4, "true") == 0) {
        v.kind = Value::Kind::boolean;
        v.b = true;
        i += 4;
        return v;
    }
    if (s.compare(i, 5, "false") == 0) {
        v.kind = Value::Kind::boolean;
        v.b = false;
        i += 5;
        return v;
    }
    size_t start = i;
    while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.' ||
                            s[i] == '-' || s[i] == '+' || s[i] == 'e' || s[i] == 'E'))
        ++i;
    if (i == start) throw ConfigError("malformed value", line, int(i) + 1);
    try {
        v.num = std::stod(s.substr(start, i - start));
    } catch (const std::exception&) {
        throw ConfigError("malformed number", line, int(start) + 1);
    }
    return v;
}

}  // namespace detail

inline Table parse(const std::string& text) {
    Table table;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        size_t i = 0;
        detail::skip_ws(raw, i);
        if (i >= raw.size() || raw[i] == '#') continue;
        if (raw[i] == '[') {
            const size_t close = raw.find(']', i);
            if (close == std::string::npos)
                throw ConfigError("missing ']' in section header", line, int(i) + 1);
            section = raw.substr(i + 1, close - i - 1);
            i = close + 1;
            detail::skip_ws(raw, i);
            if (i < raw.size() && raw[i] != '#')
                throw ConfigError("unexpected text after section header", line, int(i) + 1);
            continue;
        }
        size_t key_start = i;
        while (i < raw.size() && (std::isalnum(static_cast<unsigned char>(raw[i])) ||
                                  raw[i] == '_' || raw[i] == '.'))
            ++i;
        const std::string key = raw.substr(key_start, i - key_start);
        if (key.empty()) throw ConfigError("expected a key", line, int(i) + 1);
        detail::skip_ws(raw, i);
        if (i >= raw.size() || raw[i] != '=')
            throw ConfigError("expected '=' after key '" + key + "'", line, int(i) + 1);
        ++i;
        toml::Value v = detail::parse_value(raw, i, line);
        detail::skip_ws(raw, i);
        if (i < raw.size() && raw[i] != '#')
            throw ConfigError("unexpected trailing text", line, int(i) + 1);
        table[section.empty() ? key : section + "." + key] = v;
    }
    return table;
}

}  // namespace toml

struct SolverSection {
    double dt = 1e-2;
    double t_end = 1.0;
    double picard_tol = 1e-10;
    int picard_max = 200;
    double linear_tol = 1e-12;
    int output_stride = 1;
    std::string source;  // expression, MMS only
    bool operator==(const SolverSection&) const = default;
};

struct VerifySection {
    std::vector<std::string> families{"single", "tails"};
    double tail_window = 0.25;
    double slack_tol = 1e-6;
    double t0 = 0.25;
    bool refine = false;
    bool operator==(const VerifySection&) const = default;
};

struct PoincareSection {
    double q = 0.0;  // 0 → default midpoint
    int family_size = 32;
    double safety_factor = 1.1;
    bool operator==(const PoincareSection&) const = default;
};

struct BoundarySection {
    std::string psi = "0";
    std::string psi_t;   // empty → differenced
    std::string psi_tt;
    bool operator==(const BoundarySection&) const = default;
};

struct PairSection {
    BoundarySection boundary;  // second run's boundary (defaults to first)
    std::string p0;            // second run's initial data (defaults to first)
    bool enabled = false;
    bool operator==(const PairSection&) const = default;
};

struct SweepSection {
    std::string parameter;  // dotted key, e.g. "solver.dt"
    std::vector<double> values;
    bool operator==(const SweepSection&) const = default;
};

struct RunConfig {
    MediumConfig medium;
    BoundarySection boundary;
    std::string p0 = "0";
    SolverSection solver;
    VerifySection verify;
    PoincareSection poincare;
    PairSection pair;
    SweepSection sweep;
    std::uint64_t seed = 2024;

    bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline const toml::Value* get(const toml::Table& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

inline double num(const toml::Value& v, const std::string& key) {
    if (v.kind != toml::Value::Kind::number)
        throw ConfigError("field '" + key + "' must be a number");
    return v.num;
}
inline std::string str(const toml::Value& v, const std::string& key) {
    if (v.kind != toml::Value::Kind::string)
        throw ConfigError("field '" + key + "' must be a string");
    return v.s;
}
inline bool boolean(const toml::Value& v, const std::string& key) {
    if (v.kind != toml::Value::Kind::boolean)
        throw ConfigError("field '" + key + "' must be a boolean");
    return v.b;
}
inline std::vector<double> num_array(const toml::Value& v, const std::string& key) {
    if (v.kind != toml::Value::Kind::array)
        throw ConfigError("field '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v.arr) out.push_back(num(e, key));
    return out;
}
inline std::vector<std::string> str_array(const toml::Value& v, const std::string& key) {
    if (v.kind != toml::Value::Kind::array)
        throw ConfigError("field '" + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v.arr) out.push_back(str(e, key));
    return out;
}
inline std::vector<std::vector<double>> nested_array(const toml::Value& v,
                                                     const std::string& key) {
    if (v.kind != toml::Value::Kind::array)
        throw ConfigError("field '" + key + "' must be an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& e : v.arr) out.push_back(num_array(e, key));
    return out;
}

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "seed",
        "medium.preset", "medium.dim", "medium.resolution", "medium.extent",
        "medium.phi", "medium.phi_regions", "medium.layers", "medium.layer_axis",
        "medium.tiles", "medium.center", "medium.radius", "medium.blend_width",
        "medium.phi_inner", "medium.phi_outer", "medium.phi_expr",
        "model.alphas", "model.coeffs", "model.coeff_regions", "model.coeff_exprs",
        "model.coeff_inner", "model.coeff_outer", "model.linear_test_mode",
        "boundary.psi", "boundary.psi_t", "boundary.psi_tt",
        "initial.p0",
        "solver.dt", "solver.t_end", "solver.picard_tol", "solver.picard_max",
        "solver.linear_tol", "solver.output_stride", "solver.source",
        "verify.families", "verify.tail_window", "verify.slack_tol", "verify.t0",
        "verify.refine",
        "poincare.q", "poincare.family_size", "poincare.safety_factor",
        "pair.psi", "pair.psi_t", "pair.psi_tt", "pair.p0",
        "sweep.parameter", "sweep.values",
    };
    return keys;
}

}  // namespace config_detail

inline void validate_config(RunConfig& cfg);

inline RunConfig parse_config_text(const std::string& text) {
    namespace cd = config_detail;
    const toml::Table table = toml::parse(text);

    for (const auto& [key, value] : table) {
        (void)value;
        bool known = false;
        for (const auto& k : cd::known_keys())
            if (k == key) { known = true; break; }
        if (!known) throw ConfigError("unknown configuration field '" + key + "'");
    }

    RunConfig cfg;
    auto g = [&](const std::string& k) { return cd::get(table, k); };

    if (auto* v = g("seed")) cfg.seed = std::uint64_t(cd::num(*v, "seed"));

    if (auto* v = g("medium.preset")) cfg.medium.preset = cd::str(*v, "medium.preset");
    if (auto* v = g("medium.dim")) cfg.medium.dim = int(cd::num(*v, "medium.dim"));
    if (auto* v = g("medium.resolution")) {
        const auto r = cd::num_array(*v, "medium.resolution");
        if (r.empty() || r.size() > 2)
            throw ConfigError("field 'medium.resolution' needs 1 or 2 entries");
        cfg.medium.resolution[0] = int(r[0]);
        cfg.medium.resolution[1] = int(r.size() > 1 ? r[1] : r[0]);
    }
    if (auto* v = g("medium.extent")) {
        const auto r = cd::num_array(*v, "medium.extent");
        if (r.empty() || r.size() > 2)
            throw ConfigError("field 'medium.extent' needs 1 or 2 entries");
        cfg.medium.extent[0] = r[0];
        cfg.medium.extent[1] = r.size() > 1 ? r[1] : r[0];
    }
    if (auto* v = g("medium.phi")) cfg.medium.phi_value = cd::num(*v, "medium.phi");
    if (auto* v = g("medium.phi_regions"))
        cfg.medium.phi_regions = cd::num_array(*v, "medium.phi_regions");
    if (auto* v = g("medium.layers")) cfg.medium.layers = int(cd::num(*v, "medium.layers"));
    if (auto* v = g("medium.layer_axis"))
        cfg.medium.layer_axis = int(cd::num(*v, "medium.layer_axis"));
    if (auto* v = g("medium.tiles")) cfg.medium.tiles = int(cd::num(*v, "medium.tiles"));
    if (auto* v = g("medium.center")) {
        const auto r = cd::num_array(*v, "medium.center");
        for (size_t k = 0; k < std::min<size_t>(2, r.size()); ++k) cfg.medium.center[k] = r[k];
    }
    if (auto* v = g("medium.radius")) cfg.medium.radius = cd::num(*v, "medium.radius");
    if (auto* v = g("medium.blend_width"))
        cfg.medium.blend_width = cd::num(*v, "medium.blend_width");
    if (auto* v = g("medium.phi_inner")) cfg.medium.phi_inner = cd::num(*v, "medium.phi_inner");
    if (auto* v = g("medium.phi_outer")) cfg.medium.phi_outer = cd::num(*v, "medium.phi_outer");
    if (auto* v = g("medium.phi_expr")) cfg.medium.phi_expr = cd::str(*v, "medium.phi_expr");

    if (auto* v = g("model.alphas")) cfg.medium.alphas = cd::num_array(*v, "model.alphas");
    if (auto* v = g("model.coeffs")) cfg.medium.coeff_values = cd::num_array(*v, "model.coeffs");
    if (auto* v = g("model.coeff_regions"))
        cfg.medium.coeff_regions = cd::nested_array(*v, "model.coeff_regions");
    if (auto* v = g("model.coeff_exprs"))
        cfg.medium.coeff_exprs = cd::str_array(*v, "model.coeff_exprs");
    if (auto* v = g("model.coeff_inner"))
        cfg.medium.coeff_inner = cd::num_array(*v, "model.coeff_inner");
    if (auto* v = g("model.coeff_outer"))
        cfg.medium.coeff_outer = cd::num_array(*v, "model.coeff_outer");
    if (auto* v = g("model.linear_test_mode"))
        cfg.medium.linear_test_mode = cd::boolean(*v, "model.linear_test_mode");

    if (auto* v = g("boundary.psi")) cfg.boundary.psi = cd::str(*v, "boundary.psi");
    if (auto* v = g("boundary.psi_t")) cfg.boundary.psi_t = cd::str(*v, "boundary.psi_t");
    if (auto* v = g("boundary.psi_tt")) cfg.boundary.psi_tt = cd::str(*v, "boundary.psi_tt");
    if (auto* v = g("initial.p0")) cfg.p0 = cd::str(*v, "initial.p0");

    if (auto* v = g("solver.dt")) cfg.solver.dt = cd::num(*v, "solver.dt");
    if (auto* v = g("solver.t_end")) cfg.solver.t_end = cd::num(*v, "solver.t_end");
    if (auto* v = g("solver.picard_tol"))
        cfg.solver.picard_tol = cd::num(*v, "solver.picard_tol");
    if (auto* v = g("solver.picard_max"))
        cfg.solver.picard_max = int(cd::num(*v, "solver.picard_max"));
    if (auto* v = g("solver.linear_tol"))
        cfg.solver.linear_tol = cd::num(*v, "solver.linear_tol");
    if (auto* v = g("solver.output_stride"))
        cfg.solver.output_stride = int(cd::num(*v, "solver.output_stride"));
    if (auto* v = g("solver.source")) cfg.solver.source = cd::str(*v, "solver.source");

    if (auto* v = g("verify.families"))
        cfg.verify.families = cd::str_array(*v, "verify.families");
    if (auto* v = g("verify.tail_window"))
        cfg.verify.tail_window = cd::num(*v, "verify.tail_window");
    if (auto* v = g("verify.slack_tol")) cfg.verify.slack_tol = cd::num(*v, "verify.slack_tol");
    if (auto* v = g("verify.t0")) cfg.verify.t0 = cd::num(*v, "verify.t0");
    if (auto* v = g("verify.refine")) cfg.verify.refine = cd::boolean(*v, "verify.refine");

    if (auto* v = g("poincare.q")) cfg.poincare.q = cd::num(*v, "poincare.q");
    if (auto* v = g("poincare.family_size"))
        cfg.poincare.family_size = int(cd::num(*v, "poincare.family_size"));
    if (auto* v = g("poincare.safety_factor"))
        cfg.poincare.safety_factor = cd::num(*v, "poincare.safety_factor");

    if (auto* v = g("pair.psi")) {
        cfg.pair.boundary.psi = cd::str(*v, "pair.psi");
        cfg.pair.enabled = true;
    }
    if (auto* v = g("pair.psi_t")) cfg.pair.boundary.psi_t = cd::str(*v, "pair.psi_t");
    if (auto* v = g("pair.psi_tt")) cfg.pair.boundary.psi_tt = cd::str(*v, "pair.psi_tt");
    if (auto* v = g("pair.p0")) {
        cfg.pair.p0 = cd::str(*v, "pair.p0");
        cfg.pair.enabled = true;
    }

    if (auto* v = g("sweep.parameter")) cfg.sweep.parameter = cd::str(*v, "sweep.parameter");
    if (auto* v = g("sweep.values")) cfg.sweep.values = cd::num_array(*v, "sweep.values");

    validate_config(cfg);
    return cfg;
}

inline void validate_config(RunConfig& cfg) {
    // expressions must parse up front
    auto check_expr = [](const std::string& text, const std::string& field) {
        if (text.empty()) return;
        try {
            Expression::parse(text);
        } catch (const ExprError& e) {
            throw ConfigError("field '" + field + "': " + e.what());
        }
    };
    check_expr(cfg.boundary.psi, "boundary.psi");
    check_expr(cfg.boundary.psi_t, "boundary.psi_t");
    check_expr(cfg.boundary.psi_tt, "boundary.psi_tt");
    check_expr(cfg.p0, "initial.p0");
    check_expr(cfg.solver.source, "solver.source");
    check_expr(cfg.pair.boundary.psi, "pair.psi");
    check_expr(cfg.pair.boundary.psi_t, "pair.psi_t");
    check_expr(cfg.pair.boundary.psi_tt, "pair.psi_tt");
    check_expr(cfg.pair.p0, "pair.p0");

    if (!(cfg.solver.dt > 0.0)) throw ConfigError("field 'solver.dt' must be positive");
    if (!(cfg.solver.t_end > 0.0)) throw ConfigError("field 'solver.t_end' must be positive");
    if (cfg.solver.output_stride < 1)
        throw ConfigError("field 'solver.output_stride' must be >= 1");
    if (!(cfg.verify.tail_window > 0.0) || cfg.verify.tail_window > 1.0 / 3.0)
        throw ConfigError("field 'verify.tail_window' must lie in (0, 1/3]");

    // medium and model invariants: build the medium once, validation included
    build_medium(cfg.medium);
}

// Shortest round-trip decimal for binary64; the reproducibility contract for
// every numeric byte this tool writes.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace config_detail {

inline std::string quote(const std::string& s) { return "\"" + s + "\""; }

inline std::string num_list(const std::vector<double>& v) {
    std::string out = "[";
    for (size_t k = 0; k < v.size(); ++k)
        out += (k ? ", " : "") + format_double(v[k]);
    return out + "]";
}

inline std::string str_list(const std::vector<std::string>& v) {
    std::string out = "[";
    for (size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + quote(v[k]);
    return out + "]";
}

}  // namespace config_detail

/** Serialize with every default echoed; parse(to_toml(c)) == c. */
inline std::string to_toml(const RunConfig& c) {
    namespace cd = config_detail;
    std::string o;
    o += "seed = " + std::to_string(c.seed) + "\n\n";
    o += "[medium]\n";
    o += "preset = " + cd::quote(c.medium.preset) + "\n";
    o += "dim = " + std::to_string(c.medium.dim) + "\n";
    o += "resolution = [" + std::to_string(c.medium.resolution[0]) + ", " +
         std::to_string(c.medium.resolution[1]) + "]\n";
    o += "extent = [" + format_double(c.medium.extent[0]) + ", " +
         format_double(c.medium.extent[1]) + "]\n";
    o += "phi = " + format_double(c.medium.phi_value) + "\n";
    if (!c.medium.phi_regions.empty())
        o += "phi_regions = " + cd::num_list(c.medium.phi_regions) + "\n";
    o += "layers = " + std::to_string(c.medium.layers) + "\n";
    o += "layer_axis = " + std::to_string(c.medium.layer_axis) + "\n";
    o += "tiles = " + std::to_string(c.medium.tiles) + "\n";
    o += "center = [" + format_double(c.medium.center[0]) + ", " +
         format_double(c.medium.center[1]) + "]\n";
    o += "radius = " + format_double(c.medium.radius) + "\n";
    o += "blend_width = " + format_double(c.medium.blend_width) + "\n";
    o += "phi_inner = " + format_double(c.medium.phi_inner) + "\n";
    o += "phi_outer = " + format_double(c.medium.phi_outer) + "\n";
    if (!c.medium.phi_expr.empty()) o += "phi_expr = " + cd::quote(c.medium.phi_expr) + "\n";
    o += "\n[model]\n";
    o += "alphas = " + cd::num_list(c.medium.alphas) + "\n";
    o += "coeffs = " + cd::num_list(c.medium.coeff_values) + "\n";
    if (!c.medium.coeff_regions.empty()) {
        o += "coeff_regions = [";
        for (size_t k = 0; k < c.medium.coeff_regions.size(); ++k)
            o += (k ? ", " : "") + cd::num_list(c.medium.coeff_regions[k]);
        o += "]\n";
    }
    if (!c.medium.coeff_exprs.empty())
        o += "coeff_exprs = " + cd::str_list(c.medium.coeff_exprs) + "\n";
    if (!c.medium.coeff_inner.empty())
        o += "coeff_inner = " + cd::num_list(c.medium.coeff_inner) + "\n";
    if (!c.medium.coeff_outer.empty())
        o += "coeff_outer = " + cd::num_list(c.medium.coeff_outer) + "\n";
    o += std::string("linear_test_mode = ") +
         (c.medium.linear_test_mode ? "true" : "false") + "\n";
    o += "\n[boundary]\n";
    o += "psi = " + cd::quote(c.boundary.psi) + "\n";
    if (!c.boundary.psi_t.empty()) o += "psi_t = " + cd::quote(c.boundary.psi_t) + "\n";
    if (!c.boundary.psi_tt.empty()) o += "psi_tt = " + cd::quote(c.boundary.psi_tt) + "\n";
    o += "\n[initial]\n";
    o += "p0 = " + cd::quote(c.p0) + "\n";
    o += "\n[solver]\n";
    o += "dt = " + format_double(c.solver.dt) + "\n";
    o += "t_end = " + format_double(c.solver.t_end) + "\n";
    o += "picard_tol = " + format_double(c.solver.picard_tol) + "\n";
    o += "picard_max = " + std::to_string(c.solver.picard_max) + "\n";
    o += "linear_tol = " + format_double(c.solver.linear_tol) + "\n";
    o += "output_stride = " + std::to_string(c.solver.output_stride) + "\n";
    if (!c.solver.source.empty()) o += "source = " + cd::quote(c.solver.source) + "\n";
    o += "\n[verify]\n";
    o += "families = " + cd::str_list(c.verify.families) + "\n";
    o += "tail_window = " + format_double(c.verify.tail_window) + "\n";
    o += "slack_tol = " + format_double(c.verify.slack_tol) + "\n";
    o += "t0 = " + format_double(c.verify.t0) + "\n";
    o += std::string("refine = ") + (c.verify.refine ? "true" : "false") + "\n";
    o += "\n[poincare]\n";
    o += "q = " + format_double(c.poincare.q) + "\n";
    o += "family_size = " + std::to_string(c.poincare.family_size) + "\n";
    o += "safety_factor = " + format_double(c.poincare.safety_factor) + "\n";
    if (c.pair.enabled) {
        o += "\n[pair]\n";
        o += "psi = " + cd::quote(c.pair.boundary.psi) + "\n";
        if (!c.pair.boundary.psi_t.empty())
            o += "psi_t = " + cd::quote(c.pair.boundary.psi_t) + "\n";
        if (!c.pair.boundary.psi_tt.empty())
            o += "psi_tt = " + cd::quote(c.pair.boundary.psi_tt) + "\n";
        if (!c.pair.p0.empty()) o += "p0 = " + cd::quote(c.pair.p0) + "\n";
    }
    if (!c.sweep.parameter.empty()) {
        o += "\n[sweep]\n";
        o += "parameter = " + cd::quote(c.sweep.parameter) + "\n";
        o += "values = " + cd::num_list(c.sweep.values) + "\n";
    }
    return o;
}

}  // namespace forchlab
