#include "config.hpp"

#include <cmath>
#include <limits>

#include <toml.hpp>

namespace rdelab::cli {

namespace {

Json scalar_from(const Field& f, const toml::node& n, Kind k) {
    switch (k) {
        case Kind::Real: {
            if (auto v = n.value<double>(); v && (n.is_integer() || n.is_floating_point())) return real_to_json(*v);
            if (auto s = n.value<std::string>(); s && (*s == "inf" || *s == "-inf")) return *s;
            break;
        }
        case Kind::Int:
            if (n.is_integer()) {
                const auto v = *n.value<std::int64_t>();
                if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) break;
                return static_cast<int>(v);
            }
            break;
        case Kind::Bool:
            if (n.is_boolean()) return *n.value<bool>();
            break;
        case Kind::Str:
            if (n.is_string()) return *n.value<std::string>();
            break;
        default:
            break;
    }
    throw ConfigError("bad value for '" + f.name + "'");
}

Json from_node(const Field& f, const toml::node& n) {
    if (f.kind != Kind::RealList && f.kind != Kind::IntList) return scalar_from(f, n, f.kind);
    const auto* arr = n.as_array();
    if (!arr) throw ConfigError("'" + f.name + "' expects a list");
    const Kind ek = f.kind == Kind::RealList ? Kind::Real : Kind::Int;
    Json out = Json::array();
    for (const auto& e : *arr) out.push_back(scalar_from(f, e, ek));
    return out;
}

}  // namespace

Schema& Schema::add(std::string name, Kind kind, Json def, std::string help) {
    fields_.push_back(Field{std::move(name), kind, std::move(def), std::move(help), false});
    return *this;
}

Schema& Schema::require(std::string name, Kind kind, std::string help) {
    fields_.push_back(Field{std::move(name), kind, Json(), std::move(help), true});
    return *this;
}

const Field* Schema::find(const std::string& name) const {
    for (const auto& f : fields_)
        if (f.name == name) return &f;
    return nullptr;
}

Json parse_value(const Field& f, const std::string& text) {
    std::string t = text;
    const bool list = f.kind == Kind::RealList || f.kind == Kind::IntList;
    if (list && (t.empty() || t.front() != '[')) t = "[" + t + "]";
    try {
        const auto tbl = toml::parse("v = " + t);
        return from_node(f, *tbl.get("v"));
    } catch (const toml::parse_error&) {
        // bare words are fine for strings: --set model=cavity
        if (f.kind == Kind::Str) return text;
        throw ConfigError("cannot parse '" + text + "' for '" + f.name + "'");
    }
}

Json Schema::resolve(const std::string& toml_path, const std::vector<std::pair<std::string, std::string>>& flags,
                     const std::vector<std::string>& sets) const {
    Json cfg = Json::object();
    for (const auto& f : fields_) cfg[f.name] = f.def;

    if (!toml_path.empty()) {
        toml::table tbl;
        try {
            tbl = toml::parse_file(toml_path);
        } catch (const toml::parse_error& e) {
            throw ConfigError(toml_path + ": " + std::string(e.description()));
        }
        for (const auto& [k, v] : tbl) {
            const std::string key(k.str());
            const Field* f = find(key);
            if (!f) throw ConfigError("unknown key '" + key + "' in " + toml_path);
            cfg[key] = from_node(*f, v);
        }
    }
    for (const auto& [key, text] : flags) {
        const Field* f = find(key);
        if (!f) throw ConfigError("unknown option '" + key + "'");
        cfg[key] = parse_value(*f, text);
    }
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        const std::string key = s.substr(0, eq);
        const Field* f = find(key);
        if (!f) throw ConfigError("unknown key '" + key + "' in --set");
        cfg[key] = parse_value(*f, s.substr(eq + 1));
    }
    for (const auto& f : fields_)
        if (f.required && cfg[f.name].is_null()) throw ConfigError("missing required '" + f.name + "'");
    return cfg;
}

double get_real(const Json& cfg, const std::string& key) {
    const auto& v = cfg.at(key);
    if (v.is_null()) return std::nan("");
    return real_from_json(v);
}

int get_int(const Json& cfg, const std::string& key) { return cfg.at(key).get<int>(); }

std::vector<double> get_reals(const Json& cfg, const std::string& key) {
    std::vector<double> out;
    for (const auto& v : cfg.at(key)) out.push_back(real_from_json(v));
    return out;
}

std::vector<int> get_ints(const Json& cfg, const std::string& key) { return cfg.at(key).get<std::vector<int>>(); }

}  // namespace rdelab::cli
