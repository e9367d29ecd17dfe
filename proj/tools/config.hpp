#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rdelab/jsonio.hpp"

namespace rdelab::cli {

// Anything wrong with the user's configuration: exit code 2, no artifacts.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { Real, Int, Bool, Str, RealList, IntList };

struct Field {
    std::string name;
    Kind kind;
    Json def;  // null: no default
    std::string help;
    bool required = false;
};

class Schema {
public:
    Schema& add(std::string name, Kind kind, Json def, std::string help);
    Schema& require(std::string name, Kind kind, std::string help);
    const std::vector<Field>& fields() const { return fields_; }
    const Field* find(const std::string& name) const;

    // Layers, later ones win: defaults, TOML file, flags, --set overrides.
    // The result has every field in schema order; reals travel through
    // real_to_json so +-inf survive.
    Json resolve(const std::string& toml_path, const std::vector<std::pair<std::string, std::string>>& flags,
                 const std::vector<std::string>& sets) const;

private:
    std::vector<Field> fields_;
};

// value text as typed on the command line or in --set
Json parse_value(const Field& f, const std::string& text);

double get_real(const Json& cfg, const std::string& key);
int get_int(const Json& cfg, const std::string& key);
std::vector<double> get_reals(const Json& cfg, const std::string& key);
std::vector<int> get_ints(const Json& cfg, const std::string& key);

}  // namespace rdelab::cli
