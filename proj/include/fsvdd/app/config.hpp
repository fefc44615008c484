#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/io.hpp"

#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>

namespace fsvdd::app {

using io::Json;

/// Rejects keys outside `allowed` and non-object documents.
inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get_or(const Json& j, const char* key, const T& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(where + ": key '" + key + "' has the wrong type");
    }
}

template <class T>
T require(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return get_or<T>(j, key, T{}, where);
}

inline Json load_config(const std::optional<std::string>& path) {
    if (!path) return Json::object();
    const auto text = io::read_file(*path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError("config '" + *path + "': " + e.what());
    }
}

/// Seed precedence: command-line flag, then the config's "seed", then the
/// FSVDD_SEED environment variable, then 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const Json& cfg) {
    if (flag) return *flag;
    if (cfg.contains("seed")) return get_or<std::uint64_t>(cfg, "seed", 0, "config");
    if (const char* env = std::getenv("FSVDD_SEED")) {
        try {
            size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("FSVDD_SEED must be a non-negative integer");
        }
    }
    return 0;
}

}  // namespace fsvdd::app
