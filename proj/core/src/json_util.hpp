#pragma once

// Internal helpers around nlohmann::json. Kept out of the public headers so
// the installed interface stays dependency-free.

#include <string>
#include <string_view>

#include <json.hpp>

#include "dgms/errors.hpp"

namespace dgms {

using njson = nlohmann::ordered_json;

inline njson parse_json(std::string_view bytes, std::string_view what) {
    try {
        return njson::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

inline const njson& require_key(const njson& j, const char* key, const char* what) {
    if (!j.is_object()) throw ParseError(std::string(what) + ": expected an object");
    auto it = j.find(key);
    if (it == j.end())
        throw ParseError(std::string(what) + ": missing required key '" + key + "'");
    return *it;
}

inline std::string require_string(const njson& j, const char* key, const char* what) {
    const njson& v = require_key(j, key, what);
    if (!v.is_string())
        throw ParseError(std::string(what) + ": key '" + key + "' must be a string");
    return v.get<std::string>();
}

inline bool require_bool(const njson& j, const char* key, const char* what) {
    const njson& v = require_key(j, key, what);
    if (!v.is_boolean())
        throw ParseError(std::string(what) + ": key '" + key + "' must be a boolean");
    return v.get<bool>();
}

inline long long require_int(const njson& j, const char* key, const char* what) {
    const njson& v = require_key(j, key, what);
    if (!v.is_number_integer())
        throw ParseError(std::string(what) + ": key '" + key + "' must be an integer");
    return v.get<long long>();
}

inline double require_number(const njson& j, const char* key, const char* what) {
    const njson& v = require_key(j, key, what);
    if (!v.is_number())
        throw ParseError(std::string(what) + ": key '" + key + "' must be a number");
    return v.get<double>();
}

inline const njson& require_array(const njson& j, const char* key, const char* what) {
    const njson& v = require_key(j, key, what);
    if (!v.is_array())
        throw ParseError(std::string(what) + ": key '" + key + "' must be an array");
    return v;
}

inline const njson& require_object(const njson& j, const char* key, const char* what) {
    const njson& v = require_key(j, key, what);
    if (!v.is_object())
        throw ParseError(std::string(what) + ": key '" + key + "' must be an object");
    return v;
}

} // namespace dgms
