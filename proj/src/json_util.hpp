#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "amlrisk/types.hpp"

namespace amlrisk::detail {

using nlohmann::json;

inline void expect_object(const json& j, std::string_view where) {
    if (!j.is_object()) {
        throw Error(ErrorCode::parse_error, std::string(where) + ": expected an object",
                    std::string(where));
    }
}

// Rejects unknown keys and reports the first missing required key.
inline void check_keys(const json& j, std::string_view where,
                       std::initializer_list<std::string_view> required,
                       std::initializer_list<std::string_view> optional = {}) {
    expect_object(j, where);
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto k : required) known = known || k == key;
        for (auto k : optional) known = known || k == key;
        if (!known) {
            throw Error(ErrorCode::parse_error,
                        std::string(where) + ": unknown key '" + key + "'", std::string(where));
        }
    }
    for (auto k : required) {
        if (!j.contains(k)) {
            throw Error(ErrorCode::parse_error,
                        std::string(where) + ": missing key '" + std::string(k) + "'",
                        std::string(where));
        }
    }
}

inline const json& field(const json& j, std::string_view key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw Error(ErrorCode::parse_error,
                    std::string(where) + ": missing key '" + std::string(key) + "'",
                    std::string(where));
    }
    return *it;
}

inline std::string get_string(const json& j, std::string_view key, std::string_view where) {
    const json& v = field(j, key, where);
    if (!v.is_string()) {
        throw Error(ErrorCode::parse_error,
                    std::string(where) + ": '" + std::string(key) + "' must be a string",
                    std::string(where));
    }
    return v.get<std::string>();
}

inline double get_number(const json& j, std::string_view key, std::string_view where) {
    const json& v = field(j, key, where);
    if (!v.is_number()) {
        throw Error(ErrorCode::parse_error,
                    std::string(where) + ": '" + std::string(key) + "' must be a number",
                    std::string(where));
    }
    return v.get<double>();
}

inline bool get_bool(const json& j, std::string_view key, std::string_view where) {
    const json& v = field(j, key, where);
    if (!v.is_boolean()) {
        throw Error(ErrorCode::parse_error,
                    std::string(where) + ": '" + std::string(key) + "' must be a boolean",
                    std::string(where));
    }
    return v.get<bool>();
}

inline const json& get_array(const json& j, std::string_view key, std::string_view where) {
    const json& v = field(j, key, where);
    if (!v.is_array()) {
        throw Error(ErrorCode::parse_error,
                    std::string(where) + ": '" + std::string(key) + "' must be an array",
                    std::string(where));
    }
    return v;
}

template <class E>
E get_enum(const json& j, std::string_view key, std::string_view where) {
    return parse_enum<E>(get_string(j, key, where), key);
}

// Parses text, mapping nlohmann exceptions onto the library error type.
inline json parse_text(std::string_view text, std::string_view where) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, std::string(where) + ": " + e.what(),
                    std::string(where));
    }
}

std::string read_file(const std::string& path);

}  // namespace amlrisk::detail
