#pragma once

#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"

#include "joma/core/errors.hpp"

namespace joma::lab {

using json = nlohmann::json;

// Config structs expose `template <class S, class V> static void fields(S& self, V&& v)`
// calling v(name, member) once per member; the helpers below build on that.

namespace detail {

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class T>
bool json_matches(const json& j)
{
    if constexpr (std::is_same_v<T, bool>) {
        return j.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
        return j.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
        return j.is_number();
    } else if constexpr (std::is_same_v<T, std::string>) {
        return j.is_string();
    } else if constexpr (is_vector<T>::value) {
        if (!j.is_array()) return false;
        for (const auto& e : j)
            if (!json_matches<typename T::value_type>(e)) return false;
        return true;
    } else {
        static_assert(sizeof(T) == 0, "unsupported config field type");
    }
}

template <class T>
const char* type_name()
{
    if constexpr (std::is_same_v<T, bool>) return "boolean";
    else if constexpr (std::is_integral_v<T>) return "integer";
    else if constexpr (std::is_floating_point_v<T>) return "number";
    else if constexpr (std::is_same_v<T, std::string>) return "string";
    else return "array";
}

} // namespace detail

template <class C>
json to_json(const C& c)
{
    json j = json::object();
    C::fields(c, [&](const char* key, const auto& member) { j[key] = member; });
    return j;
}

// Every member must be present with a matching type; unknown keys are rejected.
template <class C>
C from_json(const json& j)
{
    if (!j.is_object()) throw config_error("config must be a JSON object");
    C c;
    std::set<std::string> known;
    C::fields(c, [&](const char* key, auto& member) {
        using T = std::decay_t<decltype(member)>;
        known.insert(key);
        if (!j.contains(key)) throw config_error(std::string("missing config key: ") + key);
        const json& v = j.at(key);
        if (!detail::json_matches<T>(v))
            throw config_error(std::string("config key ") + key + " expects " + detail::type_name<T>() + ", got " +
                               v.dump());
        member = v.get<T>();
    });
    for (const auto& item : j.items())
        if (!known.count(item.key())) throw config_error("unknown config key: " + item.key());
    c.validate();
    return c;
}

template <class C>
std::string print_config(const C& c)
{
    return to_json(c).dump(2);
}

template <class C>
C parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config does not parse: ") + e.what());
    }
    return from_json<C>(j);
}

// CLI values: JSON when they parse (numbers, arrays, booleans), plain strings otherwise.
inline json parse_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

// Patches keys that already exist in `base`; a new key is a config error.
inline void apply_patch(json& base, const json& patch, const std::string& origin)
{
    if (!patch.is_object()) throw config_error(origin + ": expected a JSON object");
    for (const auto& item : patch.items()) {
        if (!base.contains(item.key())) throw config_error(origin + ": unknown config key " + item.key());
        base[item.key()] = item.value();
    }
}

inline void apply_overrides(json& base, const std::vector<std::pair<std::string, std::string>>& overrides)
{
    json patch = json::object();
    for (const auto& [k, v] : overrides) patch[k] = parse_value(v);
    apply_patch(base, patch, "override");
}

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw config_error(what);
}

} // namespace joma::lab
