#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlsc/errors.hpp"

namespace nlsc {

/// Flat view of a JSON configuration: nested objects become dotted keys
/// ("grid": {"n_cells": 800}  ->  grid.n_cells). Arrays stay leaf values.
class Config {
public:
    using json = nlohmann::json;

    Config() = default;

    static Config from_json(const json& j) {
        Config c;
        if (!j.is_object()) throw ConfigError("", "configuration root must be an object");
        c.flatten("", j);
        return c;
    }

    static Config parse(std::string_view text) {
        try {
            return from_json(json::parse(text, nullptr, true, /*ignore_comments=*/true));
        } catch (const json::parse_error& e) {
            throw ConfigError("", std::string("parse error: ") + e.what());
        }
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("", "cannot open config file " + path.string());
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse(text);
    }

    bool has(std::string_view key) const { return values_.find(key) != values_.end(); }

    void set(const std::string& key, json value) { values_[key] = std::move(value); }

    double number(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError(std::string(key), "expected a number");
        return v.get<double>();
    }
    double number(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::optional<double> maybe_number(std::string_view key) const {
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    long integer(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == static_cast<long>(v.get<double>())))
            throw ConfigError(std::string(key), "expected an integer");
        return static_cast<long>(v.get<double>());
    }
    long integer(std::string_view key, long fallback) const { return has(key) ? integer(key) : fallback; }

    std::string string(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw ConfigError(std::string(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string(std::string_view key, std::string fallback) const {
        return has(key) ? string(key) : std::move(fallback);
    }

    bool boolean(std::string_view key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_boolean()) throw ConfigError(std::string(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(std::string_view key) const {
        const auto& v = at(key);
        if (!v.is_array()) throw ConfigError(std::string(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(std::string(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    const json& at(std::string_view key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(std::string(key), "missing required key");
        return it->second;
    }

    /// Keys under `prefix.` with the prefix stripped.
    Config subtree(std::string_view prefix) const {
        Config c;
        const std::string p = std::string(prefix) + ".";
        for (const auto& [k, v] : values_)
            if (k.rfind(p, 0) == 0) c.values_[k.substr(p.size())] = v;
        return c;
    }

    /// Copy without any key under `prefix.`.
    Config without(std::string_view prefix) const {
        Config c;
        const std::string p = std::string(prefix) + ".";
        for (const auto& [k, v] : values_)
            if (k.rfind(p, 0) != 0) c.values_[k] = v;
        return c;
    }

    /// Throws on the first key that is neither listed nor under an allowed prefix.
    void check_keys(const std::vector<std::string>& known, const std::vector<std::string>& prefixes) const {
        for (const auto& [k, v] : values_) {
            if (std::find(known.begin(), known.end(), k) != known.end()) continue;
            if (std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return k.rfind(p, 0) == 0; }))
                continue;
            throw ConfigError(k, "unknown key");
        }
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [k, v] : values_) j[k] = v;
        return j;
    }

    const std::map<std::string, json, std::less<>>& entries() const { return values_; }

private:
    void flatten(const std::string& prefix, const json& j) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
            if (it->is_object())
                flatten(key, *it);
            else
                values_[key] = *it;
        }
    }

    std::map<std::string, json, std::less<>> values_;
};

} // namespace nlsc
