#pragma once

#include <json.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "zsm/errors.hpp"

namespace zsm::io
{

using nlohmann::json;

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write " + path.string());
    out << text;
}

inline json parse(std::string_view text, const char* what)
{
    try
    {
        return json::parse(text);
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

// Typed member access that reports the offending key.
template<typename T>
T get(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw FormatError(std::string("missing key '") + key + "'");
    try
    {
        return j.at(key).get<T>();
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline json point(const Eigen::Vector2d& p) { return json::array({p.x(), p.y()}); }
inline json point(const Eigen::Vector3d& p) { return json::array({p.x(), p.y(), p.z()}); }

inline Eigen::Vector2d point2(const json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw FormatError("expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Eigen::Vector3d point3(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw FormatError("expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Flat config structs: `visit(cfg, f)` calls f(name, member) for every field.
template<typename Config, typename Visit>
json config_to_json(const Config& cfg, Visit visit)
{
    json j = json::object();
    visit(const_cast<Config&>(cfg), [&j](const char* name, auto& v) { j[name] = v; });
    return j;
}

template<typename Config, typename Visit>
void config_from_json(const json& j, Config& cfg, Visit visit, const char* what)
{
    if (!j.is_object())
        throw ConfigError(std::string(what) + ": expected an object");
    std::set<std::string> known;
    visit(cfg, [&](const char* name, auto& v) {
        known.insert(name);
        if (!j.contains(name))
            return;
        try
        {
            j.at(name).get_to(v);
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string(what) + ": bad value for '" + name + "': " + e.what());
        }
    });
    for (const auto& [key, _] : j.items())
    {
        if (!known.count(key))
            throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    }
}

} // namespace zsm::io
