#include "zsm/harness.hpp"

#include <algorithm>

#include "io/json_util.hpp"
#include "reference_data.hpp"
#include "zsm/errors.hpp"
#include "zsm/scene_io.hpp"

namespace zsm::harness
{

namespace
{

using io::json;

const auto visit_rf = [](ml::RfConfig& c, auto&& f) {
    f("tree_count", c.tree_count);
    f("max_depth", c.max_depth);
    f("max_features", c.max_features);
    f("min_samples_split", c.min_samples_split);
    f("bootstrap", c.bootstrap);
    f("balanced", c.balanced);
    f("seed", c.seed);
};

const auto visit_gbdt = [](ml::GbdtConfig& c, auto&& f) {
    f("stages", c.stages);
    f("learning_rate", c.learning_rate);
    f("max_depth", c.max_depth);
    f("min_samples_split", c.min_samples_split);
    f("balanced", c.balanced);
};

const auto visit_svm = [](ml::SvmConfig& c, auto&& f) {
    f("C", c.C);
    f("gamma", c.gamma);
    f("tolerance", c.tolerance);
    f("max_iterations", c.max_iterations);
    f("cv_folds", c.cv_folds);
    f("balanced", c.balanced);
    f("cache_mb", c.cache_mb);
    f("seed", c.seed);
};

std::string_view to_string(shadow::ShadowMethod m)
{
    return m == shadow::ShadowMethod::zonotope ? "zonotope" : "polygon";
}

shadow::ShadowMethod parse_shadow_method(std::string_view s)
{
    if (s == "zonotope")
        return shadow::ShadowMethod::zonotope;
    if (s == "polygon")
        return shadow::ShadowMethod::polygon;
    throw ConfigError("unknown shadow_method '" + std::string(s) + "'");
}

template<typename T>
T value_of(const json& j, const char* key)
{
    try
    {
        return j.at(key).get<T>();
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("experiment config: bad value for '") + key + "': " + e.what());
    }
}

std::optional<double> optional_number(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return io::get<double>(j, key);
}

} // namespace

std::string_view to_string(Method m)
{
    switch (m)
    {
    case Method::rf:
        return "rf";
    case Method::gbdt:
        return "gbdt";
    case Method::svm:
        return "svm";
    case Method::unanimous:
        return "unanimous";
    case Method::unanimous_threshold:
        return "unanimousThreshold";
    case Method::oracle:
        return "oracle";
    }
    return "unknown";
}

Method parse_method(std::string_view name)
{
    for (Method m : {Method::rf, Method::gbdt, Method::svm, Method::unanimous, Method::unanimous_threshold,
                     Method::oracle})
    {
        if (to_string(m) == name)
            return m;
    }
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_single_model(Method m) { return m == Method::rf || m == Method::gbdt || m == Method::svm; }

void validate(const ExperimentConfig& cfg)
{
    scene::validate(cfg.scene);
    scene::validate(cfg.noise);
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0))
        throw ConfigError("experiment config: threshold must lie in [0, 1]");
    if (cfg.seeds.empty())
        throw ConfigError("experiment config: no seeds");
    auto seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());
    if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end())
        throw ConfigError("experiment config: duplicate seed");
    auto methods = cfg.methods;
    std::sort(methods.begin(), methods.end());
    if (std::adjacent_find(methods.begin(), methods.end()) != methods.end())
        throw ConfigError("experiment config: duplicate method");
    for (int e : cfg.figure_epochs)
    {
        if (e < 0 || e >= cfg.scene.target_epochs)
            throw ConfigError("experiment config: figure epoch outside the target road");
    }
    if (cfg.threads < 0)
        throw ConfigError("experiment config: threads must be non-negative");
    if (cfg.ml.rf.tree_count < 1 || cfg.ml.gbdt.stages < 1 || cfg.ml.rf.max_depth < 1 || cfg.ml.gbdt.max_depth < 1)
        throw ConfigError("experiment config: forest and boosting need at least one tree of depth one");
    if (!(cfg.ml.gbdt.learning_rate > 0.0) || !(cfg.ml.svm.C > 0.0) || cfg.ml.svm.gamma < 0.0
        || !(cfg.ml.svm.tolerance > 0.0) || cfg.ml.svm.cv_folds < 2)
        throw ConfigError("experiment config: invalid learning parameters");
}

std::string to_json(const ExperimentConfig& cfg)
{
    json j;
    j["format"] = "zsm-urban/experiment";
    j["version"] = 1;
    j["scene"] = json::parse(scene::to_json(cfg.scene));
    j["noise"] = json::parse(scene::to_json(cfg.noise));
    j["ml"] = {{"rf", io::config_to_json(cfg.ml.rf, visit_rf)},
               {"gbdt", io::config_to_json(cfg.ml.gbdt, visit_gbdt)},
               {"svm", io::config_to_json(cfg.ml.svm, visit_svm)}};
    j["threshold"] = cfg.threshold;
    j["seeds"] = cfg.seeds;
    json methods = json::array();
    for (Method m : cfg.methods)
        methods.push_back(std::string(to_string(m)));
    j["methods"] = methods;
    j["figure_epochs"] = cfg.figure_epochs;
    j["shadow_method"] = std::string(to_string(cfg.shadow_method));
    j["threads"] = cfg.threads;
    return j.dump(2);
}

ExperimentConfig experiment_config_from_json(std::string_view text)
{
    json j;
    try
    {
        j = io::parse(text, "experiment config");
    }
    catch (const FormatError& e)
    {
        throw ConfigError(e.what());
    }
    if (!j.is_object())
        throw ConfigError("experiment config: expected an object");

    ExperimentConfig cfg;
    for (const auto& [key, v] : j.items())
    {
        if (key == "format")
        {
            if (v != "zsm-urban/experiment")
                throw ConfigError("experiment config: unexpected format tag");
        }
        else if (key == "version")
        {
            if (v != 1)
                throw ConfigError("experiment config: unsupported version");
        }
        else if (key == "scene")
            cfg.scene = scene::scene_config_from_json(v.dump());
        else if (key == "noise")
            cfg.noise = scene::noise_config_from_json(v.dump());
        else if (key == "ml")
        {
            if (!v.is_object())
                throw ConfigError("experiment config: 'ml' must be an object");
            for (const auto& [name, sub] : v.items())
            {
                if (name == "rf")
                    io::config_from_json(sub, cfg.ml.rf, visit_rf, "rf config");
                else if (name == "gbdt")
                    io::config_from_json(sub, cfg.ml.gbdt, visit_gbdt, "gbdt config");
                else if (name == "svm")
                    io::config_from_json(sub, cfg.ml.svm, visit_svm, "svm config");
                else
                    throw ConfigError("experiment config: unknown ml key '" + name + "'");
            }
        }
        else if (key == "threshold")
            cfg.threshold = value_of<double>(j, "threshold");
        else if (key == "seeds")
            cfg.seeds = value_of<std::vector<std::uint64_t>>(j, "seeds");
        else if (key == "methods")
        {
            cfg.methods.clear();
            for (const auto& name : value_of<std::vector<std::string>>(j, "methods"))
                cfg.methods.push_back(parse_method(name));
        }
        else if (key == "figure_epochs")
            cfg.figure_epochs = value_of<std::vector<int>>(j, "figure_epochs");
        else if (key == "shadow_method")
            cfg.shadow_method = parse_shadow_method(value_of<std::string>(j, "shadow_method"));
        else if (key == "threads")
            cfg.threads = value_of<int>(j, "threads");
        else
            throw ConfigError("experiment config: unknown key '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path)
{
    std::string text;
    try
    {
        text = io::read_text(path);
    }
    catch (const FormatError& e)
    {
        throw ConfigError(e.what());
    }
    return experiment_config_from_json(text);
}

ReferenceValues reference_from_json(std::string_view text)
{
    const json j = io::parse(text, "reference values");
    if (io::get<std::string>(j, "format") != "zsm-urban/reference")
        throw FormatError("reference values: unexpected format tag");
    ReferenceValues ref;
    ref.epochs = io::get<int>(j, "epochs");
    for (const auto& m : j.at("methods"))
    {
        MethodSummary s;
        try
        {
            s.method = parse_method(io::get<std::string>(m, "method"));
        }
        catch (const ConfigError& e)
        {
            throw FormatError(std::string("reference values: ") + e.what());
        }
        s.accuracy = optional_number(m, "accuracy");
        s.misclassified_per_epoch = optional_number(m, "misclassifiedPerEpoch");
        s.success_rate = io::get<double>(m, "successRate");
        s.containment_rate = io::get<double>(m, "containmentRate");
        s.mean_cross_bound = optional_number(m, "meanCrossBound");
        s.mean_along_bound = optional_number(m, "meanAlongBound");
        ref.methods.push_back(s);
    }
    return ref;
}

ReferenceValues reference_values() { return reference_from_json(detail::reference_json); }

} // namespace zsm::harness
