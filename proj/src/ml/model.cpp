#include "io/json_util.hpp"
#include "zsm/errors.hpp"
#include "zsm/ml.hpp"

namespace zsm::ml
{

namespace
{

using io::json;

template<class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template<class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json tree_json(const DecisionTree& t)
{
    json nodes = json::array();
    for (const auto& n : t.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.counts[0], n.counts[1]});
    return nodes;
}

DecisionTree tree_from(const json& j)
{
    DecisionTree t;
    for (const auto& a : j)
    {
        if (!a.is_array() || a.size() != 7)
            throw FormatError("model: tree node must have 7 entries");
        TreeNode n;
        n.feature = a[0].get<int>();
        n.threshold = a[1].get<double>();
        n.left = a[2].get<int>();
        n.right = a[3].get<int>();
        n.value = a[4].get<double>();
        n.counts = {a[5].get<double>(), a[6].get<double>()};
        t.nodes.push_back(n);
    }
    const int size = static_cast<int>(t.nodes.size());
    for (int k = 0; k < size; ++k)
    {
        const auto& n = t.nodes[static_cast<std::size_t>(k)];
        if (!n.is_leaf() && (n.left <= k || n.right <= k || n.left >= size || n.right >= size))
            throw FormatError("model: tree child index out of order");
    }
    if (t.nodes.empty())
        throw FormatError("model: empty tree");
    return t;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

std::string_view to_string(Algorithm a)
{
    switch (a)
    {
        case Algorithm::rf:
            return "rf";
        case Algorithm::gbdt:
            return "gbdt";
        case Algorithm::svm:
            return "svm";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view s)
{
    if (s == "rf")
        return Algorithm::rf;
    if (s == "gbdt")
        return Algorithm::gbdt;
    if (s == "svm")
        return Algorithm::svm;
    throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected rf, gbdt or svm)");
}

Algorithm algorithm_of(const Classifier& c) { return static_cast<Algorithm>(c.index()); }

ClassProbability predict_proba(const Classifier& m, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return std::visit([&](const auto& model) { return predict_proba(model, x); }, m);
}

ClassProbability predict_proba(const Classifier& m, const features::FeatureVector& f)
{
    const Eigen::VectorXd x = f.values();
    return predict_proba(m, x);
}

double evaluate_accuracy(const Classifier& m, const Dataset& data)
{
    if (data.y.empty())
        throw std::invalid_argument("evaluate_accuracy: empty dataset.");
    long correct = 0;
    for (Eigen::Index i = 0; i < data.X.rows(); ++i)
        correct += predict(m, data.X.row(i).transpose()) == data.y[static_cast<std::size_t>(i)] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(data.y.size());
}

std::string to_json(const Classifier& c)
{
    json j;
    j["format"] = "zsm-urban/model";
    j["version"] = 1;
    j["algorithm"] = std::string(to_string(algorithm_of(c)));
    std::visit(overloaded{
                   [&](const RandomForestModel& m) {
                       j["feature_count"] = m.feature_count;
                       j["feature_subsample"] = m.feature_subsample;
                       j["seed"] = m.seed;
                       j["config"] = {{"tree_count", m.config.tree_count},
                                      {"max_depth", m.config.max_depth},
                                      {"max_features", m.config.max_features},
                                      {"min_samples_split", m.config.min_samples_split},
                                      {"bootstrap", m.config.bootstrap},
                                      {"balanced", m.config.balanced}};
                       json trees = json::array();
                       for (const auto& t : m.trees)
                           trees.push_back(tree_json(t));
                       j["trees"] = trees;
                   },
                   [&](const GbdtModel& m) {
                       j["feature_count"] = m.feature_count;
                       j["learning_rate"] = m.learning_rate;
                       j["initial_log_odds"] = m.initial_log_odds;
                       j["fitted"] = m.fitted;
                       j["training_loss"] = m.training_loss;
                       j["step_scale"] = m.step_scale;
                       j["config"] = {{"stages", m.config.stages},
                                      {"max_depth", m.config.max_depth},
                                      {"min_samples_split", m.config.min_samples_split},
                                      {"balanced", m.config.balanced}};
                       json trees = json::array();
                       for (const auto& t : m.trees)
                           trees.push_back(tree_json(t));
                       j["trees"] = trees;
                   },
                   [&](const SvmModel& m) {
                       j["gamma"] = m.gamma;
                       j["bias"] = m.bias;
                       j["platt_a"] = m.platt_a;
                       j["platt_b"] = m.platt_b;
                       j["mean"] = vec(m.mean);
                       j["scale"] = vec(m.scale);
                       j["class_weight"] = m.class_weight;
                       j["iterations"] = m.iterations;
                       j["support_indices"] = m.support_indices;
                       j["dual_coefficients"] = vec(m.dual_coefficients);
                       json sv = json::array();
                       for (Eigen::Index r = 0; r < m.support_vectors.rows(); ++r)
                           sv.push_back(vec(m.support_vectors.row(r).transpose()));
                       j["support_vectors"] = sv;
                       j["config"] = {{"C", m.config.C},
                                      {"gamma", m.config.gamma},
                                      {"tolerance", m.config.tolerance},
                                      {"cv_folds", m.config.cv_folds},
                                      {"balanced", m.config.balanced},
                                      {"seed", m.config.seed}};
                   },
               },
               c);
    return j.dump() + "\n";
}

Classifier classifier_from_json(std::string_view text)
{
    const json j = io::parse(text, "model");
    if (io::get<std::string>(j, "format") != "zsm-urban/model" || io::get<int>(j, "version") != 1)
        throw FormatError("model: unsupported format or version");
    const std::string algo = io::get<std::string>(j, "algorithm");
    try
    {
        const json& cfg = j.at("config");
        if (algo == "rf")
        {
            RandomForestModel m;
            m.feature_count = io::get<int>(j, "feature_count");
            m.feature_subsample = io::get<int>(j, "feature_subsample");
            m.seed = io::get<std::uint64_t>(j, "seed");
            m.config.tree_count = cfg.at("tree_count");
            m.config.max_depth = cfg.at("max_depth");
            m.config.max_features = cfg.at("max_features");
            m.config.min_samples_split = cfg.at("min_samples_split");
            m.config.bootstrap = cfg.at("bootstrap");
            m.config.balanced = cfg.at("balanced");
            m.config.seed = m.seed;
            for (const auto& t : j.at("trees"))
                m.trees.push_back(tree_from(t));
            return m;
        }
        if (algo == "gbdt")
        {
            GbdtModel m;
            m.feature_count = io::get<int>(j, "feature_count");
            m.learning_rate = io::get<double>(j, "learning_rate");
            m.initial_log_odds = io::get<double>(j, "initial_log_odds");
            m.fitted = io::get<bool>(j, "fitted");
            m.training_loss = io::get<std::vector<double>>(j, "training_loss");
            m.step_scale = io::get<std::vector<double>>(j, "step_scale");
            m.config.stages = cfg.at("stages");
            m.config.learning_rate = m.learning_rate;
            m.config.max_depth = cfg.at("max_depth");
            m.config.min_samples_split = cfg.at("min_samples_split");
            m.config.balanced = cfg.at("balanced");
            for (const auto& t : j.at("trees"))
                m.trees.push_back(tree_from(t));
            return m;
        }
        if (algo == "svm")
        {
            SvmModel m;
            m.gamma = io::get<double>(j, "gamma");
            m.bias = io::get<double>(j, "bias");
            m.platt_a = io::get<double>(j, "platt_a");
            m.platt_b = io::get<double>(j, "platt_b");
            m.mean = vec_from(j.at("mean"));
            m.scale = vec_from(j.at("scale"));
            m.class_weight = j.at("class_weight").get<std::array<double, 2>>();
            m.iterations = io::get<long>(j, "iterations");
            m.support_indices = io::get<std::vector<int>>(j, "support_indices");
            m.dual_coefficients = vec_from(j.at("dual_coefficients"));
            const auto& sv = j.at("support_vectors");
            m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), m.mean.size());
            for (std::size_t r = 0; r < sv.size(); ++r)
            {
                const Eigen::VectorXd row = vec_from(sv[r]);
                if (row.size() != m.mean.size())
                    throw FormatError("model: support vector dimension mismatch");
                m.support_vectors.row(static_cast<Eigen::Index>(r)) = row.transpose();
            }
            if (m.dual_coefficients.size() != m.support_vectors.rows() || m.scale.size() != m.mean.size())
                throw FormatError("model: inconsistent SVM arrays");
            m.config.C = cfg.at("C");
            m.config.gamma = cfg.at("gamma");
            m.config.tolerance = cfg.at("tolerance");
            m.config.cv_folds = cfg.at("cv_folds");
            m.config.balanced = cfg.at("balanced");
            m.config.seed = cfg.at("seed");
            return m;
        }
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("model: ") + e.what());
    }
    throw FormatError("model: unknown algorithm '" + algo + "'");
}

void save_model(const std::filesystem::path& path, const Classifier& m) { io::write_text(path, to_json(m)); }

Classifier load_model(const std::filesystem::path& path) { return classifier_from_json(io::read_text(path)); }

TrainedEnsemble train_ensemble(const Dataset& data, const EnsembleConfig& cfg)
{
    return TrainedEnsemble{{train_rf(data, cfg.rf), train_gbdt(data, cfg.gbdt), train_svm(data, cfg.svm)}};
}

} // namespace zsm::ml
