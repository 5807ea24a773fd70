#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "zsm/errors.hpp"
#include "zsm/ml.hpp"

using namespace zsm;
using namespace zsm::ml;

namespace
{

Dataset make(const std::vector<std::vector<double>>& rows, const std::vector<Label>& y)
{
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    d.y = y;
    return d;
}

// Two Gaussian-free clusters split by x0 + x1 = 0 with a 0.2 gap.
Dataset separable_toy(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<std::vector<double>> rows;
    std::vector<Label> y;
    while (static_cast<int>(rows.size()) < n)
    {
        const double a = u(rng), b = u(rng);
        if (std::abs(a + b) < 0.2)
            continue;
        rows.push_back({a, b});
        y.push_back(a + b > 0 ? Label::nlos : Label::los);
    }
    return make(rows, y);
}

struct SyntheticSplit
{
    Dataset train, test;
};

const SyntheticSplit& synthetic(std::uint64_t seed)
{
    static std::map<std::uint64_t, SyntheticSplit> cache;
    auto it = cache.find(seed);
    if (it == cache.end())
    {
        scene::SceneConfig c;
        c.seed = seed;
        const auto s = scene::generate_scene(c);
        const auto split = features::build_samples(s, scene::simulate_epochs(s, scene::NoiseConfig{}));
        it = cache.emplace(seed, SyntheticSplit{features::to_dataset(split.train), features::to_dataset(split.test)})
                 .first;
    }
    return it->second;
}

const TrainedEnsemble& synthetic_ensemble(std::uint64_t seed)
{
    static std::map<std::uint64_t, TrainedEnsemble> cache;
    auto it = cache.find(seed);
    if (it == cache.end())
    {
        EnsembleConfig cfg;
        cfg.rf.seed = cfg.svm.seed = seed;
        it = cache.emplace(seed, train_ensemble(synthetic(seed).train, cfg)).first;
    }
    return it->second;
}

double gini_cost(double w0, double w1)
{
    const double W = w0 + w1;
    return W > 0 ? W - (w0 * w0 + w1 * w1) / W : 0.0;
}

void check_tree_shape(const DecisionTree& t, int max_depth)
{
    CHECK(t.depth() <= max_depth);
    for (std::size_t k = 0; k < t.nodes.size(); ++k)
    {
        const auto& n = t.nodes[k];
        if (!n.is_leaf())
        {
            CHECK(n.left > static_cast<int>(k));
            CHECK(n.right > static_cast<int>(k));
        }
    }
}

} // namespace

TEST_CASE("separable toy set is learned by every model")
{
    const Dataset d = separable_toy(300, 3);
    RfConfig rf;
    rf.tree_count = 25;
    GbdtConfig gb;
    gb.stages = 50;
    const Classifier models[] = {train_rf(d, rf), train_gbdt(d, gb), train_svm(d, SvmConfig{})};
    for (const auto& m : models)
        CHECK(evaluate_accuracy(m, d) >= 0.99);
}

TEST_CASE("single-class, empty and untrained inputs")
{
    const Dataset one = make({{0, 0}, {1, 1}}, {Label::los, Label::los});
    CHECK_THROWS_AS(train_rf(one, RfConfig{}), TrainingError);
    CHECK_THROWS_AS(train_gbdt(one, GbdtConfig{}), TrainingError);
    CHECK_THROWS_AS(train_svm(one, SvmConfig{}), TrainingError);

    const Eigen::Vector2d x(0, 0);
    CHECK_THROWS_AS(predict_proba(Classifier{RandomForestModel{}}, x), UntrainedModelError);
    CHECK_THROWS_AS(predict_proba(Classifier{GbdtModel{}}, x), UntrainedModelError);
    CHECK_THROWS_AS(predict_proba(Classifier{SvmModel{}}, x), UntrainedModelError);

    const Dataset two = make({{0, 0}, {1, 1}}, {Label::los, Label::nlos});
    const Classifier m = train_gbdt(two, GbdtConfig{});
    CHECK_THROWS_AS(evaluate_accuracy(m, Dataset{Eigen::MatrixXd(0, 2), {}}), std::invalid_argument);
    CHECK_THROWS_AS(predict_proba(m, Eigen::Vector3d(0, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(parse_algorithm("knn"), ConfigError);
}

TEST_CASE("depth-one tree picks a Gini-optimal threshold")
{
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial)
    {
        // informative feature 0 with class overlap, constant feature 1
        std::vector<std::vector<double>> rows;
        std::vector<Label> y;
        for (int i = 0; i < 60; ++i)
        {
            const bool nlos = i % 3 == 0;
            rows.push_back({std::round((n01(rng) + (nlos ? 1.5 : 0.0)) * 4.0) / 4.0, 7.0});
            y.push_back(nlos ? Label::nlos : Label::los);
        }
        const Dataset d = make(rows, y);
        RfConfig cfg;
        cfg.tree_count = 1;
        cfg.max_depth = 1;
        cfg.bootstrap = false;
        cfg.max_features = 2;
        const auto m = train_rf(d, cfg);
        REQUIRE(m.trees.front().nodes.size() == 3);
        const auto& root = m.trees.front().nodes.front();
        CHECK(root.feature == 0);

        // exhaustive scan over every cut between distinct sorted values
        std::vector<std::pair<double, int>> v;
        for (std::size_t i = 0; i < rows.size(); ++i)
            v.emplace_back(rows[i][0], static_cast<int>(y[i]));
        std::sort(v.begin(), v.end());
        double t0 = 0, t1 = 0;
        for (auto& p : v)
            (p.second ? t1 : t0) += 1;
        double best = -1, l0 = 0, l1 = 0;
        std::vector<std::pair<double, double>> optimal; // open intervals (a, b)
        for (std::size_t k = 0; k + 1 < v.size(); ++k)
        {
            (v[k].second ? l1 : l0) += 1;
            if (v[k].first == v[k + 1].first)
                continue;
            const double gain = gini_cost(t0, t1) - gini_cost(l0, l1) - gini_cost(t0 - l0, t1 - l1);
            if (gain > best + 1e-9)
            {
                best = gain;
                optimal.clear();
            }
            if (std::abs(gain - best) <= 1e-9)
                optimal.emplace_back(v[k].first, v[k + 1].first);
        }
        bool inside = false;
        for (const auto& [a, b] : optimal)
            inside = inside || (root.threshold >= a && root.threshold < b);
        CHECK(inside);
        // lowest-threshold tie rule
        CHECK(root.threshold == doctest::Approx(0.5 * (optimal.front().first + optimal.front().second)));
    }
}

TEST_CASE("training is deterministic given the seed")
{
    const Dataset d = separable_toy(200, 5);
    RfConfig a;
    a.tree_count = 10;
    a.seed = 9;
    CHECK(to_json(train_rf(d, a)) == to_json(train_rf(d, a)));
    RfConfig b = a;
    b.seed = 10;
    CHECK(to_json(train_rf(d, a)) != to_json(train_rf(d, b)));
    CHECK(to_json(train_gbdt(d, GbdtConfig{})) == to_json(train_gbdt(d, GbdtConfig{})));
    CHECK(to_json(train_svm(d, SvmConfig{})) == to_json(train_svm(d, SvmConfig{})));
}

TEST_CASE("gradient boosting prior and loss trace")
{
    SUBCASE("zero stages predict the prior")
    {
        GbdtConfig cfg;
        cfg.stages = 0;
        const Dataset balanced = make({{0}, {1}, {2}, {3}}, {Label::los, Label::nlos, Label::los, Label::nlos});
        const auto m = train_gbdt(balanced, cfg);
        CHECK(m.trees.empty());
        CHECK(predict_proba(m, Eigen::VectorXd::Constant(1, 5.0)).p_los == doctest::Approx(0.5).epsilon(1e-15));

        const Dataset skewed = make({{0}, {1}, {2}, {3}}, {Label::los, Label::los, Label::los, Label::nlos});
        const auto s = train_gbdt(skewed, cfg);
        CHECK(s.initial_log_odds == doctest::Approx(std::log(0.25 / 0.75)));
        CHECK(predict_proba(s, Eigen::VectorXd::Constant(1, 0.0)).p_nlos == doctest::Approx(0.25));
    }

    SUBCASE("training log-loss never increases on synthetic data")
    {
        const auto& d = synthetic(1).train;
        const auto& m = std::get<GbdtModel>(synthetic_ensemble(1).models[1]);
        REQUIRE(m.training_loss.size() == 201);
        for (std::size_t s = 1; s < m.training_loss.size(); ++s)
            CHECK(m.training_loss[s] <= m.training_loss[s - 1]);
        CHECK(m.training_loss.back() < 0.5 * m.training_loss.front());

        // recompute the final loss from predictions
        double loss = 0.0;
        for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        {
            const double p = predict_proba(m, d.X.row(i).transpose()).p_nlos;
            loss -= d.y[static_cast<std::size_t>(i)] == Label::nlos ? std::log(p) : std::log1p(-p);
        }
        CHECK(loss / d.X.rows() == doctest::Approx(m.training_loss.back()).epsilon(1e-9));
        for (const auto& t : m.trees)
            check_tree_shape(t, 3);
    }
}

TEST_CASE("forest structure and unanimous votes")
{
    const Dataset d = separable_toy(300, 8);
    RfConfig cfg;
    cfg.tree_count = 30;
    cfg.max_depth = 4;
    const auto m = train_rf(d, cfg);
    CHECK(m.feature_subsample == 1);
    for (const auto& t : m.trees)
        check_tree_shape(t, 4);
    const auto p = predict_proba(m, Eigen::Vector2d(-1.9, -1.9));
    CHECK(p.p_los == 1.0);
    CHECK(p.label() == Label::los);
}

TEST_CASE("svm geometry")
{
    SUBCASE("two points: the boundary is the perpendicular bisector")
    {
        const Dataset d = make({{0, 0}, {2, 2}}, {Label::los, Label::nlos});
        const auto m = train_svm(d, SvmConfig{});
        CHECK(std::abs(decision_value(m, Eigen::Vector2d(1, 1))) < 1e-9);
        for (double t : {-3.0, -1.0, 0.5, 2.0})
            CHECK(std::abs(decision_value(m, Eigen::Vector2d(1 + t, 1 - t))) < 1e-9);
        CHECK(predict_proba(m, Eigen::Vector2d(0.9, 0.9)).label() == Label::los);
        CHECK(predict_proba(m, Eigen::Vector2d(1.1, 1.1)).label() == Label::nlos);
        CHECK(decision_value(m, Eigen::Vector2d(0.9, 0.9)) < 0.0);
        CHECK(decision_value(m, Eigen::Vector2d(1.1, 1.1)) > 0.0);
    }

    SUBCASE("XOR needs the kernel")
    {
        const Dataset d = make({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {Label::los, Label::los, Label::nlos, Label::nlos});
        const auto m = train_svm(d, SvmConfig{});
        for (Eigen::Index i = 0; i < 4; ++i)
        {
            const Label truth = d.y[static_cast<std::size_t>(i)];
            CHECK((decision_value(m, d.X.row(i).transpose()) > 0.0) == (truth == Label::nlos));
            CHECK(predict_proba(m, d.X.row(i).transpose()).label() == truth);
        }
    }

    SUBCASE("KKT audit on synthetic data")
    {
        const auto& m = std::get<SvmModel>(synthetic_ensemble(1).models[2]);
        const auto r = kkt_audit(m, synthetic(1).train, 1e-3);
        MESSAGE("max KKT violation " << r.max_violation << ", support vectors " << m.support_vectors.rows());
        CHECK(r.passed);
        CHECK(m.platt_a < 0.0);
    }
}

TEST_CASE("probabilities are normalized and argmax-consistent")
{
    const auto& ens = synthetic_ensemble(1);
    const auto& test = synthetic(1).test;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> el(0.0, 90.0), cn0(10.0, 55.0), res(-200.0, 200.0);
    Eigen::MatrixXd inputs(test.X.rows() + 500, 3);
    inputs.topRows(test.X.rows()) = test.X;
    for (Eigen::Index i = test.X.rows(); i < inputs.rows(); ++i)
        inputs.row(i) << el(rng), cn0(rng), res(rng);
    for (const auto& m : ens.models)
    {
        for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        {
            const auto p = predict_proba(m, inputs.row(i).transpose());
            CHECK(p.p_los >= 0.0);
            CHECK(p.p_nlos >= 0.0);
            CHECK(p.p_los <= 1.0);
            CHECK(p.p_nlos <= 1.0);
            CHECK(std::abs(p.p_los + p.p_nlos - 1.0) < 1e-9);
            CHECK(predict(m, inputs.row(i).transpose()) == (p.p_nlos > p.p_los ? Label::nlos : Label::los));
            CHECK(p.confidence() >= 0.5);
        }
    }
}

TEST_CASE("held-out calibration")
{
    // reliability bins of width 0.1, pooled over seeds; sparse bins (< 30 samples) are not judged
    const int seeds = 5;
    for (std::size_t k = 0; k < 3; ++k)
    {
        double count[10] = {}, nlos[10] = {};
        for (int s = 1; s <= seeds; ++s)
        {
            const auto& test = synthetic(static_cast<std::uint64_t>(s)).test;
            const auto& m = synthetic_ensemble(static_cast<std::uint64_t>(s)).models[k];
            for (Eigen::Index i = 0; i < test.X.rows(); ++i)
            {
                const double p = predict_proba(m, test.X.row(i).transpose()).p_nlos;
                const int b = std::min(9, static_cast<int>(p * 10.0));
                count[b] += 1;
                nlos[b] += test.y[static_cast<std::size_t>(i)] == Label::nlos ? 1 : 0;
            }
        }
        int judged = 0;
        for (int b = 0; b < 10; ++b)
        {
            if (count[b] < 30)
                continue;
            ++judged;
            const double center = 0.1 * b + 0.05;
            INFO("model " << k << " bin " << b << " n=" << count[b]);
            CHECK(std::abs(nlos[b] / count[b] - center) <= 0.15);
        }
        CHECK(judged >= 2);
    }
}

TEST_CASE("tree predictions are invariant to positive feature scaling")
{
    const auto& base = synthetic(2);
    for (Eigen::Index f = 0; f < 3; ++f)
    {
        Dataset train = base.train, test = base.test;
        train.X.col(f) *= 3.7;
        test.X.col(f) *= 3.7;
        RfConfig rf;
        rf.tree_count = 20;
        rf.seed = 4;
        GbdtConfig gb;
        gb.stages = 40;
        const auto rf_a = train_rf(base.train, rf), rf_b = train_rf(train, rf);
        const auto gb_a = train_gbdt(base.train, gb), gb_b = train_gbdt(train, gb);
        for (Eigen::Index i = 0; i < test.X.rows(); ++i)
        {
            CHECK(predict_proba(rf_a, base.test.X.row(i).transpose()).p_nlos
                  == predict_proba(rf_b, test.X.row(i).transpose()).p_nlos);
            CHECK(predict_proba(gb_a, base.test.X.row(i).transpose()).p_nlos
                  == doctest::Approx(predict_proba(gb_b, test.X.row(i).transpose()).p_nlos).epsilon(1e-12));
        }
    }
}

TEST_CASE("model files round trip")
{
    const auto& ens = synthetic_ensemble(1);
    const auto& test = synthetic(1).test;
    for (const auto& m : ens.models)
    {
        const std::string text = to_json(m);
        const Classifier back = classifier_from_json(text);
        CHECK(algorithm_of(back) == algorithm_of(m));
        CHECK(to_json(back) == text);
        for (Eigen::Index i = 0; i < test.X.rows(); i += 7)
            CHECK(predict_proba(back, test.X.row(i).transpose()).p_nlos
                  == predict_proba(m, test.X.row(i).transpose()).p_nlos);
    }
    CHECK_THROWS_AS(classifier_from_json(R"({"format":"zsm-urban/model","version":2})"), FormatError);
    CHECK_THROWS_AS(classifier_from_json("not json"), FormatError);
}

TEST_CASE("synthetic accuracy and class weighting")
{
    for (std::uint64_t s = 1; s <= 2; ++s)
    {
        const auto& ens = synthetic_ensemble(s);
        for (std::size_t k = 0; k < 3; ++k)
        {
            const double acc = evaluate_accuracy(ens.models[k], synthetic(s).test);
            MESSAGE("seed " << s << " " << to_string(algorithm_of(ens.models[k])) << " target-road accuracy " << acc
                            << " (reference RF 0.809, GBDT 0.859, SVM 0.832)");
            CHECK(acc > 0.75);
        }
    }

    // balanced weights move the forest toward the minority class
    const auto& d = synthetic(1);
    RfConfig plain, balanced;
    plain.tree_count = balanced.tree_count = 30;
    balanced.balanced = true;
    const auto a = train_rf(d.train, plain), b = train_rf(d.train, balanced);
    double pa = 0, pb = 0;
    for (Eigen::Index i = 0; i < d.test.X.rows(); ++i)
    {
        pa += predict_proba(a, d.test.X.row(i).transpose()).p_nlos;
        pb += predict_proba(b, d.test.X.row(i).transpose()).p_nlos;
    }
    CHECK(pb >= pa);
}
