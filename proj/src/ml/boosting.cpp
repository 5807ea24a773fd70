#include <cmath>

#include "ml/cart.hpp"
#include "zsm/errors.hpp"

namespace zsm::ml
{

namespace
{

double sigmoid(double f) { return f >= 0.0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f)); }

// log(1 + e^f) without overflow
double softplus(double f) { return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

double mean_log_loss(const Eigen::VectorXd& F, const std::vector<int>& y, const std::vector<double>& w)
{
    double sum = 0.0, wsum = 0.0;
    for (Eigen::Index i = 0; i < F.size(); ++i)
    {
        const auto k = static_cast<std::size_t>(i);
        sum += w[k] * (softplus(F(i)) - y[k] * F(i));
        wsum += w[k];
    }
    return sum / wsum;
}

} // namespace

GbdtModel train_gbdt(const Dataset& data, const GbdtConfig& cfg)
{
    detail::require_two_classes(data, "train_gbdt");
    if (cfg.stages < 0 || !(cfg.learning_rate > 0.0) || cfg.max_depth < 1)
        throw std::invalid_argument("train_gbdt: need stages >= 0, learning_rate > 0, max_depth >= 1.");

    const auto y = detail::labels01(data);
    const auto w = detail::class_weights(y, cfg.balanced);
    const auto n = static_cast<Eigen::Index>(y.size());

    double wy = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        wy += w[i] * y[i];
        wsum += w[i];
    }
    const double prior = wy / wsum;

    GbdtModel m;
    m.config = cfg;
    m.learning_rate = cfg.learning_rate;
    m.feature_count = static_cast<int>(data.X.cols());
    m.initial_log_odds = std::log(prior / (1.0 - prior));
    m.fitted = true;

    Eigen::VectorXd F = Eigen::VectorXd::Constant(n, m.initial_log_odds);
    double loss = mean_log_loss(F, y, w);
    m.training_loss.push_back(loss);

    std::vector<int> rows(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        rows[static_cast<std::size_t>(i)] = static_cast<int>(i);
    std::vector<double> grad(rows.size()), hess(rows.size());
    const detail::CartOptions opt{cfg.max_depth, cfg.min_samples_split, 0};

    for (int s = 0; s < cfg.stages; ++s)
    {
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const auto k = static_cast<std::size_t>(i);
            const double p = sigmoid(F(i));
            grad[k] = y[k] - p;
            hess[k] = p * (1.0 - p);
        }
        DecisionTree tree = detail::grow_regression_tree(data.X, grad, hess, w, rows, opt);
        Eigen::VectorXd out(n);
        for (Eigen::Index i = 0; i < n; ++i)
            out(i) = tree.leaf(data.X.row(i).transpose()).value;

        // halve the step until the training loss does not increase
        double scale = 1.0;
        Eigen::VectorXd next;
        double next_loss = loss;
        bool accepted = false;
        for (int tries = 0; tries < 30; ++tries, scale *= 0.5)
        {
            next = F + cfg.learning_rate * scale * out;
            next_loss = mean_log_loss(next, y, w);
            if (next_loss <= loss)
            {
                accepted = true;
                break;
            }
        }
        if (!accepted)
        {
            scale = 0.0;
            next = F;
            next_loss = loss;
        }
        for (auto& node : tree.nodes)
        {
            if (node.is_leaf())
                node.value *= cfg.learning_rate * scale;
        }
        m.trees.push_back(std::move(tree));
        m.step_scale.push_back(scale);
        F = std::move(next);
        loss = next_loss;
        m.training_loss.push_back(loss);
    }
    return m;
}

ClassProbability predict_proba(const GbdtModel& m, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (!m.fitted)
        throw UntrainedModelError("gradient-boosted model is not trained");
    if (x.size() != m.feature_count)
        throw std::invalid_argument("predict_proba: feature count mismatch.");
    double f = m.initial_log_odds;
    for (const auto& t : m.trees)
        f += t.leaf(x).value;
    return ClassProbability::from_nlos(sigmoid(f));
}

} // namespace zsm::ml
