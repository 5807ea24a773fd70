#include <cmath>

#include "ml/cart.hpp"
#include "zsm/errors.hpp"

namespace zsm::ml
{

RandomForestModel train_rf(const Dataset& data, const RfConfig& cfg)
{
    detail::require_two_classes(data, "train_rf");
    if (cfg.tree_count < 1 || cfg.max_depth < 0)
        throw std::invalid_argument("train_rf: tree_count must be >= 1 and max_depth >= 0.");

    const auto y = detail::labels01(data);
    const auto w = detail::class_weights(y, cfg.balanced);
    const int n = static_cast<int>(y.size());
    const int d = static_cast<int>(data.X.cols());

    RandomForestModel m;
    m.config = cfg;
    m.seed = cfg.seed;
    m.feature_count = d;
    m.feature_subsample =
        cfg.max_features > 0 ? std::min(cfg.max_features, d) : std::max(1, static_cast<int>(std::sqrt(d)));

    const detail::CartOptions opt{cfg.max_depth, cfg.min_samples_split, m.feature_subsample};
    for (int t = 0; t < cfg.tree_count; ++t)
    {
        std::mt19937_64 rng(mix_seed(cfg.seed, 0x5246, static_cast<std::uint64_t>(t)));
        std::vector<int> rows(static_cast<std::size_t>(n));
        if (cfg.bootstrap)
        {
            std::uniform_int_distribution<int> pick(0, n - 1);
            for (auto& r : rows)
                r = pick(rng);
        }
        else
        {
            for (int i = 0; i < n; ++i)
                rows[static_cast<std::size_t>(i)] = i;
        }
        m.trees.push_back(detail::grow_classification_tree(data.X, y, w, std::move(rows), opt, rng));
    }
    return m;
}

ClassProbability predict_proba(const RandomForestModel& m, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (m.trees.empty())
        throw UntrainedModelError("random forest has no trees");
    if (x.size() != m.feature_count)
        throw std::invalid_argument("predict_proba: feature count mismatch.");
    int nlos_votes = 0;
    for (const auto& t : m.trees)
    {
        const auto& leaf = t.leaf(x);
        nlos_votes += leaf.counts[1] > leaf.counts[0] ? 1 : 0;
    }
    return ClassProbability::from_nlos(static_cast<double>(nlos_votes) / static_cast<double>(m.trees.size()));
}

} // namespace zsm::ml
