#include "ml/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zsm/errors.hpp"

namespace zsm::ml
{

const TreeNode& DecisionTree::leaf(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    std::size_t k = 0;
    while (!nodes[k].is_leaf())
    {
        const auto& n = nodes[k];
        k = static_cast<std::size_t>(x(n.feature) <= n.threshold ? n.left : n.right);
    }
    return nodes[k];
}

int DecisionTree::depth() const
{
    if (nodes.empty())
        return 0;
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    // children are always appended after their parent
    for (std::size_t k = 0; k < nodes.size(); ++k)
    {
        const auto& n = nodes[k];
        best = std::max(best, d[k]);
        if (!n.is_leaf())
        {
            d[static_cast<std::size_t>(n.left)] = d[k] + 1;
            d[static_cast<std::size_t>(n.right)] = d[k] + 1;
        }
    }
    return best;
}

namespace detail
{

namespace
{

struct GiniPolicy
{
    struct Acc
    {
        double w[2]{0.0, 0.0};
        Acc operator-(const Acc& o) const { return {{w[0] - o.w[0], w[1] - o.w[1]}}; }
    };

    const std::vector<int>& y;
    const std::vector<double>& weight;

    void add(Acc& a, int row) const { a.w[y[static_cast<std::size_t>(row)]] += weight[static_cast<std::size_t>(row)]; }
    // W * gini impurity
    static double cost(const Acc& a)
    {
        const double W = a.w[0] + a.w[1];
        return W > 0.0 ? W - (a.w[0] * a.w[0] + a.w[1] * a.w[1]) / W : 0.0;
    }
    static bool pure(const Acc& a) { return a.w[0] <= 0.0 || a.w[1] <= 0.0; }
    static TreeNode leaf(const Acc& a)
    {
        TreeNode n;
        n.counts = {a.w[0], a.w[1]};
        const double W = a.w[0] + a.w[1];
        n.value = W > 0.0 ? a.w[1] / W : 0.0;
        return n;
    }
};

struct SquaredErrorPolicy
{
    struct Acc
    {
        double w = 0.0; // sum of weights
        double g = 0.0; // sum of w * target
        double h = 0.0; // sum of w * hessian
        Acc operator-(const Acc& o) const { return {w - o.w, g - o.g, h - o.h}; }
    };

    const std::vector<double>& target;
    const std::vector<double>& hessian;
    const std::vector<double>& weight;

    void add(Acc& a, int row) const
    {
        const auto r = static_cast<std::size_t>(row);
        a.w += weight[r];
        a.g += weight[r] * target[r];
        a.h += weight[r] * hessian[r];
    }
    // weighted SSE up to a constant
    static double cost(const Acc& a) { return a.w > 0.0 ? -a.g * a.g / a.w : 0.0; }
    static bool pure(const Acc&) { return false; }
    static TreeNode leaf(const Acc& a)
    {
        TreeNode n;
        n.value = a.h > 1e-12 ? a.g / a.h : 0.0;
        return n;
    }
};

template<typename Policy>
class Grower
{
    public:
        Grower(const Eigen::MatrixXd& X, Policy policy, const CartOptions& opt, std::mt19937_64* rng)
            : X_(X), policy_(std::move(policy)), opt_(opt), rng_(rng)
        {
        }

        DecisionTree run(std::vector<int> rows)
        {
            grow(rows, 0);
            return std::move(tree_);
        }

    private:
        using Acc = typename Policy::Acc;

        struct Split
        {
            int feature = -1;
            double threshold = 0.0;
            double gain = 0.0;
        };

        std::vector<int> candidate_features()
        {
            const int d = static_cast<int>(X_.cols());
            std::vector<int> f(static_cast<std::size_t>(d));
            std::iota(f.begin(), f.end(), 0);
            if (opt_.max_features <= 0 || opt_.max_features >= d || rng_ == nullptr)
                return f;
            // partial Fisher-Yates, then ascending order for deterministic tie-breaking
            for (int i = 0; i < opt_.max_features; ++i)
            {
                std::uniform_int_distribution<int> pick(i, d - 1);
                std::swap(f[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(pick(*rng_))]);
            }
            f.resize(static_cast<std::size_t>(opt_.max_features));
            std::sort(f.begin(), f.end());
            return f;
        }

        Split best_split(const std::vector<int>& rows, const Acc& total)
        {
            const double parent = Policy::cost(total);
            const double tie = 1e-12 * std::max(1.0, std::abs(parent));
            Split best;
            best.gain = tie; // a split must strictly reduce the cost
            std::vector<int> sorted = rows;
            for (int f : candidate_features())
            {
                std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
                    const double xa = X_(a, f), xb = X_(b, f);
                    return xa < xb || (xa == xb && a < b);
                });
                Acc left{};
                for (std::size_t k = 0; k + 1 < sorted.size(); ++k)
                {
                    policy_.add(left, sorted[k]);
                    const double a = X_(sorted[k], f);
                    const double b = X_(sorted[k + 1], f);
                    if (a == b)
                        continue;
                    const double gain = parent - Policy::cost(left) - Policy::cost(total - left);
                    if (gain > best.gain + (best.feature < 0 ? 0.0 : tie))
                    {
                        double t = 0.5 * (a + b);
                        if (!(t < b))
                            t = a;
                        best = {f, t, gain};
                    }
                }
            }
            return best;
        }

        int grow(std::vector<int>& rows, int depth)
        {
            Acc total{};
            for (int r : rows)
                policy_.add(total, r);
            const int id = static_cast<int>(tree_.nodes.size());
            tree_.nodes.push_back(Policy::leaf(total));
            if (depth >= opt_.max_depth || static_cast<int>(rows.size()) < opt_.min_samples_split
                || Policy::pure(total))
                return id;

            const Split s = best_split(rows, total);
            if (s.feature < 0)
                return id;

            std::vector<int> left, right;
            for (int r : rows)
                (X_(r, s.feature) <= s.threshold ? left : right).push_back(r);
            rows.clear();
            rows.shrink_to_fit();

            const int l = grow(left, depth + 1);
            const int r = grow(right, depth + 1);
            auto& node = tree_.nodes[static_cast<std::size_t>(id)];
            node.feature = s.feature;
            node.threshold = s.threshold;
            node.left = l;
            node.right = r;
            node.counts = {0.0, 0.0};
            return id;
        }

        const Eigen::MatrixXd& X_;
        Policy policy_;
        CartOptions opt_;
        std::mt19937_64* rng_;
        DecisionTree tree_;
};

} // namespace

DecisionTree grow_classification_tree(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                      const std::vector<double>& weight, std::vector<int> rows,
                                      const CartOptions& opt, std::mt19937_64& rng)
{
    return Grower<GiniPolicy>(X, GiniPolicy{y, weight}, opt, &rng).run(std::move(rows));
}

DecisionTree grow_regression_tree(const Eigen::MatrixXd& X, const std::vector<double>& target,
                                  const std::vector<double>& hessian, const std::vector<double>& weight,
                                  std::vector<int> rows, const CartOptions& opt)
{
    return Grower<SquaredErrorPolicy>(X, SquaredErrorPolicy{target, hessian, weight}, opt, nullptr)
        .run(std::move(rows));
}

std::vector<int> labels01(const Dataset& d)
{
    std::vector<int> y;
    y.reserve(d.y.size());
    for (Label l : d.y)
        y.push_back(static_cast<int>(l));
    return y;
}

std::vector<double> class_weights(const std::vector<int>& y, bool balanced)
{
    std::vector<double> w(y.size(), 1.0);
    if (!balanced)
        return w;
    const double n1 = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double n0 = static_cast<double>(y.size()) - n1;
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        w[i] = n / (2.0 * (y[i] == 1 ? n1 : n0));
    return w;
}

void require_two_classes(const Dataset& d, const char* who)
{
    if (d.X.rows() != static_cast<Eigen::Index>(d.y.size()))
        throw std::invalid_argument(std::string(who) + ": X and y sizes differ.");
    if (d.X.cols() < 1)
        throw std::invalid_argument(std::string(who) + ": no features.");
    const auto n1 = std::count(d.y.begin(), d.y.end(), Label::nlos);
    if (n1 == 0 || n1 == static_cast<long>(d.y.size()))
        throw TrainingError(std::string(who) + ": training data must contain both classes");
}

} // namespace detail
} // namespace zsm::ml
