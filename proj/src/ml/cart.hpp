#pragma once

// CART growth shared by the forest (Gini) and boosting (squared error, Newton leaves).

#include <random>
#include <vector>

#include "zsm/ml.hpp"

namespace zsm::ml::detail
{

struct CartOptions
{
    int max_depth = 8;
    int min_samples_split = 2;
    int max_features = 0; // features tried per split; <= 0 or >= d means all
};

// `rows` may repeat (bootstrap). Labels are 0/1, weights per training row.
DecisionTree grow_classification_tree(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                      const std::vector<double>& weight, std::vector<int> rows,
                                      const CartOptions& opt, std::mt19937_64& rng);

// Splits minimize weighted squared error of `target`; leaves hold sum(w g) / sum(w h).
DecisionTree grow_regression_tree(const Eigen::MatrixXd& X, const std::vector<double>& target,
                                  const std::vector<double>& hessian, const std::vector<double>& weight,
                                  std::vector<int> rows, const CartOptions& opt);

std::vector<int> labels01(const Dataset& d);
// Unit weights, or n / (2 n_c) when balanced.
std::vector<double> class_weights(const std::vector<int>& y, bool balanced);
void require_two_classes(const Dataset& d, const char* who);

} // namespace zsm::ml::detail
